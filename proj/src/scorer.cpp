#include "vplan/scorer.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace vplan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class LastActionState final : public ScorerState {
 public:
  GoalId goal{};
  std::optional<ActionId> last;
};

const LastActionState& as_last(const ScorerState& s) {
  const auto* p = dynamic_cast<const LastActionState*>(&s);
  if (!p) throw std::invalid_argument("scorer state belongs to a different scorer");
  return *p;
}

ScorerStatePtr begin_last(const PlanningQuery& q) {
  auto st = std::make_shared<LastActionState>();
  st->goal = q.goal;
  if (q.history.k() > 0) st->last = q.history.segments.back().action;
  return st;
}

ScorerStatePtr extend_last(const ScorerState& s, ActionId a) {
  auto st = std::make_shared<LastActionState>(as_last(s));
  st->last = a;
  st->appended.push_back(a);
  return st;
}

}  // namespace

UniformScorer::UniformScorer(const Vocabulary& vocab, bool restrict_to_goal)
    : vocab_(&vocab), restrict_(restrict_to_goal) {}

ScorerStatePtr UniformScorer::begin(const PlanningQuery& query) const { return begin_last(query); }

std::vector<double> UniformScorer::score(const ScorerState& state, const std::vector<ActionId>& candidates) const {
  const GoalId g = as_last(state).goal;
  const double n = restrict_ ? static_cast<double>(vocab_->goal_actions(g).size())
                             : static_cast<double>(vocab_->num_actions());
  std::vector<double> out;
  out.reserve(candidates.size());
  for (ActionId a : candidates) {
    const bool ok = index(a) < vocab_->num_actions() && (!restrict_ || vocab_->goal_has_action(g, a));
    out.push_back(ok ? -std::log(n) : kNegInf);
  }
  return out;
}

ScorerStatePtr UniformScorer::extend(const ScorerState& state, ActionId a) const { return extend_last(state, a); }

MarkovScorer::MarkovScorer(const TransitionTable& table, const Vocabulary& vocab, bool restrict_to_goal, bool backoff)
    : table_(&table), vocab_(&vocab), restrict_(restrict_to_goal), backoff_(backoff) {
  if (table.num_actions() != vocab.num_actions())
    throw std::invalid_argument("markov scorer: table and vocabulary disagree on |A|");
}

ScorerStatePtr MarkovScorer::begin(const PlanningQuery& query) const { return begin_last(query); }

std::vector<double> MarkovScorer::score(const ScorerState& state, const std::vector<ActionId>& candidates) const {
  const auto& st = as_last(state);
  const std::vector<ActionId> support = restrict_ ? vocab_->goal_actions(st.goal) : all_actions(*vocab_);
  const std::vector<double> p = table_->distribution(st.last, support, backoff_);
  std::vector<double> full(vocab_->num_actions(), 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) full[index(support[i])] = p[i];
  std::vector<double> out;
  out.reserve(candidates.size());
  for (ActionId a : candidates) {
    const double q = index(a) < full.size() ? full[index(a)] : 0.0;
    out.push_back(q > 0 ? std::log(q) : kNegInf);
  }
  return out;
}

ScorerStatePtr MarkovScorer::extend(const ScorerState& state, ActionId a) const { return extend_last(state, a); }

NeuralScorer::NeuralScorer(const NeuralForecaster& model, const Vocabulary& vocab, bool length_normalize,
                           TokenScore token_score)
    : model_(&model), vocab_(&vocab), length_normalize_(length_normalize), token_score_(token_score) {
  if (static_cast<std::size_t>(model.embedding.rows.rows()) != vocab.num_tokens())
    throw std::invalid_argument("neural scorer: embedding table does not match the vocabulary");
}

namespace {

const NeuralScorerState& as_neural(const ScorerState& s) {
  const auto* p = dynamic_cast<const NeuralScorerState*>(&s);
  if (!p) throw std::invalid_argument("scorer state belongs to a different scorer");
  return *p;
}

void roll_out(const SequenceModel& seq, NeuralScorerState& st, int delta) {
  Matrix rows(delta, static_cast<Eigen::Index>(seq.dim()));
  for (int u = 0; u < delta; ++u) {
    rows.row(u) = st.seq.last_output;
    seq.advance(st.seq, rows.row(u));
  }
  append_predicted_observations(st.encoding, rows);
}

}  // namespace

ScorerStatePtr NeuralScorer::begin(const PlanningQuery& query) const {
  auto st = std::make_shared<NeuralScorerState>();
  st->encoding = model_->encode(query.goal, query.history, *vocab_);
  if (st->encoding.n() == 0) throw std::invalid_argument("neural scorer: empty history encoding");
  st->seq = model_->seq.start();
  for (Eigen::Index i = 0; i < st->encoding.h.rows(); ++i) model_->seq.advance(st->seq, st->encoding.h.row(i));
  if (rolls_out_observations()) roll_out(model_->seq, *st, model_->config.delta);
  return st;
}

double NeuralScorer::token_term(const RowVector& h_hat, std::size_t token) const {
  const Matrix& table = model_->embedding.rows;
  const double dot = table.row(static_cast<Eigen::Index>(token)).dot(h_hat);
  if (token_score_ == TokenScore::kDotProduct) return dot;
  const RowVector logits = h_hat * table.transpose();
  const double mx = logits.maxCoeff();
  return dot - (mx + std::log((logits.array() - mx).exp().sum()));
}

std::vector<double> NeuralScorer::score(const ScorerState& state, const std::vector<ActionId>& candidates) const {
  const auto& st = as_neural(state);
  const Matrix& table = model_->embedding.rows;
  const SequenceModel& seq = model_->seq;

  // First tokens share the beam's current prediction; deeper token prefixes
  // are computed once each and shared between candidates.
  RowVector first = st.seq.last_output * table.transpose();
  if (token_score_ == TokenScore::kLogSoftmax) {
    const double mx = first.maxCoeff();
    first.array() -= mx + std::log((first.array() - mx).exp().sum());
  }
  std::map<std::vector<std::size_t>, SequenceState> cache;
  auto state_after = [&](const std::vector<std::size_t>& prefix) -> const SequenceState& {
    auto it = cache.find(prefix);
    if (it != cache.end()) return it->second;
    const SequenceState* parent = &st.seq;
    std::vector<std::size_t> key;
    for (std::size_t t : prefix) {
      key.push_back(t);
      auto found = cache.find(key);
      if (found == cache.end()) {
        SequenceState next = *parent;
        seq.advance(next, table.row(static_cast<Eigen::Index>(t)));
        found = cache.emplace(key, std::move(next)).first;
      }
      parent = &found->second;
    }
    return *parent;
  };

  std::vector<double> out;
  out.reserve(candidates.size());
  std::vector<std::size_t> prefix;
  for (ActionId a : candidates) {
    const auto& toks = vocab_->action_tokens(a);
    double s = first[static_cast<Eigen::Index>(index(toks[0]))];
    prefix.clear();
    for (std::size_t j = 1; j < toks.size(); ++j) {
      prefix.push_back(index(toks[j - 1]));
      s += token_term(state_after(prefix).last_output, index(toks[j]));
    }
    if (length_normalize_) s /= static_cast<double>(toks.size());
    out.push_back(s);
  }
  return out;
}

double NeuralScorer::reference_phi(const ScorerState& state, ActionId a) const {
  const auto& st = as_neural(state);
  const Matrix& table = model_->embedding.rows;
  Matrix prefix = st.encoding.h;
  double s = 0.0;
  const auto& toks = vocab_->action_tokens(a);
  for (TokenId t : toks) {
    s += token_term(step(model_->seq, prefix), index(t));
    prefix.conservativeResize(prefix.rows() + 1, Eigen::NoChange);
    prefix.row(prefix.rows() - 1) = table.row(static_cast<Eigen::Index>(index(t)));
  }
  return length_normalize_ ? s / static_cast<double>(toks.size()) : s;
}

ScorerStatePtr NeuralScorer::extend(const ScorerState& state, ActionId a) const {
  auto st = std::make_shared<NeuralScorerState>(as_neural(state));
  st->appended.push_back(a);
  append_action(st->encoding, a, model_->embedding, *vocab_);
  for (TokenId t : vocab_->action_tokens(a))
    model_->seq.advance(st->seq, model_->embedding.rows.row(static_cast<Eigen::Index>(index(t))));
  if (rolls_out_observations()) roll_out(model_->seq, *st, model_->config.delta);
  return st;
}

}  // namespace vplan
