#include "vplan/encoders.hpp"

#include <cmath>
#include <random>

#include "vplan/rng.hpp"

namespace vplan {

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double std, SplitMix64& rng) {
  std::normal_distribution<double> n01(0.0, std);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

void push_row(HistoryEncoding& enc, const RowVector& row, PositionKind kind, std::int64_t token,
              std::int64_t embed, std::int64_t raw) {
  const Eigen::Index n = enc.h.rows();
  if (n == 0) enc.h.resize(0, row.size());
  if (enc.h.cols() != row.size()) throw std::invalid_argument("history encoding: row width mismatch");
  enc.h.conservativeResize(n + 1, Eigen::NoChange);
  enc.h.row(n) = row;
  const bool action = kind == PositionKind::kAction;
  enc.kinds.push_back(kind);
  enc.action_mask.push_back(action ? 1 : 0);
  // Nothing predicts the first position; goal tokens are context only.
  enc.target_mask.push_back(kind != PositionKind::kGoal && n > 0 ? 1 : 0);
  enc.token_ids.push_back(action ? token : kNoToken);
  enc.embed_ids.push_back(embed);
  enc.raw_index.push_back(raw);
}

}  // namespace

EmbeddingTable init_embedding(std::size_t num_tokens, std::size_t d, double init_std, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, {tag("embedding")}));
  return {gaussian(static_cast<Eigen::Index>(num_tokens), static_cast<Eigen::Index>(d), init_std, rng)};
}

MapperParams init_mapper(std::size_t obs_dim, std::size_t d, std::size_t hidden, double init_std,
                         std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, {tag("mapper")}));
  const auto in = static_cast<Eigen::Index>(obs_dim);
  const auto out = static_cast<Eigen::Index>(d);
  MapperParams m;
  if (hidden == 0) {
    m.w1 = gaussian(in, out, 1.0 / std::sqrt(static_cast<double>(obs_dim)), rng);
    m.b1 = Matrix::Zero(1, out);
  } else {
    const auto hid = static_cast<Eigen::Index>(hidden);
    m.w1 = gaussian(in, hid, 1.0 / std::sqrt(static_cast<double>(obs_dim)), rng);
    m.b1 = Matrix::Zero(1, hid);
    m.w2 = gaussian(hid, out, init_std, rng);
    m.b2 = Matrix::Zero(1, out);
  }
  return m;
}

MapperParams zeros_like(const MapperParams& m) {
  MapperParams z;
  z.w1 = Matrix::Zero(m.w1.rows(), m.w1.cols());
  z.b1 = Matrix::Zero(m.b1.rows(), m.b1.cols());
  z.w2 = Matrix::Zero(m.w2.rows(), m.w2.cols());
  z.b2 = Matrix::Zero(m.b2.rows(), m.b2.cols());
  return z;
}

Matrix map_observations(const MapperParams& mapper, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != mapper.in_dim())
    throw std::invalid_argument("mapper: expected " + std::to_string(mapper.in_dim()) + " input features, got " +
                                std::to_string(x.cols()));
  Matrix a = x * mapper.w1;
  a.rowwise() += mapper.b1.row(0);
  if (!mapper.has_hidden()) return a;
  Matrix y = a.array().tanh().matrix() * mapper.w2;
  y.rowwise() += mapper.b2.row(0);
  return y;
}

void map_observations_backward(const MapperParams& mapper, const Matrix& x, const Matrix& dy, MapperParams& grad) {
  if (!mapper.has_hidden()) {
    grad.w1.noalias() += x.transpose() * dy;
    grad.b1 += dy.colwise().sum();
    return;
  }
  Matrix a = x * mapper.w1;
  a.rowwise() += mapper.b1.row(0);
  const Matrix t = a.array().tanh().matrix();
  grad.w2.noalias() += t.transpose() * dy;
  grad.b2 += dy.colwise().sum();
  const Matrix da = ((dy * mapper.w2.transpose()).array() * (1.0 - t.array().square())).matrix();
  grad.w1.noalias() += x.transpose() * da;
  grad.b1 += da.colwise().sum();
}

std::string InputCondition::name() const {
  if (goal && actions && observations == ObservationInput::kAll) return "full";
  if (goal && actions && observations == ObservationInput::kNone) return "no_obs";
  if (goal && !actions && observations == ObservationInput::kLast) return "goal_last_obs";
  if (!goal && !actions && observations == ObservationInput::kLast) return "last_obs";
  std::string s;
  s += goal ? "g" : "";
  s += actions ? "a" : "";
  s += observations == ObservationInput::kAll ? "O" : observations == ObservationInput::kLast ? "o" : "";
  return s.empty() ? "empty" : s;
}

std::string InputCondition::label() const {
  std::string s = "(";
  s += goal ? "G" : "-";
  s += actions ? ",A_k" : ",-";
  s += observations == ObservationInput::kAll ? ",O_k" : observations == ObservationInput::kLast ? ",o_k" : "";
  return s + ")";
}

InputCondition InputCondition::parse(std::string_view name) {
  if (name == "full") return {true, true, ObservationInput::kAll};
  if (name == "no_obs") return {true, true, ObservationInput::kNone};
  if (name == "goal_last_obs") return {true, false, ObservationInput::kLast};
  if (name == "last_obs") return {false, false, ObservationInput::kLast};
  throw ConfigError("unknown input condition '" + std::string(name) +
                    "' (expected full, no_obs, goal_last_obs or last_obs)");
}

Matrix encode_action(ActionId a, const EmbeddingTable& table, const Vocabulary& vocab) {
  const auto& toks = vocab.action_tokens(a);
  Matrix out(static_cast<Eigen::Index>(toks.size()), table.rows.cols());
  for (std::size_t j = 0; j < toks.size(); ++j)
    out.row(static_cast<Eigen::Index>(j)) = table.rows.row(static_cast<Eigen::Index>(index(toks[j])));
  return out;
}

Matrix encode_observation(const ObservationWindow& o, const MapperParams& mapper) {
  return map_observations(mapper, o.vectors);
}

void append_action(HistoryEncoding& enc, ActionId a, const EmbeddingTable& table, const Vocabulary& vocab) {
  for (TokenId t : vocab.action_tokens(a)) {
    const auto id = static_cast<std::int64_t>(index(t));
    push_row(enc, table.rows.row(id), PositionKind::kAction, id, id, -1);
  }
}

void append_predicted_observations(HistoryEncoding& enc, const Matrix& rows) {
  for (Eigen::Index u = 0; u < rows.rows(); ++u) push_row(enc, rows.row(u), PositionKind::kObservation, kNoToken, -1, -1);
}

void append_segment(HistoryEncoding& enc, const Segment& segment, const EmbeddingTable& table,
                    const MapperParams& mapper, const Vocabulary& vocab, bool with_observation, bool with_action) {
  if (with_observation) {
    const Matrix beta = encode_observation(segment.observation, mapper);
    const Eigen::Index base = enc.raw_observations.rows();
    const Matrix& raw = segment.observation.vectors;
    if (base == 0) enc.raw_observations.resize(0, raw.cols());
    enc.raw_observations.conservativeResize(base + raw.rows(), Eigen::NoChange);
    enc.raw_observations.bottomRows(raw.rows()) = raw;
    for (Eigen::Index u = 0; u < beta.rows(); ++u)
      push_row(enc, beta.row(u), PositionKind::kObservation, kNoToken, -1, base + u);
  }
  if (with_action) append_action(enc, segment.action, table, vocab);
}

HistoryEncoding build_history(GoalId goal, const SegmentHistory& history, const EmbeddingTable& table,
                              const MapperParams& mapper, const Vocabulary& vocab, const InputCondition& condition) {
  HistoryEncoding enc;
  enc.h.resize(0, table.rows.cols());
  if (condition.goal) {
    for (TokenId t : vocab.goal_tokens(goal)) {
      const auto id = static_cast<std::int64_t>(index(t));
      push_row(enc, table.rows.row(id), PositionKind::kGoal, kNoToken, id, -1);
    }
    enc.goal_length = enc.n();
  }
  const std::size_t k = history.k();
  for (std::size_t i = 0; i < k; ++i) {
    const bool obs = condition.observations == ObservationInput::kAll ||
                     (condition.observations == ObservationInput::kLast && i + 1 == k);
    append_segment(enc, history.segments[i], table, mapper, vocab, obs, condition.actions);
  }
  return enc;
}

void scatter_input_gradient(const HistoryEncoding& enc, const Matrix& d_h, const MapperParams& mapper,
                            EmbeddingTable& d_table, MapperParams& d_mapper) {
  Matrix d_beta = Matrix::Zero(enc.raw_observations.rows(), d_h.cols());
  bool any_obs = false;
  for (std::size_t p = 0; p < enc.n(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    if (enc.embed_ids[p] >= 0) {
      d_table.rows.row(enc.embed_ids[p]) += d_h.row(row);
    } else if (enc.raw_index[p] >= 0) {
      d_beta.row(enc.raw_index[p]) += d_h.row(row);
      any_obs = true;
    }
  }
  if (any_obs) map_observations_backward(mapper, enc.raw_observations, d_beta, d_mapper);
}

}  // namespace vplan
