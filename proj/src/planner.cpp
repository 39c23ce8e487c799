#include "vplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "vplan/rng.hpp"

namespace vplan {

void BeamConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam size B must be >= 1");
  if (per_node > beam_size) throw ConfigError("per-node beam size b must not exceed B");
  if (plan_length < 1) throw ConfigError("plan length l must be >= 1");
}

double phi(const PlanScorer& scorer, const ScorerState& state, ActionId a) {
  return scorer.score(state, {a}).front();
}

std::vector<ActionId> candidate_actions(const Vocabulary& vocab, GoalId goal, bool restrict_to_goal) {
  if (restrict_to_goal) return vocab.goal_actions(goal);
  return all_actions(vocab);
}

namespace {

struct Extension {
  double score;
  ActionId action;
  std::size_t parent;
  double step;
};

bool better(const Extension& x, const Extension& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.action != y.action) return x.action < y.action;
  return x.parent < y.parent;
}

std::string describe_prefix(const PlanningQuery& q, const std::vector<ActionId>& appended, const Vocabulary& vocab) {
  std::string s = "[";
  bool first = true;
  auto add = [&](ActionId a) {
    if (!first) s += ", ";
    first = false;
    s += index(a) < vocab.num_actions() ? vocab.action_phrase(a) : "#" + std::to_string(index(a));
  };
  for (const auto& seg : q.history.segments) add(seg.action);
  for (ActionId a : appended) add(a);
  return s + "]";
}

}  // namespace

BeamResult beam_search(const PlanScorer& scorer, const PlanningQuery& query, const BeamConfig& cfg,
                       const Vocabulary& vocab) {
  cfg.validate();
  const std::vector<ActionId> candidates = candidate_actions(vocab, query.goal, cfg.restrict_to_goal);
  if (candidates.empty()) throw std::invalid_argument("beam search: empty candidate set");
  const std::size_t per_node = cfg.per_node == 0 ? cfg.beam_size : cfg.per_node;

  std::vector<BeamState> beams(1);
  beams[0].state = scorer.begin(query);
  std::vector<Extension> ext;
  for (std::size_t i = 0; i < cfg.plan_length; ++i) {
    ext.clear();
    for (std::size_t p = 0; p < beams.size(); ++p) {
      const std::vector<double> s = scorer.score(*beams[p].state, candidates);
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (std::isnan(s[c]) || s[c] == -std::numeric_limits<double>::infinity()) continue;
        ext.push_back({beams[p].score + s[c], candidates[c], p, s[c]});
      }
    }
    if (ext.empty())
      throw DeadEndError("beam search: no action can follow " + describe_prefix(query, beams[0].actions, vocab));
    std::sort(ext.begin(), ext.end(), better);

    std::vector<std::size_t> taken(beams.size(), 0);
    std::vector<BeamState> next;
    next.reserve(cfg.beam_size);
    for (const Extension& e : ext) {
      if (next.size() == cfg.beam_size) break;
      if (taken[e.parent] == per_node) continue;
      ++taken[e.parent];
      const BeamState& parent = beams[e.parent];
      BeamState b;
      b.state = scorer.extend(*parent.state, e.action);
      b.actions = parent.actions;
      b.actions.push_back(e.action);
      b.step_scores = parent.step_scores;
      b.step_scores.push_back(e.step);
      b.score = e.score;
      next.push_back(std::move(b));
    }
    beams = std::move(next);
  }

  BeamResult r;
  r.plan = beams.front().actions;
  r.step_scores = beams.front().step_scores;
  r.beams = std::move(beams);
  return r;
}

// ---------------------------------------------------- free-form generators

MockTextGenerator MockTextGenerator::random_phrases(const Vocabulary& vocab, std::uint64_t seed) {
  const std::vector<std::string> phrases = vocab.actions();
  return MockTextGenerator([phrases, seed](const std::string& prompt, std::size_t) {
    SplitMix64 rng(derive_seed(seed, {fnv1a(prompt)}));
    return phrases[static_cast<std::size_t>(rng.uniform() * static_cast<double>(phrases.size())) % phrases.size()];
  });
}

HttpTextGenerator::HttpTextGenerator(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
  const std::string& url = cfg_.endpoint;
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("generator endpoint must look like http://host:port/path");
  const auto slash = url.find('/', scheme + 3);
  scheme_host_port_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  if (cfg_.max_retries < 0) throw ConfigError("generator max_retries must be >= 0");
  if (!(cfg_.timeout_seconds > 0)) throw ConfigError("generator timeout must be positive");
}

std::string HttpTextGenerator::generate(const std::string& prompt) {
  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  const std::string body = nlohmann::json{{"model", cfg_.model}, {"prompt", prompt}}.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return nlohmann::json::parse(res->body).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("bad reply: ") + e.what();
    }
  }
  throw std::runtime_error("generator " + cfg_.endpoint + " failed after " + std::to_string(cfg_.max_retries + 1) +
                           " attempts: " + last_error);
}

RowVector BagOfWordsEmbedder::embed(const std::string& text) const {
  RowVector v = RowVector::Zero(static_cast<Eigen::Index>(vocab_->num_tokens()));
  for (const std::string& w : tokenize(text))
    if (auto t = vocab_->find_token(w)) v[static_cast<Eigen::Index>(index(*t))] += 1.0;
  return v;
}

double cosine(const RowVector& a, const RowVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return a.dot(b) / (na * nb);
}

ActionId retrieve_closest_action(const std::string& text, const Vocabulary& vocab, const TextEmbedder& embedder) {
  if (vocab.num_actions() == 0) throw std::invalid_argument("retrieval: empty action set");
  const RowVector q = embedder.embed(text);
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < vocab.num_actions(); ++a) {
    const double s = cosine(q, embedder.embed(vocab.actions()[a]));
    if (s > best_sim) {
      best_sim = s;
      best = a;
    }
  }
  return action_id(best);
}

std::string generator_prompt(const std::string& goal, const std::vector<std::string>& steps) {
  std::ostringstream os;
  os << "Goal: " << goal << "\n";
  os << "Steps so far:";
  for (std::size_t i = 0; i < steps.size(); ++i) os << "\n" << (i + 1) << ". " << steps[i];
  os << "\nNext step:";
  return os.str();
}

std::vector<ActionId> plan_with_generator(TextGeneratorClient& client, GoalId goal,
                                          const std::vector<ActionId>& history, std::size_t l,
                                          const Vocabulary& vocab, const TextEmbedder& embedder) {
  std::vector<std::string> steps;
  for (ActionId a : history) steps.push_back(vocab.action_phrase(a));
  std::vector<ActionId> plan;
  for (std::size_t i = 0; i < l; ++i) {
    std::string text;
    try {
      text = client.generate(generator_prompt(vocab.goal_prompt(goal), steps));
    } catch (const std::exception& e) {
      throw GeneratorError(std::string("plan_with_generator: ") + e.what(), plan);
    }
    const ActionId a = retrieve_closest_action(text, vocab, embedder);
    plan.push_back(a);
    steps.push_back(vocab.action_phrase(a));
  }
  return plan;
}

}  // namespace vplan
