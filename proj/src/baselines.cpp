#include "vplan/baselines.hpp"

#include <fstream>
#include <numeric>

#include "json.hpp"
#include "vplan/rng.hpp"

namespace vplan {

using nlohmann::json;

TransitionTable TransitionTable::fit(const std::vector<VideoAnnotation>& videos, std::size_t num_actions) {
  if (videos.empty()) throw DataError("cannot fit transitions on an empty split");
  const auto n = static_cast<Eigen::Index>(num_actions);
  TransitionTable t;
  t.counts_ = Matrix::Zero(n, n);
  t.initial_.assign(num_actions, 0.0);
  t.marginal_.assign(num_actions, 0.0);
  for (const auto& v : videos) {
    for (std::size_t i = 0; i < v.steps.size(); ++i) {
      const std::size_t a = index(v.steps[i].action);
      if (a >= num_actions) throw DataError("video '" + v.video_id + "': action id out of range");
      t.marginal_[a] += 1.0;
      if (i == 0)
        t.initial_[a] += 1.0;
      else
        t.counts_(static_cast<Eigen::Index>(index(v.steps[i - 1].action)), static_cast<Eigen::Index>(a)) += 1.0;
    }
  }
  return t;
}

TransitionTable TransitionTable::from_counts(Matrix counts, std::vector<double> initial, std::vector<double> marginal) {
  if (counts.rows() != counts.cols() || static_cast<std::size_t>(counts.rows()) != initial.size() ||
      initial.size() != marginal.size())
    throw std::invalid_argument("transition table: inconsistent shapes");
  TransitionTable t;
  t.counts_ = std::move(counts);
  t.initial_ = std::move(initial);
  t.marginal_ = std::move(marginal);
  return t;
}

std::vector<double> TransitionTable::distribution(std::optional<ActionId> prev, const std::vector<ActionId>& support,
                                                  bool backoff) const {
  std::vector<double> w(support.size(), 0.0);
  auto fill = [&](auto&& weight) {
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) total += (w[i] = weight(index(support[i])));
    if (total > 0)
      for (double& x : w) x /= total;
    return total > 0;
  };
  if (prev && index(*prev) >= num_actions()) throw std::out_of_range("transition table: unknown action");
  const bool ok = prev ? fill([&](std::size_t a) { return counts_(static_cast<Eigen::Index>(index(*prev)),
                                                                   static_cast<Eigen::Index>(a)); })
                       : fill([&](std::size_t a) { return initial_[a]; });
  if (ok) return w;
  if (!backoff) return std::vector<double>(support.size(), 0.0);
  if (fill([&](std::size_t a) { return marginal_[a]; })) return w;
  return std::vector<double>(support.size(), support.empty() ? 0.0 : 1.0 / static_cast<double>(support.size()));
}

double TransitionTable::probability(std::optional<ActionId> prev, ActionId next, bool backoff) const {
  std::vector<ActionId> support(num_actions());
  for (std::size_t a = 0; a < support.size(); ++a) support[a] = action_id(a);
  return distribution(prev, support, backoff).at(index(next));
}

void TransitionTable::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  if (vocab.num_actions() != num_actions()) throw std::invalid_argument("transition table: vocabulary mismatch");
  json j;
  j["actions"] = vocab.actions();
  json rows = json::object();
  json counts = json::object();
  for (std::size_t a = 0; a < num_actions(); ++a) {
    const auto r = static_cast<Eigen::Index>(a);
    const double total = counts_.row(r).sum();
    if (total <= 0) continue;
    json row = json::object();
    json crow = json::object();
    for (std::size_t b = 0; b < num_actions(); ++b) {
      const double c = counts_(r, static_cast<Eigen::Index>(b));
      if (c <= 0) continue;
      row[vocab.actions()[b]] = c / total;
      crow[vocab.actions()[b]] = c;
    }
    rows[vocab.actions()[a]] = std::move(row);
    counts[vocab.actions()[a]] = std::move(crow);
  }
  j["rows"] = std::move(rows);
  const double init_total = std::accumulate(initial_.begin(), initial_.end(), 0.0);
  json init = json::object();
  json init_counts = json::object();
  json marg = json::object();
  for (std::size_t a = 0; a < num_actions(); ++a) {
    if (initial_[a] > 0) {
      init[vocab.actions()[a]] = initial_[a] / init_total;
      init_counts[vocab.actions()[a]] = initial_[a];
    }
    if (marginal_[a] > 0) marg[vocab.actions()[a]] = marginal_[a];
  }
  j["initial"] = std::move(init);
  j["counts"] = std::move(counts);
  j["initial_counts"] = std::move(init_counts);
  j["marginal_counts"] = std::move(marg);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

TransitionTable TransitionTable::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    if (j.at("actions").get<std::vector<std::string>>() != vocab.actions())
      throw DataError(path.string() + ": action list does not match the vocabulary");
    auto id = [&](const std::string& phrase) {
      auto a = vocab.find_action(phrase);
      if (!a) throw DataError(path.string() + ": unknown action '" + phrase + "'");
      return static_cast<Eigen::Index>(index(*a));
    };
    const auto n = static_cast<Eigen::Index>(vocab.num_actions());
    Matrix counts = Matrix::Zero(n, n);
    std::vector<double> initial(vocab.num_actions(), 0.0), marginal(vocab.num_actions(), 0.0);
    // Files without raw counts carry probabilities, which normalize to the same table.
    const bool raw = j.contains("counts");
    for (const auto& [prev, row] : (raw ? j.at("counts") : j.at("rows")).items())
      for (const auto& [next, value] : row.items()) counts(id(prev), id(next)) = value.get<double>();
    for (const auto& [a, value] : (raw ? j.at("initial_counts") : j.at("initial")).items())
      initial[static_cast<std::size_t>(id(a))] = value.get<double>();
    if (j.contains("marginal_counts"))
      for (const auto& [a, value] : j.at("marginal_counts").items())
        marginal[static_cast<std::size_t>(id(a))] = value.get<double>();
    return from_counts(std::move(counts), std::move(initial), std::move(marginal));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<ActionId> all_actions(const Vocabulary& vocab) {
  std::vector<ActionId> out(vocab.num_actions());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = action_id(a);
  return out;
}

std::vector<ActionId> sample_random_plan(const Vocabulary& vocab, GoalId goal, std::size_t l, bool restrict_to_goal,
                                         std::uint64_t seed) {
  const std::vector<ActionId> support = restrict_to_goal ? vocab.goal_actions(goal) : all_actions(vocab);
  if (support.empty()) throw DataError("random plan: empty candidate set");
  SplitMix64 rng(seed);
  std::vector<ActionId> plan(l);
  for (auto& a : plan)
    a = support[static_cast<std::size_t>(rng.uniform() * static_cast<double>(support.size())) % support.size()];
  return plan;
}

}  // namespace vplan
