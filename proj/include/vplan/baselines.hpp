#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vplan/common.hpp"
#include "vplan/corpus.hpp"

namespace vplan {

/// First-order action transition counts over the whole action set, with an
/// initial-action and a marginal (all positions) count vector.
class TransitionTable {
 public:
  TransitionTable() = default;

  static TransitionTable fit(const std::vector<VideoAnnotation>& videos, std::size_t num_actions);
  static TransitionTable from_counts(Matrix counts, std::vector<double> initial, std::vector<double> marginal);

  std::size_t num_actions() const { return static_cast<std::size_t>(counts_.rows()); }
  const Matrix& counts() const { return counts_; }
  const std::vector<double>& initial_counts() const { return initial_; }
  const std::vector<double>& marginal_counts() const { return marginal_; }

  /// P(next | prev) renormalized over `support`, in support order. prev ==
  /// nullopt uses the initial distribution. A row with no mass on the
  /// support falls back to the marginal, then to uniform; with backoff off
  /// it is all zeros.
  std::vector<double> distribution(std::optional<ActionId> prev, const std::vector<ActionId>& support,
                                   bool backoff = true) const;
  /// Same over all of 𝒜.
  double probability(std::optional<ActionId> prev, ActionId next, bool backoff = true) const;

  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static TransitionTable load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  Matrix counts_;
  std::vector<double> initial_;
  std::vector<double> marginal_;
};

/// Every action of 𝒜 in id order.
std::vector<ActionId> all_actions(const Vocabulary& vocab);

/// Uniform random plan of length l over 𝒜 or 𝒜_G.
std::vector<ActionId> sample_random_plan(const Vocabulary& vocab, GoalId goal, std::size_t l, bool restrict_to_goal,
                                         std::uint64_t seed);

}  // namespace vplan
