#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vplan/baselines.hpp"
#include "vplan/corpus.hpp"
#include "vplan/encoders.hpp"
#include "vplan/forecaster.hpp"
#include "vplan/segmenter.hpp"

namespace vplan {

/// What a planner may see: the goal and the (possibly noisy) segment
/// history. Target actions never pass through here.
struct PlanningQuery {
  GoalId goal{};
  SegmentHistory history;
};

/// Per-beam scorer state. Immutable once built; extend() returns a new one.
class ScorerState {
 public:
  virtual ~ScorerState() = default;
  std::vector<ActionId> appended;  // actions added since the query history
};

using ScorerStatePtr = std::shared_ptr<const ScorerState>;

/// Extension scoring contract shared by every policy the beam search runs.
class PlanScorer {
 public:
  virtual ~PlanScorer() = default;

  virtual std::string name() const = 0;
  virtual ScorerStatePtr begin(const PlanningQuery& query) const = 0;
  /// phi(state, a) for each candidate; -inf marks an impossible extension.
  virtual std::vector<double> score(const ScorerState& state, const std::vector<ActionId>& candidates) const = 0;
  virtual ScorerStatePtr extend(const ScorerState& state, ActionId a) const = 0;
  /// Neural scorers append delta predicted observation rows after each
  /// action (and once before the first).
  virtual bool rolls_out_observations() const { return false; }
};

/// Uniform policy: phi = -ln|support| on the support, -inf off it.
class UniformScorer final : public PlanScorer {
 public:
  UniformScorer(const Vocabulary& vocab, bool restrict_to_goal);

  std::string name() const override { return restrict_ ? "random_goal" : "random"; }
  ScorerStatePtr begin(const PlanningQuery& query) const override;
  std::vector<double> score(const ScorerState& state, const std::vector<ActionId>& candidates) const override;
  ScorerStatePtr extend(const ScorerState& state, ActionId a) const override;

 private:
  const Vocabulary* vocab_;
  bool restrict_;
};

/// Most-probable-action policy: phi = ln P(a | previous action), with P
/// renormalized over 𝒜_G when restricted to the goal.
class MarkovScorer final : public PlanScorer {
 public:
  MarkovScorer(const TransitionTable& table, const Vocabulary& vocab, bool restrict_to_goal, bool backoff = true);

  std::string name() const override { return restrict_ ? "markov_goal" : "markov"; }
  ScorerStatePtr begin(const PlanningQuery& query) const override;
  std::vector<double> score(const ScorerState& state, const std::vector<ActionId>& candidates) const override;
  ScorerStatePtr extend(const ScorerState& state, ActionId a) const override;

 private:
  const TransitionTable* table_;
  const Vocabulary* vocab_;
  bool restrict_;
  bool backoff_;
};

enum class TokenScore {
  kDotProduct,  // raw alpha . h_hat
  kLogSoftmax,  // log-softmax over the token vocabulary
};

/// Sequence-model policy. phi(a) = sum_j alpha^j . step(H ⋄ alpha^{1:j-1}),
/// optionally divided by r_a.
class NeuralScorer final : public PlanScorer {
 public:
  NeuralScorer(const NeuralForecaster& model, const Vocabulary& vocab, bool length_normalize = false,
               TokenScore token_score = TokenScore::kDotProduct);

  std::string name() const override { return "neural_" + model_->config.condition.name(); }
  ScorerStatePtr begin(const PlanningQuery& query) const override;
  std::vector<double> score(const ScorerState& state, const std::vector<ActionId>& candidates) const override;
  ScorerStatePtr extend(const ScorerState& state, ActionId a) const override;
  bool rolls_out_observations() const override { return model_->config.condition.uses_observations(); }

  /// Reference phi by full forward passes over the explicit encoding.
  double reference_phi(const ScorerState& state, ActionId a) const;

 private:
  double token_term(const RowVector& h_hat, std::size_t token) const;

  const NeuralForecaster* model_;
  const Vocabulary* vocab_;
  bool length_normalize_;
  TokenScore token_score_;
};

class NeuralScorerState final : public ScorerState {
 public:
  HistoryEncoding encoding;  // history plus appended actions and rollouts
  SequenceState seq;
};

}  // namespace vplan
