#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vplan/common.hpp"
#include "vplan/corpus.hpp"
#include "vplan/encoders.hpp"
#include "vplan/segmenter.hpp"
#include "vplan/sequence_model.hpp"

namespace vplan {

struct ForecasterConfig {
  SequenceModelConfig seq;
  std::size_t obs_dim = 16;
  std::size_t mapper_hidden = 0;
  int delta = 2;
  InputCondition condition;

  void validate() const;
};

/// Embedding table, observation mapper and sequence model trained jointly.
class NeuralForecaster {
 public:
  static NeuralForecaster initialize(const ForecasterConfig& cfg, const Vocabulary& vocab, std::uint64_t seed);
  NeuralForecaster zeros_like() const;

  HistoryEncoding encode(GoalId goal, const SegmentHistory& history, const Vocabulary& vocab) const;

  template <class F>
  void for_each_param(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_param(F&& f) const {
    visit(*this, f);
  }

  std::size_t num_parameters() const;

  ForecasterConfig config;
  EmbeddingTable embedding;
  MapperParams mapper;
  SequenceModel seq;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f(std::string("embedding"), self.embedding.rows);
    f(std::string("mapper.w1"), self.mapper.w1);
    f(std::string("mapper.b1"), self.mapper.b1);
    if (self.mapper.has_hidden()) {
      f(std::string("mapper.w2"), self.mapper.w2);
      f(std::string("mapper.b2"), self.mapper.b2);
    }
    self.seq.for_each_param(f);
  }
};

/// Prediction for the position after `prefix`, by a full forward pass.
RowVector step(const SequenceModel& model, const Matrix& prefix);

/// logit_p = row_p . h_hat over every word token.
RowVector action_logits(const RowVector& h_hat, const EmbeddingTable& table);

/// delta predicted rows, each fed back before predicting the next.
Matrix rollout_observation(const SequenceModel& model, const Matrix& prefix, int delta);

struct LossWeights {
  double action = 1.0;
  double observation = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double action = 0.0;       // summed cross-entropy over action targets
  double observation = 0.0;  // summed squared error / d over observation targets
  std::vector<double> per_position;
  std::size_t action_targets = 0;
  std::size_t observation_targets = 0;
};

/// Joint next-representation loss. Observation targets are the encoding rows
/// themselves with gradients stopped; pass `frozen_targets` to supply them
/// from elsewhere (same shape as enc.h). Accumulates into `grad` when given.
LossBreakdown loss(const NeuralForecaster& model, const HistoryEncoding& enc, NeuralForecaster* grad = nullptr,
                   const LossWeights& weights = {}, const Matrix* frozen_targets = nullptr);

/// One teacher-forced sequence: `history` leading segments rendered per the
/// input condition, then `future` segments with observations (when the
/// condition uses them) and actions.
struct TrainingInstance {
  std::size_t video = 0;
  std::size_t history = 0;
  std::size_t future = 0;
};

struct TrainingSet {
  std::vector<GoalId> goals;
  std::vector<SegmentHistory> segments;  // clean, one per video
  std::vector<TrainingInstance> instances;
};

/// Conditions that see every observation and action train on whole videos.
/// Last-observation conditions train on windows [goal?][beta_k] followed by
/// up to `horizon` future segments, one per k.
TrainingSet build_training_set(const std::vector<VideoAnnotation>& videos, const ObservationModel& obs_model,
                               const InputCondition& condition, int delta, std::size_t horizon);

/// `history_end`, when given, receives the first position of the future part.
HistoryEncoding encode_instance(const NeuralForecaster& model, const TrainingSet& set, const TrainingInstance& inst,
                                const Vocabulary& vocab, std::size_t* history_end = nullptr);

/// Replaces each observation window at or after position `first`, with
/// probability `prob`, by the model's own autoregressive rollout. Replaced
/// rows become constants. Returns the original rows as loss targets.
Matrix substitute_rollouts(const NeuralForecaster& model, HistoryEncoding& enc, std::size_t first, double prob,
                           std::uint64_t seed);

struct TrainConfig {
  std::string optimizer = "adam";  // adam | sgd
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.0;  // sgd only
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  double clip_norm = 1.0;  // <= 0 disables
  std::uint64_t seed = 0;
  LossWeights weights;
  /// Per-segment probability of feeding the model its own observation
  /// rollout instead of the true window. 0 is pure teacher forcing.
  double rollout_prob = 0.0;
  bool parallel = true;

  void validate() const;
};

struct OptimizerState {
  std::string algorithm;
  std::size_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// Epoch-mean losses so far; training resumes after the last recorded epoch.
struct TrainProgress {
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Trains until cfg.epochs epochs are recorded in `progress`. On a
/// non-finite loss or gradient the model and optimizer are restored to the
/// last completed epoch and DivergenceError is thrown.
void train(NeuralForecaster& model, OptimizerState& opt, TrainProgress& progress, const TrainingSet& set,
           const Vocabulary& vocab, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean gradient and mean loss over a batch. The parallel path computes
/// per-instance gradients concurrently and sums them in instance order, so
/// both paths give bit-identical results.
double batch_gradient(const NeuralForecaster& model, const TrainingSet& set,
                      const std::vector<std::size_t>& batch, const Vocabulary& vocab, const LossWeights& weights,
                      NeuralForecaster& grad, bool parallel);

/// Mean loss over every instance, without gradients.
double evaluate_loss(const NeuralForecaster& model, const TrainingSet& set, const Vocabulary& vocab,
                     const LossWeights& weights = {});

struct Checkpoint {
  NeuralForecaster model;
  OptimizerState optimizer;
  TrainProgress progress;
  TrainConfig train;
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws DataError on a missing/malformed file or an unknown version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string to_json_string(const ForecasterConfig& cfg);

}  // namespace vplan
