#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vplan/common.hpp"
#include "vplan/corpus.hpp"
#include "vplan/segmenter.hpp"

namespace vplan {

/// Token embeddings, one row per word token. The same rows score action
/// tokens at the output.
struct EmbeddingTable {
  Matrix rows;  // |word_tokens| x d

  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Trainable obs_dim -> d map: x*w1 + b1, or tanh(x*w1 + b1)*w2 + b2 when
/// a hidden layer is configured.
struct MapperParams {
  Matrix w1, b1;
  Matrix w2, b2;  // empty for the affine mapper

  bool has_hidden() const { return w2.size() > 0; }
  std::size_t in_dim() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(has_hidden() ? w2.cols() : w1.cols()); }
};

EmbeddingTable init_embedding(std::size_t num_tokens, std::size_t d, double init_std, std::uint64_t seed);
/// hidden == 0 gives the affine mapper.
MapperParams init_mapper(std::size_t obs_dim, std::size_t d, std::size_t hidden, double init_std,
                         std::uint64_t seed);
MapperParams zeros_like(const MapperParams& m);

Matrix map_observations(const MapperParams& mapper, const Matrix& x);
/// Accumulates dL/dparams for y = map_observations(mapper, x).
void map_observations_backward(const MapperParams& mapper, const Matrix& x, const Matrix& dy, MapperParams& grad);

/// Which parts of the history the model sees.
enum class ObservationInput { kAll, kLast, kNone };

struct InputCondition {
  bool goal = true;
  bool actions = true;
  ObservationInput observations = ObservationInput::kAll;

  bool uses_observations() const { return observations != ObservationInput::kNone; }
  /// Short name: full, no_obs, goal_last_obs, last_obs, or a composite.
  std::string name() const;
  /// Table-style label such as "(G,A_k,O_k)".
  std::string label() const;
  static InputCondition parse(std::string_view name);

  bool operator==(const InputCondition&) const = default;
};

enum class PositionKind : std::uint8_t { kGoal, kObservation, kAction };

inline constexpr std::int64_t kNoToken = -1;

/// Flat representation sequence H with its masks. `embed_ids` names the
/// embedding row behind goal/action positions; `raw_index` names the row of
/// `raw_observations` behind an observation position. Both are -1 elsewhere.
struct HistoryEncoding {
  Matrix h;                          // n x d
  std::vector<std::uint8_t> action_mask;
  std::vector<std::uint8_t> target_mask;
  std::vector<std::int64_t> token_ids;
  std::vector<PositionKind> kinds;
  std::vector<std::int64_t> embed_ids;
  std::vector<std::int64_t> raw_index;
  Matrix raw_observations;           // featurizer outputs, mapper inputs
  std::size_t goal_length = 0;

  std::size_t n() const { return kinds.size(); }
};

Matrix encode_action(ActionId a, const EmbeddingTable& table, const Vocabulary& vocab);
Matrix encode_observation(const ObservationWindow& o, const MapperParams& mapper);

/// Builds the layout [goal tokens][beta_1][alpha_1]...[beta_k][alpha_k],
/// filtered by the input condition.
HistoryEncoding build_history(GoalId goal, const SegmentHistory& history, const EmbeddingTable& table,
                              const MapperParams& mapper, const Vocabulary& vocab,
                              const InputCondition& condition = {});

/// Appends one segment (observation window, then action tokens).
void append_segment(HistoryEncoding& enc, const Segment& segment, const EmbeddingTable& table,
                    const MapperParams& mapper, const Vocabulary& vocab, bool with_observation, bool with_action);
void append_action(HistoryEncoding& enc, ActionId a, const EmbeddingTable& table, const Vocabulary& vocab);
/// Appends model-predicted observation rows (no raw features behind them).
void append_predicted_observations(HistoryEncoding& enc, const Matrix& rows);

/// Sends dL/dH back to the embedding rows and mapper parameters that
/// produced the encoding.
void scatter_input_gradient(const HistoryEncoding& enc, const Matrix& d_h, const MapperParams& mapper,
                            EmbeddingTable& d_table, MapperParams& d_mapper);

}  // namespace vplan
