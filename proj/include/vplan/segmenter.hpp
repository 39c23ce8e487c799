#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vplan/common.hpp"
#include "vplan/corpus.hpp"

namespace vplan {

/// Per-clip label; nullopt is Background.
using Label = std::optional<ActionId>;

/// One label per one-second clip c_0 ... c_{t-1}.
struct PerSecondLabels {
  std::vector<Label> labels;

  std::size_t horizon() const { return labels.size(); }
  bool operator==(const PerSecondLabels&) const = default;
};

struct ConsolidatedAction {
  ActionId action{};
  double start = 0.0;

  bool operator==(const ConsolidatedAction&) const = default;
};

/// delta feature vectors around a segment's start time.
struct ObservationWindow {
  Matrix vectors;  // delta x obs_dim
  double center_time = 0.0;

  std::size_t delta() const { return static_cast<std::size_t>(vectors.rows()); }
};

struct Segment {
  ActionId action{};
  ObservationWindow observation;
};

struct SegmentHistory {
  std::vector<Segment> segments;

  std::size_t k() const { return segments.size(); }
  std::vector<ActionId> actions() const;
};

/// Synthetic stand-in for a frozen video featurizer. Each action has a unit
/// norm prototype drawn from a seeded Gaussian; a frame is the prototype,
/// plus the video's variant signature when there is more than one variant,
/// plus i.i.d. Gaussian noise.
class ObservationModel {
 public:
  ObservationModel(std::size_t obs_dim, double noise_std, std::uint64_t seed, std::size_t n_actions,
                   std::size_t n_variants = 1, double variant_scale = 1.0);

  std::size_t obs_dim() const { return obs_dim_; }
  double noise_std() const { return noise_std_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_actions() const { return static_cast<std::size_t>(prototypes_.rows()); }
  std::size_t num_variants() const { return n_variants_; }
  double variant_scale() const { return variant_scale_; }

  RowVector prototype(ActionId a) const;
  RowVector variant_signature(std::uint32_t variant) const;
  /// Seed of the noise stream for one video.
  std::uint64_t video_seed(const std::string& video_id) const;

  void save(const std::filesystem::path& path) const;
  static ObservationModel load(const std::filesystem::path& path);

 private:
  std::size_t obs_dim_;
  double noise_std_;
  std::uint64_t seed_;
  std::size_t n_variants_;
  double variant_scale_;
  Matrix prototypes_;
  Matrix signatures_;
};

/// Labels clip i (covering [i, i+1)) with the action of the step whose
/// interval [start, end) contains i, else Background. Throws
/// std::invalid_argument for t <= 0 or t beyond the video.
PerSecondLabels label_per_second(const VideoAnnotation& video, int t);

/// Drops Background and collapses maximal runs of one action.
std::vector<ConsolidatedAction> consolidate(const PerSecondLabels& labels);

/// Replaces exactly round(p * n) of the n action positions (chosen without
/// replacement) by an action drawn uniformly from 𝒜 minus the true one.
/// Background is never touched. For a fixed seed the replaced set grows
/// monotonically with p and replacements agree across p.
PerSecondLabels corrupt(const PerSecondLabels& labels, double p, std::size_t num_actions, std::uint64_t seed);
std::vector<ActionId> corrupt(const std::vector<ActionId>& actions, double p, std::size_t num_actions,
                              std::uint64_t seed);

ObservationWindow observe(ActionId action, double center_time, int delta, const ObservationModel& model,
                          std::uint64_t video_seed, std::uint32_t variant = 0);

enum class CorruptionStage {
  kPerSecond,     // corrupt clip labels, then consolidate
  kConsolidated,  // consolidate, then corrupt the segment actions
};

struct SegmenterConfig {
  int delta = 2;
  double error_rate = 0.0;
  std::uint64_t seed = 0;
  CorruptionStage stage = CorruptionStage::kPerSecond;
};

/// Observation windows always show the video's true content at each
/// segment's start time; only the labels carry the corruption.
SegmentHistory segment_history(const VideoAnnotation& video, int t, const ObservationModel& model,
                               const SegmenterConfig& cfg);

/// Clip count covering the first k steps (start of step k+1), or the full
/// video when k == K.
int history_horizon(const VideoAnnotation& video, std::size_t k);

}  // namespace vplan
