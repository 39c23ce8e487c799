#include "vplan/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "vplan/rng.hpp"

namespace vplan {

std::vector<ActionId> SegmentHistory::actions() const {
  std::vector<ActionId> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.action);
  return out;
}

namespace {

RowVector unit_gaussian(std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  RowVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n01(rng);
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

}  // namespace

ObservationModel::ObservationModel(std::size_t obs_dim, double noise_std, std::uint64_t seed, std::size_t n_actions,
                                   std::size_t n_variants, double variant_scale)
    : obs_dim_(obs_dim), noise_std_(noise_std), seed_(seed), n_variants_(n_variants), variant_scale_(variant_scale) {
  if (obs_dim == 0) throw ConfigError("observation model: obs_dim must be positive");
  if (!(noise_std >= 0)) throw ConfigError("observation model: noise_std must be >= 0");
  if (n_variants == 0) throw ConfigError("observation model: n_variants must be positive");
  prototypes_.resize(static_cast<Eigen::Index>(n_actions), static_cast<Eigen::Index>(obs_dim));
  for (std::size_t a = 0; a < n_actions; ++a)
    prototypes_.row(static_cast<Eigen::Index>(a)) = unit_gaussian(obs_dim, derive_seed(seed, {tag("prototype"), a}));
  signatures_.resize(static_cast<Eigen::Index>(n_variants), static_cast<Eigen::Index>(obs_dim));
  for (std::size_t z = 0; z < n_variants; ++z)
    signatures_.row(static_cast<Eigen::Index>(z)) = unit_gaussian(obs_dim, derive_seed(seed, {tag("variant"), z}));
}

RowVector ObservationModel::prototype(ActionId a) const {
  if (index(a) >= num_actions()) throw std::out_of_range("observation model: unknown action");
  return prototypes_.row(static_cast<Eigen::Index>(index(a)));
}

RowVector ObservationModel::variant_signature(std::uint32_t variant) const {
  if (n_variants_ <= 1) return RowVector::Zero(static_cast<Eigen::Index>(obs_dim_));
  if (variant >= n_variants_) throw std::out_of_range("observation model: unknown variant");
  return variant_scale_ * signatures_.row(static_cast<Eigen::Index>(variant));
}

std::uint64_t ObservationModel::video_seed(const std::string& video_id) const {
  return derive_seed(seed_, {tag("video"), fnv1a(video_id)});
}

void ObservationModel::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["obs_dim"] = obs_dim_;
  j["noise_std"] = noise_std_;
  j["seed"] = seed_;
  j["n_actions"] = num_actions();
  j["n_variants"] = n_variants_;
  j["variant_scale"] = variant_scale_;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ObservationModel ObservationModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return ObservationModel(j.at("obs_dim").get<std::size_t>(), j.at("noise_std").get<double>(),
                            j.at("seed").get<std::uint64_t>(), j.at("n_actions").get<std::size_t>(),
                            j.value("n_variants", std::size_t{1}), j.value("variant_scale", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("observation model " + path.string() + ": " + e.what());
  }
}

PerSecondLabels label_per_second(const VideoAnnotation& video, int t) {
  if (t <= 0) throw std::invalid_argument("label_per_second: t must be positive");
  const double last_end = video.steps.empty() ? 0.0 : video.steps.back().end;
  if (static_cast<double>(t) > std::ceil(last_end) + 1.0)
    throw std::invalid_argument("label_per_second: t exceeds the video '" + video.video_id + "'");
  PerSecondLabels out;
  out.labels.assign(static_cast<std::size_t>(t), std::nullopt);
  for (const auto& s : video.steps) {
    // Clips i with start <= i < end; a later step overrides an earlier one.
    const int lo = std::max(0, static_cast<int>(std::ceil(s.start)));
    const int hi = std::min(t, static_cast<int>(std::ceil(s.end)));
    for (int i = lo; i < hi; ++i) out.labels[static_cast<std::size_t>(i)] = s.action;
  }
  return out;
}

std::vector<ConsolidatedAction> consolidate(const PerSecondLabels& labels) {
  std::vector<ConsolidatedAction> out;
  Label prev;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const Label& cur = labels.labels[i];
    if (cur && cur != prev) out.push_back({*cur, static_cast<double>(i)});
    prev = cur;
  }
  return out;
}

namespace {

void check_rate(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("corrupt: error rate must lie in [0,1]");
}

// Positions to replace: a seeded permutation truncated to round(p*n), so the
// chosen set is nested across p for one seed.
std::vector<std::size_t> corrupted_positions(std::size_t n, double p, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(derive_seed(seed, {tag("corrupt-order")}));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)) % i;
    std::swap(order[i - 1], order[j]);
  }
  order.resize(static_cast<std::size_t>(std::llround(p * static_cast<double>(n))));
  return order;
}

ActionId replacement(ActionId truth, std::size_t position, std::size_t num_actions, std::uint64_t seed) {
  if (num_actions < 2) throw std::invalid_argument("corrupt: need at least two actions");
  SplitMix64 rng(derive_seed(seed, {tag("corrupt-draw"), position}));
  const std::size_t r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(num_actions - 1)) %
                        (num_actions - 1);
  return action_id(r >= index(truth) ? r + 1 : r);
}

}  // namespace

std::vector<ActionId> corrupt(const std::vector<ActionId>& actions, double p, std::size_t num_actions,
                              std::uint64_t seed) {
  check_rate(p);
  std::vector<ActionId> out = actions;
  for (std::size_t pos : corrupted_positions(actions.size(), p, seed))
    out[pos] = replacement(actions[pos], pos, num_actions, seed);
  return out;
}

PerSecondLabels corrupt(const PerSecondLabels& labels, double p, std::size_t num_actions, std::uint64_t seed) {
  check_rate(p);
  std::vector<std::size_t> action_positions;
  for (std::size_t i = 0; i < labels.labels.size(); ++i)
    if (labels.labels[i]) action_positions.push_back(i);
  PerSecondLabels out = labels;
  for (std::size_t j : corrupted_positions(action_positions.size(), p, seed)) {
    const std::size_t pos = action_positions[j];
    out.labels[pos] = replacement(*labels.labels[pos], j, num_actions, seed);
  }
  return out;
}

ObservationWindow observe(ActionId action, double center_time, int delta, const ObservationModel& model,
                          std::uint64_t video_seed, std::uint32_t variant) {
  if (delta < 1) throw std::invalid_argument("observe: delta must be >= 1");
  const RowVector base = model.prototype(action) + model.variant_signature(variant);
  ObservationWindow w;
  w.center_time = center_time;
  w.vectors.resize(delta, static_cast<Eigen::Index>(model.obs_dim()));
  for (int u = 0; u < delta; ++u) {
    SplitMix64 rng(derive_seed(video_seed, {double_bits(center_time), static_cast<std::uint64_t>(u)}));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Eigen::Index c = 0; c < base.size(); ++c) w.vectors(u, c) = base[c] + model.noise_std() * noise(rng);
  }
  return w;
}

SegmentHistory segment_history(const VideoAnnotation& video, int t, const ObservationModel& model,
                               const SegmenterConfig& cfg) {
  check_rate(cfg.error_rate);
  const PerSecondLabels truth = label_per_second(video, t);
  const std::size_t n_actions = model.num_actions();

  std::vector<ConsolidatedAction> segments;
  if (cfg.stage == CorruptionStage::kPerSecond) {
    segments = consolidate(cfg.error_rate > 0 ? corrupt(truth, cfg.error_rate, n_actions, cfg.seed) : truth);
  } else {
    segments = consolidate(truth);
    if (cfg.error_rate > 0) {
      std::vector<ActionId> acts;
      for (const auto& s : segments) acts.push_back(s.action);
      acts = corrupt(acts, cfg.error_rate, n_actions, cfg.seed);
      for (std::size_t i = 0; i < segments.size(); ++i) segments[i].action = acts[i];
    }
  }

  const std::uint64_t vseed = model.video_seed(video.video_id);
  SegmentHistory out;
  out.segments.reserve(segments.size());
  for (const auto& s : segments) {
    const auto clip = static_cast<std::size_t>(s.start);
    const ActionId shown = truth.labels[clip].value_or(s.action);
    out.segments.push_back({s.action, observe(shown, s.start, cfg.delta, model, vseed, video.variant)});
  }
  return out;
}

int history_horizon(const VideoAnnotation& video, std::size_t k) {
  if (k < video.steps.size()) return std::max(1, static_cast<int>(std::ceil(video.steps[k].start)));
  return static_cast<int>(std::ceil(video.steps.back().end));
}

}  // namespace vplan
