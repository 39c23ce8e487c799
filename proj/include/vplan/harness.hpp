#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vplan/baselines.hpp"
#include "vplan/corpus.hpp"
#include "vplan/forecaster.hpp"
#include "vplan/metrics.hpp"
#include "vplan/planner.hpp"
#include "vplan/segmenter.hpp"

namespace vplan {

/// Everything a run depends on. Populated from defaults, then a key=value
/// config file, then command-line overrides; see README for the keys.
struct RunConfig {
  std::string corpus_preset = "crosstask";
  SynthCorpusSpec corpus = synth_preset("crosstask");
  std::filesystem::path corpus_dir;  // empty: <out>/corpus
  double obs_noise = 0.25;
  double variant_scale = 1.0;

  ForecasterConfig model;
  TrainConfig train;
  BeamConfig beam;
  bool length_normalize = false;
  TokenScore token_score = TokenScore::kDotProduct;
  bool markov_backoff = true;

  std::vector<std::size_t> horizons{1, 3, 4};
  std::vector<std::string> conditions{"random", "random_goal", "markov", "markov_goal", "full"};
  std::vector<double> noise_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double eval_noise = 0.0;
  std::size_t max_test_examples = 0;  // 0: all
  std::filesystem::path warm_start;   // optional extra ablation row

  std::uint64_t seed = 0;
  std::size_t n_seeds = 5;
  bool parallel = true;
  std::filesystem::path out;

  GeneratorConfig generator;

  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError.
  void validate() const;
  std::size_t max_horizon() const;
  std::vector<std::uint64_t> seeds() const;
  std::filesystem::path corpus_path() const;
  /// Sorted key=value lines covering every field.
  std::string canonical() const;
  std::string hash() const;
};

/// Reads key=value lines (INI syntax; [section] headers prefix keys).
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Conditions that run a trained sequence model.
bool is_neural_condition(const std::string& condition);
/// Input condition + architecture behind a neural condition name.
ForecasterConfig model_config_for(const RunConfig& cfg, const std::string& condition);

struct CorpusBundle {
  Vocabulary vocab;
  std::vector<VideoAnnotation> train;
  std::vector<VideoAnnotation> test;
  std::unique_ptr<ObservationModel> observations;
  std::vector<GoalTransitions> transitions;  // empty for non-synthetic corpora
  std::uint64_t hash = 0;
};

CorpusBundle load_corpus(const std::filesystem::path& dir);

struct PlanRecord {
  std::string example_id;
  std::uint32_t goal = 0;
  std::size_t k = 0;
  std::vector<ActionId> pred;
  std::vector<ActionId> gt;
  std::vector<double> scores;
  std::string condition;
  double noise = 0;
  std::uint64_t seed = 0;
};

std::string to_jsonl(const PlanRecord& r, const Vocabulary& vocab);

/// Shared state for evaluating many conditions on one corpus.
class Experiment {
 public:
  Experiment(RunConfig cfg, CorpusBundle corpus);

  const RunConfig& config() const { return cfg_; }
  const CorpusBundle& corpus() const { return corpus_; }
  const std::vector<PlanningExample>& examples() const { return examples_; }
  const TransitionTable& transitions() const { return table_; }

  std::filesystem::path checkpoint_path(const std::string& condition, std::uint64_t seed) const;
  /// Hash of everything a checkpoint depends on except the epoch count.
  std::string model_hash(const std::string& condition, std::uint64_t seed) const;

  /// Trains (or resumes) and saves the checkpoint; returns it.
  Checkpoint train_model(const std::string& condition, std::uint64_t seed, bool verbose = false) const;
  /// Loads a checkpoint and checks it was trained under this config.
  const NeuralForecaster& model(const std::string& condition, std::uint64_t seed);

  /// Planning history for one example at corruption rate `noise`.
  SegmentHistory history(const PlanningExample& ex, double noise, std::uint64_t seed) const;

  /// Plans every example with one policy and scores it at every horizon.
  std::vector<EvalRecord> evaluate(const std::string& condition, std::uint64_t seed, double noise,
                                   std::vector<PlanRecord>* plans = nullptr);

 private:
  RunConfig cfg_;
  CorpusBundle corpus_;
  std::vector<PlanningExample> examples_;
  TransitionTable table_;
  std::map<std::string, NeuralForecaster> models_;
};

struct Manifest {
  std::string command;
  std::string config_hash;
  std::string corpus_hash;
  std::string code_version;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> checkpoints;
  std::vector<std::pair<std::string, double>> timings;

  void write(const std::filesystem::path& path) const;
};

std::string code_version();
std::string hex64(std::uint64_t x);

int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_sweep_noise(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_report(const std::filesystem::path& run_dir);

/// Gap curve rows: per horizon and noise level, the full and no-observation
/// means and their paired gap, with per-seed Spearman correlations.
struct GapPoint {
  std::size_t l = 0;
  double noise = 0;
  double full_mean = 0, full_ste = 0;
  double no_obs_mean = 0, no_obs_ste = 0;
  double gap_mean = 0, gap_ste = 0;
};

struct GapTrend {
  std::size_t l = 0;
  std::vector<double> rho_gap;  // per seed
  std::vector<double> rho_full;
  std::vector<double> rho_no_obs;
};

void gap_curve(const std::vector<EvalRecord>& records, const std::vector<double>& grid,
               const std::vector<std::size_t>& horizons, const std::string& metric, std::vector<GapPoint>& points,
               std::vector<GapTrend>& trends);

}  // namespace vplan
