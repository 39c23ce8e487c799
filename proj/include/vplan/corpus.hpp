#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vplan/common.hpp"

namespace vplan {

// File-level annotation, exactly as stored in the JSON-lines corpus.
struct AnnotatedStep {
  std::string action;
  double start = 0.0;
  double end = 0.0;

  bool operator==(const AnnotatedStep&) const = default;
};

struct AnnotationRecord {
  std::string video_id;
  std::string goal;
  std::vector<AnnotatedStep> steps;
  // Latent execution style of the video. Only synthetic corpora set it; it
  // shows up in observations, never in labels.
  std::uint32_t variant = 0;

  bool operator==(const AnnotationRecord&) const = default;
};

/// Closed action set, goal set and word-token vocabulary. Ids are assigned
/// in lexicographic order so they are a pure function of the phrase sets.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from (goal prompt, action phrase) pairs. 𝒜_G is exactly the set
  /// of actions paired with G.
  static Vocabulary from_pairs(const std::vector<std::pair<std::string, std::string>>& goal_action_pairs);

  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_goals() const { return goals_.size(); }
  std::size_t num_tokens() const { return word_tokens_.size(); }

  const std::vector<std::string>& actions() const { return actions_; }
  const std::vector<std::string>& goals() const { return goals_; }
  const std::vector<std::string>& word_tokens() const { return word_tokens_; }

  const std::string& action_phrase(ActionId a) const { return actions_.at(index(a)); }
  const std::string& goal_prompt(GoalId g) const { return goals_.at(index(g)); }
  const std::vector<ActionId>& goal_actions(GoalId g) const { return goal_actions_.at(index(g)); }
  const std::vector<TokenId>& action_tokens(ActionId a) const { return action_tokens_.at(index(a)); }
  const std::vector<TokenId>& goal_tokens(GoalId g) const { return goal_tokens_.at(index(g)); }
  bool goal_has_action(GoalId g, ActionId a) const;

  std::optional<ActionId> find_action(std::string_view phrase) const;
  std::optional<GoalId> find_goal(std::string_view prompt) const;
  std::optional<TokenId> find_token(std::string_view word) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const;

 private:
  void index_lookups();

  std::vector<std::string> actions_;
  std::vector<std::string> goals_;
  std::vector<std::string> word_tokens_;
  std::vector<std::vector<ActionId>> goal_actions_;
  std::vector<std::vector<TokenId>> action_tokens_;
  std::vector<std::vector<TokenId>> goal_tokens_;
  std::unordered_map<std::string, std::size_t> action_index_;
  std::unordered_map<std::string, std::size_t> goal_index_;
  std::unordered_map<std::string, std::size_t> token_index_;
};

/// Lowercase whitespace split.
std::vector<std::string> tokenize(std::string_view text);

struct Step {
  ActionId action{};
  double start = 0.0;
  double end = 0.0;

  bool operator==(const Step&) const = default;
};

/// Annotation resolved against a vocabulary.
struct VideoAnnotation {
  std::string video_id;
  GoalId goal{};
  std::vector<Step> steps;
  std::uint32_t variant = 0;

  std::size_t num_steps() const { return steps.size(); }
  std::vector<ActionId> actions() const;

  bool operator==(const VideoAnnotation&) const = default;
};

struct PlanningExample {
  std::string example_id;
  std::size_t video_index = 0;  // into the split the example came from
  GoalId goal{};
  std::vector<Step> history;      // first k steps
  std::vector<ActionId> target;   // next l actions

  std::size_t k() const { return history.size(); }
};

/// Reads a JSON-lines annotation file. Throws DataError naming the line for
/// parse errors and the video/step/field for invariant violations.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);
/// Checks the per-record invariants; throws DataError.
void validate_record(const AnnotationRecord& record);

Vocabulary build_vocabulary(const std::vector<AnnotationRecord>& records);

std::vector<VideoAnnotation> resolve(const std::vector<AnnotationRecord>& records, const Vocabulary& vocab);
AnnotationRecord to_record(const VideoAnnotation& video, const Vocabulary& vocab);

/// One example per history length k = 1..K-l; empty when K <= l.
std::vector<PlanningExample> make_examples(const VideoAnnotation& video, std::size_t l, std::size_t video_index = 0);
std::vector<PlanningExample> make_examples(const std::vector<VideoAnnotation>& videos, std::size_t l);

struct SynthCorpusSpec {
  std::size_t n_goals = 18;
  double actions_per_goal_mean = 7.3;
  double actions_per_goal_std = 2.0;
  double steps_per_video_mean = 7.6;
  double steps_per_video_std = 4.3;
  std::size_t n_train_videos = 400;
  std::size_t n_test_videos = 150;
  double repeat_bias = 0.1;
  std::size_t obs_dim = 16;
  std::uint64_t seed = 7;
  // Each video draws a latent variant; every (goal, variant) has its own
  // canonical step order and transition matrix.
  std::size_t n_variants = 2;
  double successor_weight = 0.7;  // mass on the canonical next step
  double skip_weight = 0.15;      // mass on the step after that
  double shared_action_prob = 0.15;

  void validate() const;  // throws ConfigError
};

/// Named presets: "crosstask", "coin", "deterministic", "tiny".
SynthCorpusSpec synth_preset(std::string_view name);

/// Generator chain for one (goal, variant). Rows/columns follow `actions`.
struct GoalTransitions {
  GoalId goal{};
  std::uint32_t variant = 0;
  double variant_prob = 1.0;
  std::vector<ActionId> actions;
  Matrix transition;              // row-stochastic
  std::vector<double> initial;

  /// Index of `a` in `actions`, or nullopt.
  std::optional<std::size_t> local(ActionId a) const;
};

struct SynthCorpus {
  SynthCorpusSpec spec;
  Vocabulary vocab;
  std::vector<AnnotationRecord> train;
  std::vector<AnnotationRecord> test;
  std::vector<GoalTransitions> transitions;
};

SynthCorpus generate_synthetic_corpus(const SynthCorpusSpec& spec);

void save_transitions(const std::filesystem::path& path, const std::vector<GoalTransitions>& transitions,
                      const Vocabulary& vocab);
std::vector<GoalTransitions> load_transitions(const std::filesystem::path& path, const Vocabulary& vocab);

/// Stable content hash of a record list.
std::uint64_t corpus_hash(const std::vector<AnnotationRecord>& records);

}  // namespace vplan
