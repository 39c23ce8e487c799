#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vplan/common.hpp"
#include "vplan/corpus.hpp"
#include "vplan/scorer.hpp"

namespace vplan {

struct BeamConfig {
  std::size_t beam_size = 10;      // B
  std::size_t per_node = 3;        // b; 0 means unconstrained
  std::size_t plan_length = 4;     // l
  bool restrict_to_goal = false;

  void validate() const;
};

struct BeamState {
  ScorerStatePtr state;
  std::vector<ActionId> actions;  // appended since the history
  std::vector<double> step_scores;
  double score = 0.0;             // cumulative phi
};

struct BeamResult {
  std::vector<ActionId> plan;
  std::vector<double> step_scores;
  std::vector<BeamState> beams;  // final beams, best first
};

/// Thrown when every extension of every beam scores -inf.
class DeadEndError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// phi(H, a) for a single extension.
double phi(const PlanScorer& scorer, const ScorerState& state, ActionId a);

/// Candidate set for a goal: 𝒜_G or 𝒜.
std::vector<ActionId> candidate_actions(const Vocabulary& vocab, GoalId goal, bool restrict_to_goal);

/// Beam search over single-action extensions. Each step scores every
/// candidate extension of every beam, orders them by (score desc, action id
/// asc, parent index asc), keeps the best B with at most b per parent, and
/// only then extends the survivors (which is where neural scorers roll out
/// their predicted observations).
BeamResult beam_search(const PlanScorer& scorer, const PlanningQuery& query, const BeamConfig& cfg,
                       const Vocabulary& vocab);

// ---------------------------------------------------- free-form generators

struct GeneratorConfig {
  std::string endpoint;  // http://host:port/path
  std::string model;
  double timeout_seconds = 10.0;
  int max_retries = 2;
};

class GeneratorError : public std::runtime_error {
 public:
  GeneratorError(const std::string& what, std::vector<ActionId> partial)
      : std::runtime_error(what), partial_plan(std::move(partial)) {}
  std::vector<ActionId> partial_plan;
};

/// Source of free-form next-step text.
class TextGeneratorClient {
 public:
  virtual ~TextGeneratorClient() = default;
  /// Returns the generated text or throws std::runtime_error.
  virtual std::string generate(const std::string& prompt) = 0;
};

/// Scripted generator for tests: replies come from a callback of
/// (prompt, call index).
class MockTextGenerator final : public TextGeneratorClient {
 public:
  using Script = std::function<std::string(const std::string& prompt, std::size_t call)>;
  explicit MockTextGenerator(Script script) : script_(std::move(script)) {}
  /// Replies with phrases of `vocab` chosen by a seeded generator.
  static MockTextGenerator random_phrases(const Vocabulary& vocab, std::uint64_t seed);

  std::string generate(const std::string& prompt) override { return script_(prompt, calls_++); }
  std::size_t calls() const { return calls_; }

 private:
  Script script_;
  std::size_t calls_ = 0;
};

/// POSTs {"model", "prompt"} as JSON and reads the "text" field of the reply.
class HttpTextGenerator final : public TextGeneratorClient {
 public:
  explicit HttpTextGenerator(GeneratorConfig cfg);
  std::string generate(const std::string& prompt) override;

 private:
  GeneratorConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual RowVector embed(const std::string& text) const = 0;
};

/// Word counts over the vocabulary's word tokens; unknown words are ignored.
class BagOfWordsEmbedder final : public TextEmbedder {
 public:
  explicit BagOfWordsEmbedder(const Vocabulary& vocab) : vocab_(&vocab) {}
  RowVector embed(const std::string& text) const override;

 private:
  const Vocabulary* vocab_;
};

/// Cosine similarity; 0 when either vector is zero.
double cosine(const RowVector& a, const RowVector& b);

/// Highest-cosine action phrase; ties go to the lowest ActionId.
ActionId retrieve_closest_action(const std::string& text, const Vocabulary& vocab, const TextEmbedder& embedder);

std::string generator_prompt(const std::string& goal, const std::vector<std::string>& steps);

/// Generates l steps one at a time, snapping each reply to the closest
/// action before it is fed back into the next prompt.
std::vector<ActionId> plan_with_generator(TextGeneratorClient& client, GoalId goal,
                                          const std::vector<ActionId>& history, std::size_t l,
                                          const Vocabulary& vocab, const TextEmbedder& embedder);

}  // namespace vplan
