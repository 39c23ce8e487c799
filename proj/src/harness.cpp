#include "vplan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "vplan/rng.hpp"

#ifndef VPLAN_VERSION
#define VPLAN_VERSION "0.1.0"
#endif

namespace vplan {

namespace fs = std::filesystem;
using nlohmann::json;

// ----------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0 || x != static_cast<double>(static_cast<std::size_t>(x)))
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto x = std::stoull(v, &pos);
    if (pos != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, std::string>)
      s += v[i];
    else if constexpr (std::is_floating_point_v<T>)
      s += format_number(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

const std::set<std::string> kNeuralConditions = {"full", "no_obs", "goal_last_obs", "last_obs", "recurrent"};
const std::set<std::string> kKnownConditions = {"random", "random_goal", "markov",   "markov_goal", "generator",
                                                "full",   "no_obs",      "goal_last_obs", "last_obs", "recurrent"};

}  // namespace

bool is_neural_condition(const std::string& condition) { return kNeuralConditions.count(condition) > 0; }

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  auto& c = corpus;
  if (key == "corpus.preset") {
    const std::uint64_t keep_seed = c.seed;
    c = synth_preset(v);
    c.seed = keep_seed;
    corpus_preset = v;
  } else if (key == "corpus.dir") {
    corpus_dir = v;
  } else if (key == "corpus.seed") {
    c.seed = to_u64(key, v);
  } else if (key == "corpus.n_goals") {
    c.n_goals = to_size(key, v);
  } else if (key == "corpus.actions_per_goal_mean") {
    c.actions_per_goal_mean = to_double(key, v);
  } else if (key == "corpus.actions_per_goal_std") {
    c.actions_per_goal_std = to_double(key, v);
  } else if (key == "corpus.steps_per_video_mean") {
    c.steps_per_video_mean = to_double(key, v);
  } else if (key == "corpus.steps_per_video_std") {
    c.steps_per_video_std = to_double(key, v);
  } else if (key == "corpus.n_train") {
    c.n_train_videos = to_size(key, v);
  } else if (key == "corpus.n_test") {
    c.n_test_videos = to_size(key, v);
  } else if (key == "corpus.repeat_bias") {
    c.repeat_bias = to_double(key, v);
  } else if (key == "corpus.obs_dim") {
    c.obs_dim = to_size(key, v);
  } else if (key == "corpus.n_variants") {
    c.n_variants = to_size(key, v);
  } else if (key == "corpus.successor_weight") {
    c.successor_weight = to_double(key, v);
  } else if (key == "corpus.skip_weight") {
    c.skip_weight = to_double(key, v);
  } else if (key == "corpus.shared_action_prob") {
    c.shared_action_prob = to_double(key, v);
  } else if (key == "corpus.obs_noise") {
    obs_noise = to_double(key, v);
  } else if (key == "corpus.variant_scale") {
    variant_scale = to_double(key, v);
  } else if (key == "model.architecture") {
    model.seq.architecture = parse_architecture(v);
  } else if (key == "model.d") {
    model.seq.d = to_size(key, v);
  } else if (key == "model.layers") {
    model.seq.layers = to_size(key, v);
  } else if (key == "model.heads") {
    model.seq.heads = to_size(key, v);
  } else if (key == "model.mlp_ratio") {
    model.seq.mlp_ratio = to_size(key, v);
  } else if (key == "model.max_len") {
    model.seq.max_len = to_size(key, v);
  } else if (key == "model.init_std") {
    model.seq.init_std = to_double(key, v);
  } else if (key == "model.mapper_hidden") {
    model.mapper_hidden = to_size(key, v);
  } else if (key == "model.delta") {
    model.delta = static_cast<int>(to_size(key, v));
  } else if (key == "train.optimizer") {
    train.optimizer = v;
  } else if (key == "train.lr") {
    train.lr = to_double(key, v);
  } else if (key == "train.beta1") {
    train.beta1 = to_double(key, v);
  } else if (key == "train.beta2") {
    train.beta2 = to_double(key, v);
  } else if (key == "train.eps") {
    train.eps = to_double(key, v);
  } else if (key == "train.momentum") {
    train.momentum = to_double(key, v);
  } else if (key == "train.batch_size") {
    train.batch_size = to_size(key, v);
  } else if (key == "train.epochs") {
    train.epochs = to_size(key, v);
  } else if (key == "train.clip_norm") {
    train.clip_norm = to_double(key, v);
  } else if (key == "train.lambda_act") {
    train.weights.action = to_double(key, v);
  } else if (key == "train.lambda_obs") {
    train.weights.observation = to_double(key, v);
  } else if (key == "train.rollout_prob") {
    train.rollout_prob = to_double(key, v);
  } else if (key == "beam.B") {
    beam.beam_size = to_size(key, v);
  } else if (key == "beam.b") {
    beam.per_node = to_size(key, v);
  } else if (key == "beam.restrict_to_goal") {
    beam.restrict_to_goal = to_bool(key, v);
  } else if (key == "beam.length_normalize") {
    length_normalize = to_bool(key, v);
  } else if (key == "beam.token_score") {
    if (v == "dot")
      token_score = TokenScore::kDotProduct;
    else if (v == "log_softmax")
      token_score = TokenScore::kLogSoftmax;
    else
      throw ConfigError("beam.token_score must be dot or log_softmax");
  } else if (key == "markov.backoff") {
    markov_backoff = to_bool(key, v);
  } else if (key == "eval.horizons") {
    horizons.clear();
    for (const auto& s : to_list(v)) horizons.push_back(to_size(key, s));
  } else if (key == "eval.conditions") {
    conditions = to_list(v);
  } else if (key == "eval.noise") {
    eval_noise = to_double(key, v);
  } else if (key == "eval.max_examples") {
    max_test_examples = to_size(key, v);
  } else if (key == "sweep.noise_grid") {
    noise_grid.clear();
    for (const auto& s : to_list(v)) noise_grid.push_back(to_double(key, s));
  } else if (key == "ablate.warm_start") {
    warm_start = v;
  } else if (key == "seed") {
    seed = to_u64(key, v);
  } else if (key == "seeds") {
    n_seeds = to_size(key, v);
  } else if (key == "parallel") {
    parallel = to_bool(key, v);
  } else if (key == "out") {
    out = v;
  } else if (key == "generator.endpoint") {
    generator.endpoint = v;
  } else if (key == "generator.model") {
    generator.model = v;
  } else if (key == "generator.timeout") {
    generator.timeout_seconds = to_double(key, v);
  } else if (key == "generator.max_retries") {
    generator.max_retries = static_cast<int>(to_size(key, v));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  corpus.validate();
  model.seq.validate();
  train.validate();
  beam.validate();
  if (!(obs_noise >= 0)) throw ConfigError("corpus.obs_noise must be >= 0");
  if (model.delta < 1) throw ConfigError("model.delta must be >= 1");
  if (horizons.empty()) throw ConfigError("eval.horizons must not be empty");
  for (std::size_t l : horizons)
    if (l < 1) throw ConfigError("eval.horizons must be >= 1");
  if (n_seeds < 1) throw ConfigError("seeds must be >= 1");
  if (conditions.empty()) throw ConfigError("eval.conditions must not be empty");
  for (const auto& c : conditions)
    if (!kKnownConditions.count(c)) throw ConfigError("unknown condition '" + c + "'");
  for (double p : noise_grid)
    if (!(p >= 0 && p <= 1)) throw ConfigError("sweep.noise_grid values must lie in [0,1]");
  if (!(eval_noise >= 0 && eval_noise <= 1)) throw ConfigError("eval.noise must lie in [0,1]");
}

std::size_t RunConfig::max_horizon() const { return *std::max_element(horizons.begin(), horizons.end()); }

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < n_seeds; ++i) s.push_back(seed + i);
  return s;
}

fs::path RunConfig::corpus_path() const { return corpus_dir.empty() ? out / "corpus" : corpus_dir; }

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  auto num = [](double x) { return format_number(x); };
  kv["corpus.preset"] = corpus_preset;
  kv["corpus.seed"] = std::to_string(corpus.seed);
  kv["corpus.n_goals"] = std::to_string(corpus.n_goals);
  kv["corpus.actions_per_goal_mean"] = num(corpus.actions_per_goal_mean);
  kv["corpus.actions_per_goal_std"] = num(corpus.actions_per_goal_std);
  kv["corpus.steps_per_video_mean"] = num(corpus.steps_per_video_mean);
  kv["corpus.steps_per_video_std"] = num(corpus.steps_per_video_std);
  kv["corpus.n_train"] = std::to_string(corpus.n_train_videos);
  kv["corpus.n_test"] = std::to_string(corpus.n_test_videos);
  kv["corpus.repeat_bias"] = num(corpus.repeat_bias);
  kv["corpus.obs_dim"] = std::to_string(corpus.obs_dim);
  kv["corpus.n_variants"] = std::to_string(corpus.n_variants);
  kv["corpus.successor_weight"] = num(corpus.successor_weight);
  kv["corpus.skip_weight"] = num(corpus.skip_weight);
  kv["corpus.shared_action_prob"] = num(corpus.shared_action_prob);
  kv["corpus.obs_noise"] = num(obs_noise);
  kv["corpus.variant_scale"] = num(variant_scale);
  kv["model.architecture"] = to_string(model.seq.architecture);
  kv["model.d"] = std::to_string(model.seq.d);
  kv["model.layers"] = std::to_string(model.seq.layers);
  kv["model.heads"] = std::to_string(model.seq.heads);
  kv["model.mlp_ratio"] = std::to_string(model.seq.mlp_ratio);
  kv["model.max_len"] = std::to_string(model.seq.max_len);
  kv["model.init_std"] = num(model.seq.init_std);
  kv["model.mapper_hidden"] = std::to_string(model.mapper_hidden);
  kv["model.delta"] = std::to_string(model.delta);
  kv["train.optimizer"] = train.optimizer;
  kv["train.lr"] = num(train.lr);
  kv["train.beta1"] = num(train.beta1);
  kv["train.beta2"] = num(train.beta2);
  kv["train.eps"] = num(train.eps);
  kv["train.momentum"] = num(train.momentum);
  kv["train.batch_size"] = std::to_string(train.batch_size);
  kv["train.epochs"] = std::to_string(train.epochs);
  kv["train.clip_norm"] = num(train.clip_norm);
  kv["train.lambda_act"] = num(train.weights.action);
  kv["train.lambda_obs"] = num(train.weights.observation);
  kv["train.rollout_prob"] = num(train.rollout_prob);
  kv["beam.B"] = std::to_string(beam.beam_size);
  kv["beam.b"] = std::to_string(beam.per_node);
  kv["beam.restrict_to_goal"] = beam.restrict_to_goal ? "true" : "false";
  kv["beam.length_normalize"] = length_normalize ? "true" : "false";
  kv["beam.token_score"] = token_score == TokenScore::kDotProduct ? "dot" : "log_softmax";
  kv["markov.backoff"] = markov_backoff ? "true" : "false";
  kv["eval.horizons"] = join(horizons);
  kv["eval.conditions"] = join(conditions);
  kv["eval.noise"] = num(eval_noise);
  kv["eval.max_examples"] = std::to_string(max_test_examples);
  kv["sweep.noise_grid"] = join(noise_grid);
  kv["ablate.warm_start"] = warm_start.string();
  kv["seed"] = std::to_string(seed);
  kv["seeds"] = std::to_string(n_seeds);
  kv["corpus.dir"] = corpus_dir.string();
  kv["generator.endpoint"] = generator.endpoint;
  kv["generator.model"] = generator.model;
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical())); }

void load_config_file(RunConfig& cfg, const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) +
                      ")");
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [k, node] : tree) {
    if (node.empty()) {
      entries.emplace_back(k, node.data());
    } else {
      for (const auto& [sub, leaf] : node) entries.emplace_back(k + "." + sub, leaf.data());
    }
  }
  // A preset resets the corpus block, so it applies before individual keys.
  for (const auto& [k, v] : entries)
    if (k == "corpus.preset") cfg.set(k, v);
  for (const auto& [k, v] : entries)
    if (k != "corpus.preset") cfg.set(k, v);
}

ForecasterConfig model_config_for(const RunConfig& cfg, const std::string& condition) {
  if (!is_neural_condition(condition)) throw ConfigError("'" + condition + "' is not a neural condition");
  ForecasterConfig m = cfg.model;
  m.obs_dim = cfg.corpus.obs_dim;
  if (condition == "recurrent") {
    m.seq.architecture = Architecture::kRecurrent;
    m.condition = InputCondition::parse("full");
  } else {
    m.condition = InputCondition::parse(condition);
  }
  return m;
}

// ----------------------------------------------------------------- corpus IO

CorpusBundle load_corpus(const fs::path& dir) {
  const fs::path train = dir / "train.jsonl";
  const fs::path test = dir / "test.jsonl";
  if (!fs::exists(train) || !fs::exists(test))
    throw DataError("corpus not found in " + dir.string() + " (expected train.jsonl and test.jsonl; run `vplan gen`)");
  CorpusBundle b;
  const auto train_records = load_annotations(train);
  const auto test_records = load_annotations(test);
  if (train_records.empty()) throw DataError(train.string() + " has no videos");
  if (test_records.empty()) throw DataError(test.string() + " has no videos");
  if (fs::exists(dir / "vocab.json")) {
    b.vocab = Vocabulary::load(dir / "vocab.json");
  } else {
    std::vector<AnnotationRecord> all = train_records;
    all.insert(all.end(), test_records.begin(), test_records.end());
    b.vocab = build_vocabulary(all);
  }
  b.train = resolve(train_records, b.vocab);
  b.test = resolve(test_records, b.vocab);
  if (!fs::exists(dir / "observation_model.json"))
    throw DataError("missing " + (dir / "observation_model.json").string());
  b.observations = std::make_unique<ObservationModel>(ObservationModel::load(dir / "observation_model.json"));
  if (b.observations->num_actions() != b.vocab.num_actions())
    throw DataError("observation model and vocabulary disagree on the number of actions");
  if (fs::exists(dir / "transitions.json")) b.transitions = load_transitions(dir / "transitions.json", b.vocab);
  b.hash = mix64(corpus_hash(train_records) ^ (corpus_hash(test_records) << 1));
  return b;
}

std::string to_jsonl(const PlanRecord& r, const Vocabulary& vocab) {
  auto phrases = [&](const std::vector<ActionId>& v) {
    std::vector<std::string> out;
    for (ActionId a : v) out.push_back(a == kInvalidAction ? "<invalid>" : vocab.action_phrase(a));
    return out;
  };
  nlohmann::ordered_json j;
  j["example_id"] = r.example_id;
  j["goal"] = vocab.goal_prompt(goal_id(r.goal));
  j["k"] = r.k;
  j["pred"] = phrases(r.pred);
  j["gt"] = phrases(r.gt);
  std::vector<std::string> scores;
  for (double s : r.scores) scores.push_back(format_number(s));
  j["scores"] = json::array();
  for (double s : r.scores) j["scores"].push_back(std::stod(format_number(s)));
  j["condition"] = r.condition;
  j["noise"] = r.noise;
  j["seed"] = r.seed;
  return j.dump();
}

// ----------------------------------------------------------------- experiment

Experiment::Experiment(RunConfig cfg, CorpusBundle corpus) : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
  cfg_.validate();
  examples_ = make_examples(corpus_.test, cfg_.max_horizon());
  if (examples_.empty())
    throw DataError("test split yields no planning examples at l=" + std::to_string(cfg_.max_horizon()));
  if (cfg_.max_test_examples > 0 && examples_.size() > cfg_.max_test_examples) examples_.resize(cfg_.max_test_examples);
  table_ = TransitionTable::fit(corpus_.train, corpus_.vocab.num_actions());
}

fs::path Experiment::checkpoint_path(const std::string& condition, std::uint64_t seed) const {
  return cfg_.out / "checkpoints" / (condition + "-seed" + std::to_string(seed) + ".json");
}

std::string Experiment::model_hash(const std::string& condition, std::uint64_t seed) const {
  RunConfig c = cfg_;
  std::ostringstream os;
  os << to_json_string(model_config_for(c, condition)) << "|" << c.train.optimizer << "|" << format_number(c.train.lr)
     << "|" << format_number(c.train.beta1) << "|" << format_number(c.train.beta2) << "|"
     << format_number(c.train.eps) << "|" << format_number(c.train.momentum) << "|" << c.train.batch_size << "|"
     << format_number(c.train.clip_norm) << "|" << format_number(c.train.weights.action) << "|"
     << format_number(c.train.weights.observation) << "|" << format_number(c.train.rollout_prob) << "|"
     << c.max_horizon() << "|" << hex64(corpus_.hash) << "|"
     << format_number(corpus_.observations->noise_std()) << "|" << seed;
  return hex64(fnv1a(os.str()));
}

Checkpoint Experiment::train_model(const std::string& condition, std::uint64_t seed, bool verbose) const {
  const fs::path path = checkpoint_path(condition, seed);
  const std::string hash = model_hash(condition, seed);
  Checkpoint ckpt;
  bool have = false;
  if (fs::exists(path)) {
    Checkpoint old = load_checkpoint(path);
    if (old.config_hash == hash) {
      ckpt = std::move(old);
      have = true;
      if (ckpt.progress.epoch_loss.size() >= cfg_.train.epochs) return ckpt;
    } else if (verbose) {
      std::cerr << "retraining " << path.string() << ": trained under a different config\n";
    }
  }
  const ForecasterConfig mcfg = model_config_for(cfg_, condition);
  if (!have) {
    ckpt.model = NeuralForecaster::initialize(mcfg, corpus_.vocab, derive_seed(seed, {tag("init")}));
    ckpt.config_hash = hash;
    ckpt.seed = seed;
  }
  ckpt.train = cfg_.train;
  ckpt.train.seed = derive_seed(seed, {tag("train")});
  ckpt.train.parallel = cfg_.parallel;
  const TrainingSet set =
      build_training_set(corpus_.train, *corpus_.observations, mcfg.condition, mcfg.delta, cfg_.max_horizon());
  auto report = [&](std::size_t epoch, double l) {
    if (verbose) std::cerr << condition << " seed " << seed << " epoch " << epoch + 1 << " loss " << l << "\n";
  };
  try {
    train(ckpt.model, ckpt.optimizer, ckpt.progress, set, corpus_.vocab, ckpt.train, report);
  } catch (const DivergenceError&) {
    save_checkpoint(path, ckpt);
    throw;
  }
  save_checkpoint(path, ckpt);
  return ckpt;
}

const NeuralForecaster& Experiment::model(const std::string& condition, std::uint64_t seed) {
  const std::string key = condition + "#" + std::to_string(seed);
  auto it = models_.find(key);
  if (it != models_.end()) return it->second;
  const fs::path path = checkpoint_path(condition, seed);
  if (!fs::exists(path)) throw DataError("no checkpoint at " + path.string() + " (run `vplan train` first)");
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config_hash != model_hash(condition, seed))
    throw ConfigError("checkpoint " + path.string() + " was trained under a different config (hash " +
                      ckpt.config_hash + ", expected " + model_hash(condition, seed) + ")");
  if (ckpt.progress.epoch_loss.size() < cfg_.train.epochs)
    throw ConfigError("checkpoint " + path.string() + " is incomplete (" +
                      std::to_string(ckpt.progress.epoch_loss.size()) + "/" + std::to_string(cfg_.train.epochs) +
                      " epochs)");
  return models_.emplace(key, std::move(ckpt.model)).first->second;
}

SegmentHistory Experiment::history(const PlanningExample& ex, double noise, std::uint64_t seed) const {
  const VideoAnnotation& video = corpus_.test.at(ex.video_index);
  SegmenterConfig sc;
  sc.delta = cfg_.model.delta;
  sc.error_rate = noise;
  sc.seed = derive_seed(seed, {tag("corrupt"), fnv1a(ex.example_id)});
  sc.stage = CorruptionStage::kConsolidated;
  return segment_history(video, history_horizon(video, ex.k()), *corpus_.observations, sc);
}

std::vector<EvalRecord> Experiment::evaluate(const std::string& condition, std::uint64_t seed, double noise,
                                             std::vector<PlanRecord>* plans) {
  const Vocabulary& vocab = corpus_.vocab;
  const std::size_t L = cfg_.max_horizon();
  std::unique_ptr<PlanScorer> scorer;
  BeamConfig bc = cfg_.beam;
  bc.plan_length = L;
  if (is_neural_condition(condition)) {
    scorer = std::make_unique<NeuralScorer>(model(condition, seed), vocab, cfg_.length_normalize, cfg_.token_score);
  } else if (condition == "markov" || condition == "markov_goal") {
    bc.restrict_to_goal = condition == "markov_goal";
    scorer = std::make_unique<MarkovScorer>(table_, vocab, bc.restrict_to_goal, cfg_.markov_backoff);
  } else if (condition != "random" && condition != "random_goal" && condition != "generator") {
    throw ConfigError("unknown condition '" + condition + "'");
  }
  const std::string endpoint = !cfg_.generator.endpoint.empty() ? cfg_.generator.endpoint : [] {
    const char* e = std::getenv("VPLAN_GENERATOR_ENDPOINT");
    return std::string(e ? e : "");
  }();
  const BagOfWordsEmbedder embedder(vocab);

  const std::size_t n = examples_.size();
  std::vector<std::vector<EvalRecord>> recs(n);
  std::vector<PlanRecord> plan_recs(n);
  std::vector<std::string> errors(n);
  std::vector<int> error_kind(n, 0);

  auto run = [&](std::size_t i) {
    const PlanningExample& ex = examples_[i];
    const std::uint64_t ex_seed = derive_seed(seed, {tag(condition), fnv1a(ex.example_id)});
    PlanRecord pr;
    pr.example_id = ex.example_id;
    pr.goal = static_cast<std::uint32_t>(index(ex.goal));
    pr.k = ex.k();
    pr.gt = ex.target;
    pr.condition = condition;
    pr.noise = noise;
    pr.seed = seed;
    if (condition == "random" || condition == "random_goal") {
      pr.pred = sample_random_plan(vocab, ex.goal, L, condition == "random_goal", ex_seed);
    } else if (condition == "generator") {
      const SegmentHistory h = history(ex, noise, seed);
      if (endpoint.empty()) {
        MockTextGenerator client = MockTextGenerator::random_phrases(vocab, ex_seed);
        pr.pred = plan_with_generator(client, ex.goal, h.actions(), L, vocab, embedder);
      } else {
        GeneratorConfig gc = cfg_.generator;
        gc.endpoint = endpoint;
        HttpTextGenerator client(gc);
        pr.pred = plan_with_generator(client, ex.goal, h.actions(), L, vocab, embedder);
      }
    } else {
      const PlanningQuery q{ex.goal, history(ex, noise, seed)};
      BeamResult r = beam_search(*scorer, q, bc, vocab);
      pr.pred = std::move(r.plan);
      pr.scores = std::move(r.step_scores);
    }
    recs[i] = evaluate_plan(ex.example_id, pr.goal, pr.k, pr.pred, pr.gt, cfg_.horizons, condition, noise, seed);
    plan_recs[i] = std::move(pr);
  };
  auto guarded = [&](std::size_t i) {
    try {
      run(i);
    } catch (const ConfigError& e) {
      error_kind[i] = 2;
      errors[i] = e.what();
    } catch (const DataError& e) {
      error_kind[i] = 3;
      errors[i] = e.what();
    } catch (const std::exception& e) {
      error_kind[i] = 1;
      errors[i] = e.what();
    }
  };
  if (cfg_.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) guarded(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (error_kind[i] == 0) continue;
    const std::string msg = "example " + examples_[i].example_id + " (" + condition + "): " + errors[i];
    if (error_kind[i] == 2) throw ConfigError(msg);
    if (error_kind[i] == 3) throw DataError(msg);
    throw std::runtime_error(msg);
  }

  std::vector<EvalRecord> out;
  for (auto& r : recs) std::move(r.begin(), r.end(), std::back_inserter(out));
  if (plans) std::move(plan_recs.begin(), plan_recs.end(), std::back_inserter(*plans));
  return out;
}

// ----------------------------------------------------------------- manifest

std::string code_version() { return VPLAN_VERSION; }

void Manifest::write(const fs::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["corpus_hash"] = corpus_hash;
  j["code_version"] = code_version;
  j["seeds"] = seeds;
  j["checkpoints"] = checkpoints;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [stage, secs] : timings) t[stage] = secs;
  j["timings_seconds"] = t;
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void require_out(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("--out is required");
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string manifest_line(const std::string& config_hash) {
  return "# manifest: manifest.json config=" + config_hash + "\n";
}

void write_records(const fs::path& path, const std::vector<EvalRecord>& records, const std::string& config_hash) {
  auto out = open_out(path);
  out << json{{"manifest", "manifest.json"}, {"config_hash", config_hash}}.dump() << '\n';
  for (const auto& r : records) out << to_jsonl(r) << '\n';
}

void write_plans(const fs::path& path, const std::vector<PlanRecord>& plans, const Vocabulary& vocab,
                 const std::string& config_hash) {
  auto out = open_out(path);
  out << json{{"manifest", "manifest.json"}, {"config_hash", config_hash}}.dump() << '\n';
  for (const auto& p : plans) out << to_jsonl(p, vocab) << '\n';
}

void write_summary_files(const fs::path& dir, const Summary& s, const std::string& config_hash) {
  {
    auto out = open_out(dir / "summary.csv");
    out << manifest_line(config_hash);
    write_summary_csv(out, s);
  }
  {
    auto out = open_out(dir / "per_k.csv");
    out << manifest_line(config_hash);
    write_per_k_csv(out, s);
  }
  {
    auto out = open_out(dir / "per_goal.csv");
    out << manifest_line(config_hash);
    write_per_goal_csv(out, s);
  }
  {
    auto out = open_out(dir / "summary.txt");
    write_summary_table(out, s);
  }
}

Experiment open_experiment(const RunConfig& cfg) {
  cfg.validate();
  return Experiment(cfg, load_corpus(cfg.corpus_path()));
}

Manifest base_manifest(const std::string& command, const RunConfig& cfg, const Experiment* exp) {
  Manifest m;
  m.command = command;
  m.config_hash = cfg.hash();
  m.corpus_hash = exp ? hex64(exp->corpus().hash) : "";
  m.code_version = code_version();
  m.seeds = cfg.seeds();
  return m;
}

// Manifests name checkpoints relative to the run directory.
std::string checkpoint_entry(const Experiment& exp, const std::string& condition, std::uint64_t seed) {
  return exp.checkpoint_path(condition, seed).lexically_relative(exp.config().out).generic_string();
}

void write_config_snapshot(const fs::path& dir, const RunConfig& cfg) {
  auto out = open_out(dir / "config.ini");
  out << cfg.canonical();
}

}  // namespace

// ----------------------------------------------------------------- commands

int cmd_gen(const RunConfig& cfg) {
  require_out(cfg);
  cfg.validate();
  Stopwatch sw;
  const fs::path dir = cfg.corpus_path();
  fs::create_directories(dir);
  Manifest m = base_manifest("gen", cfg, nullptr);
  m.write(dir / "manifest.json");

  const SynthCorpus corpus = generate_synthetic_corpus(cfg.corpus);
  save_annotations(dir / "train.jsonl", corpus.train);
  save_annotations(dir / "test.jsonl", corpus.test);
  corpus.vocab.save(dir / "vocab.json");
  save_transitions(dir / "transitions.json", corpus.transitions, corpus.vocab);
  const ObservationModel obs(cfg.corpus.obs_dim, cfg.obs_noise, derive_seed(cfg.corpus.seed, {tag("observations")}),
                             corpus.vocab.num_actions(), cfg.corpus.n_variants, cfg.variant_scale);
  obs.save(dir / "observation_model.json");

  m.corpus_hash = hex64(mix64(corpus_hash(corpus.train) ^ (corpus_hash(corpus.test) << 1)));
  m.timings.emplace_back("generate", sw.seconds());
  m.write(dir / "manifest.json");
  std::cout << "wrote corpus to " << dir.string() << ": " << corpus.vocab.num_goals() << " goals, "
            << corpus.vocab.num_actions() << " actions, " << corpus.train.size() << " train / " << corpus.test.size()
            << " test videos\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  require_out(cfg);
  Experiment exp = open_experiment(cfg);
  const fs::path dir = cfg.out / "train";
  Manifest m = base_manifest("train", cfg, &exp);
  std::vector<std::string> neural;
  for (const auto& c : cfg.conditions)
    if (is_neural_condition(c)) neural.push_back(c);
  if (neural.empty()) throw ConfigError("no neural condition among eval.conditions; nothing to train");
  for (const auto& c : neural)
    for (auto s : cfg.seeds()) m.checkpoints.push_back(checkpoint_entry(exp, c, s));
  m.write(dir / "manifest.json");
  write_config_snapshot(dir, cfg);

  for (const auto& c : neural) {
    for (auto s : cfg.seeds()) {
      Stopwatch sw;
      const Checkpoint ckpt = exp.train_model(c, s, true);
      m.timings.emplace_back("train " + c + " seed " + std::to_string(s), sw.seconds());
      auto out = open_out(dir / (c + "-seed" + std::to_string(s) + ".csv"));
      out << manifest_line(m.config_hash);
      out << "epoch,loss\n";
      for (std::size_t e = 0; e < ckpt.progress.epoch_loss.size(); ++e)
        out << e + 1 << ',' << format_number(ckpt.progress.epoch_loss[e]) << '\n';
    }
  }
  m.write(dir / "manifest.json");
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require_out(cfg);
  Experiment exp = open_experiment(cfg);
  const fs::path dir = cfg.out / "eval";
  Manifest m = base_manifest("eval", cfg, &exp);
  for (const auto& c : cfg.conditions)
    if (is_neural_condition(c))
      for (auto s : cfg.seeds()) m.checkpoints.push_back(checkpoint_entry(exp, c, s));
  m.write(dir / "manifest.json");
  write_config_snapshot(dir, cfg);

  std::vector<EvalRecord> records;
  std::vector<PlanRecord> plans;
  for (const auto& c : cfg.conditions) {
    Stopwatch sw;
    for (auto s : cfg.seeds()) {
      auto r = exp.evaluate(c, s, cfg.eval_noise, &plans);
      std::move(r.begin(), r.end(), std::back_inserter(records));
    }
    m.timings.emplace_back("eval " + c, sw.seconds());
  }
  write_records(dir / "records.jsonl", records, m.config_hash);
  write_plans(dir / "plans.jsonl", plans, exp.corpus().vocab, m.config_hash);
  const Summary s = aggregate(records);
  write_summary_files(dir, s, m.config_hash);
  write_summary_table(std::cout, s);
  m.write(dir / "manifest.json");
  return 0;
}

void gap_curve(const std::vector<EvalRecord>& records, const std::vector<double>& grid,
               const std::vector<std::size_t>& horizons, const std::string& metric, std::vector<GapPoint>& points,
               std::vector<GapTrend>& trends) {
  points.clear();
  trends.clear();
  for (std::size_t l : horizons) {
    std::map<std::uint64_t, std::vector<double>> gap_by_seed, full_by_seed, none_by_seed;
    for (double p : grid) {
      const auto full = per_seed_means(records, "full", p, l, metric);
      const auto none = per_seed_means(records, "no_obs", p, l, metric);
      std::vector<double> f, o, g;
      for (const auto& [seed, v] : full) {
        auto it = none.find(seed);
        if (it == none.end()) continue;
        f.push_back(v);
        o.push_back(it->second);
        g.push_back(v - it->second);
        gap_by_seed[seed].push_back(v - it->second);
        full_by_seed[seed].push_back(v);
        none_by_seed[seed].push_back(it->second);
      }
      points.push_back({l, p, mean(f), standard_error(f), mean(o), standard_error(o), mean(g), standard_error(g)});
    }
    GapTrend t;
    t.l = l;
    for (const auto& [seed, g] : gap_by_seed) {
      if (g.size() != grid.size()) continue;
      t.rho_gap.push_back(spearman(grid, g));
      t.rho_full.push_back(spearman(grid, full_by_seed[seed]));
      t.rho_no_obs.push_back(spearman(grid, none_by_seed[seed]));
    }
    trends.push_back(std::move(t));
  }
}

namespace {

void write_gap_files(const fs::path& dir, const std::vector<GapPoint>& points, const std::vector<GapTrend>& trends,
                     const std::string& config_hash) {
  {
    auto out = open_out(dir / "gap_curve.csv");
    out << manifest_line(config_hash);
    out << "l,noise,full_mean,full_ste,no_obs_mean,no_obs_ste,gap_mean,gap_ste\n";
    for (const auto& p : points)
      out << p.l << ',' << format_number(p.noise) << ',' << format_number(p.full_mean) << ','
          << format_number(p.full_ste) << ',' << format_number(p.no_obs_mean) << ',' << format_number(p.no_obs_ste)
          << ',' << format_number(p.gap_mean) << ',' << format_number(p.gap_ste) << '\n';
  }
  {
    auto out = open_out(dir / "trend.csv");
    out << manifest_line(config_hash);
    out << "l,series,mean_spearman,per_seed\n";
    for (const auto& t : trends) {
      auto row = [&](const char* name, const std::vector<double>& v) {
        std::string per;
        for (std::size_t i = 0; i < v.size(); ++i) per += (i ? ";" : "") + format_number(v[i]);
        out << t.l << ',' << name << ',' << format_number(mean(v)) << ',' << per << '\n';
      };
      row("gap", t.rho_gap);
      row("full", t.rho_full);
      row("no_obs", t.rho_no_obs);
    }
  }
}

void ensure_models(Experiment& exp, const std::vector<std::string>& conditions, Manifest& m) {
  for (const auto& c : conditions) {
    if (!is_neural_condition(c)) continue;
    for (auto s : exp.config().seeds()) {
      Stopwatch sw;
      exp.train_model(c, s, true);
      m.timings.emplace_back("train " + c + " seed " + std::to_string(s), sw.seconds());
      m.checkpoints.push_back(checkpoint_entry(exp, c, s));
    }
  }
}

}  // namespace

int cmd_sweep_noise(const RunConfig& cfg) {
  require_out(cfg);
  if (cfg.noise_grid.empty()) throw ConfigError("sweep.noise_grid must not be empty");
  Experiment exp = open_experiment(cfg);
  const fs::path dir = cfg.out / "sweep";
  Manifest m = base_manifest("sweep-noise", cfg, &exp);
  m.write(dir / "manifest.json");
  write_config_snapshot(dir, cfg);
  const std::vector<std::string> conditions = {"full", "no_obs"};
  ensure_models(exp, conditions, m);

  std::vector<EvalRecord> records;
  for (double p : cfg.noise_grid) {
    Stopwatch sw;
    for (const auto& c : conditions)
      for (auto s : cfg.seeds()) {
        auto r = exp.evaluate(c, s, p, nullptr);
        std::move(r.begin(), r.end(), std::back_inserter(records));
      }
    m.timings.emplace_back("eval p=" + format_number(p), sw.seconds());
  }
  write_records(dir / "records.jsonl", records, m.config_hash);
  write_summary_files(dir, aggregate(records), m.config_hash);
  std::vector<GapPoint> points;
  std::vector<GapTrend> trends;
  gap_curve(records, cfg.noise_grid, cfg.horizons, "macc", points, trends);
  write_gap_files(dir, points, trends, m.config_hash);
  for (const auto& t : trends)
    std::cout << "l=" << t.l << " spearman(gap, p) = " << format_number(mean(t.rho_gap)) << " over "
              << t.rho_gap.size() << " seeds\n";
  m.write(dir / "manifest.json");
  return 0;
}

namespace {

const std::vector<std::string> kAblationConditions = {"last_obs", "goal_last_obs", "no_obs", "full"};

std::string inputs_label(const std::string& condition) {
  if (condition == "warm_start") return "(G,A_k,O_k) warm start";
  if (condition == "recurrent") return "(G,A_k,O_k) recurrent";
  return InputCondition::parse(condition).label();
}

void write_ablation_csv(std::ostream& out, const Summary& s, const std::vector<std::string>& order,
                        const std::string& config_hash) {
  out << manifest_line(config_hash);
  out << "condition,inputs,l,metric,mean,ste,n_seeds\n";
  for (const auto& c : order)
    for (const auto& r : s.rows)
      if (r.condition == c && r.metric != "ed" && r.metric != "ed_norm")
        out << c << ',' << inputs_label(c) << ',' << r.l << ',' << r.metric << ',' << format_number(r.mean) << ','
            << format_number(r.ste) << ',' << r.n_seeds << '\n';
}

}  // namespace

int cmd_ablate(const RunConfig& cfg) {
  require_out(cfg);
  Experiment exp = open_experiment(cfg);
  const fs::path dir = cfg.out / "ablate";
  Manifest m = base_manifest("ablate", cfg, &exp);
  m.write(dir / "manifest.json");
  write_config_snapshot(dir, cfg);
  ensure_models(exp, kAblationConditions, m);

  std::vector<EvalRecord> records;
  std::vector<std::string> order = kAblationConditions;
  for (const auto& c : kAblationConditions) {
    Stopwatch sw;
    for (auto s : cfg.seeds()) {
      auto r = exp.evaluate(c, s, 0.0, nullptr);
      std::move(r.begin(), r.end(), std::back_inserter(records));
    }
    m.timings.emplace_back("eval " + c, sw.seconds());
  }
  if (!cfg.warm_start.empty()) {
    // One extra row from a supplied checkpoint, evaluated under the full condition.
    Checkpoint ckpt = load_checkpoint(cfg.warm_start);
    const NeuralScorer scorer(ckpt.model, exp.corpus().vocab, cfg.length_normalize, cfg.token_score);
    BeamConfig bc = cfg.beam;
    bc.plan_length = cfg.max_horizon();
    for (auto s : cfg.seeds())
      for (const auto& ex : exp.examples()) {
        const PlanningQuery q{ex.goal, exp.history(ex, 0.0, s)};
        const BeamResult r = beam_search(scorer, q, bc, exp.corpus().vocab);
        auto recs = evaluate_plan(ex.example_id, static_cast<std::uint32_t>(index(ex.goal)), ex.k(), r.plan,
                                  ex.target, cfg.horizons, "warm_start", 0.0, s);
        std::move(recs.begin(), recs.end(), std::back_inserter(records));
      }
    order.push_back("warm_start");
  }
  write_records(dir / "records.jsonl", records, m.config_hash);
  const Summary s = aggregate(records);
  write_summary_files(dir, s, m.config_hash);
  {
    auto out = open_out(dir / "ablation.csv");
    write_ablation_csv(out, s, order, m.config_hash);
  }
  write_summary_table(std::cout, s);
  m.write(dir / "manifest.json");
  return 0;
}

// ----------------------------------------------------------------- report

namespace {

std::string fmt_pct(double mean_v, double ste_v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100 * mean_v, 100 * ste_v);
  return buf;
}

void summary_markdown(std::ostream& md, const Summary& s) {
  std::set<std::size_t> ls;
  for (const auto& r : s.rows) ls.insert(r.l);
  md << "| condition | noise |";
  for (std::size_t l : ls) md << " SR@" << l << " | mAcc@" << l << " | mIOU@" << l << " |";
  md << " nAcc | seeds |\n|---|---|";
  for (std::size_t i = 0; i < ls.size(); ++i) md << "---|---|---|";
  md << "---|---|\n";
  std::vector<std::pair<std::string, double>> groups;
  for (const auto& r : s.rows)
    if (std::find(groups.begin(), groups.end(), std::make_pair(r.condition, r.noise)) == groups.end())
      groups.emplace_back(r.condition, r.noise);
  for (const auto& [c, p] : groups) {
    md << "| " << c << " | " << format_number(p) << " |";
    std::size_t seeds = 0;
    for (std::size_t l : ls)
      for (const char* metric : {"sr", "macc", "miou"}) {
        const SummaryRow* r = s.find(c, p, l, metric);
        md << " " << (r ? fmt_pct(r->mean, r->ste) : std::string("missing")) << " |";
        if (r) seeds = r->n_seeds;
      }
    const SummaryRow* nacc = s.find(c, p, *ls.begin(), "nacc");
    md << " " << (nacc ? fmt_pct(nacc->mean, nacc->ste) : std::string("missing")) << " | " << seeds << " |\n";
  }
}

}  // namespace

int cmd_report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory not found: " + run_dir.string());
  const fs::path dir = run_dir / "report";
  std::ostringstream md;
  md << "# Plan forecasting run report\n\n";
  md << "Run directory: `" << run_dir.filename().string() << "`. Values are percentages, mean ± standard error "
     << "across seeds. All horizons are read off one plan of the maximum length, over the example set built "
        "with that length.\n";

  const std::vector<std::pair<std::string, std::string>> sections = {
      {"eval", "Evaluation"}, {"sweep", "Segmentation noise sweep"}, {"ablate", "Input ablation"}};
  for (const auto& [sub, title] : sections) {
    md << "\n## " << title << "\n\n";
    const fs::path records_path = run_dir / sub / "records.jsonl";
    const fs::path manifest_path = run_dir / sub / "manifest.json";
    if (!fs::exists(records_path)) {
      md << "**missing**: no records at `" << sub << "/records.jsonl`.\n";
      continue;
    }
    if (fs::exists(manifest_path)) {
      std::ifstream in(manifest_path);
      json j;
      in >> j;
      md << "Config hash `" << j.value("config_hash", std::string("?")) << "`, corpus hash `"
         << j.value("corpus_hash", std::string("?")) << "`, code version " << j.value("code_version", std::string("?"))
         << ".\n\n";
    } else {
      md << "**missing**: no manifest at `" << sub << "/manifest.json`.\n\n";
    }
    const std::vector<EvalRecord> records = load_records(records_path);
    if (records.empty()) {
      md << "**missing**: `" << sub << "/records.jsonl` holds no records.\n";
      continue;
    }
    const Summary s = aggregate(records);
    summary_markdown(md, s);
    {
      auto out = open_out(dir / (sub + "_summary.csv"));
      write_summary_csv(out, s);
    }
    if (sub == "sweep") {
      std::set<double> grid_set;
      std::set<std::size_t> ls;
      for (const auto& r : records) {
        grid_set.insert(r.noise);
        ls.insert(r.l);
      }
      const std::vector<double> grid(grid_set.begin(), grid_set.end());
      std::vector<GapPoint> points;
      std::vector<GapTrend> trends;
      gap_curve(records, grid, {ls.begin(), ls.end()}, "macc", points, trends);
      md << "\nmAcc gap between (G,A_k,O_k) and (G,A_k):\n\n| l | noise | full | no obs | gap |\n|---|---|---|---|---|\n";
      for (const auto& p : points)
        md << "| " << p.l << " | " << format_number(p.noise) << " | " << fmt_pct(p.full_mean, p.full_ste) << " | "
           << fmt_pct(p.no_obs_mean, p.no_obs_ste) << " | " << fmt_pct(p.gap_mean, p.gap_ste) << " |\n";
      md << "\n";
      for (const auto& t : trends)
        md << "- l=" << t.l << ": mean Spearman(gap, p) = " << format_number(mean(t.rho_gap))
           << ", full = " << format_number(mean(t.rho_full)) << ", no obs = " << format_number(mean(t.rho_no_obs))
           << " (" << t.rho_gap.size() << " seeds)\n";
    }
  }

  md << "\n## Training curves\n\n";
  const fs::path train_dir = run_dir / "train";
  std::vector<fs::path> curves;
  if (fs::is_directory(train_dir))
    for (const auto& e : fs::directory_iterator(train_dir))
      if (e.path().extension() == ".csv") curves.push_back(e.path());
  std::sort(curves.begin(), curves.end());
  if (curves.empty()) {
    md << "**missing**: no loss curves under `train/`.\n";
  } else {
    md << "| model | epochs | first loss | last loss |\n|---|---|---|---|\n";
    for (const auto& p : curves) {
      std::ifstream in(p);
      std::string line, first, last;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
        const std::string loss = line.substr(line.find(',') + 1);
        if (n++ == 0) first = loss;
        last = loss;
      }
      md << "| " << p.stem().string() << " | " << n << " | " << (n ? first : "missing") << " | "
         << (n ? last : "missing") << " |\n";
    }
  }

  auto out = open_out(dir / "report.md");
  out << md.str();
  std::cout << "wrote " << (dir / "report.md").string() << "\n";
  return 0;
}

}  // namespace vplan
