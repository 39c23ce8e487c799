#include "vplan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vplan/rng.hpp"

namespace vplan {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

std::string normalized(std::string_view phrase) {
  std::string out;
  for (const auto& w : tokenize(phrase)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Vocabulary

Vocabulary Vocabulary::from_pairs(const std::vector<std::pair<std::string, std::string>>& goal_action_pairs) {
  if (goal_action_pairs.empty()) throw DataError("cannot build a vocabulary from no annotations");
  std::set<std::string> action_set, goal_set;
  for (const auto& [goal, action] : goal_action_pairs) {
    if (tokenize(action).empty()) throw DataError("action phrase '" + action + "' has no tokens");
    if (tokenize(goal).empty()) throw DataError("goal prompt '" + goal + "' has no tokens");
    action_set.insert(action);
    goal_set.insert(goal);
  }
  // Phrases must stay distinct after tokenization, otherwise two ids would
  // encode to the same token sequence.
  std::map<std::string, std::string> seen;
  for (const auto& a : action_set) {
    auto [it, inserted] = seen.emplace(normalized(a), a);
    if (!inserted) throw DataError("duplicate action phrase: '" + it->second + "' and '" + a + "'");
  }

  Vocabulary v;
  v.actions_.assign(action_set.begin(), action_set.end());
  v.goals_.assign(goal_set.begin(), goal_set.end());
  std::set<std::string> words;
  for (const auto& a : v.actions_)
    for (auto& w : tokenize(a)) words.insert(std::move(w));
  for (const auto& g : v.goals_)
    for (auto& w : tokenize(g)) words.insert(std::move(w));
  v.word_tokens_.assign(words.begin(), words.end());
  v.index_lookups();

  std::vector<std::set<std::size_t>> per_goal(v.goals_.size());
  for (const auto& [goal, action] : goal_action_pairs)
    per_goal[v.goal_index_.at(goal)].insert(v.action_index_.at(action));
  v.goal_actions_.resize(v.goals_.size());
  for (std::size_t g = 0; g < per_goal.size(); ++g)
    for (std::size_t a : per_goal[g]) v.goal_actions_[g].push_back(action_id(a));
  return v;
}

void Vocabulary::index_lookups() {
  action_index_.clear();
  goal_index_.clear();
  token_index_.clear();
  for (std::size_t i = 0; i < actions_.size(); ++i) action_index_.emplace(actions_[i], i);
  for (std::size_t i = 0; i < goals_.size(); ++i) goal_index_.emplace(goals_[i], i);
  for (std::size_t i = 0; i < word_tokens_.size(); ++i) token_index_.emplace(word_tokens_[i], i);
  auto to_tokens = [&](const std::string& text) {
    std::vector<TokenId> ids;
    for (const auto& w : tokenize(text)) ids.push_back(token_id(token_index_.at(w)));
    return ids;
  };
  action_tokens_.clear();
  goal_tokens_.clear();
  for (const auto& a : actions_) action_tokens_.push_back(to_tokens(a));
  for (const auto& g : goals_) goal_tokens_.push_back(to_tokens(g));
}

bool Vocabulary::goal_has_action(GoalId g, ActionId a) const {
  const auto& set = goal_actions(g);
  return std::binary_search(set.begin(), set.end(), a);
}

std::optional<ActionId> Vocabulary::find_action(std::string_view phrase) const {
  auto it = action_index_.find(std::string(phrase));
  if (it == action_index_.end()) return std::nullopt;
  return action_id(it->second);
}

std::optional<GoalId> Vocabulary::find_goal(std::string_view prompt) const {
  auto it = goal_index_.find(std::string(prompt));
  if (it == goal_index_.end()) return std::nullopt;
  return goal_id(it->second);
}

std::optional<TokenId> Vocabulary::find_token(std::string_view word) const {
  auto it = token_index_.find(std::string(word));
  if (it == token_index_.end()) return std::nullopt;
  return token_id(it->second);
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return actions_ == other.actions_ && goals_ == other.goals_ && word_tokens_ == other.word_tokens_ &&
         goal_actions_ == other.goal_actions_;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  json j;
  j["actions"] = actions_;
  j["goals"] = goals_;
  j["word_tokens"] = word_tokens_;
  json ga = json::array();
  for (const auto& set : goal_actions_) {
    json row = json::array();
    for (ActionId a : set) row.push_back(index(a));
    ga.push_back(std::move(row));
  }
  j["goal_actions"] = std::move(ga);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary to " + path.string());
  out << j.dump(1) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("vocabulary " + path.string() + ": " + e.what());
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  try {
    const auto actions = j.at("actions").get<std::vector<std::string>>();
    const auto goals = j.at("goals").get<std::vector<std::string>>();
    const auto& ga = j.at("goal_actions");
    if (ga.size() != goals.size()) throw DataError("vocabulary: goal_actions length != goals length");
    for (std::size_t g = 0; g < goals.size(); ++g)
      for (const auto& a : ga[g]) pairs.emplace_back(goals[g], actions.at(a.get<std::size_t>()));
    Vocabulary v = from_pairs(pairs);
    if (v.actions_ != actions || v.goals_ != goals ||
        v.word_tokens_ != j.at("word_tokens").get<std::vector<std::string>>())
      throw DataError("vocabulary " + path.string() + " is not in canonical order");
    return v;
  } catch (const json::exception& e) {
    throw DataError("vocabulary " + path.string() + ": " + e.what());
  } catch (const std::out_of_range& e) {
    throw DataError("vocabulary " + path.string() + ": index out of range");
  }
}

// --------------------------------------------------------------- annotations

std::vector<ActionId> VideoAnnotation::actions() const {
  std::vector<ActionId> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

void validate_record(const AnnotationRecord& r) {
  auto fail = [&](const std::string& what) { throw DataError("video '" + r.video_id + "': " + what); };
  if (r.video_id.empty()) throw DataError("annotation with empty video_id");
  if (tokenize(r.goal).empty()) fail("field 'goal' is empty");
  if (r.steps.empty()) fail("field 'steps' is empty");
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    const std::string where = "step " + std::to_string(i) + ": ";
    if (tokenize(s.action).empty()) fail(where + "field 'action' is empty");
    if (!std::isfinite(s.start) || !std::isfinite(s.end)) fail(where + "non-finite 'start'/'end'");
    if (!(s.start < s.end)) fail(where + "field 'start' must be < 'end'");
    if (i > 0 && !(r.steps[i - 1].start < s.start)) fail(where + "field 'start' is not strictly increasing");
  }
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AnnotationRecord r;
    try {
      const json j = json::parse(line);
      r.video_id = j.at("video_id").get<std::string>();
      r.goal = j.at("goal").get<std::string>();
      for (const auto& s : j.at("steps"))
        r.steps.push_back({s.at("action").get<std::string>(), s.at("start").get<double>(), s.at("end").get<double>()});
      if (j.contains("variant")) r.variant = j.at("variant").get<std::uint32_t>();
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotations to " + path.string());
  for (const auto& r : records) {
    json j;
    j["video_id"] = r.video_id;
    j["goal"] = r.goal;
    json steps = json::array();
    for (const auto& s : r.steps) steps.push_back({{"action", s.action}, {"start", s.start}, {"end", s.end}});
    j["steps"] = std::move(steps);
    if (r.variant != 0) j["variant"] = r.variant;
    out << j.dump() << '\n';
  }
}

Vocabulary build_vocabulary(const std::vector<AnnotationRecord>& records) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& r : records)
    for (const auto& s : r.steps) pairs.emplace_back(r.goal, s.action);
  return Vocabulary::from_pairs(pairs);
}

std::vector<VideoAnnotation> resolve(const std::vector<AnnotationRecord>& records, const Vocabulary& vocab) {
  std::vector<VideoAnnotation> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    validate_record(r);
    VideoAnnotation v;
    v.video_id = r.video_id;
    v.variant = r.variant;
    auto g = vocab.find_goal(r.goal);
    if (!g) throw DataError("video '" + r.video_id + "': unknown goal '" + r.goal + "'");
    v.goal = *g;
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      auto a = vocab.find_action(r.steps[i].action);
      if (!a || !vocab.goal_has_action(v.goal, *a))
        throw DataError("video '" + r.video_id + "': step " + std::to_string(i) + ": action '" + r.steps[i].action +
                        "' is not applicable to goal '" + r.goal + "'");
      v.steps.push_back({*a, r.steps[i].start, r.steps[i].end});
    }
    out.push_back(std::move(v));
  }
  return out;
}

AnnotationRecord to_record(const VideoAnnotation& video, const Vocabulary& vocab) {
  AnnotationRecord r;
  r.video_id = video.video_id;
  r.goal = vocab.goal_prompt(video.goal);
  r.variant = video.variant;
  for (const auto& s : video.steps) r.steps.push_back({vocab.action_phrase(s.action), s.start, s.end});
  return r;
}

std::vector<PlanningExample> make_examples(const VideoAnnotation& video, std::size_t l, std::size_t video_index) {
  if (l == 0) throw ConfigError("plan length l must be >= 1");
  std::vector<PlanningExample> out;
  const std::size_t K = video.steps.size();
  for (std::size_t k = 1; k + l <= K; ++k) {
    PlanningExample ex;
    ex.example_id = video.video_id + "#" + std::to_string(k);
    ex.video_index = video_index;
    ex.goal = video.goal;
    ex.history.assign(video.steps.begin(), video.steps.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j = k; j < k + l; ++j) ex.target.push_back(video.steps[j].action);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PlanningExample> make_examples(const std::vector<VideoAnnotation>& videos, std::size_t l) {
  std::vector<PlanningExample> out;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    auto ex = make_examples(videos[i], l, i);
    std::move(ex.begin(), ex.end(), std::back_inserter(out));
  }
  return out;
}

std::uint64_t corpus_hash(const std::vector<AnnotationRecord>& records) {
  std::uint64_t h = fnv1a("corpus");
  for (const auto& r : records) {
    h = fnv1a(r.video_id, h);
    h = fnv1a(r.goal, h);
    h = mix64(h ^ r.variant);
    for (const auto& s : r.steps) {
      h = fnv1a(s.action, h);
      h = mix64(h ^ double_bits(s.start));
      h = mix64(h ^ double_bits(s.end));
    }
  }
  return h;
}

// ---------------------------------------------------------- synthetic corpus

void SynthCorpusSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic corpus: " + m); };
  if (n_goals == 0) fail("n_goals must be positive");
  if (n_train_videos == 0 || n_test_videos == 0) fail("video counts must be positive");
  if (obs_dim == 0) fail("obs_dim must be positive");
  if (n_variants == 0) fail("n_variants must be positive");
  if (actions_per_goal_std < 0 || steps_per_video_std < 0) fail("std must be >= 0");
  if (actions_per_goal_mean < 2) fail("actions_per_goal must be >= 2");
  if (steps_per_video_mean < 1) fail("steps_per_video_mean must be >= 1");
  if (!(repeat_bias >= 0 && repeat_bias < 1)) fail("repeat_bias must lie in [0,1)");
  if (!(successor_weight > 0 && skip_weight >= 0 && successor_weight + skip_weight <= 1))
    fail("successor_weight/skip_weight must be a sub-probability");
  if (!(shared_action_prob >= 0 && shared_action_prob < 1)) fail("shared_action_prob must lie in [0,1)");
}

SynthCorpusSpec synth_preset(std::string_view name) {
  SynthCorpusSpec s;
  if (name == "crosstask") return s;
  if (name == "coin") {
    s.n_goals = 180;
    s.actions_per_goal_mean = 4.3;
    s.actions_per_goal_std = 1.5;
    s.steps_per_video_mean = 3.9;
    s.steps_per_video_std = 2.4;
    s.n_train_videos = 2000;
    s.n_test_videos = 400;
    return s;
  }
  if (name == "deterministic") {
    s.successor_weight = 1.0;
    s.skip_weight = 0.0;
    s.repeat_bias = 0.0;
    return s;
  }
  if (name == "tiny") {
    s.n_goals = 4;
    s.actions_per_goal_mean = 4;
    s.actions_per_goal_std = 1;
    s.steps_per_video_mean = 6;
    s.steps_per_video_std = 2;
    s.n_train_videos = 40;
    s.n_test_videos = 12;
    return s;
  }
  throw ConfigError("unknown corpus preset '" + std::string(name) + "'");
}

namespace {

const std::vector<std::string> kVerbs = {
    "add",   "pour",  "cut",    "mix",   "stir",    "place", "remove",  "fold",  "press", "spread",
    "flip",  "whisk", "season", "slice", "tighten", "loosen", "attach", "clean", "wipe",  "rinse",
    "peel",  "heat",  "boil",   "fry",   "bake",    "check", "lift",    "lower", "insert", "screw"};

const std::vector<std::string> kNouns = {
    "batter",  "pancake", "flour",   "sugar",   "egg",       "milk",     "butter",    "dough",     "onion",
    "tomato",  "garlic",  "pepper",  "salt",    "water",     "oil",      "lemon",     "bread",     "cheese",
    "sauce",   "steak",   "potato",  "carrot",  "lettuce",   "cucumber", "jack",      "wheel",     "tire",
    "bolt",    "nut",     "shelf",   "board",   "drawer",    "leg",      "frame",     "screw",     "filter",
    "lid",     "pan",     "bowl",    "tray",    "cup",       "bottle",   "jar",       "plate",     "towel",
    "olive oil", "ice cube", "lug nut", "brake pad", "coffee ground", "tea bag", "spark plug", "paint roller",
    "glue stick", "wall anchor"};

const std::vector<std::string> kGoalVerbs = {"make",  "build",   "fix",     "change",  "clean", "prepare",
                                             "bake",  "install", "replace", "assemble", "brew", "cook",
                                             "paint", "repair",  "grill",   "wash"};

const std::vector<std::string> kGoalObjects = {
    "pancakes", "lemonade", "kimchi rice", "bicycle wheel", "car tire", "jello shots", "french toast",
    "meringue", "latte",    "shelf",       "coffee",        "bookcase", "fence",       "brownies",
    "omelette", "salad",    "bread",       "smoothie",      "cake",     "pizza",       "burger",
    "faucet",   "lamp",     "window",      "door",          "toilet",   "sink",        "desk",
    "chair",    "wardrobe", "kite",        "bird feeder",   "planter",  "curtain rod", "tent",
    "scooter",  "skateboard", "aquarium",  "grill",         "oven"};

std::size_t draw_count(std::normal_distribution<double>& dist, SplitMix64& rng, std::size_t lo, std::size_t hi) {
  const double x = std::round(dist(rng));
  if (x < static_cast<double>(lo)) return lo;
  if (x > static_cast<double>(hi)) return hi;
  return static_cast<std::size_t>(x);
}

std::size_t draw_index(SplitMix64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n;
}

std::size_t draw_categorical(SplitMix64& rng, const double* weights, std::size_t n) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

// Canonical-order chain: `order` lists local indices; the successor of
// order[i] gets successor_weight, order[i+2] gets skip_weight, the rest is
// spread uniformly over the remaining actions. Diagonal stays zero.
Matrix chain_matrix(const std::vector<std::size_t>& order, double succ, double skip) {
  const std::size_t n = order.size();
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t from = order[i];
    const std::size_t next = order[(i + 1) % n];
    const std::size_t after = order[(i + 2) % n];
    t(from, next) += succ;
    double rest = 1.0 - succ;
    if (after != from && after != next && skip > 0) {
      t(from, after) += skip;
      rest -= skip;
    }
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != from && t(from, j) == 0.0) others.push_back(j);
    if (others.empty()) {
      t(from, next) += rest;
    } else {
      for (std::size_t j : others) t(from, j) += rest / static_cast<double>(others.size());
    }
  }
  return t;
}

std::vector<double> initial_vector(const std::vector<std::size_t>& order, double succ, double skip) {
  const std::size_t n = order.size();
  std::vector<double> p(n, 0.0);
  p[order[0]] += succ;
  double rest = 1.0 - succ;
  if (n > 1 && skip > 0) {
    p[order[1]] += skip;
    rest -= skip;
  }
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j)
    if (p[j] == 0.0) others.push_back(j);
  if (others.empty()) {
    p[order[0]] += rest;
  } else {
    for (std::size_t j : others) p[j] += rest / static_cast<double>(others.size());
  }
  return p;
}

}  // namespace

std::optional<std::size_t> GoalTransitions::local(ActionId a) const {
  auto it = std::find(actions.begin(), actions.end(), a);
  if (it == actions.end()) return std::nullopt;
  return static_cast<std::size_t>(it - actions.begin());
}

SynthCorpus generate_synthetic_corpus(const SynthCorpusSpec& spec) {
  spec.validate();
  SplitMix64 rng(derive_seed(spec.seed, {tag("synthetic-corpus")}));

  // Goal prompts.
  std::vector<std::string> goal_prompts;
  {
    std::set<std::string> used;
    const std::size_t combos = kGoalVerbs.size() * kGoalObjects.size();
    if (spec.n_goals > combos) throw ConfigError("synthetic corpus: too many goals for the phrase generator");
    while (goal_prompts.size() < spec.n_goals) {
      std::string p = kGoalVerbs[draw_index(rng, kGoalVerbs.size())] + " " +
                      kGoalObjects[draw_index(rng, kGoalObjects.size())];
      if (used.insert(p).second) goal_prompts.push_back(p);
    }
  }

  // Per-goal action sets drawn from a growing shared pool.
  std::vector<std::vector<std::string>> goal_phrases(spec.n_goals);
  {
    std::vector<std::string> pool;
    std::set<std::string> used;
    std::normal_distribution<double> count_dist(spec.actions_per_goal_mean, spec.actions_per_goal_std);
    const std::size_t combos = kVerbs.size() * kNouns.size();
    for (std::size_t g = 0; g < spec.n_goals; ++g) {
      const std::size_t n = draw_count(count_dist, rng, 2, 24);
      auto& mine = goal_phrases[g];
      std::size_t guard = 0;
      while (mine.size() < n) {
        if (++guard > 100000) throw ConfigError("synthetic corpus: cannot draw enough distinct actions");
        std::string phrase;
        if (!pool.empty() && rng.uniform() < spec.shared_action_prob) {
          phrase = pool[draw_index(rng, pool.size())];
          if (std::find(mine.begin(), mine.end(), phrase) != mine.end()) continue;
        } else {
          if (used.size() >= combos) throw ConfigError("synthetic corpus: action phrase space exhausted");
          phrase = kVerbs[draw_index(rng, kVerbs.size())] + " " + kNouns[draw_index(rng, kNouns.size())];
          if (!used.insert(phrase).second) continue;
          pool.push_back(phrase);
        }
        mine.push_back(phrase);
      }
    }
  }

  SynthCorpus corpus;
  corpus.spec = spec;
  {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t g = 0; g < spec.n_goals; ++g)
      for (const auto& a : goal_phrases[g]) pairs.emplace_back(goal_prompts[g], a);
    corpus.vocab = Vocabulary::from_pairs(pairs);
  }
  const Vocabulary& vocab = corpus.vocab;

  // One chain per (goal, variant), in goal-id order.
  std::vector<std::vector<std::size_t>> chain_of_goal(vocab.num_goals());
  for (std::size_t g = 0; g < vocab.num_goals(); ++g) {
    const auto& acts = vocab.goal_actions(goal_id(g));
    for (std::size_t z = 0; z < spec.n_variants; ++z) {
      std::vector<std::size_t> order(acts.size());
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);
      GoalTransitions gt;
      gt.goal = goal_id(g);
      gt.variant = static_cast<std::uint32_t>(z);
      gt.variant_prob = 1.0 / static_cast<double>(spec.n_variants);
      gt.actions = acts;
      gt.transition = chain_matrix(order, spec.successor_weight, spec.skip_weight);
      gt.initial = initial_vector(order, spec.successor_weight, spec.skip_weight);
      chain_of_goal[g].push_back(corpus.transitions.size());
      corpus.transitions.push_back(std::move(gt));
    }
  }

  std::normal_distribution<double> length_dist(spec.steps_per_video_mean, spec.steps_per_video_std);
  auto make_video = [&](const std::string& id) {
    AnnotationRecord r;
    r.video_id = id;
    const std::size_t g = draw_index(rng, vocab.num_goals());
    const std::size_t z = draw_index(rng, spec.n_variants);
    r.goal = vocab.goal_prompt(goal_id(g));
    r.variant = static_cast<std::uint32_t>(z);
    const GoalTransitions& chain = corpus.transitions[chain_of_goal[g][z]];
    const std::size_t K = draw_count(length_dist, rng, 1, 64);

    std::vector<std::size_t> seq;
    seq.push_back(draw_categorical(rng, chain.initial.data(), chain.initial.size()));
    while (seq.size() < K) {
      const std::size_t prev = seq.back();
      if (spec.repeat_bias > 0) {
        const double u = rng.uniform();
        // Recent actions other than the immediately preceding one.
        std::vector<std::size_t> recent;
        for (std::size_t back = 2; back <= 4 && back <= seq.size(); ++back) {
          const std::size_t c = seq[seq.size() - back];
          if (c != prev && std::find(recent.begin(), recent.end(), c) == recent.end()) recent.push_back(c);
        }
        if (u < spec.repeat_bias && !recent.empty()) {
          seq.push_back(recent[draw_index(rng, recent.size())]);
          continue;
        }
      }
      seq.push_back(draw_categorical(rng, chain.transition.row(static_cast<Eigen::Index>(prev)).data(),
                                     chain.actions.size()));
    }

    double cursor = static_cast<double>(draw_index(rng, 4));
    for (std::size_t i : seq) {
      const double duration = 2.0 + static_cast<double>(draw_index(rng, 5));
      r.steps.push_back({vocab.action_phrase(chain.actions[i]), cursor, cursor + duration});
      cursor += duration + static_cast<double>(draw_index(rng, 3));
    }
    return r;
  };

  char buf[32];
  for (std::size_t i = 0; i < spec.n_train_videos; ++i) {
    std::snprintf(buf, sizeof buf, "train_%05zu", i);
    corpus.train.push_back(make_video(buf));
  }
  for (std::size_t i = 0; i < spec.n_test_videos; ++i) {
    std::snprintf(buf, sizeof buf, "test_%05zu", i);
    corpus.test.push_back(make_video(buf));
  }
  return corpus;
}

void save_transitions(const std::filesystem::path& path, const std::vector<GoalTransitions>& transitions,
                      const Vocabulary& vocab) {
  json arr = json::array();
  for (const auto& t : transitions) {
    json j;
    j["goal"] = vocab.goal_prompt(t.goal);
    j["variant"] = t.variant;
    j["variant_prob"] = t.variant_prob;
    json acts = json::array();
    for (ActionId a : t.actions) acts.push_back(vocab.action_phrase(a));
    j["actions"] = std::move(acts);
    json rows = json::array();
    for (Eigen::Index r = 0; r < t.transition.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < t.transition.cols(); ++c) row.push_back(t.transition(r, c));
      rows.push_back(std::move(row));
    }
    j["transition"] = std::move(rows);
    j["initial"] = t.initial;
    arr.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << arr.dump(1) << '\n';
}

std::vector<GoalTransitions> load_transitions(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<GoalTransitions> out;
  try {
    json arr;
    in >> arr;
    for (const auto& j : arr) {
      GoalTransitions t;
      auto g = vocab.find_goal(j.at("goal").get<std::string>());
      if (!g) throw DataError("transitions: unknown goal " + j.at("goal").dump());
      t.goal = *g;
      t.variant = j.value("variant", 0u);
      t.variant_prob = j.value("variant_prob", 1.0);
      for (const auto& a : j.at("actions")) {
        auto id = vocab.find_action(a.get<std::string>());
        if (!id) throw DataError("transitions: unknown action " + a.dump());
        t.actions.push_back(*id);
      }
      const auto n = static_cast<Eigen::Index>(t.actions.size());
      t.transition = Matrix::Zero(n, n);
      const auto& rows = j.at("transition");
      if (static_cast<Eigen::Index>(rows.size()) != n) throw DataError("transitions: matrix shape mismatch");
      for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != n) throw DataError("transitions: matrix shape mismatch");
        for (Eigen::Index c = 0; c < n; ++c) t.transition(r, c) = rows[r][c].get<double>();
      }
      t.initial = j.at("initial").get<std::vector<double>>();
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError("transitions " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace vplan
