#include "vplan/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"
#include "vplan/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vplan {

using nlohmann::json;

void ForecasterConfig::validate() const {
  seq.validate();
  if (obs_dim == 0) throw ConfigError("obs_dim must be positive");
  if (delta < 1) throw ConfigError("delta must be >= 1");
}

namespace {

NeuralForecaster allocate(const ForecasterConfig& cfg, std::size_t num_tokens, std::uint64_t seed) {
  cfg.validate();
  NeuralForecaster m;
  m.config = cfg;
  m.embedding = init_embedding(num_tokens, cfg.seq.d, cfg.seq.init_std, derive_seed(seed, {tag("embedding")}));
  m.mapper = init_mapper(cfg.obs_dim, cfg.seq.d, cfg.mapper_hidden, cfg.seq.init_std,
                         derive_seed(seed, {tag("mapper")}));
  m.seq = SequenceModel::initialize(cfg.seq, derive_seed(seed, {tag("sequence")}));
  return m;
}

std::vector<Matrix*> param_list(NeuralForecaster& m) {
  std::vector<Matrix*> out;
  m.for_each_param([&](const std::string&, Matrix& p) { out.push_back(&p); });
  return out;
}

void set_zero(NeuralForecaster& m) {
  m.for_each_param([](const std::string&, Matrix& p) { p.setZero(); });
}

}  // namespace

NeuralForecaster NeuralForecaster::initialize(const ForecasterConfig& cfg, const Vocabulary& vocab,
                                              std::uint64_t seed) {
  return allocate(cfg, vocab.num_tokens(), seed);
}

NeuralForecaster NeuralForecaster::zeros_like() const {
  NeuralForecaster z;
  z.config = config;
  z.embedding.rows = Matrix::Zero(embedding.rows.rows(), embedding.rows.cols());
  z.mapper = vplan::zeros_like(mapper);
  z.seq = seq.zeros_like();
  return z;
}

std::size_t NeuralForecaster::num_parameters() const {
  std::size_t n = 0;
  for_each_param([&](const std::string&, const Matrix& p) { n += static_cast<std::size_t>(p.size()); });
  return n;
}

HistoryEncoding NeuralForecaster::encode(GoalId goal, const SegmentHistory& history, const Vocabulary& vocab) const {
  return build_history(goal, history, embedding, mapper, vocab, config.condition);
}

RowVector step(const SequenceModel& model, const Matrix& prefix) {
  if (prefix.rows() == 0) throw std::invalid_argument("step: empty prefix");
  return model.forward(prefix).row(prefix.rows() - 1);
}

RowVector action_logits(const RowVector& h_hat, const EmbeddingTable& table) {
  return h_hat * table.rows.transpose();
}

Matrix rollout_observation(const SequenceModel& model, const Matrix& prefix, int delta) {
  if (delta < 0) throw std::invalid_argument("rollout_observation: delta must be >= 0");
  Matrix out(delta, prefix.cols());
  if (delta == 0) return out;
  if (prefix.rows() == 0) throw std::invalid_argument("rollout_observation: empty prefix");
  SequenceState st = model.start();
  for (Eigen::Index i = 0; i < prefix.rows(); ++i) model.advance(st, prefix.row(i));
  for (int u = 0; u < delta; ++u) {
    out.row(u) = st.last_output;
    if (u + 1 < delta) model.advance(st, out.row(u));
  }
  return out;
}

LossBreakdown loss(const NeuralForecaster& model, const HistoryEncoding& enc, NeuralForecaster* grad,
                   const LossWeights& weights, const Matrix* frozen_targets) {
  const std::size_t n = enc.n();
  if (n < 2) throw std::invalid_argument("loss: encoding needs at least two positions");
  const Matrix& targets = frozen_targets ? *frozen_targets : enc.h;
  if (targets.rows() != enc.h.rows() || targets.cols() != enc.h.cols())
    throw std::invalid_argument("loss: target shape mismatch");

  const Matrix& table = model.embedding.rows;
  const auto d = static_cast<double>(enc.h.cols());
  SequenceTrace trace;
  const Matrix y = model.seq.forward(enc.h, grad ? &trace : nullptr);
  Matrix dy;
  if (grad) dy = Matrix::Zero(y.rows(), y.cols());

  LossBreakdown out;
  out.per_position.assign(n, 0.0);
  for (std::size_t p = 1; p < n; ++p) {
    if (!enc.target_mask[p]) continue;
    const auto prev = static_cast<Eigen::Index>(p - 1);
    const RowVector y_hat = y.row(prev);
    if (enc.action_mask[p]) {
      const RowVector logits = action_logits(y_hat, model.embedding);
      const double mx = logits.maxCoeff();
      const double lse = mx + std::log((logits.array() - mx).exp().sum());
      const double ce = lse - logits[enc.token_ids[p]];
      out.action += ce;
      out.per_position[p] = weights.action * ce;
      ++out.action_targets;
      if (grad) {
        RowVector g = (logits.array() - lse).exp();
        g[enc.token_ids[p]] -= 1.0;
        g *= weights.action;
        dy.row(prev).noalias() += g * table;
        grad->embedding.rows.noalias() += g.transpose() * y_hat;
      }
    } else {
      const RowVector diff = y_hat - targets.row(static_cast<Eigen::Index>(p));
      const double se = diff.squaredNorm() / d;
      out.observation += se;
      out.per_position[p] = weights.observation * se;
      ++out.observation_targets;
      if (grad) dy.row(prev) += (weights.observation * 2.0 / d) * diff;
    }
  }
  out.total = weights.action * out.action + weights.observation * out.observation;
  if (!std::isfinite(out.total)) throw DivergenceError("loss is not finite");

  if (grad) {
    const Matrix dh = model.seq.backward(trace, dy, grad->seq);
    scatter_input_gradient(enc, dh, model.mapper, grad->embedding, grad->mapper);
  }
  return out;
}

TrainingSet build_training_set(const std::vector<VideoAnnotation>& videos, const ObservationModel& obs_model,
                               const InputCondition& condition, int delta, std::size_t horizon) {
  if (videos.empty()) throw DataError("training split is empty");
  if (horizon == 0) throw ConfigError("training horizon must be >= 1");
  TrainingSet set;
  SegmenterConfig clean;
  clean.delta = delta;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const VideoAnnotation& video = videos[v];
    set.goals.push_back(video.goal);
    set.segments.push_back(segment_history(video, history_horizon(video, video.num_steps()), obs_model, clean));
    const std::size_t K = set.segments.back().k();
    if (condition.observations == ObservationInput::kLast) {
      for (std::size_t k = 1; k < K; ++k) set.instances.push_back({v, k, std::min(horizon, K - k)});
    } else {
      set.instances.push_back({v, 0, K});
    }
  }
  return set;
}

HistoryEncoding encode_instance(const NeuralForecaster& model, const TrainingSet& set, const TrainingInstance& inst,
                                const Vocabulary& vocab, std::size_t* history_end) {
  const InputCondition& cond = model.config.condition;
  HistoryEncoding enc = build_history(set.goals[inst.video], SegmentHistory{}, model.embedding, model.mapper, vocab,
                                      cond);
  const auto& segs = set.segments[inst.video].segments;
  for (std::size_t i = 0; i < inst.history; ++i) {
    const bool obs = cond.observations == ObservationInput::kAll ||
                     (cond.observations == ObservationInput::kLast && i + 1 == inst.history);
    append_segment(enc, segs[i], model.embedding, model.mapper, vocab, obs, cond.actions);
  }
  if (history_end) *history_end = enc.n();
  for (std::size_t i = inst.history; i < inst.history + inst.future; ++i)
    append_segment(enc, segs[i], model.embedding, model.mapper, vocab, cond.uses_observations(), true);
  return enc;
}

Matrix substitute_rollouts(const NeuralForecaster& model, HistoryEncoding& enc, std::size_t first, double prob,
                           std::uint64_t seed) {
  Matrix targets = enc.h;
  SplitMix64 rng(seed);
  SequenceState st = model.seq.start();
  const std::size_t n = enc.n();
  const auto delta = static_cast<std::size_t>(model.config.delta);
  for (std::size_t p = 0; p < n;) {
    if (p >= first && enc.kinds[p] == PositionKind::kObservation) {
      // A window at position 0 has nothing to roll out from.
      const bool replace = p > 0 && rng.uniform() < prob;
      const std::size_t end = std::min(n, p + delta);
      for (; p < end && enc.kinds[p] == PositionKind::kObservation; ++p) {
        if (replace) {
          enc.h.row(static_cast<Eigen::Index>(p)) = st.last_output;
          enc.raw_index[p] = -1;
        }
        model.seq.advance(st, enc.h.row(static_cast<Eigen::Index>(p)));
      }
      continue;
    }
    model.seq.advance(st, enc.h.row(static_cast<Eigen::Index>(p)));
    ++p;
  }
  return targets;
}

void TrainConfig::validate() const {
  if (optimizer != "adam" && optimizer != "sgd") throw ConfigError("unknown optimizer '" + optimizer + "'");
  if (!(lr >= 0)) throw ConfigError("learning rate must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(rollout_prob >= 0 && rollout_prob <= 1)) throw ConfigError("rollout_prob must lie in [0,1]");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("adam betas must lie in [0,1)");
}

namespace {

struct Workspace {
  std::vector<NeuralForecaster> slots;
  std::vector<double> losses;
  std::vector<char> failed;
  std::vector<std::string> errors;
};

double batch_gradient_into(const NeuralForecaster& model, const TrainingSet& set,
                           const std::vector<std::size_t>& batch, const Vocabulary& vocab,
                           const LossWeights& weights, NeuralForecaster& grad, bool parallel, Workspace& ws,
                           double rollout_prob = 0.0, std::uint64_t rollout_seed = 0) {
  const std::size_t n = batch.size();
  while (ws.slots.size() < n) ws.slots.push_back(model.zeros_like());
  ws.losses.assign(n, 0.0);
  ws.failed.assign(n, 0);
  ws.errors.assign(n, std::string());

  auto one = [&](std::size_t i) {
    NeuralForecaster& g = ws.slots[i];
    set_zero(g);
    try {
      std::size_t first = 0;
      HistoryEncoding enc = encode_instance(model, set, set.instances[batch[i]], vocab, &first);
      if (rollout_prob > 0) {
        const Matrix targets =
            substitute_rollouts(model, enc, first, rollout_prob, derive_seed(rollout_seed, {batch[i]}));
        ws.losses[i] = loss(model, enc, &g, weights, &targets).total;
      } else {
        ws.losses[i] = loss(model, enc, &g, weights).total;
      }
    } catch (const DivergenceError&) {
      ws.failed[i] = 1;
    } catch (const std::exception& e) {
      ws.failed[i] = 2;
      ws.errors[i] = e.what();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) one(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) one(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ws.failed[i] == 1) throw DivergenceError("loss is not finite");
    if (ws.failed[i] == 2) throw std::runtime_error(ws.errors[i]);
  }

  set_zero(grad);
  const std::vector<Matrix*> dst = param_list(grad);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<Matrix*> src = param_list(ws.slots[i]);
    for (std::size_t p = 0; p < dst.size(); ++p) *dst[p] += *src[p];
    total += ws.losses[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (Matrix* p : dst) *p *= inv;
  return total * inv;
}

void apply_update(NeuralForecaster& model, NeuralForecaster& grad, OptimizerState& opt, const TrainConfig& cfg) {
  const std::vector<Matrix*> params = param_list(model);
  const std::vector<Matrix*> grads = param_list(grad);

  double sq = 0.0;
  for (Matrix* g : grads) sq += g->squaredNorm();
  if (!std::isfinite(sq)) throw DivergenceError("gradient is not finite");
  const double norm = std::sqrt(sq);
  if (cfg.clip_norm > 0 && norm > cfg.clip_norm)
    for (Matrix* g : grads) *g *= cfg.clip_norm / norm;

  ++opt.step;
  if (cfg.optimizer == "adam") {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix& m = opt.m[i];
      Matrix& v = opt.v[i];
      const Matrix& g = *grads[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      params[i]->array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix& m = opt.m[i];
      m = cfg.momentum * m + *grads[i];
      *params[i] -= cfg.lr * m;
    }
  }
}

void prepare_optimizer(NeuralForecaster& model, OptimizerState& opt, const TrainConfig& cfg) {
  const std::vector<Matrix*> params = param_list(model);
  if (opt.algorithm.empty()) {
    opt.algorithm = cfg.optimizer;
    opt.step = 0;
    opt.m.clear();
    opt.v.clear();
    for (Matrix* p : params) {
      opt.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      if (cfg.optimizer == "adam") opt.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
    return;
  }
  if (opt.algorithm != cfg.optimizer)
    throw ConfigError("optimizer state is for '" + opt.algorithm + "', config asks for '" + cfg.optimizer + "'");
  if (opt.m.size() != params.size() || (cfg.optimizer == "adam" && opt.v.size() != params.size()))
    throw DataError("optimizer state does not match the model");
}

}  // namespace

double batch_gradient(const NeuralForecaster& model, const TrainingSet& set, const std::vector<std::size_t>& batch,
                      const Vocabulary& vocab, const LossWeights& weights, NeuralForecaster& grad, bool parallel) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  Workspace ws;
  return batch_gradient_into(model, set, batch, vocab, weights, grad, parallel, ws);
}

double evaluate_loss(const NeuralForecaster& model, const TrainingSet& set, const Vocabulary& vocab,
                     const LossWeights& weights) {
  std::vector<double> losses(set.instances.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(losses.size()); ++i) {
    const HistoryEncoding enc = encode_instance(model, set, set.instances[static_cast<std::size_t>(i)], vocab);
    try {
      losses[static_cast<std::size_t>(i)] = loss(model, enc, nullptr, weights).total;
    } catch (const DivergenceError&) {
      losses[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    }
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return losses.empty() ? 0.0 : total / static_cast<double>(losses.size());
}

void train(NeuralForecaster& model, OptimizerState& opt, TrainProgress& progress, const TrainingSet& set,
           const Vocabulary& vocab, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (set.instances.empty()) throw DataError("no training instances");
  prepare_optimizer(model, opt, cfg);

  const std::size_t n = set.instances.size();
  Workspace ws;
  NeuralForecaster grad = model.zeros_like();
  for (std::size_t epoch = progress.epoch_loss.size(); epoch < cfg.epochs; ++epoch) {
    const NeuralForecaster good_model = model;
    const OptimizerState good_opt = opt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(derive_seed(cfg.seed, {tag("epoch"), epoch}));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)) % i]);

    double sum = 0.0;
    std::size_t batch_index = 0;
    try {
      for (std::size_t lo = 0; lo < n; lo += cfg.batch_size, ++batch_index) {
        const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + cfg.batch_size)));
        const double l = batch_gradient_into(model, set, batch, vocab, cfg.weights, grad, cfg.parallel, ws,
                                             cfg.rollout_prob, derive_seed(cfg.seed, {tag("rollout"), epoch}));
        sum += l * static_cast<double>(batch.size());
        apply_update(model, grad, opt, cfg);
      }
    } catch (const DivergenceError& e) {
      model = good_model;
      opt = good_opt;
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch_index + 1) + ": " + e.what());
    }
    const double mean = sum / static_cast<double>(n);
    progress.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
}

// ---------------------------------------------------------------- checkpoints

namespace {

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix json_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("checkpoint: matrix size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

std::string obs_name(ObservationInput o) {
  return o == ObservationInput::kAll ? "all" : o == ObservationInput::kLast ? "last" : "none";
}

ObservationInput parse_obs(const std::string& s) {
  if (s == "all") return ObservationInput::kAll;
  if (s == "last") return ObservationInput::kLast;
  if (s == "none") return ObservationInput::kNone;
  throw DataError("unknown observation input '" + s + "'");
}

json config_json(const ForecasterConfig& c) {
  return json{{"architecture", to_string(c.seq.architecture)},
              {"d", c.seq.d},
              {"layers", c.seq.layers},
              {"heads", c.seq.heads},
              {"mlp_ratio", c.seq.mlp_ratio},
              {"max_len", c.seq.max_len},
              {"init_std", c.seq.init_std},
              {"obs_dim", c.obs_dim},
              {"mapper_hidden", c.mapper_hidden},
              {"delta", c.delta},
              {"condition",
               {{"goal", c.condition.goal},
                {"actions", c.condition.actions},
                {"observations", obs_name(c.condition.observations)}}}};
}

ForecasterConfig json_config(const json& j) {
  ForecasterConfig c;
  c.seq.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.seq.d = j.at("d").get<std::size_t>();
  c.seq.layers = j.at("layers").get<std::size_t>();
  c.seq.heads = j.at("heads").get<std::size_t>();
  c.seq.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
  c.seq.max_len = j.at("max_len").get<std::size_t>();
  c.seq.init_std = j.at("init_std").get<double>();
  c.obs_dim = j.at("obs_dim").get<std::size_t>();
  c.mapper_hidden = j.at("mapper_hidden").get<std::size_t>();
  c.delta = j.at("delta").get<int>();
  const json& cond = j.at("condition");
  c.condition.goal = cond.at("goal").get<bool>();
  c.condition.actions = cond.at("actions").get<bool>();
  c.condition.observations = parse_obs(cond.at("observations").get<std::string>());
  return c;
}

json train_json(const TrainConfig& t) {
  return json{{"optimizer", t.optimizer}, {"lr", t.lr},
              {"beta1", t.beta1},         {"beta2", t.beta2},
              {"eps", t.eps},             {"momentum", t.momentum},
              {"batch_size", t.batch_size}, {"epochs", t.epochs},
              {"clip_norm", t.clip_norm}, {"seed", t.seed},
              {"lambda_act", t.weights.action}, {"lambda_obs", t.weights.observation},
              {"rollout_prob", t.rollout_prob}};
}

TrainConfig json_train(const json& j) {
  TrainConfig t;
  t.optimizer = j.at("optimizer").get<std::string>();
  t.lr = j.at("lr").get<double>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.eps = j.at("eps").get<double>();
  t.momentum = j.at("momentum").get<double>();
  t.batch_size = j.at("batch_size").get<std::size_t>();
  t.epochs = j.at("epochs").get<std::size_t>();
  t.clip_norm = j.at("clip_norm").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.weights.action = j.at("lambda_act").get<double>();
  t.weights.observation = j.at("lambda_obs").get<double>();
  t.rollout_prob = j.value("rollout_prob", 0.0);
  return t;
}

}  // namespace

std::string to_json_string(const ForecasterConfig& cfg) { return config_json(cfg).dump(); }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json j;
  j["version"] = kCheckpointVersion;
  j["seed"] = ckpt.seed;
  j["config_hash"] = ckpt.config_hash;
  j["config"] = config_json(ckpt.model.config);
  j["train"] = train_json(ckpt.train);
  json params = json::object();
  ckpt.model.for_each_param([&](const std::string& name, const Matrix& p) { params[name] = matrix_json(p); });
  j["params"] = std::move(params);
  json opt;
  opt["algorithm"] = ckpt.optimizer.algorithm;
  opt["step"] = ckpt.optimizer.step;
  opt["m"] = json::array();
  opt["v"] = json::array();
  for (const Matrix& m : ckpt.optimizer.m) opt["m"].push_back(matrix_json(m));
  for (const Matrix& v : ckpt.optimizer.v) opt["v"].push_back(matrix_json(v));
  j["optimizer"] = std::move(opt);
  j["loss_curve"] = ckpt.progress.epoch_loss;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << j.dump() << '\n';
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    json j;
    in >> j;
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw DataError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
    Checkpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.train = json_train(j.at("train"));
    const ForecasterConfig cfg = json_config(j.at("config"));
    const json& params = j.at("params");
    const auto num_tokens = params.at("embedding").at("rows").get<std::size_t>();
    c.model = allocate(cfg, num_tokens, 0);
    c.model.for_each_param([&](const std::string& name, Matrix& p) {
      Matrix loaded = json_matrix(params.at(name));
      if (loaded.rows() != p.rows() || loaded.cols() != p.cols())
        throw DataError("checkpoint " + path.string() + ": shape mismatch for " + name);
      p = std::move(loaded);
    });
    const json& opt = j.at("optimizer");
    c.optimizer.algorithm = opt.at("algorithm").get<std::string>();
    c.optimizer.step = opt.at("step").get<std::size_t>();
    for (const json& m : opt.at("m")) c.optimizer.m.push_back(json_matrix(m));
    for (const json& v : opt.at("v")) c.optimizer.v.push_back(json_matrix(v));
    c.progress.epoch_loss = j.at("loss_curve").get<std::vector<double>>();
    return c;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace vplan
