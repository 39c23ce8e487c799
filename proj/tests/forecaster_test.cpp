#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "vplan/forecaster.hpp"

namespace vplan {
namespace {

using testing::check_gradient;
using testing::history_of;
using testing::random_videos;
using testing::small_vocab;
using testing::TempDir;
using testing::tiny_model;

std::vector<Matrix> params_of(const NeuralForecaster& m) {
  std::vector<Matrix> out;
  m.for_each_param([&](const std::string&, const Matrix& p) { out.push_back(p); });
  return out;
}

struct Fixture {
  Vocabulary vocab = small_vocab(3, 4, true);
  ObservationModel obs{5, 0.2, 3, vocab.num_actions()};
  std::vector<VideoAnnotation> videos = random_videos(vocab, 12, 2, 5, 17);

  TrainingSet set(const ForecasterConfig& cfg) const {
    return build_training_set(videos, obs, cfg.condition, cfg.delta, 3);
  }
};

class ForecasterArch : public ::testing::TestWithParam<Architecture> {};

TEST_P(ForecasterArch, GradientMatchesFiniteDifferences) {
  const Vocabulary vocab = small_vocab(2, 3);
  for (std::size_t hidden : {0u, 4u}) {
    ForecasterConfig cfg = tiny_model(GetParam());
    cfg.mapper_hidden = hidden;
    auto m = NeuralForecaster::initialize(cfg, vocab, 5);
    const auto acts = vocab.goal_actions(goal_id(1));
    const SegmentHistory h = history_of({acts[0], acts[2], acts[1]}, cfg.obs_dim, cfg.delta, 3);
    const HistoryEncoding enc0 = m.encode(goal_id(1), h, vocab);
    const Matrix frozen = enc0.h;
    const LossWeights w{1.0, 0.7};
    auto g = m.zeros_like();
    loss(m, enc0, &g, w, &frozen);
    auto objective = [&] { return loss(m, m.encode(goal_id(1), h, vocab), nullptr, w, &frozen).total; };
    const auto res = check_gradient(m, g, objective, 2, 23);
    EXPECT_GE(res.checked, 10u);
    EXPECT_LE(res.worst, 1e-6) << "mapper_hidden " << hidden;
  }
}

TEST_P(ForecasterArch, RolloutMatchesSequentialSteps) {
  const auto m = SequenceModel::initialize(tiny_model(GetParam()).seq, 3);
  Matrix prefix = Matrix::Random(5, 8);
  const Matrix r = rollout_observation(m, prefix, 3);
  ASSERT_EQ(r.rows(), 3);
  for (int u = 0; u < 3; ++u) {
    const RowVector expect = step(m, prefix);
    EXPECT_LT((r.row(u) - expect).cwiseAbs().maxCoeff(), 1e-12) << "u " << u;
    prefix.conservativeResize(prefix.rows() + 1, Eigen::NoChange);
    prefix.row(prefix.rows() - 1) = expect;
  }
  EXPECT_EQ(rollout_observation(m, prefix, 0).rows(), 0);
  EXPECT_THROW(rollout_observation(m, Matrix(0, 8), 2), std::invalid_argument);
  EXPECT_THROW(step(m, Matrix(0, 8)), std::invalid_argument);
}

TEST_P(ForecasterArch, SerialAndParallelBatchGradientsAreBitIdentical) {
  Fixture f;
  ForecasterConfig cfg = tiny_model(GetParam());
  const auto m = NeuralForecaster::initialize(cfg, f.vocab, 1);
  const TrainingSet set = f.set(cfg);
  std::vector<std::size_t> batch(set.instances.size());
  std::iota(batch.begin(), batch.end(), 0);
  auto gs = m.zeros_like();
  auto gp = m.zeros_like();
  const double ls = batch_gradient(m, set, batch, f.vocab, {}, gs, false);
  const double lp = batch_gradient(m, set, batch, f.vocab, {}, gp, true);
  EXPECT_EQ(ls, lp);
  const auto a = params_of(gs);
  const auto b = params_of(gp);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << i;
}

INSTANTIATE_TEST_SUITE_P(Architectures, ForecasterArch,
                         ::testing::Values(Architecture::kTransformer, Architecture::kRecurrent),
                         [](const auto& info) { return to_string(info.param); });

TEST(Loss, UniformLogitsGiveLogVocabularyPerActionTarget) {
  const Vocabulary vocab = small_vocab(2, 3);
  auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), vocab, 2).zeros_like();
  const auto acts = vocab.goal_actions(goal_id(0));
  const HistoryEncoding enc = m.encode(goal_id(0), history_of({acts[0], acts[1]}, 5, 2), vocab);
  const LossBreakdown l = loss(m, enc);
  // Two-word phrases: every token after the goal prefix is an action target.
  EXPECT_EQ(l.action_targets, 4u);
  EXPECT_EQ(l.observation_targets, 4u);
  EXPECT_NEAR(l.action, 4 * std::log(static_cast<double>(vocab.num_tokens())), 1e-12);
  EXPECT_EQ(l.observation, 0.0);
}

TEST(Loss, PerfectObservationPredictionCostsNothing) {
  const Vocabulary vocab = small_vocab(2, 3);
  auto m = NeuralForecaster::initialize(tiny_model(Architecture::kRecurrent), vocab, 2).zeros_like();
  RowVector target(8);
  for (int i = 0; i < 8; ++i) target(i) = 0.25 * i - 1.0;
  m.mapper.b1.row(0) = target;
  m.for_each_param([&](const std::string& name, Matrix& p) {
    if (name == "seq.b_out") p.row(0) = target;
  });
  const auto acts = vocab.goal_actions(goal_id(1));
  const HistoryEncoding enc = m.encode(goal_id(1), history_of({acts[2], acts[0], acts[1]}, 5, 2), vocab);
  const LossBreakdown l = loss(m, enc);
  EXPECT_EQ(l.observation_targets, 6u);
  EXPECT_EQ(l.observation, 0.0);
}

TEST(Loss, TotalIsWeightedSumOfParts) {
  Fixture f;
  const auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 4);
  const TrainingSet set = f.set(m.config);
  const LossWeights w{0.3, 2.5};
  for (const auto& inst : set.instances) {
    const HistoryEncoding enc = encode_instance(m, set, inst, f.vocab);
    const LossBreakdown l = loss(m, enc, nullptr, w);
    EXPECT_NEAR(l.total, w.action * l.action + w.observation * l.observation, 1e-10);
    EXPECT_NEAR(std::accumulate(l.per_position.begin(), l.per_position.end(), 0.0), l.total, 1e-10);
    std::size_t acts = 0, obs = 0;
    for (std::size_t p = 0; p < enc.n(); ++p) {
      if (!enc.target_mask[p]) {
        EXPECT_EQ(l.per_position[p], 0.0);
        continue;
      }
      ++(enc.action_mask[p] ? acts : obs);
    }
    EXPECT_EQ(l.action_targets, acts);
    EXPECT_EQ(l.observation_targets, obs);
  }
}

TEST(Loss, RejectsDegenerateInput) {
  const Vocabulary vocab = small_vocab(1, 2);
  const auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), vocab, 1);
  HistoryEncoding enc = m.encode(goal_id(0), {}, vocab);
  enc.h.conservativeResize(1, Eigen::NoChange);
  enc.kinds.resize(1);
  EXPECT_THROW(loss(m, enc), std::invalid_argument);
  const HistoryEncoding ok = m.encode(goal_id(0), {}, vocab);
  const Matrix wrong = Matrix::Zero(ok.h.rows() + 1, ok.h.cols());
  EXPECT_THROW(loss(m, ok, nullptr, {}, &wrong), std::invalid_argument);
}

TEST(ActionLogits, DotProductWithEveryTokenRow) {
  const Vocabulary vocab = small_vocab(2, 2);
  const auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), vocab, 9);
  const RowVector h = RowVector::LinSpaced(8, -1, 1);
  const RowVector logits = action_logits(h, m.embedding);
  ASSERT_EQ(static_cast<std::size_t>(logits.size()), vocab.num_tokens());
  for (Eigen::Index t = 0; t < logits.size(); ++t)
    EXPECT_NEAR(logits(t), m.embedding.rows.row(t).dot(h), 1e-14);
}

TEST(TrainingSet, WholeVideosOrOneWindowPerPrefix) {
  Fixture f;
  ForecasterConfig full = tiny_model(Architecture::kTransformer);
  const TrainingSet a = f.set(full);
  EXPECT_EQ(a.instances.size(), f.videos.size());
  for (const auto& inst : a.instances) {
    EXPECT_EQ(inst.history, 0u);
    EXPECT_EQ(inst.future, a.segments[inst.video].k());
  }
  full.condition = InputCondition::parse("last_obs");
  const TrainingSet b = f.set(full);
  // Repeated adjacent steps consolidate, so K comes from the segmentation.
  std::size_t expect = 0;
  for (const auto& seg : b.segments) expect += seg.k() - 1;
  EXPECT_EQ(b.instances.size(), expect);
  for (const auto& inst : b.instances) {
    EXPECT_GE(inst.history, 1u);
    EXPECT_EQ(inst.future, std::min<std::size_t>(3, b.segments[inst.video].k() - inst.history));
  }
  EXPECT_THROW(build_training_set({}, f.obs, full.condition, 2, 3), DataError);
  EXPECT_THROW(build_training_set(f.videos, f.obs, full.condition, 2, 0), ConfigError);
}

TEST(TrainingSet, LastObservationWindowsSeeOnlyTheFinalHistoryObservation) {
  Fixture f;
  ForecasterConfig cfg = tiny_model(Architecture::kTransformer);
  cfg.condition = InputCondition::parse("goal_last_obs");
  const auto m = NeuralForecaster::initialize(cfg, f.vocab, 1);
  const TrainingSet set = f.set(cfg);
  for (const auto& inst : set.instances) {
    const HistoryEncoding enc = encode_instance(m, set, inst, f.vocab);
    std::size_t obs = 0, acts = 0;
    for (auto k : enc.kinds) {
      obs += k == PositionKind::kObservation;
      acts += k == PositionKind::kAction;
    }
    EXPECT_EQ(obs, static_cast<std::size_t>(cfg.delta) * (1 + inst.future));
    EXPECT_GT(acts, 0u);
    EXPECT_EQ(enc.goal_length, f.vocab.goal_tokens(set.goals[inst.video]).size());
  }
}

TrainConfig quick_train(std::size_t epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.lr = 1e-2;
  t.seed = 3;
  return t;
}

TEST(Train, LossDecreasesOnASmallCorpus) {
  Fixture f;
  auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 1);
  const TrainingSet set = f.set(m.config);
  const double before = evaluate_loss(m, set, f.vocab);
  OptimizerState opt;
  TrainProgress progress;
  std::vector<double> seen;
  train(m, opt, progress, set, f.vocab, quick_train(15), [&](std::size_t, double l) { seen.push_back(l); });
  EXPECT_EQ(progress.epoch_loss.size(), 15u);
  EXPECT_EQ(seen, progress.epoch_loss);
  EXPECT_LT(evaluate_loss(m, set, f.vocab), 0.7 * before);
  EXPECT_LT(progress.epoch_loss.back(), progress.epoch_loss.front());
}

TEST(Train, DeterministicAndResumable) {
  Fixture f;
  const auto init = NeuralForecaster::initialize(tiny_model(Architecture::kRecurrent), f.vocab, 1);
  const TrainingSet set = f.set(init.config);
  TrainConfig cfg = quick_train(4);
  cfg.rollout_prob = 0.5;

  auto run = [&](std::vector<std::size_t> stops) {
    auto m = init;
    OptimizerState opt;
    TrainProgress progress;
    for (std::size_t e : stops) {
      TrainConfig c = cfg;
      c.epochs = e;
      train(m, opt, progress, set, f.vocab, c);
    }
    return std::make_pair(params_of(m), progress.epoch_loss);
  };
  const auto a = run({4});
  const auto b = run({4});
  const auto c = run({2, 4});
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.second, c.second);
  for (std::size_t i = 0; i < a.first.size(); ++i) {
    EXPECT_EQ(a.first[i], b.first[i]);
    EXPECT_EQ(a.first[i], c.first[i]);
  }
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  Fixture f;
  for (const std::string opt_name : {"adam", "sgd"}) {
    auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 1);
    const auto before = params_of(m);
    TrainConfig cfg = quick_train(2);
    cfg.lr = 0;
    cfg.optimizer = opt_name;
    OptimizerState opt;
    TrainProgress progress;
    train(m, opt, progress, f.set(m.config), f.vocab, cfg);
    const auto after = params_of(m);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]) << opt_name;
  }
}

TEST(Train, RolloutSubstitutionChangesTheTrajectory) {
  Fixture f;
  const auto init = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 1);
  const TrainingSet set = f.set(init.config);
  auto a = init, b = init;
  OptimizerState oa, ob;
  TrainProgress pa, pb;
  TrainConfig cfg = quick_train(2);
  train(a, oa, pa, set, f.vocab, cfg);
  cfg.rollout_prob = 1.0;
  train(b, ob, pb, set, f.vocab, cfg);
  EXPECT_NE(pa.epoch_loss, pb.epoch_loss);
}

TEST(Rollout, SubstitutesOnlyFutureWindows) {
  Fixture f;
  for (const char* name : {"goal_last_obs", "full"}) {
    ForecasterConfig cfg = tiny_model(Architecture::kTransformer);
    cfg.condition = InputCondition::parse(name);
    const auto m = NeuralForecaster::initialize(cfg, f.vocab, 1);
    const TrainingSet set = f.set(cfg);
    for (const auto& inst : set.instances) {
      std::size_t first = 0;
      HistoryEncoding enc = encode_instance(m, set, inst, f.vocab, &first);
      const HistoryEncoding orig = enc;
      const Matrix targets = substitute_rollouts(m, enc, first, 1.0, 7);
      EXPECT_EQ(targets, orig.h);
      std::size_t replaced = 0, future_obs = 0;
      for (std::size_t p = 0; p < enc.n(); ++p) {
        const auto r = static_cast<Eigen::Index>(p);
        if (p < first) {
          ASSERT_EQ(enc.h.row(r), orig.h.row(r)) << name << " position " << p;
          continue;
        }
        if (enc.kinds[p] != PositionKind::kObservation) {
          EXPECT_EQ(enc.h.row(r), orig.h.row(r));
          continue;
        }
        ++future_obs;
        replaced += enc.raw_index[p] == -1;
      }
      EXPECT_EQ(replaced, future_obs) << name;
      EXPECT_EQ(future_obs, static_cast<std::size_t>(cfg.delta) * inst.future);
    }
  }
}

TEST(Train, NonFiniteParametersRaiseDivergence) {
  Fixture f;
  auto m = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 1);
  m.embedding.rows(0, 0) = std::numeric_limits<double>::quiet_NaN();
  OptimizerState opt;
  TrainProgress progress;
  EXPECT_THROW(train(m, opt, progress, f.set(m.config), f.vocab, quick_train(1)), DivergenceError);
  EXPECT_TRUE(progress.epoch_loss.empty());
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = [](auto mutate) {
    TrainConfig t;
    mutate(t);
    EXPECT_THROW(t.validate(), ConfigError);
  };
  bad([](TrainConfig& t) { t.optimizer = "lbfgs"; });
  bad([](TrainConfig& t) { t.lr = -1; });
  bad([](TrainConfig& t) { t.epochs = 0; });
  bad([](TrainConfig& t) { t.batch_size = 0; });
  bad([](TrainConfig& t) { t.rollout_prob = 1.5; });
  bad([](TrainConfig& t) { t.rollout_prob = -0.1; });
  bad([](TrainConfig& t) { t.beta1 = 1.0; });
}

TEST(Checkpoint, RoundTripIsExact) {
  Fixture f;
  TempDir dir("ckpt");
  Checkpoint c;
  ForecasterConfig cfg = tiny_model(Architecture::kRecurrent);
  cfg.mapper_hidden = 3;
  cfg.condition = InputCondition::parse("goal_last_obs");
  c.model = NeuralForecaster::initialize(cfg, f.vocab, 8);
  c.train = quick_train(2);
  c.train.rollout_prob = 0.25;
  c.seed = 99;
  c.config_hash = "abc";
  train(c.model, c.optimizer, c.progress, f.set(cfg), f.vocab, c.train);
  save_checkpoint(dir / "sub/model.json", c);
  const Checkpoint d = load_checkpoint(dir / "sub/model.json");
  EXPECT_EQ(d.seed, 99u);
  EXPECT_EQ(d.config_hash, "abc");
  EXPECT_EQ(d.progress.epoch_loss, c.progress.epoch_loss);
  EXPECT_EQ(d.train.rollout_prob, 0.25);
  EXPECT_EQ(d.model.config.condition, cfg.condition);
  EXPECT_EQ(d.model.config.mapper_hidden, 3u);
  EXPECT_EQ(d.optimizer.step, c.optimizer.step);
  const auto a = params_of(c.model);
  const auto b = params_of(d.model);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  ASSERT_EQ(d.optimizer.m.size(), c.optimizer.m.size());
  for (std::size_t i = 0; i < c.optimizer.m.size(); ++i) EXPECT_EQ(d.optimizer.m[i], c.optimizer.m[i]);
}

TEST(Checkpoint, RejectsMissingMalformedAndFutureFiles) {
  Fixture f;
  TempDir dir("ckpt_bad");
  EXPECT_THROW(load_checkpoint(dir / "absent.json"), DataError);
  testing::write_file(dir / "junk.json", "{not json");
  EXPECT_THROW(load_checkpoint(dir / "junk.json"), DataError);

  Checkpoint c;
  c.model = NeuralForecaster::initialize(tiny_model(Architecture::kTransformer), f.vocab, 1);
  save_checkpoint(dir / "ok.json", c);
  std::string text = testing::read_file(dir / "ok.json");
  const std::string key = "\"version\":" + std::to_string(kCheckpointVersion);
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, key.size(), "\"version\":" + std::to_string(kCheckpointVersion + 1));
  testing::write_file(dir / "future.json", text);
  try {
    load_checkpoint(dir / "future.json");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

}  // namespace
}  // namespace vplan
