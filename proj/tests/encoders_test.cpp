#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_support.hpp"
#include "vplan/encoders.hpp"
#include "vplan/rng.hpp"

using namespace vplan;
using vplan::testing::history_of;
using vplan::testing::small_vocab;

namespace {

const Vocabulary& pancake_vocab() {
  static const Vocabulary v =
      Vocabulary::from_pairs({{"make pancakes", "pour batter"}, {"make pancakes", "flip pancake"},
                              {"make pancakes", "stir"}});
  return v;
}

MapperParams identity_mapper(std::size_t d) {
  MapperParams m;
  m.w1 = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m.b1 = Matrix::Zero(1, static_cast<Eigen::Index>(d));
  return m;
}

std::size_t sum(const std::vector<std::uint8_t>& v) {
  std::size_t s = 0;
  for (auto x : v) s += x;
  return s;
}

}  // namespace

TEST(EncodeAction, LooksUpTokenRows) {
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const ActionId pour = *v.find_action("pour batter");
  const Matrix alpha = encode_action(pour, t, v);
  ASSERT_EQ(alpha.rows(), 2);
  ASSERT_EQ(alpha.cols(), 4);
  EXPECT_EQ(alpha.row(0), t.rows.row(static_cast<Eigen::Index>(index(*v.find_token("pour")))));
  EXPECT_EQ(alpha.row(1), t.rows.row(static_cast<Eigen::Index>(index(*v.find_token("batter")))));
  EXPECT_EQ(encode_action(pour, t, v), alpha);
  EmbeddingTable zero{Matrix::Zero(t.rows.rows(), 4)};
  EXPECT_TRUE(encode_action(pour, zero, v).isZero());
}

TEST(EncodeObservation, IdentityAndZeroMappers) {
  ObservationWindow o;
  o.vectors = Matrix::Random(2, 4);
  EXPECT_EQ(encode_observation(o, identity_mapper(4)), o.vectors);
  MapperParams z = zeros_like(init_mapper(4, 6, 0, 0.1, 1));
  EXPECT_TRUE(encode_observation(o, z).isZero());
  EXPECT_EQ(encode_observation(o, z).cols(), 6);
  MapperParams wrong = identity_mapper(3);
  EXPECT_THROW(encode_observation(o, wrong), std::invalid_argument);
}

TEST(EncodeObservation, GradientMatchesFiniteDifferences) {
  for (std::size_t hidden : {0u, 5u}) {
    const MapperParams m = init_mapper(4, 3, hidden, 0.5, 7);
    const Matrix x = Matrix::Random(3, 4);
    MapperParams g = zeros_like(m);
    map_observations_backward(m, x, Matrix::Ones(3, 3), g);
    auto objective = [&](const MapperParams& p) { return map_observations(p, x).sum(); };
    const std::vector<std::pair<Matrix MapperParams::*, Matrix MapperParams::*>> fields = {
        {&MapperParams::w1, &MapperParams::w1}, {&MapperParams::b1, &MapperParams::b1},
        {&MapperParams::w2, &MapperParams::w2}, {&MapperParams::b2, &MapperParams::b2}};
    int checked = 0;
    for (const auto& [field, _] : fields) {
      for (Eigen::Index i = 0; i < (m.*field).size(); ++i) {
        const double eps = 1e-5;
        MapperParams plus = m, minus = m;
        (plus.*field).data()[i] += eps;
        (minus.*field).data()[i] -= eps;
        const double fd = (objective(plus) - objective(minus)) / (2 * eps);
        const double an = (g.*field).data()[i];
        EXPECT_LE(std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an)), 1e-4);
        ++checked;
      }
    }
    EXPECT_GE(checked, 10);
  }
}

TEST(BuildHistory, LengthFormulaExample) {
  // g=2 ("make pancakes"), k=2, delta=2, r=(1,2).
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const MapperParams m = init_mapper(3, 4, 0, 0.1, 3);
  const SegmentHistory h = history_of({*v.find_action("stir"), *v.find_action("pour batter")}, 3, 2);
  const HistoryEncoding enc = build_history(goal_id(0), h, t, m, v);
  EXPECT_EQ(enc.n(), 9u);
  EXPECT_EQ(sum(enc.action_mask), 3u);
  EXPECT_EQ(enc.goal_length, 2u);
  const std::vector<PositionKind> want = {PositionKind::kGoal,        PositionKind::kGoal,
                                          PositionKind::kObservation, PositionKind::kObservation,
                                          PositionKind::kAction,      PositionKind::kObservation,
                                          PositionKind::kObservation, PositionKind::kAction,
                                          PositionKind::kAction};
  EXPECT_EQ(enc.kinds, want);
  EXPECT_EQ(enc.target_mask, (std::vector<std::uint8_t>{0, 0, 1, 1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(enc.h.row(2), encode_observation(h.segments[0].observation, m).row(0));
  EXPECT_EQ(enc.h.row(7), t.rows.row(enc.token_ids[7]));
}

TEST(BuildHistory, EmptyHistoryIsGoalOnly) {
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const HistoryEncoding enc = build_history(goal_id(0), SegmentHistory{}, t, init_mapper(3, 4, 0, 0.1, 3), v);
  EXPECT_EQ(enc.n(), 2u);
  EXPECT_EQ(sum(enc.action_mask), 0u);
  EXPECT_EQ(sum(enc.target_mask), 0u);
}

TEST(BuildHistory, NoGoalMatchesFigureLayout) {
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const SegmentHistory h = history_of({*v.find_action("stir"), *v.find_action("pour batter")}, 3, 2);
  InputCondition no_goal;
  no_goal.goal = false;
  const HistoryEncoding enc = build_history(goal_id(0), h, t, init_mapper(3, 4, 0, 0.1, 3), v, no_goal);
  EXPECT_EQ(enc.n(), 2u * 2u + 1u + 2u);
  EXPECT_EQ(enc.target_mask.front(), 0);
  EXPECT_EQ(enc.goal_length, 0u);
}

TEST(BuildHistory, AblationConditions) {
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const MapperParams m = init_mapper(3, 4, 0, 0.1, 3);
  const SegmentHistory h =
      history_of({*v.find_action("stir"), *v.find_action("pour batter"), *v.find_action("flip pancake")}, 3, 2);
  auto count = [](const HistoryEncoding& e, PositionKind k) {
    return static_cast<std::size_t>(std::count(e.kinds.begin(), e.kinds.end(), k));
  };
  const auto full = build_history(goal_id(0), h, t, m, v, InputCondition::parse("full"));
  const auto no_obs = build_history(goal_id(0), h, t, m, v, InputCondition::parse("no_obs"));
  const auto glo = build_history(goal_id(0), h, t, m, v, InputCondition::parse("goal_last_obs"));
  const auto lo = build_history(goal_id(0), h, t, m, v, InputCondition::parse("last_obs"));
  EXPECT_EQ(count(full, PositionKind::kObservation), 6u);
  EXPECT_EQ(count(full, PositionKind::kAction), 5u);
  EXPECT_EQ(count(no_obs, PositionKind::kObservation), 0u);
  EXPECT_EQ(count(no_obs, PositionKind::kAction), 5u);
  EXPECT_EQ(count(glo, PositionKind::kGoal), 2u);
  EXPECT_EQ(count(glo, PositionKind::kAction), 0u);
  EXPECT_EQ(count(glo, PositionKind::kObservation), 2u);
  // The one window kept is the most recent.
  EXPECT_EQ(glo.h.bottomRows(2), encode_observation(h.segments[2].observation, m));
  EXPECT_EQ(lo.n(), 2u);
  EXPECT_EQ(InputCondition::parse("full").label(), "(G,A_k,O_k)");
  EXPECT_EQ(InputCondition::parse("no_obs").label(), "(G,A_k)");
  EXPECT_EQ(InputCondition::parse("goal_last_obs").label(), "(G,-,o_k)");
  EXPECT_EQ(InputCondition::parse("last_obs").label(), "(-,-,o_k)");
  EXPECT_THROW(InputCondition::parse("everything"), ConfigError);
}

TEST(BuildHistory, LengthAccountingOnRandomHistories) {
  const Vocabulary v = small_vocab(5, 6, true);
  std::mt19937 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + rng() % 5, obs_dim = 1 + rng() % 4;
    const int delta = 1 + static_cast<int>(rng() % 4);
    const EmbeddingTable t = init_embedding(v.num_tokens(), d, 0.5, rng());
    const MapperParams m = init_mapper(obs_dim, d, rng() % 2 ? 0 : 3, 0.5, rng());
    const GoalId g = goal_id(rng() % v.num_goals());
    const auto& pool = v.goal_actions(g);
    std::vector<ActionId> acts(rng() % 9);
    for (auto& a : acts) a = pool[rng() % pool.size()];
    const HistoryEncoding enc = build_history(g, history_of(acts, obs_dim, delta, rng()), t, m, v);
    std::size_t r = 0;
    for (ActionId a : acts) r += v.action_tokens(a).size();
    const std::size_t gl = v.goal_tokens(g).size();
    ASSERT_EQ(enc.n(), gl + acts.size() * static_cast<std::size_t>(delta) + r);
    ASSERT_EQ(sum(enc.action_mask), r);
    ASSERT_EQ(static_cast<std::size_t>(enc.h.rows()), enc.n());
    for (std::size_t j = 0; j < enc.n(); ++j) {
      ASSERT_EQ(enc.action_mask[j] == 1, enc.token_ids[j] >= 0);
      if (j < gl) ASSERT_EQ(enc.target_mask[j], 0);
    }
    if (enc.n() > gl) ASSERT_EQ(enc.target_mask[gl], gl > 0 ? 1 : 0);
  }
}

TEST(BuildHistory, DistinctHistoriesEncodeDistinctly) {
  const Vocabulary v = small_vocab(4, 6);
  const EmbeddingTable t = init_embedding(v.num_tokens(), 8, 1.0, 5);
  const MapperParams m = init_mapper(4, 8, 0, 0.5, 5);
  std::mt19937 rng(6);
  std::set<std::uint64_t> seen;
  std::set<std::vector<std::size_t>> keys;
  for (int trial = 0; trial < 10000; ++trial) {
    const GoalId g = goal_id(rng() % v.num_goals());
    const auto& pool = v.goal_actions(g);
    std::vector<ActionId> acts(1 + rng() % 6);
    for (auto& a : acts) a = pool[rng() % pool.size()];
    std::vector<std::size_t> key{index(g)};
    for (ActionId a : acts) key.push_back(index(a));
    if (!keys.insert(key).second) continue;
    InputCondition no_obs;
    no_obs.observations = ObservationInput::kNone;
    const HistoryEncoding enc = build_history(g, history_of(acts, 4, 1), t, m, v, no_obs);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index i = 0; i < enc.h.size(); ++i) h = mix64(h ^ double_bits(enc.h.data()[i]));
    EXPECT_TRUE(seen.insert(h).second);
  }
  EXPECT_GT(keys.size(), 1000u);
}

TEST(ScatterInputGradient, RoutesRowsBackToSources) {
  const Vocabulary& v = pancake_vocab();
  const EmbeddingTable t = init_embedding(v.num_tokens(), 4, 1.0, 3);
  const MapperParams m = identity_mapper(4);
  const SegmentHistory h = history_of({*v.find_action("stir")}, 4, 2);
  const HistoryEncoding enc = build_history(goal_id(0), h, t, m, v);
  EmbeddingTable dt{Matrix::Zero(t.rows.rows(), 4)};
  MapperParams dm = zeros_like(m);
  scatter_input_gradient(enc, Matrix::Ones(static_cast<Eigen::Index>(enc.n()), 4), m, dt, dm);
  const auto stir = static_cast<Eigen::Index>(index(*v.find_token("stir")));
  EXPECT_EQ(dt.rows.row(stir), RowVector::Ones(4));
  EXPECT_EQ(dm.b1, Matrix::Constant(1, 4, 2.0));
}
