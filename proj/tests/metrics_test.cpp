#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "vplan/metrics.hpp"

using namespace vplan;
using namespace vplan::oracles;

namespace {

std::vector<ActionId> plan(std::initializer_list<int> ids) {
  std::vector<ActionId> out;
  for (int i : ids) out.push_back(action_id(static_cast<std::size_t>(i)));
  return out;
}

constexpr int a = 0, b = 1, c = 2, d = 3, e = 4, x = 9;

}  // namespace

TEST(SuccessRate, Examples) {
  EXPECT_EQ(success_rate(plan({a, b, c}), plan({a, b, c}), 3), 1.0);
  EXPECT_EQ(success_rate(plan({a, b, c}), plan({a, b, d}), 3), 0.0);
  EXPECT_EQ(success_rate(plan({a, b, d}), plan({a, b, c}), 2), 1.0);
}

TEST(SuccessRate, HorizonBeyondSequenceThrows) {
  EXPECT_THROW(success_rate(plan({a, b}), plan({a, b, c}), 3), std::invalid_argument);
  EXPECT_THROW(mean_accuracy(plan({a, b, c}), plan({a}), 2), std::invalid_argument);
  EXPECT_THROW(miou(plan({a}), plan({a}), 2), std::invalid_argument);
}

TEST(MeanAccuracy, Examples) {
  EXPECT_DOUBLE_EQ(mean_accuracy(plan({a, x, c}), plan({a, b, c}), 3), 2.0 / 3.0);
  EXPECT_EQ(mean_accuracy(plan({a, b, c}), plan({d, e, x}), 3), 0.0);
}

TEST(Miou, Examples) {
  EXPECT_EQ(miou(plan({a, a, b}), plan({b, a, a}), 3), 1.0);
  EXPECT_DOUBLE_EQ(miou(plan({a, b, c}), plan({b, c, d}), 3), 0.5);
  EXPECT_DOUBLE_EQ(miou(plan({a, b, c}), plan({a, d, e}), 3), 0.2);
}

TEST(NextAccuracy, Examples) {
  EXPECT_EQ(next_accuracy(plan({a, b}), plan({a, c})), 1.0);
  EXPECT_EQ(next_accuracy(plan({b, b}), plan({a, b})), 0.0);
}

TEST(EditDistance, Examples) {
  EXPECT_EQ(edit_distance(plan({a, b, c}), plan({a, b, c})), 0u);
  EXPECT_EQ(edit_distance(plan({a, b, c}), plan({a, c})), 1u);
  EXPECT_EQ(edit_distance({}, plan({a, c})), 2u);
  EXPECT_DOUBLE_EQ(normalized_edit_distance(plan({a, b, c}), plan({a, c})), 1.0 / 3.0);
  EXPECT_EQ(normalized_edit_distance({}, {}), 0.0);
}

TEST(PadPlan, ShortPredictionMatchesNothing) {
  const auto p = pad_plan(plan({a}), 3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[1], kInvalidAction);
  EXPECT_DOUBLE_EQ(mean_accuracy(p, plan({a, b, c}), 3), 1.0 / 3.0);
  EXPECT_EQ(pad_plan(plan({a, b, c, d}), 2).size(), 4u);
}

TEST(MetricsOracle, RandomPairsMatchBruteForce) {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t len = 1 + static_cast<std::size_t>(trial % 6);
    const int alphabet = 2 + trial % 5;
    const auto p = random_plan(rng, len, alphabet);
    const auto g = random_plan(rng, len, alphabet);
    for (std::size_t l = 1; l <= len; ++l) {
      ASSERT_EQ(success_rate(p, g, l), ref_sr(p, g, l));
      ASSERT_EQ(mean_accuracy(p, g, l), ref_macc(p, g, l));
      ASSERT_EQ(miou(p, g, l), ref_miou(p, g, l));
    }
    ASSERT_EQ(next_accuracy(p, g), success_rate(p, g, 1));
  }
}

TEST(MetricsOracle, EditDistanceMatchesRecursiveDefinition) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<std::size_t> len(0, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_plan(rng, len(rng), 4);
    const auto g = random_plan(rng, len(rng), 4);
    ASSERT_EQ(edit_distance(p, g), ref_ed(p, g));
    ASSERT_EQ(edit_distance(p, g), edit_distance(g, p));
  }
}

TEST(MetricsProperties, OrderingAndSymmetry) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto p = random_plan(rng, 4, 3);
    const auto g = random_plan(rng, 4, 3);
    for (std::size_t l = 1; l <= 4; ++l) {
      const double sr = success_rate(p, g, l), ma = mean_accuracy(p, g, l), mi = miou(p, g, l);
      EXPECT_LE(sr, ma);
      if (sr == 1.0) {
        EXPECT_EQ(ma, 1.0);
        EXPECT_EQ(mi, 1.0);
      }
      EXPECT_EQ(mi, miou(g, p, l));
    }
  }
  // Only the first l positions matter.
  EXPECT_EQ(mean_accuracy(plan({a, b, c}), plan({a, b, d}), 2), 1.0);
  EXPECT_EQ(miou(plan({a, b, x}), plan({b, a, d}), 2), 1.0);
}

TEST(EvaluatePlan, OneRecordPerHorizonFromOnePlan) {
  const auto recs = evaluate_plan("v/1", 3, 2, plan({a, b, x, d}), plan({a, b, c, d}), {1, 3, 4}, "full", 0.1, 7);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].l, 1u);
  EXPECT_EQ(recs[0].sr, 1.0);
  EXPECT_EQ(recs[1].sr, 0.0);
  EXPECT_DOUBLE_EQ(recs[1].macc, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recs[2].macc, 0.75);
  for (const auto& r : recs) {
    EXPECT_EQ(r.nacc, 1.0);
    EXPECT_EQ(r.condition, "full");
    EXPECT_EQ(r.seed, 7u);
  }
}

namespace {

std::vector<EvalRecord> synthetic_records(std::mt19937& rng, std::size_t seeds, std::size_t examples) {
  std::vector<EvalRecord> out;
  for (std::size_t s = 0; s < seeds; ++s)
    for (std::size_t i = 0; i < examples; ++i) {
      const auto p = random_plan(rng, 3, 3);
      const auto g = random_plan(rng, 3, 3);
      for (auto& r : evaluate_plan("e" + std::to_string(i), static_cast<std::uint32_t>(i % 4), 1 + i % 5, p, g,
                                   {1, 3}, "cond", 0.0, s))
        out.push_back(r);
    }
  return out;
}

}  // namespace

TEST(Aggregate, ConstantSeedMeansGiveZeroError) {
  std::vector<EvalRecord> recs;
  for (std::uint64_t s = 0; s < 5; ++s)
    for (int i = 0; i < 10; ++i) {
      EvalRecord r;
      r.example_id = std::to_string(i);
      r.l = 1;
      r.sr = i == 0 ? 1.0 : 0.0;
      r.condition = "c";
      r.seed = s;
      recs.push_back(r);
    }
  const Summary s = aggregate(recs);
  const SummaryRow* row = s.find("c", 0.0, 1, "sr");
  ASSERT_NE(row, nullptr);
  EXPECT_NEAR(row->mean, 0.1, 1e-15);
  EXPECT_EQ(row->ste, 0.0);
  EXPECT_EQ(row->n_seeds, 5u);
}

TEST(Aggregate, SingleRecordReportsOneSeed) {
  EvalRecord r;
  r.l = 1;
  r.macc = 0.5;
  r.condition = "c";
  const Summary s = aggregate({r});
  const SummaryRow* row = s.find("c", 0.0, 1, "macc");
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->mean, 0.5);
  EXPECT_EQ(row->ste, 0.0);
  EXPECT_EQ(row->n_seeds, 1u);
}

TEST(Aggregate, MatchesIndependentReaggregationOfJsonl) {
  std::mt19937 rng(3);
  const auto recs = synthetic_records(rng, 5, 40);
  std::stringstream jsonl;
  for (const auto& r : recs) jsonl << to_jsonl(r) << "\n";

  // Re-read and fold by hand: per-seed mean, then mean and sample std / sqrt(n).
  std::map<std::pair<std::size_t, std::uint64_t>, std::pair<double, int>> acc;
  std::string line;
  while (std::getline(jsonl, line)) {
    const EvalRecord r = record_from_json(line);
    auto& slot = acc[{r.l, r.seed}];
    slot.first += r.macc;
    slot.second += 1;
  }
  const Summary s = aggregate(recs);
  for (std::size_t l : {1u, 3u}) {
    std::vector<double> means;
    for (const auto& [key, v] : acc)
      if (key.first == l) means.push_back(v.first / v.second);
    double m = 0;
    for (double v : means) m += v;
    m /= static_cast<double>(means.size());
    double ss = 0;
    for (double v : means) ss += (v - m) * (v - m);
    const double ste = std::sqrt(ss / static_cast<double>(means.size() - 1)) / std::sqrt(double(means.size()));
    const SummaryRow* row = s.find("cond", 0.0, l, "macc");
    ASSERT_NE(row, nullptr);
    EXPECT_NEAR(row->mean, m, 1e-12);
    EXPECT_NEAR(row->ste, ste, 1e-12);
  }
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937 rng(8);
  auto recs = synthetic_records(rng, 3, 30);
  std::stringstream before, after;
  write_summary_csv(before, aggregate(recs));
  std::shuffle(recs.begin(), recs.end(), rng);
  write_summary_csv(after, aggregate(recs));
  EXPECT_EQ(before.str(), after.str());
}

TEST(Aggregate, PerKAndPerGoalCountsAddUp) {
  std::mt19937 rng(4);
  const auto recs = synthetic_records(rng, 2, 25);
  const Summary s = aggregate(recs);
  std::size_t nk = 0, ng = 0;
  for (const auto& r : s.per_k)
    if (r.l == 3) nk += r.n;
  for (const auto& r : s.per_goal)
    if (r.l == 3) ng += r.n;
  EXPECT_EQ(nk, 50u);
  EXPECT_EQ(ng, 50u);
}

TEST(Records, JsonRoundTrip) {
  EvalRecord r;
  r.example_id = "vid-3/k2";
  r.goal = 4;
  r.k = 2;
  r.l = 3;
  r.sr = 0;
  r.macc = 1.0 / 3.0;
  r.miou = 0.5;
  r.nacc = 1;
  r.ed = 2;
  r.ed_norm = 2.0 / 3.0;
  r.condition = "markov_goal";
  r.noise = 0.2;
  r.seed = 11;
  const EvalRecord back = record_from_json(to_jsonl(r));
  EXPECT_EQ(back.example_id, r.example_id);
  EXPECT_EQ(back.k, r.k);
  EXPECT_EQ(back.condition, r.condition);
  EXPECT_EQ(back.ed, r.ed);
  EXPECT_NEAR(back.macc, r.macc, 1e-12);
  EXPECT_NEAR(back.noise, r.noise, 1e-12);
  EXPECT_EQ(back.seed, r.seed);
}

TEST(Spearman, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_EQ(spearman({1, 2, 3}, {5, 5, 5}), 0.0);
  // Ties take average ranks: x ranks (1,2,3), y ranks (1.5,1.5,3).
  EXPECT_NEAR(spearman({1, 2, 3}, {7, 7, 9}), 0.8660254037844386, 1e-12);
}

TEST(Spearman, MatchesRankPearsonOnDistinctValues) {
  std::mt19937 rng(17);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 8);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = n01(rng);
      y[i] = n01(rng);
    }
    // Closed form for distinct values: 1 - 6 sum d^2 / (n (n^2 - 1)).
    auto ranks = [](const std::vector<double>& v) {
      std::vector<double> r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i)
        r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(), [&](double o) { return o < v[i]; }));
      return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double d2 = 0;
    for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(spearman(x, y), 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0)), 1e-12);
  }
}

TEST(FormatNumber, StableAcrossCalls) {
  EXPECT_EQ(format_number(0.1), format_number(0.1));
  EXPECT_EQ(format_number(1.0 / 3.0), format_number(1.0 / 3.0));
}
