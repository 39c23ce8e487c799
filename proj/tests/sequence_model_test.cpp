#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "vplan/sequence_model.hpp"

namespace vplan {
namespace {

using testing::check_gradient;

SequenceModelConfig small(Architecture arch) {
  SequenceModelConfig c;
  c.architecture = arch;
  c.d = 8;
  c.layers = 2;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.max_len = 64;
  c.init_std = 0.3;
  return c;
}

Matrix random_input(std::size_t n, std::size_t d, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n01;
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  return x;
}

class SequenceModelTest : public ::testing::TestWithParam<Architecture> {};

TEST_P(SequenceModelTest, OutputShapeAndFinite) {
  const auto m = SequenceModel::initialize(small(GetParam()), 3);
  const Matrix y = m.forward(random_input(11, 8, 1));
  EXPECT_EQ(y.rows(), 11);
  EXPECT_EQ(y.cols(), 8);
  EXPECT_TRUE(y.allFinite());
}

TEST_P(SequenceModelTest, CausalUnderRandomPerturbation) {
  const auto m = SequenceModel::initialize(small(GetParam()), 4);
  std::mt19937 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    const Matrix x = random_input(n, 8, 100 + trial);
    const Eigen::Index j = static_cast<Eigen::Index>(rng() % (n - 1));
    Matrix x2 = x;
    x2.bottomRows(x.rows() - j - 1) = random_input(n - j - 1, 8, 5000 + trial);
    const Matrix y = m.forward(x);
    const Matrix y2 = m.forward(x2);
    ASSERT_EQ(y.topRows(j + 1), y2.topRows(j + 1)) << "trial " << trial << " j " << j;
    EXPECT_NE(y.row(x.rows() - 1), y2.row(x.rows() - 1));
  }
}

TEST_P(SequenceModelTest, DeterministicGivenSeed) {
  const auto a = SequenceModel::initialize(small(GetParam()), 42);
  const auto b = SequenceModel::initialize(small(GetParam()), 42);
  const auto c = SequenceModel::initialize(small(GetParam()), 43);
  const Matrix x = random_input(7, 8, 2);
  EXPECT_EQ(a.forward(x), b.forward(x));
  EXPECT_NE(a.forward(x), c.forward(x));
}

TEST_P(SequenceModelTest, ZeroWeightsGiveOutputBias) {
  auto m = SequenceModel::initialize(small(GetParam()), 5).zeros_like();
  RowVector bias(8);
  for (int i = 0; i < 8; ++i) bias(i) = 0.1 * i - 0.3;
  m.for_each_param([&](const std::string& name, Matrix& p) {
    if (name == "seq.b_out") p.row(0) = bias;
  });
  const Matrix y = m.forward(random_input(6, 8, 3));
  for (Eigen::Index r = 0; r < y.rows(); ++r) EXPECT_EQ(y.row(r), bias);
}

TEST_P(SequenceModelTest, IncrementalMatchesFullForward) {
  const auto m = SequenceModel::initialize(small(GetParam()), 6);
  const Matrix x = random_input(15, 8, 4);
  const Matrix y = m.forward(x);
  SequenceState st = m.start();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const RowVector& out = m.advance(st, x.row(r));
    EXPECT_LT((out - y.row(r)).cwiseAbs().maxCoeff(), 1e-12) << "row " << r;
  }
  EXPECT_EQ(st.length, 15u);
}

TEST_P(SequenceModelTest, ForkedStatesEvolveIndependently) {
  const auto m = SequenceModel::initialize(small(GetParam()), 7);
  const Matrix x = random_input(6, 8, 5);
  SequenceState st = m.start();
  for (Eigen::Index r = 0; r < 4; ++r) m.advance(st, x.row(r));
  SequenceState fork = st;
  const RowVector a = m.advance(st, x.row(4));
  m.advance(fork, x.row(5));
  const RowVector b = m.advance(st, x.row(5));
  EXPECT_NE(a, b);
  EXPECT_LT((b - m.forward(x).row(5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_P(SequenceModelTest, BackwardMatchesFiniteDifferences) {
  auto m = SequenceModel::initialize(small(GetParam()), 8);
  Matrix x = random_input(9, 8, 6);
  const Matrix r = random_input(9, 8, 7);
  auto objective = [&] { return (m.forward(x).array() * r.array()).sum(); };
  SequenceTrace trace;
  m.forward(x, &trace);
  auto g = m.zeros_like();
  const Matrix dx = m.backward(trace, r, g);
  const auto res = check_gradient(m, g, objective, 3, 11);
  EXPECT_GE(res.checked, 10u);
  EXPECT_LE(res.worst, 1e-6);

  for (Eigen::Index i = 0; i < x.size(); i += 5) {
    const double orig = x.data()[i];
    x.data()[i] = orig + 1e-5;
    const double lp = objective();
    x.data()[i] = orig - 1e-5;
    const double lm = objective();
    x.data()[i] = orig;
    EXPECT_NEAR((lp - lm) / 2e-5, dx.data()[i], 1e-6 * std::max(1.0, std::abs(dx.data()[i])));
  }
}

TEST_P(SequenceModelTest, BackwardAccumulates) {
  const auto m = SequenceModel::initialize(small(GetParam()), 9);
  const Matrix x = random_input(5, 8, 8);
  const Matrix r = random_input(5, 8, 9);
  SequenceTrace trace;
  m.forward(x, &trace);
  auto once = m.zeros_like();
  auto twice = m.zeros_like();
  m.backward(trace, r, once);
  m.backward(trace, r, twice);
  m.backward(trace, r, twice);
  std::vector<Matrix> a, b;
  once.for_each_param([&](const std::string&, const Matrix& p) { a.push_back(p); });
  twice.for_each_param([&](const std::string&, const Matrix& p) { b.push_back(p); });
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((2 * a[i] - b[i]).cwiseAbs().maxCoeff(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Architectures, SequenceModelTest,
                         ::testing::Values(Architecture::kTransformer, Architecture::kRecurrent),
                         [](const auto& info) { return to_string(info.param); });

TEST(SequenceModelConfig, RejectsBadShapes) {
  auto c = small(Architecture::kTransformer);
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small(Architecture::kTransformer);
  c.d = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small(Architecture::kRecurrent);
  c.init_std = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SequenceModelConfig, ArchitectureNamesRoundTrip) {
  for (auto a : {Architecture::kTransformer, Architecture::kRecurrent})
    EXPECT_EQ(parse_architecture(to_string(a)), a);
  EXPECT_THROW(parse_architecture("lstm"), ConfigError);
}

TEST(SequenceModel, TransformerRejectsSequencesPastMaxLen) {
  auto c = small(Architecture::kTransformer);
  c.max_len = 4;
  const auto m = SequenceModel::initialize(c, 1);
  EXPECT_THROW(m.forward(random_input(5, 8, 1)), std::length_error);
  SequenceState st = m.start();
  const Matrix x = random_input(5, 8, 2);
  for (int r = 0; r < 4; ++r) m.advance(st, x.row(r));
  EXPECT_THROW(m.advance(st, x.row(4)), std::length_error);
}

}  // namespace
}  // namespace vplan
