#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/weighted.hpp"
#include "hsicgsa/numerics.hpp"
#include "oracles.hpp"

using namespace hsicgsa;

namespace {

const ProductDist kUnit2({UnivariateDist::uniform(0, 1), UnivariateDist::uniform(0, 1)});

SampleSet random_sample(std::size_t n, std::uint64_t seed, bool dependent) {
  RngStream rng(seed);
  Eigen::MatrixXd x = kUnit2.sample(n, rng);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) = dependent ? std::sin(3.0 * x(i, 0)) + 0.1 * x(i, 1) : rng.uniform();
  }
  return SampleSet(std::move(x), std::move(y), kUnit2);
}

SampleSet copy_output(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd x = kUnit2.sample(n, rng);
  Eigen::VectorXd y = x.col(0);
  return SampleSet(std::move(x), std::move(y), kUnit2);
}

}  // namespace

TEST(SampleSet, Validation) {
  Eigen::MatrixXd x(3, 2);
  x << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  EXPECT_NO_THROW(SampleSet(x, y, kUnit2));
  EXPECT_THROW(SampleSet(x, Eigen::VectorXd::Ones(2), kUnit2), Error);
  Eigen::MatrixXd bad = x;
  bad(1, 1) = std::nan("");
  EXPECT_THROW(SampleSet(bad, y, kUnit2), Error);
  EXPECT_THROW(SampleSet(x.topRows(1), y.head(1), kUnit2), Error);
  EXPECT_THROW(SampleSet(x, y, ProductDist({UnivariateDist::uniform(0, 1)})), Error);
}

TEST(Hsic, TraceEqualsQuadrupleSum) {
  std::mt19937_64 gen(42);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(gen() % 26);
    const Eigen::MatrixXd lk = oracle::random_gram(n, gen);
    const Eigen::MatrixXd l = oracle::random_gram(n, gen);
    const double brute = oracle::hsic_quadruple(lk, l, Eigen::VectorXd::Ones(n));
    EXPECT_LE(oracle::rel_diff(hsic_v(lk, l), brute), 1e-12);
    EXPECT_LE(oracle::rel_diff(hsic_v_sum(lk, l), brute), 1e-12);
  }
}

TEST(Hsic, SampleLevelForms) {
  const SampleSet s = random_sample(20, 3, true);
  for (std::size_t k = 0; k < 2; ++k) {
    const HsicValue v = hsic_v(s, k);
    EXPECT_EQ(v.kind, HsicKind::Classical);
    EXPECT_EQ(v.input_index, k);
    EXPECT_LE(oracle::rel_diff(v.value, hsic_v_sum(s, k).value), 1e-12);
    EXPECT_GE(v.value, -1e-12);
    const Eigen::MatrixXd lk = input_gram(s, k);
    EXPECT_GT(hsic_v(lk, lk), 0.0);
  }
}

TEST(Hsic, ConstantColumnIsDegenerate) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(10, 2, 0.5);
  x.col(1) = Eigen::VectorXd::LinSpaced(10, 0.0, 1.0);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(10, 0.0, 1.0);
  const SampleSet s(x, y, kUnit2);
  try {
    hsic_v(s, 0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
  }
  const SampleSet flat(x.rightCols(2), Eigen::VectorXd::Constant(10, 2.0), kUnit2);
  EXPECT_THROW(r2_hsic(flat, 1), Error);
}

TEST(Hsic, RowPermutationInvariance) {
  const SampleSet s = random_sample(40, 5, true);
  RngStream rng(6);
  const auto rows = rng.permutation(40);
  const SampleSet p = s.select(rows);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LE(oracle::rel_diff(hsic_v(s, k).value, hsic_v(p, k).value), 1e-12);
  }
}

TEST(Hsic, IndependentValueShrinksLikeOneOverN) {
  std::vector<double> values;
  const std::size_t n = 500;
  for (int rep = 0; rep < 200; ++rep) {
    const SampleSet s = random_sample(n, 1000 + rep, false);
    values.push_back(hsic_v(s, 0).value);
  }
  std::nth_element(values.begin(), values.begin() + 100, values.end());
  EXPECT_LT(values[100], 5.0 / static_cast<double>(n));
}

TEST(R2, PerfectAndSelfDependence) {
  const SampleSet s = copy_output(80, 9);
  EXPECT_NEAR(r2_hsic(s, 0), 1.0, 1e-12);
  const Eigen::MatrixXd lk = input_gram(s, 1);
  EXPECT_NEAR(r2_from_values(hsic_v(lk, lk), hsic_v(lk, lk), hsic_v(lk, lk)), 1.0, 0.0);
  EXPECT_THROW(r2_from_values(0.1, 0.0, 1.0), Error);
  EXPECT_DOUBLE_EQ(r2_from_values(2.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(r2_from_values(-1e-13, 1.0, 1.0), 0.0);
}

TEST(R2, IndependentMedianSmall) {
  std::vector<double> values;
  for (int rep = 0; rep < 200; ++rep) values.push_back(r2_hsic(random_sample(1000, 5000 + rep, false), 0));
  std::nth_element(values.begin(), values.begin() + 100, values.end());
  EXPECT_LT(values[100], 0.02);
}

TEST(Tests, AsymptoticPower) {
  const SampleSet s = copy_output(500, 10);
  EXPECT_LT(asymp_pvalue(s, 0), 1e-6);
}

TEST(Tests, GammaSurvivalMonotone) {
  const H0Moments m{0.01, 1e-5, 10.0, 0.5};
  double prev = 1.0;
  for (double t = 0.0; t < 0.1; t += 0.005) {
    const double p = gamma_pvalue(t, m, 100);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Tests, PermutationExtremes) {
  const SampleSet perfect = copy_output(100, 12);
  EXPECT_EQ(perm_pvalue(perfect, 0, 500, RngStream(1)), 0.0);
  const SampleSet s = random_sample(50, 13, false);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double p = perm_pvalue(s, 0, 1, RngStream(seed));
    EXPECT_TRUE(p == 0.0 || p == 1.0);
  }
}

TEST(Tests, PermutationThreadInvariant) {
  const SampleSet s = random_sample(60, 14, true);
  EXPECT_EQ(perm_pvalue(s, 1, 64, RngStream(3), 1), perm_pvalue(s, 1, 64, RngStream(3), 4));
}
