#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "test_util.hpp"

using namespace mixmemb;
using testutil::trapezoid;

TEST(LogDensity, GammaWithUnitShapeIsExponential) {
  for (double x : {0.1, 1.0, 3.7})
    EXPECT_NEAR(dist::log_gamma(x, 1.0, 2.5), std::log(2.5) - 2.5 * x, 1e-14);
  EXPECT_EQ(dist::log_gamma(0.0, 2.0, 1.0), dist::kNegInf);
}

TEST(LogDensity, GammaIntegratesToOne) {
  const double integral =
      trapezoid([](double x) { return std::exp(dist::log_gamma(x, 3.5, 2.0)); }, 1e-12, 40.0, 200000);
  EXPECT_NEAR(integral, 1.0, 1e-6);
}

TEST(LogDensity, InverseGammaIntegratesToOne) {
  const double integral = trapezoid([](double x) { return std::exp(dist::log_inv_gamma(x, 4.0, 3.0)); },
                                    1e-9, 200.0, 400000);
  EXPECT_NEAR(integral, 1.0, 1e-6);
}

TEST(LogDensity, InverseGammaAtModeMatchesClosedForm) {
  const double a = 3.0, b = 2.0, mode = b / (a + 1.0);
  const double expected = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(mode) - (a + 1.0);
  EXPECT_NEAR(dist::log_inv_gamma(mode, a, b), expected, 1e-13);
}

TEST(LogDensity, DirichletTwoCoordinatesIsBeta) {
  VectorXd a(2);
  a << 2.5, 4.0;
  VectorXd x(2);
  x << 0.3, 0.7;
  const double beta = std::lgamma(6.5) - std::lgamma(2.5) - std::lgamma(4.0) + 1.5 * std::log(0.3) +
                      3.0 * std::log(0.7);
  EXPECT_NEAR(dist::log_dirichlet(x, a), beta, 1e-13);
}

TEST(LogDensity, UniformDirichletIsLogGammaK) {
  VectorXd x(3);
  x << 0.2, 0.5, 0.3;
  EXPECT_NEAR(dist::log_dirichlet(x, VectorXd::Ones(3)), std::lgamma(3.0), 1e-14);
}

TEST(LogDensity, TruncatedNormalIntegratesToOne) {
  for (double mean : {-2.0, 0.0, 1.5}) {
    const double integral = trapezoid(
        [&](double x) { return std::exp(dist::log_truncnorm_positive(x, mean, 0.8)); }, 1e-300, 12.0, 200000);
    EXPECT_NEAR(integral, 1.0, 1e-6) << "mean " << mean;
  }
  EXPECT_EQ(dist::log_truncnorm_positive(-0.1, 1.0, 1.0), dist::kNegInf);
}

TEST(LogDensity, LogSumExpIsStable) {
  VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  EXPECT_NEAR(dist::logsumexp(v), std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)), 1e-14);
  v << 1000.0, 1000.0, -1e300;
  EXPECT_NEAR(dist::logsumexp(v), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_EQ(dist::logsumexp(VectorXd(0)), dist::kNegInf);
}

TEST(Rng, SameKeySameSequence) {
  auto a = make_stream(7, 3, 1, Block::z);
  auto b = make_stream(7, 3, 1, Block::z);
  for (int j = 0; j < 100; ++j) ASSERT_EQ(a(), b());
}

TEST(Rng, DistinctKeysDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t it = 0; it < 20; ++it)
    for (std::uint64_t blk = 1; blk <= 16; ++blk)
      first.insert(make_stream(1, it, 0, static_cast<Block>(blk))());
  EXPECT_EQ(first.size(), 20u * 16u);
}

TEST(Sampler, GammaMoments) {
  auto rng = testutil::rng_for(1);
  std::vector<double> x(100000);
  for (auto& v : x) v = dist::gamma(rng, 2.5, 4.0);
  const auto ms = testutil::mean_se(x);
  EXPECT_NEAR(ms.mean, 2.5 / 4.0, 4 * ms.se);
}

TEST(Sampler, InverseGammaMean) {
  auto rng = testutil::rng_for(2);
  std::vector<double> x(100000);
  for (auto& v : x) v = dist::inv_gamma(rng, 5.0, 2.0);
  const auto ms = testutil::mean_se(x);
  EXPECT_NEAR(ms.mean, 2.0 / 4.0, 4 * ms.se);
}

TEST(Sampler, LogGammaDrawSmallShape) {
  auto rng = testutil::rng_for(3);
  std::vector<double> x(200000);
  for (auto& v : x) v = std::exp(dist::log_gamma_draw(rng, 0.5));
  const auto ms = testutil::mean_se(x);
  EXPECT_NEAR(ms.mean, 0.5, 4 * ms.se);
}

// Mean of N(mu, s^2) truncated to (0, inf): mu + s * phi(a) / (1 - Phi(a)), a = -mu/s.
static double truncnorm_mean(double mu, double s) {
  const double a = -mu / s;
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2 * M_PI);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  return mu + s * pdf / tail;
}

TEST(Sampler, TruncatedNormalBothBranches) {
  auto rng = testutil::rng_for(4);
  for (double mu : {1.0, -0.5, -3.0}) {
    std::vector<double> x(100000);
    for (auto& v : x) {
      v = dist::truncnorm_positive(rng, mu, 1.0);
      ASSERT_GT(v, 0.0);
    }
    const auto ms = testutil::mean_se(x);
    EXPECT_NEAR(ms.mean, truncnorm_mean(mu, 1.0), 4 * ms.se) << "mu " << mu;
  }
}

TEST(Sampler, DirichletSumsToOneAndHasRightMean) {
  auto rng = testutil::rng_for(5);
  VectorXd a(3);
  a << 1.0, 2.0, 5.0;
  std::vector<double> first(50000);
  for (auto& v : first) {
    const VectorXd x = dist::dirichlet(rng, a);
    ASSERT_NEAR(x.sum(), 1.0, 1e-15);
    v = x[0];
  }
  const auto ms = testutil::mean_se(first);
  EXPECT_NEAR(ms.mean, 1.0 / 8.0, 4 * ms.se);
}

TEST(Sampler, DirichletTinyConcentrationStaysFinite) {
  auto rng = testutil::rng_for(6);
  for (int j = 0; j < 1000; ++j) {
    const VectorXd x = dist::dirichlet(rng, VectorXd::Constant(3, 1e-3));
    ASSERT_TRUE(x.allFinite());
    ASSERT_NEAR(x.sum(), 1.0, 1e-14);
  }
}
