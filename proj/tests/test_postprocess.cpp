#include <gtest/gtest.h>

#include <vector>

#include "test_util.hpp"

using namespace mixmemb;
using testutil::random_data;
using testutil::random_state;

namespace {

ChainStore chain_of(std::vector<ModelState> draws, Index P) {
  ChainStore c;
  c.dims = ModelDims{draws[0].K(), draws[0].M()};
  c.N = draws[0].N();
  c.P = P;
  for (std::size_t t = 0; t < draws.size(); ++t) c.push(t + 1, draws[t], 0.0);
  return c;
}

}  // namespace

TEST(Rescale, TwoRowExampleBecomesIdentity) {
  ModelState st = ModelState::zeros(2, 1, ModelDims{2, 1});
  st.z << 0.8, 0.2, 0.3, 0.7;
  const auto r = membership_rescale(st);
  EXPECT_LT((r.z_t - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(r.T, st.z);
}

TEST(Rescale, PureRowsGiveIdentityTransform) {
  auto rng = testutil::rng_for(90);
  ModelState st = random_state(5, 3, 2, 2, rng);
  st.z.row(1) << 1.0, 0.0;
  st.z.row(3) << 0.0, 1.0;
  const auto r = membership_rescale(st);
  EXPECT_EQ(r.T, MatrixXd::Identity(2, 2));
  EXPECT_LT((r.z_t - st.z).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((r.nu_t - st.nu).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rescale, PreservesLikelihoodAndSimplex) {
  auto rng = testutil::rng_for(91);
  for (int rep = 0; rep < 25; ++rep) {
    const ModelState st = random_state(12, 4, 2, 2, rng);
    const Dataset ds = random_data(12, 4, rng);
    const ModelState out = apply_rescale(st, membership_rescale(st));
    EXPECT_NEAR(loglik_conditional(ds, out), loglik_conditional(ds, st), 1e-8);
    EXPECT_NEAR(loglik_marginal(ds, out), loglik_marginal(ds, st), 1e-8);
    for (Index i = 0; i < 12; ++i) EXPECT_NEAR(out.z.row(i).sum(), 1.0, 1e-10);
    for (Index k = 0; k < 2; ++k) EXPECT_NEAR(out.z.col(k).maxCoeff(), 1.0, 1e-10);
  }
}

TEST(Rescale, SingularTransformIsReported) {
  ModelState st = ModelState::zeros(3, 1, ModelDims{2, 1});
  st.z << 0.5, 0.5, 0.2, 0.3, 0.1, 0.1;  // rows need not sum to 1 here; both maxima on row 0
  EXPECT_THROW(membership_rescale(st), NumericalError);
  ModelState k3 = ModelState::zeros(3, 1, ModelDims{3, 1});
  EXPECT_THROW(membership_rescale(k3), DomainError);
}

TEST(Relabel, IdentityWhenNoSwitching) {
  auto rng = testutil::rng_for(92);
  ModelState base = random_state(4, 2, 3, 1, rng);
  base.nu.row(0).setConstant(-5);
  base.nu.row(1).setConstant(0);
  base.nu.row(2).setConstant(5);
  std::vector<ModelState> d(6, base);
  const auto r = relabel_with_perms(chain_of(d, 2));
  for (const auto& p : r.perms) EXPECT_EQ(p, (std::vector<Index>{0, 1, 2}));
}

TEST(Relabel, UndoesSyntheticFlips) {
  auto rng = testutil::rng_for(93);
  ModelState base = random_state(6, 3, 2, 2, rng);
  base.nu.row(0).setConstant(-3);
  base.nu.row(1).setConstant(3);
  const Dataset ds = random_data(6, 3, rng);
  std::vector<ModelState> d;
  for (int t = 0; t < 20; ++t) {
    ModelState s = base;
    s.nu.array() += 0.1 * dist::normal(rng);
    d.push_back(t % 2 ? permute_features(s, {1, 0}) : s);
  }
  const ChainStore raw = chain_of(d, 3);
  const ChainStore fixed = relabel(raw);
  double var_raw = 0.0, var_fixed = 0.0, m_raw = 0.0, m_fixed = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    m_raw += raw.draws[t].nu(0, 0) / 20;
    m_fixed += fixed.draws[t].nu(0, 0) / 20;
  }
  for (std::size_t t = 0; t < 20; ++t) {
    var_raw += std::pow(raw.draws[t].nu(0, 0) - m_raw, 2);
    var_fixed += std::pow(fixed.draws[t].nu(0, 0) - m_fixed, 2);
    EXPECT_NEAR(loglik_conditional(ds, fixed.draws[t]), loglik_conditional(ds, raw.draws[t]), 1e-10);
  }
  EXPECT_LT(var_fixed, var_raw);
}

TEST(Relabel, FlipTwiceIsIdentity) {
  auto rng = testutil::rng_for(94);
  const ModelState st = random_state(3, 2, 2, 2, rng);
  const ModelState back = permute_features(permute_features(st, {1, 0}), {1, 0});
  EXPECT_EQ(back.nu, st.nu);
  EXPECT_EQ(back.z, st.z);
  EXPECT_EQ(back.phi[1], st.phi[1]);
  EXPECT_EQ(back.shrink.delta, st.shrink.delta);
}

TEST(Relabel, PermutationKeepsPriorAndLikelihood) {
  auto rng = testutil::rng_for(95);
  const ModelState st = random_state(5, 2, 3, 2, rng);
  const Dataset ds = random_data(5, 2, rng);
  PriorConfig cfg;
  cfg.c = VectorXd::Constant(3, 1.5);
  const ModelState p = permute_features(st, {2, 0, 1});
  EXPECT_NEAR(loglik_conditional(ds, p), loglik_conditional(ds, st), 1e-10);
  EXPECT_NEAR(log_prior(p, cfg).value, log_prior(st, cfg).value, 1e-10);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile_sorted({1.0, 2.0, 4.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile_sorted({1.0, 2.0, 4.0}, 0.75), 3.0);
  EXPECT_DOUBLE_EQ(quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted({7.0}, 0.975), 7.0);
}

TEST(Summarize, SingleDrawIsDegenerate) {
  auto rng = testutil::rng_for(96);
  const ModelState st = random_state(4, 2, 2, 1, rng);
  const FitReport r = summarize(chain_of({st}, 2));
  EXPECT_EQ(r.nu.median, st.nu);
  EXPECT_EQ(r.nu.lower, st.nu);
  EXPECT_EQ(r.z.upper, st.z);
  EXPECT_DOUBLE_EQ(r.sigma2.median(0, 0), st.sigma2);
}

TEST(Summarize, ThreeDrawScalarMedian) {
  auto rng = testutil::rng_for(97);
  ModelState st = random_state(2, 1, 2, 1, rng);
  std::vector<ModelState> d(3, st);
  d[0].sigma2 = 1.0;
  d[1].sigma2 = 4.0;
  d[2].sigma2 = 2.0;
  const FitReport r = summarize(chain_of(d, 1));
  EXPECT_DOUBLE_EQ(r.sigma2.median(0, 0), 2.0);
}

TEST(Summarize, IntervalsAreOrdered) {
  auto rng = testutil::rng_for(98);
  std::vector<ModelState> d;
  for (int t = 0; t < 30; ++t) d.push_back(random_state(5, 3, 2, 2, rng));
  const FitReport r = summarize(chain_of(d, 3));
  EXPECT_TRUE((r.nu.lower.array() <= r.nu.median.array()).all());
  EXPECT_TRUE((r.nu.median.array() <= r.nu.upper.array()).all());
  EXPECT_TRUE((r.covariance.lower.array() <= r.covariance.upper.array()).all());
  EXPECT_TRUE((r.eigenvalues.lower.array() <= r.eigenvalues.upper.array()).all());
  EXPECT_EQ(r.covariance.median.rows(), 6);
  EXPECT_LT((r.covariance.median - r.covariance.median.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Summarize, PermutationEquivariant) {
  auto rng = testutil::rng_for(99);
  std::vector<ModelState> d, flipped;
  for (int t = 0; t < 11; ++t) {
    d.push_back(random_state(4, 2, 2, 1, rng));
    flipped.push_back(permute_features(d.back(), {1, 0}));
  }
  const FitReport a = summarize(chain_of(d, 2));
  const FitReport b = summarize(chain_of(flipped, 2));
  EXPECT_EQ(a.nu.median.row(0), b.nu.median.row(1));
  EXPECT_EQ(a.z.median.col(1), b.z.median.col(0));
  EXPECT_NEAR((a.eigenvalues.median - b.eigenvalues.median).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Summarize, EmptyChainRejected) {
  ChainStore c;
  EXPECT_THROW(summarize(c), DomainError);
}
