#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "test_util.hpp"

using namespace mixmemb;
using testutil::random_data;
using testutil::random_state;

namespace {

ChainStore chain_of(const std::vector<ModelState>& draws, const Dataset& ds) {
  ChainStore c;
  c.dims = ModelDims{draws[0].K(), draws[0].M()};
  c.N = ds.N();
  c.P = ds.P();
  for (std::size_t t = 0; t < draws.size(); ++t) c.push(t + 1, draws[t], loglik_conditional(ds, draws[t]));
  return c;
}

}  // namespace

TEST(ParamCount, WorkedExamples) {
  EXPECT_EQ(param_count(200, 20, 3, 4), 1966);
  EXPECT_EQ(param_count(1, 1, 1, 1), 12);
}

TEST(ParamCount, MonotoneInEachArgument) {
  for (std::int64_t N : {1, 7, 50})
    for (std::int64_t P : {1, 4})
      for (std::int64_t K : {1, 3})
        for (std::int64_t M : {1, 2}) {
          const auto d = param_count(N, P, K, M);
          EXPECT_LE(d, param_count(N + 1, P, K, M));
          EXPECT_LE(d, param_count(N, P + 1, K, M));
          EXPECT_LE(d, param_count(N, P, K + 1, M));
          EXPECT_LE(d, param_count(N, P, K, M + 1));
        }
}

TEST(Criteria, FormulaIdentities) {
  const double ll = -1234.5;
  const std::int64_t d = 77;
  const Index N = 150;
  const double b = bic_from(ll, d, N), a = aic_from(ll, d);
  EXPECT_DOUBLE_EQ(b, 2 * ll - d * std::log(150.0));
  EXPECT_DOUBLE_EQ(a, -2 * ll + 2 * d);
  // BIC is on the larger-is-better scale, AIC on the smaller-is-better one.
  EXPECT_NEAR(a + b, 2.0 * d - d * std::log(150.0), 1e-9);
  EXPECT_NEAR(bic_from(ll, d, N) - bic_from(ll, 2 * d, N), d * std::log(150.0), 1e-9);
}

TEST(Criteria, SingleDrawPluginIsThatDraw) {
  auto rng = testutil::rng_for(100);
  const Dataset ds = random_data(7, 3, rng);
  const ModelState st = random_state(7, 3, 2, 2, rng);
  const ChainStore c = chain_of({st}, ds);
  EXPECT_NEAR(plugin_loglik(c, ds), loglik_conditional(ds, st), 1e-10);
  EXPECT_NEAR(bic(c, ds), bic_from(loglik_conditional(ds, st), param_count(7, 3, 2, 2), 7), 1e-9);
}

TEST(Criteria, PluginUsesMeanOfMeansNotMeanOfParameters) {
  auto rng = testutil::rng_for(101);
  const Dataset ds = random_data(6, 2, rng);
  ModelState a = random_state(6, 2, 2, 1, rng);
  ModelState b = permute_features(a, {1, 0});
  b.sigma2 = a.sigma2;
  // Label switching leaves every observation's mean alone, so the plug-in
  // likelihood of the two-draw chain equals the single-draw one.
  EXPECT_NEAR(plugin_loglik(chain_of({a, b}, ds), ds), loglik_conditional(ds, a), 1e-10);
}

TEST(Criteria, EmptyChainRejected) {
  auto rng = testutil::rng_for(102);
  const Dataset ds = random_data(3, 2, rng);
  ChainStore c;
  EXPECT_THROW(bic(c, ds), DomainError);
  EXPECT_THROW(dic(c, ds), DomainError);
}

TEST(Dic, ConstantChainIsMinusTwoLogDensity) {
  auto rng = testutil::rng_for(103);
  const Dataset ds = random_data(8, 3, rng);
  const ModelState st = random_state(8, 3, 2, 2, rng);
  const ChainStore c = chain_of({st, st, st, st}, ds);
  EXPECT_NEAR(dic(c, ds), -2.0 * loglik_marginal(ds, st), 1e-9);
  EXPECT_NEAR(dic(c, ds, DicDensity::conditional), -2.0 * loglik_conditional(ds, st), 1e-9);
}

TEST(Dic, TwoDrawOracle) {
  auto rng = testutil::rng_for(104);
  const Dataset ds = random_data(5, 2, rng);
  const ModelState a = random_state(5, 2, 2, 1, rng), b = random_state(5, 2, 2, 1, rng);
  double expected_ll = 0.0, fhat = 0.0;
  for (Index i = 0; i < 5; ++i) {
    const VectorXd yi = ds.y().row(i).transpose();
    auto dens = [&](const ModelState& s) {
      const VectorXd mean = s.nu.transpose() * s.z.row(i).transpose();
      return testutil::dense_mvn_logpdf(yi, mean, marginal_covariance(s, i));
    };
    const double la = dens(a), lb = dens(b);
    expected_ll += 0.5 * (la + lb);
    fhat += std::log(0.5 * (std::exp(la) + std::exp(lb)));
  }
  EXPECT_NEAR(dic(chain_of({a, b}, ds), ds), -4.0 * expected_ll + 2.0 * fhat, 1e-8);
}

TEST(Dic, InvariantToDrawOrderAndRepeatable) {
  auto rng = testutil::rng_for(105);
  const Dataset ds = random_data(9, 3, rng);
  std::vector<ModelState> d;
  for (int t = 0; t < 13; ++t) d.push_back(random_state(9, 3, 2, 2, rng));
  const double x = dic(chain_of(d, ds), ds);
  EXPECT_EQ(x, dic(chain_of(d, ds), ds));
  std::reverse(d.begin(), d.end());
  std::swap(d[2], d[7]);
  EXPECT_EQ(x, dic(chain_of(d, ds), ds));
}

TEST(Elbow, SortedByK) {
  std::vector<IcReport> r(3);
  r[0].k = 4, r[0].mean_loglik = -10;
  r[1].k = 2, r[1].mean_loglik = -30;
  r[2].k = 3, r[2].mean_loglik = -12;
  const auto e = elbow_data(r);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].k, 2);
  EXPECT_EQ(e[2].k, 4);
  EXPECT_EQ(e[1].mean_loglik, -12);
}

TEST(Choice, EachCriterionUsesItsOwnDirection) {
  std::vector<IcReport> r(3);
  for (int j = 0; j < 3; ++j) r[static_cast<std::size_t>(j)].k = j + 2;
  r[0].bic = -50, r[1].bic = -40, r[2].bic = -45;
  r[0].aic = 10, r[1].aic = 12, r[2].aic = 8;
  r[0].dic = 3, r[1].dic = 1, r[2].dic = 2;
  const IcChoice c = choose_k(r);
  EXPECT_EQ(c.bic_k, 3);
  EXPECT_EQ(c.aic_k, 4);
  EXPECT_EQ(c.dic_k, 3);
  EXPECT_THROW(choose_k({}), DomainError);
}

TEST(Report, FieldsAgreeWithFreeFunctions) {
  auto rng = testutil::rng_for(106);
  const Dataset ds = random_data(6, 2, rng);
  std::vector<ModelState> d;
  for (int t = 0; t < 4; ++t) d.push_back(random_state(6, 2, 2, 1, rng));
  const ChainStore c = chain_of(d, ds);
  const IcReport r = ic_report(c, ds);
  EXPECT_EQ(r.k, 2);
  EXPECT_EQ(r.d, param_count(6, 2, 2, 1));
  EXPECT_EQ(r.bic, bic(c, ds));
  EXPECT_EQ(r.aic, aic(c, ds));
  EXPECT_EQ(r.dic, dic(c, ds));
  EXPECT_NEAR(r.mean_loglik, (c.loglik[0] + c.loglik[1] + c.loglik[2] + c.loglik[3]) / 4, 1e-10);
}
