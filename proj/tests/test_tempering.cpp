#include <gtest/gtest.h>

#include <vector>

#include "test_util.hpp"

using namespace mixmemb;
using testutil::random_data;
using testutil::random_state;

TEST(Ladder, GeometricEndpointsAndMonotone) {
  const auto s = TemperSchedule::geometric(10, 8.0, 0.1);
  ASSERT_EQ(s.betas.size(), 11u);
  EXPECT_EQ(s.betas.front(), 1.0);
  EXPECT_EQ(s.betas.back(), 8.0);
  for (std::size_t h = 1; h < s.betas.size(); ++h) {
    EXPECT_GT(s.betas[h], s.betas[h - 1]);
    EXPECT_NEAR(s.betas[h] / s.betas[h - 1], std::pow(8.0, 0.1), 1e-12);
  }
  EXPECT_NO_THROW(s.validate());
}

TEST(Ladder, ValidationRejectsBadLadders) {
  auto s = TemperSchedule::geometric(3, 4.0, 0.1);
  s.mix_prob = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = TemperSchedule::geometric(3, 4.0, 0.1);
  std::swap(s.betas[1], s.betas[2]);
  EXPECT_THROW(s.validate(), ConfigError);
  s = TemperSchedule::geometric(3, 0.5, 0.1);
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(LogRatio, ConstantLadderIsZero) {
  const auto s = TemperSchedule::constant(4, 1.0);
  EXPECT_EQ(tempered_log_ratio(s.betas, {-3, 5, 2, -7, 1, 4, 9, -2, 0}), 0.0);
}

TEST(LogRatio, SingleRungByHand) {
  // One rung: up from Theta_0 at beta 1 to beta_1, one move at beta_1, back down.
  // log A = (b1 - 1) L0 + (1 - b1) L2.
  const std::vector<double> betas{1.0, 3.0};
  EXPECT_DOUBLE_EQ(tempered_log_ratio(betas, {-10.0, -4.0, -6.0}), 2.0 * -10.0 - 2.0 * -6.0);
}

TEST(LogRatio, TwoRungsByHand) {
  const std::vector<double> b{1.0, 2.0, 5.0};
  const std::vector<double> L{-1.0, -2.0, -3.0, -4.0, -5.0};
  // Up: (b1-b0) L0 + (b2-b1) L1. Down: j=3 -> level 2: (b1-b2) L3; j=4 -> level 1: (b0-b1) L4.
  const double expected = 1.0 * -1.0 + 3.0 * -2.0 + (-3.0) * -4.0 + (-1.0) * -5.0;
  EXPECT_DOUBLE_EQ(tempered_log_ratio(b, L), expected);
}

TEST(LogRatio, UnchangedLikelihoodGivesZero) {
  // If every visited state has the same likelihood the ratio telescopes to 0.
  const auto s = TemperSchedule::geometric(6, 8.0, 0.1);
  const std::vector<double> L(13, -42.5);
  EXPECT_NEAR(tempered_log_ratio(s.betas, L), 0.0, 1e-12);
}

TEST(Transition, ConstantLadderAlwaysAccepts) {
  auto rng = testutil::rng_for(70);
  const Dataset ds = random_data(6, 2, rng);
  ModelState st = random_state(6, 2, 2, 1, rng);
  PriorConfig cfg;
  const auto sched = TemperSchedule::constant(3, 1.0);
  SweepPlan plan;
  plan.seed = 5;
  for (std::uint64_t t = 1; t <= 50; ++t) {
    auto r = tempered_transition(ds, st, cfg, sched, plan, t);
    ASSERT_TRUE(r.accepted);
    ASSERT_EQ(r.log_accept, 0.0);
    st = r.state;
  }
}

TEST(Transition, RejectionReturnsInputUnchanged) {
  auto rng = testutil::rng_for(71);
  const Dataset ds = random_data(15, 3, rng);
  const ModelState st = random_state(15, 3, 2, 1, rng);
  PriorConfig cfg;
  const auto sched = TemperSchedule::geometric(4, 1e4, 1.0);
  SweepPlan plan;
  plan.seed = 11;
  int rejected = 0;
  for (std::uint64_t t = 1; t <= 40; ++t) {
    auto r = tempered_transition(ds, st, cfg, sched, plan, t);
    if (!r.accepted) {
      ++rejected;
      EXPECT_EQ(r.state.nu, st.nu);
      EXPECT_EQ(r.state.z, st.z);
      EXPECT_EQ(r.state.sigma2, st.sigma2);
      EXPECT_EQ(r.state.chi, st.chi);
    }
  }
  EXPECT_GT(rejected, 0);
}

TEST(Transition, Deterministic) {
  auto rng = testutil::rng_for(72);
  const Dataset ds = random_data(5, 2, rng);
  const ModelState st = random_state(5, 2, 2, 2, rng);
  PriorConfig cfg;
  const auto sched = TemperSchedule::geometric(3, 4.0, 1.0);
  SweepPlan p1, p2;
  p1.seed = p2.seed = 3;
  auto a = tempered_transition(ds, st, cfg, sched, p1, 9);
  auto b = tempered_transition(ds, st, cfg, sched, p2, 9);
  EXPECT_EQ(a.log_accept, b.log_accept);
  EXPECT_EQ(a.state.nu, b.state.nu);
}

TEST(Chain, StoresEveryThinthDraw) {
  auto rng = testutil::rng_for(73);
  const Dataset ds = random_data(8, 2, rng);
  PriorConfig cfg;
  const auto chain = run_chain(ds, cfg, ModelDims{2, 1}, TemperSchedule::geometric(2, 2.0, 0.3), 53, 5, 17);
  ASSERT_EQ(chain.size(), 10u);
  for (std::size_t j = 0; j < chain.size(); ++j) {
    EXPECT_EQ(chain.iteration[j], 5 * (j + 1));
    EXPECT_NEAR(chain.loglik[j], loglik_conditional(ds, chain.draws[j]), 1e-9);
  }
  EXPECT_GT(chain.tempered_proposed, 0u);
  EXPECT_LE(chain.tempered_accepted, chain.tempered_proposed);
}

TEST(Chain, SameSeedSameChain) {
  auto rng = testutil::rng_for(74);
  const Dataset ds = random_data(8, 3, rng);
  PriorConfig cfg;
  const auto sched = TemperSchedule::geometric(2, 3.0, 0.2);
  const auto a = run_chain(ds, cfg, ModelDims{2, 2}, sched, 40, 4, 99);
  const auto b = run_chain(ds, cfg, ModelDims{2, 2}, sched, 40, 4, 99);
  const auto c = run_chain(ds, cfg, ModelDims{2, 2}, sched, 40, 4, 100);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_NE(a.loglik, c.loglik);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a.draws[j].phi[1], b.draws[j].phi[1]);
}

TEST(Chain, BadArgumentsRejected) {
  auto rng = testutil::rng_for(75);
  const Dataset ds = random_data(4, 2, rng);
  PriorConfig cfg;
  EXPECT_THROW(run_chain(ds, cfg, ModelDims{2, 1}, TemperSchedule::none(), 10, 0, 1), ConfigError);
  EXPECT_THROW(run_chain(ds, cfg, ModelDims{0, 1}, TemperSchedule::none(), 10, 1, 1), ConfigError);
}
