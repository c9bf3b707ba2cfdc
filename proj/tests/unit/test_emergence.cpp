#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mutforest/emergence.hpp"
#include "mutforest/parallel.hpp"

namespace mutforest {
namespace {

TEST(ChainModel, BinaryChainRates) {
  auto m = make_binary_chain({{1.0, 2.0}, {3.0, 0.5}});
  EXPECT_EQ(m.dim(), 3);
  EXPECT_TRUE(m.binary_fission);
  EXPECT_TRUE(m.rates_additive);
  EXPECT_NEAR(m.self_rate(0), 1.0, 1e-15);
  EXPECT_NEAR(m.mutation_rate(0), 2.0, 1e-15);
  EXPECT_NEAR(m.self_rate(1), 3.0, 1e-15);
  EXPECT_NEAR(m.mutation_rate(1), 0.5, 1e-15);
  EXPECT_NEAR(m.rates[0], 3.0, 1e-15);
}

TEST(ChainModel, RejectsBackMutation) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{1, 1}, 1.0}}), SparsePmf::from_entries(2, {{{1, 1}, 1.0}})});
  try {
    validate_chain(law, Rates{{1.0, 1.0}});
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("type 2"), std::string::npos) << e.what();
  }
}

TEST(ChainModel, SingleMutantConditionRejectsDoubleMutant) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{1, 2}, 0.5}, {{2, 0}, 0.5}}), SparsePmf::from_entries(2, {{{0, 2}, 1.0}})});
  EXPECT_NO_THROW(validate_chain(law, Rates{{1.0, 1.0}}, ChainCondition::general));
  EXPECT_THROW(validate_chain(law, Rates{{1.0, 1.0}}, ChainCondition::single_mutant), std::invalid_argument);
}

TEST(ChainModel, RejectsMissingMutation) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{2, 0}, 1.0}}), SparsePmf::from_entries(2, {{{0, 2}, 1.0}})});
  EXPECT_THROW(validate_chain(law, Rates{{1.0, 1.0}}), std::invalid_argument);
}

TEST(ChainModel, MutationRateFromLaw) {
  // lambda_{1,2} = lambda_1 * P(k_2 > 0)
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{1, 2}, 0.25}, {{2, 0}, 0.5}, {{1, 1}, 0.25}}),
                         SparsePmf::from_entries(2, {{{0, 2}, 1.0}})});
  auto m = validate_chain(law, Rates{{4.0, 1.0}});
  EXPECT_NEAR(m.mutation_rate(0), 2.0, 1e-15);
  EXPECT_FALSE(m.binary_fission);
}

TEST(Theta, ExponentialWithoutSelfBirths) {
  // With lambda_{k-1,k-1} = 0 the path never rises, so theta is Exp(lambda_mut).
  auto m = make_binary_chain({{0.0, 2.0}});
  Moments th;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    auto rng = make_rng(1, r, Stream::theta);
    th.add(sample_theta(m, 1, rng).theta);
  }
  EXPECT_NEAR(th.mean(), 0.5, 4.0 * th.se());
}

TEST(Theta, MeanMatchesClosedFormAndQuadrature) {
  auto m = make_binary_chain({{1.0, 2.0}});
  double err = 0.0;
  const double quad = expected_theta_quadrature(2.0, 1.0, &err);
  EXPECT_NEAR(quad, std::log(1.5), 1e-10);
  Moments th;
  for (std::uint64_t r = 0; r < 40000; ++r) {
    auto rng = make_rng(2, r, Stream::theta);
    th.add(sample_theta(m, 1, rng).theta);
  }
  EXPECT_NEAR(th.mean(), quad, 4.0 * th.se());
}

TEST(Tau, DirectEqualsThetaForFirstMutation) {
  // tau_2 from one type-1 cell is theta_2 in law; compare means.
  auto m = make_binary_chain({{1.0, 1.0}});
  Moments tau, th;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    auto r1 = make_rng(3, r, Stream::tau_direct);
    auto r2 = make_rng(3, r, Stream::theta);
    tau.add(sample_tau_direct(m, 1, r1).value());
    th.add(sample_theta(m, 1, r2).theta);
  }
  EXPECT_NEAR(tau.mean(), std::numbers::ln2, 4.0 * tau.se());
  EXPECT_NEAR(th.mean(), std::numbers::ln2, 4.0 * th.se());
}

TEST(Tau, CensorsAtHorizon) {
  auto m = make_binary_chain({{1.0, 0.001}});
  TauOptions opts;
  opts.horizon = 0.01;
  auto rng = make_rng(4, 0, Stream::tau_direct);
  auto s = sample_tau_direct(m, 1, rng, opts);
  EXPECT_TRUE(s.censored);
  EXPECT_DOUBLE_EQ(s.value(), 0.01);
}

TEST(Tau, RejectsBadTarget) {
  auto m = make_binary_chain({{1.0, 1.0}});
  auto rng = make_rng(4, 0, Stream::tau_direct);
  EXPECT_THROW(sample_tau_direct(m, 0, rng), std::invalid_argument);
  EXPECT_THROW(sample_tau_direct(m, 2, rng), std::invalid_argument);
}

TEST(Representation, RealTimeClockAgreesWithIntegral) {
  auto m = make_binary_chain({{1.0, 1.0}, {2.0, 0.5}, {1.0, 3.0}});
  for (std::uint64_t r = 0; r < 500; ++r) {
    auto rng = make_rng(5, r, Stream::tau_representation);
    auto s = sample_tau_representation(m, 3, rng);
    for (int k = 1; k <= 3; ++k) {
      EXPECT_NEAR(s.tau[static_cast<std::size_t>(k)], s.real_time_tau[static_cast<std::size_t>(k)],
                  1e-9 * (1.0 + s.real_time_tau[static_cast<std::size_t>(k)]));
      EXPECT_GE(s.tau[static_cast<std::size_t>(k)], s.tau[static_cast<std::size_t>(k - 1)]);
    }
    // first increment equals theta_2 exactly (Z^{(1)} = 1 + X^{11})
    EXPECT_NEAR(s.increment[1], s.theta[1], 1e-12 * (1.0 + s.theta[1]));
    // the immigrant count is >= 1, so each increment is bounded by theta
    for (int k = 2; k <= 3; ++k) EXPECT_LE(s.increment[static_cast<std::size_t>(k)], s.theta[static_cast<std::size_t>(k)] + 1e-12);
  }
}

TEST(Representation, MatchesDirectInMean) {
  auto m = make_binary_chain({{1.0, 1.0}, {1.0, 2.0}});
  Moments a, b;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    auto r1 = make_rng(6, r, Stream::tau_direct);
    auto r2 = make_rng(6, r, Stream::tau_representation);
    a.add(sample_tau_direct(m, 2, r1).value());
    b.add(sample_tau_representation(m, 2, r2).tau.back());
  }
  EXPECT_NEAR(a.mean(), b.mean(), 4.0 * std::hypot(a.se(), b.se()));
}

TEST(Bound, HoldsOnSmallChain) {
  auto m = make_binary_chain({{1.0, 1.0}, {1.0, 1.0}});
  McOptions opts;
  opts.replicates = 3000;
  auto rep = bound_check(m, 2, {0.25, 0.5, 1.0, 2.0, 4.0}, opts);
  EXPECT_EQ(rep.censored, 0);
  EXPECT_TRUE(rep.all_hold());
}

TEST(Ladder, RejectsChangingFirstRate) {
  std::vector<ChainModel> ladder{make_binary_chain({{1.0, 1.0}, {1.0, 10.0}}), make_binary_chain({{1.0, 2.0}, {1.0, 100.0}})};
  McOptions opts;
  opts.replicates = 1;
  EXPECT_THROW(ratio_convergence(ladder, 2, opts), std::invalid_argument);
  std::vector<ChainModel> up{make_binary_chain({{1.0, 1.0}, {1.0, 100.0}}), make_binary_chain({{1.0, 1.0}, {1.0, 10.0}})};
  EXPECT_THROW(ratio_convergence(up, 2, opts), std::invalid_argument);
}

TEST(Ladder, SmallRunIsWellFormed) {
  std::vector<ChainModel> ladder{make_binary_chain({{1.0, 1.0}, {1.0, 10.0}}), make_binary_chain({{1.0, 1.0}, {1.0, 100.0}})};
  McOptions opts;
  opts.replicates = 500;
  auto rep = ratio_convergence(ladder, 2, opts);
  ASSERT_EQ(rep.rungs.size(), 2u);
  EXPECT_NEAR(rep.rungs[0].ratios[0], 0.1, 1e-15);
  EXPECT_NEAR(rep.rungs[1].sum_inverse, 1.01, 1e-12);
  EXPECT_GE(rep.rungs[0].p_far_10, rep.rungs[0].p_far_5 - 1.0);
  EXPECT_LE(rep.rungs[0].p_far_10, rep.rungs[0].p_far_5);
}

TEST(Laplace, UnitAtZeroAndMonteCarlo) {
  auto m = make_binary_chain({{1.0, 1.0}});
  auto zero = laplace_tau(m, 1, 0.0);
  EXPECT_TRUE(zero.converged);
  EXPECT_NEAR(zero.value, 1.0, 1e-12);
  auto one = laplace_tau(m, 1, 1.0);
  EXPECT_NEAR(one.value, std::numbers::pi / 2.0 - 1.0, 1e-12);
  EXPECT_NEAR(one.printed_value, std::numbers::pi / 6.0, 1e-12);
  Moments mc;
  for (std::uint64_t r = 0; r < 40000; ++r) {
    auto rng = make_rng(7, r, Stream::tau_direct);
    mc.add(std::exp(-sample_tau_direct(m, 1, rng).value()));
  }
  EXPECT_NEAR(mc.mean(), one.value, 4.0 * mc.se());
  EXPECT_GT(std::abs(mc.mean() - one.printed_value), 10.0 * mc.se());
}

TEST(Laplace, RequiresBinaryFission) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{1, 2}, 0.5}, {{2, 0}, 0.5}}), SparsePmf::from_entries(2, {{{0, 2}, 1.0}})});
  auto m = validate_chain(law, Rates{{1.0, 1.0}});
  EXPECT_THROW(laplace_tau(m, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(laplace_tau(make_binary_chain({{1.0, 1.0}}), 1, -1.0), std::invalid_argument);
}

TEST(Expectation, ClosedFormsAgainstQuadrature) {
  auto b11 = expected_tau(make_binary_chain({{1.0, 1.0}}), 1);
  EXPECT_NEAR(b11.oracle_value, std::numbers::ln2, 1e-9);
  EXPECT_TRUE(b11.derived_supported);
  EXPECT_TRUE(b11.printed_supported);  // the two forms coincide when lambda_mut = 1
  auto b12 = expected_tau(make_binary_chain({{1.0, 2.0}}), 1);
  EXPECT_NEAR(b12.oracle_value, std::log(1.5), 1e-9);
  EXPECT_TRUE(b12.derived_supported);
  EXPECT_FALSE(b12.printed_supported);
  EXPECT_NEAR(b12.printed_value, std::log(1.5) / 2.0, 1e-15);
}

TEST(Determinism, WorkerCountDoesNotChangeResults) {
  auto m = make_binary_chain({{1.0, 1.0}, {1.0, 1.0}});
  McOptions a, b;
  a.replicates = b.replicates = 400;
  b.workers = 3;
  auto ra = bound_check(m, 2, {0.5, 1.0}, a);
  auto rb = bound_check(m, 2, {0.5, 1.0}, b);
  EXPECT_EQ(ra.tau.survival, rb.tau.survival);
  EXPECT_EQ(ra.theta_sum.survival, rb.theta_sum.survival);
}

}  // namespace
}  // namespace mutforest
