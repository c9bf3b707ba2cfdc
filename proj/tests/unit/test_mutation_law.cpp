#include <gtest/gtest.h>

#include <random>

#include "laws.hpp"
#include "mutforest/mutation_law.hpp"
#include "mutforest/rational_pmf.hpp"
#include "oracles.hpp"

namespace mutforest {
namespace {

std::vector<RationalPmf> diamond_exact() {
  RationalPmf a(2), b(2);
  a.add({0, 0}, parse_decimal("0.5"));
  a.add({2, 0}, parse_decimal("0.3"));
  a.add({1, 1}, parse_decimal("0.2"));
  b.add({0, 0}, parse_decimal("0.6"));
  b.add({0, 2}, parse_decimal("0.3"));
  b.add({1, 0}, parse_decimal("0.1"));
  return {a, b};
}

TEST(Kemperman, FirstMassesOfDiamond) {
  const auto law = testing_laws::diamond();
  EXPECT_NEAR(kemperman_mass(law, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(kemperman_mass(law, 0, 2), 0.1, 1e-15);
  EXPECT_NEAR(kemperman_mass(law, 0, 3), 0.095, 1e-15);
  EXPECT_THROW(kemperman_mass(law, 0, 0), std::invalid_argument);
}

TEST(MutationProgeny, NoMutantMassMatchesFixedPoint) {
  auto mu = mutation_progeny(testing_laws::diamond(), 0);
  const double q = oracle::quadratic_fixed_point(0.3, 0.5);
  EXPECT_NEAR(q, 0.6125741132772069, 1e-15);
  EXPECT_NEAR(mu.pmf.at({0, 0}), q, 1e-8);
  EXPECT_NEAR(mu.pmf.at({0, 0}), oracle::cluster_without_mutants(testing_laws::diamond(), 0), 1e-8);
  EXPECT_NEAR(mu.pmf.mass() + mu.truncation_error + mu.support_dropped_mass, 1.0, 1e-10);
  EXPECT_LE(mu.truncation_error, 1e-8);
  EXPECT_EQ(mu.support_dropped_mass, 0.0);
  EXPECT_EQ(mu.mode, SeriesMode::series);
}

TEST(MutationProgeny, SupportedOffTheOwnAxis) {
  auto mu = mutation_progeny(testing_laws::diamond(), 1);
  for (std::size_t e = 0; e < mu.pmf.size(); ++e) EXPECT_EQ(mu.pmf.point(e)[1], 0);
  EXPECT_NEAR(mu.pmf.at({0, 0}), oracle::cluster_without_mutants(testing_laws::diamond(), 1), 1e-8);
}

TEST(MutationProgeny, PartialSumsMatchExactRationalSeries) {
  const auto law = testing_laws::diamond();
  const auto exact = diamond_exact();
  for (int terms : {1, 2, 3, 4, 8}) {
    MutationProgenyOptions opts;
    opts.max_terms = terms;
    for (int type = 0; type < 2; ++type) {
      auto mu = mutation_progeny(law, type, opts);
      auto ref = mutation_series_exact(exact, type, terms);
      ASSERT_EQ(mu.terms, terms);
      EXPECT_EQ(mu.pmf.size(), ref.size()) << "terms=" << terms;
      for (const auto& [k, p] : ref.entries()) EXPECT_NEAR(mu.pmf(k), static_cast<double>(p), 1e-15);
      EXPECT_NEAR(mu.pmf.mass() + mu.truncation_error, 1.0, 1e-14);
    }
  }
}

TEST(MutationProgeny, SecondTermOfMutantAtom) {
  // mu_1(0,1): term n = 2 is 0.1, n = 4 is 0.045
  const auto exact = diamond_exact();
  auto two = mutation_series_exact(exact, 0, 2) ;
  auto one = mutation_series_exact(exact, 0, 1);
  EXPECT_EQ(two({0, 1}) - one({0, 1}), parse_decimal("0.1"));
  auto four = mutation_series_exact(exact, 0, 4);
  auto three = mutation_series_exact(exact, 0, 3);
  EXPECT_EQ(four({0, 1}) - three({0, 1}), parse_decimal("0.045"));
}

TEST(MutationProgeny, BracketedByKilledWalk) {
  // The killed walk up to n steps is a lower bound; adding its surviving mass
  // gives an upper bound on every atom.
  const auto law = testing_laws::diamond();
  auto mu = mutation_progeny(law, 0);
  auto kw = oracle::killed_walk_mutation(law, 0, 80);
  ASSERT_LT(kw.alive, 0.05);
  for (const auto& [k, p] : kw.mu) {
    EXPECT_GE(mu.pmf(k), p - 1e-12);
    EXPECT_LE(mu.pmf(k), p + kw.alive + 1e-12);
  }
  EXPECT_NEAR(mu.pmf.at({0, 1}), 0.19371, 5e-5);
}

TEST(MutationProgenyProperty, RandomSubcriticalLawsAgreeWithKilledWalk) {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 8) {
    auto law = oracle::random_law(rng, 2, 4, 2);
    if (condition_ab(law, 0) != MutationCondition::A) continue;
    if (mean_matrix(law)(0, 0) > 0.9) continue;
    auto mu = mutation_progeny(law, 0);
    auto kw = oracle::killed_walk_mutation(law, 0, 60);
    for (const auto& [k, p] : kw.mu) {
      EXPECT_GE(mu.pmf(k), p - mu.truncation_error - 1e-12);  // the series may stop before step 60
      EXPECT_LE(mu.pmf(k), p + kw.alive + 1e-12);
    }
    EXPECT_NEAR(mu.pmf.at({0, 0}), oracle::cluster_without_mutants(law, 0), 1e-7);
    ++checked;
  }
}

TEST(MutationProgeny, CriticalBlockStillSumsToOne) {
  // m_11 = 1: clusters are finite but heavy tailed
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{0, 0}, 0.4}, {{2, 0}, 0.5}, {{0, 1}, 0.1}}),
                         SparsePmf::from_entries(2, {{{0, 0}, 1.0}})});
  MutationProgenyOptions opts;
  opts.eps = 0.05;
  auto mu = mutation_progeny(law, 0, opts);
  EXPECT_NEAR(mu.pmf.mass() + mu.truncation_error, 1.0, 1e-10);
  EXPECT_LE(mu.truncation_error, 0.05);
  EXPECT_GT(mu.terms, 100);  // P(cluster size > n) decays like n^{-1/2}
}

TEST(MutationProgeny, CapReportsDroppedMass) {
  MutationProgenyOptions opts;
  opts.cap = SupportCap{{0, 2}};
  auto mu = mutation_progeny(testing_laws::diamond(), 0, opts);
  EXPECT_LE(mu.pmf.max_coord(1), 2);
  EXPECT_GT(mu.support_dropped_mass, 0.0);
  EXPECT_NEAR(mu.pmf.mass() + mu.support_dropped_mass + mu.truncation_error, 1.0, 1e-10);
}

TEST(MutationProgeny, DiracUnderConditionB) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{2, 0}, 0.8}, {{0, 0}, 0.2}}),
                         SparsePmf::from_entries(2, {{{1, 0}, 0.5}, {{0, 0}, 0.5}})});
  auto mu = mutation_progeny(law, 0);
  EXPECT_EQ(mu.mode, SeriesMode::dirac);
  EXPECT_DOUBLE_EQ(mu.pmf.at({0, 0}), 1.0);
}

TEST(MutationProgeny, NeitherConditionThrows) {
  EXPECT_THROW(mutation_progeny(testing_laws::triangle(), 0), std::domain_error);
}

TEST(MutationMean, DiamondEntries) {
  const auto r = mean_report(testing_laws::diamond());
  const auto rb = mutation_mean_report(r);
  EXPECT_FALSE(rb.any_infinite);
  EXPECT_NEAR(rb.finite_values(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(rb.finite_values(1, 0), 0.25, 1e-15);
  EXPECT_EQ(rb.finite_values(0, 0), 0.0);
  EXPECT_LT(mean_identity_residual(r, rb), 1e-15);
  Eigen::Matrix2d mb = rb.finite_values;
  EXPECT_NEAR(*rb.spectral_radius, oracle::eigenvalues_2x2(mb).first, 1e-12);
  EXPECT_EQ(rb.criticality, Criticality::subcritical);
}

TEST(MutationMean, InfiniteEntryForCriticalBlock) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{0, 0}, 0.4}, {{2, 0}, 0.5}, {{0, 1}, 0.1}}),
                         SparsePmf::from_entries(2, {{{0, 0}, 0.5}, {{1, 0}, 0.5}})});
  const auto rb = mutation_mean_report(mean_report(law));
  EXPECT_TRUE(rb.is_infinite(0, 1));
  EXPECT_FALSE(rb.is_infinite(1, 0));
  EXPECT_TRUE(rb.any_infinite);
  EXPECT_FALSE(rb.spectral_radius.has_value());
  EXPECT_EQ(rb.moment_order[0], 0);
}

TEST(MutationMean, CriticalityTransfer) {
  auto crit = mutation_mean_report(mean_report(testing_laws::critical()));
  ASSERT_TRUE(crit.spectral_radius);
  EXPECT_NEAR(*crit.spectral_radius, 1.0, 1e-12);
  EXPECT_EQ(crit.criticality, Criticality::critical);
}

TEST(EigenRelation, HoldsWithConstantDiagonal) {
  auto law = ProgenyLaw({SparsePmf::from_entries(2, {{{0, 0}, 0.5}, {{1, 0}, 0.3}, {{0, 1}, 0.2}}),
                         SparsePmf::from_entries(2, {{{0, 0}, 0.4}, {{0, 1}, 0.3}, {{1, 0}, 0.3}})});
  const auto r = mean_report(law);
  auto rep = eigen_relation_check(r, mutation_mean_report(r));
  EXPECT_TRUE(rep.applicable);
  EXPECT_TRUE(rep.holds()) << rep.right_error << " " << rep.left_error;
}

TEST(EigenRelation, FailsOffCriticalityWithUnequalDiagonal) {
  const auto r = mean_report(testing_laws::diamond());
  auto rep = eigen_relation_check(r, mutation_mean_report(r));
  EXPECT_TRUE(rep.applicable);
  EXPECT_FALSE(rep.right_holds);
  EXPECT_NEAR(rep.rho_bar, 0.5, 1e-12);
}

TEST(EigenRelation, HoldsAtCriticality) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    auto law = oracle::random_law(rng, 3, 5, 2);
    const double rho = mean_report(law).spectral_radius;
    if (rho <= 1.0) continue;
    auto crit = oracle::thinned(law, 1.0 - 1.0 / rho);
    const auto r = mean_report(crit);
    auto rb = mutation_mean_report(r);
    if (rb.any_infinite || !rb.primitive) continue;
    auto check = eigen_relation_check(r, rb, 1e-7);
    EXPECT_TRUE(check.holds()) << check.right_error << " " << check.left_error;
  }
}

TEST(IntegerDeterminant, MatchesFloatingPoint) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(-9, 9);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + rep % 6;
    std::vector<std::vector<std::int64_t>> a(static_cast<std::size_t>(n), std::vector<std::int64_t>(static_cast<std::size_t>(n)));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = static_cast<double>(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = u(rng));
    }
    EXPECT_EQ(integer_determinant(a), std::llround(m.determinant()));
  }
  EXPECT_EQ(integer_determinant({{0, 1}, {1, 0}}), -1);
  EXPECT_EQ(integer_determinant({{1, 2}, {2, 4}}), 0);
  EXPECT_THROW(integer_determinant({{1, 2}}), std::invalid_argument);
  const std::int64_t big = std::int64_t{1} << 40;
  EXPECT_THROW(integer_determinant({{big, 1, 0}, {1, big, 1}, {0, 1, big}}), std::overflow_error);
}

TEST(JointMutationLaw, SingleRootWithoutMutants) {
  auto mu = mutation_law(testing_laws::diamond());
  auto q = JointMutationQuery::from_cross({1, 0}, {{0, 0}, {0, 0}});
  auto t = joint_mutation_pmf(mu, q);
  EXPECT_EQ(t.determinant, 1);
  EXPECT_NEAR(t.probability, oracle::quadratic_fixed_point(0.3, 0.5), 1e-8);
}

TEST(JointMutationLaw, OneMutantGeneration) {
  // x = e_1, one type-2 child of the root cluster which has no children:
  // P = det([[1,-1],[0,1]]) / 1 * mu_1(0,1) * mu_2(0,0)
  auto mu = mutation_law(testing_laws::diamond());
  auto q = JointMutationQuery::from_cross({1, 0}, {{0, 1}, {0, 0}});
  auto t = joint_mutation_pmf(mu, q);
  EXPECT_EQ(t.determinant, 1);
  EXPECT_NEAR(t.probability, mu.pmf(0).at({0, 1}) * mu.pmf(1).at({0, 0}), 1e-15);
}

TEST(JointMutationLaw, RejectsInconsistentQuery) {
  auto mu = mutation_law(testing_laws::diamond());
  JointMutationQuery q{{1, 0}, {1, 2}, {{0, 1}, {0, 0}}};
  auto err = check_query(q);
  ASSERT_TRUE(err.has_value());
  EXPECT_NE(err->find("n_2"), std::string::npos);
  EXPECT_THROW(joint_mutation_pmf(mu, q), std::invalid_argument);
  JointMutationQuery neg{{-1, 0}, {-1, 0}, {{0, 0}, {0, 0}}};
  EXPECT_TRUE(check_query(neg).has_value());
}

TEST(JointMutationLaw, MassOverSmallAtomsBelowOne) {
  auto mu = mutation_law(testing_laws::diamond());
  double total = 0.0;
  for (int a = 0; a <= 6; ++a) {
    for (int b = 0; b <= 6; ++b) {
      auto t = joint_mutation_pmf(mu, JointMutationQuery::from_cross({1, 1}, {{0, a}, {b, 0}}));
      EXPECT_GE(t.probability, 0.0);
      total += t.probability;
    }
  }
  EXPECT_LE(total, 1.0 + 1e-12);
  EXPECT_GT(total, 0.5);
}

}  // namespace
}  // namespace mutforest
