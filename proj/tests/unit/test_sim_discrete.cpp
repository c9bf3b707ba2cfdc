#include <gtest/gtest.h>

#include "laws.hpp"
#include "mutforest/mutation_law.hpp"
#include "mutforest/sim_discrete.hpp"
#include "oracles.hpp"

namespace mutforest {
namespace {

TEST(ProgenySampler, FrequenciesMatchLaw) {
  const auto law = testing_laws::diamond();
  ProgenySampler s(law);
  auto rng = make_rng(1, 0, Stream::misc);
  std::map<LatticeVector, std::int64_t> counts;
  const int n = 200000;
  for (int r = 0; r < n; ++r) {
    auto k = s.draw(1, rng);
    ++counts[LatticeVector(k.begin(), k.end())];
  }
  const auto& p = law.law(1);
  for (std::size_t e = 0; e < p.size(); ++e) {
    const auto k = p.point(e);
    const double f = static_cast<double>(counts[LatticeVector(k.begin(), k.end())]) / n;
    EXPECT_NEAR(f, p.prob(e), 5.0 * std::sqrt(p.prob(e) * (1 - p.prob(e)) / n));
  }
}

TEST(SampleForest, ValidatesConfig) {
  SampleConfig bad{testing_laws::diamond(), {1}, 100};
  auto rng = make_rng(1, 0, Stream::forest);
  EXPECT_THROW(sample_forest(bad, rng), std::invalid_argument);
  SampleConfig neg{testing_laws::diamond(), {-1, 2}, 100};
  EXPECT_THROW(sample_forest(neg, rng), std::invalid_argument);
}

TEST(SampleForest, CensorsAtBudget) {
  SampleConfig cfg{testing_laws::triangle(), {5, 5}, 500};
  std::int64_t censored = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    auto rng = make_rng(2, r, Stream::forest);
    auto s = sample_forest(cfg, rng);
    EXPECT_LE(static_cast<std::int64_t>(s.forest.size()), 500);
    censored += s.censored;
  }
  EXPECT_GT(censored, 10);
}

TEST(SampleForest, MeanTotalSizeMatchesFundamentalMatrix) {
  const auto law = testing_laws::diamond();
  const Eigen::MatrixXd f = fundamental_matrix(mean_matrix(law));
  EXPECT_NEAR(f.row(0).sum(), 10.0, 1e-12);
  SampleConfig cfg{law, {1, 0}, 10'000'000};
  Moments m;
  for (std::uint64_t r = 0; r < 40000; ++r) {
    auto rng = make_rng(3, r, Stream::forest);
    m.add(static_cast<double>(sample_forest(cfg, rng).forest.size()));
  }
  EXPECT_NEAR(m.mean(), 10.0, 4.0 * m.se());
}

TEST(WalkCensus, TerminationSystemHolds) {
  SampleConfig cfg{testing_laws::diamond(), {3, 2}, 10'000'000};
  for (std::uint64_t r = 0; r < 500; ++r) {
    auto rng = make_rng(4, r, Stream::walk);
    auto w = sample_census_walk(cfg, rng);
    ASSERT_FALSE(w.censored);
    for (int j = 0; j < 2; ++j) {
      std::int64_t sum = cfg.roots[static_cast<std::size_t>(j)];
      for (int i = 0; i < 2; ++i) sum += w.walk_value(i, j);
      EXPECT_EQ(sum, 0);
      EXPECT_EQ(w.census.mutations(j), -cfg.roots[static_cast<std::size_t>(j)] - w.walk_value(j, j));
      EXPECT_GE(w.census.self_births(j), 0);
    }
  }
}

TEST(WalkCensus, MeansAgreeWithForestEngine) {
  SampleConfig cfg{testing_laws::diamond(), {1, 1}, 10'000'000};
  Moments a, b;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    auto r1 = make_rng(5, r, Stream::walk);
    auto r2 = make_rng(5, r, Stream::forest);
    a.add(static_cast<double>(sample_census_walk(cfg, r1).census.mutations(1)));
    b.add(static_cast<double>(census(sample_forest(cfg, r2).forest).mutations(1)));
  }
  EXPECT_NEAR(a.mean(), b.mean(), 4.0 * std::hypot(a.se(), b.se()));
}

TEST(WalkCensus, CensorsAtBudget) {
  SampleConfig cfg{testing_laws::triangle(), {3, 3}, 1000};
  auto rng = make_rng(6, 0, Stream::walk);
  int censored = 0;
  for (int r = 0; r < 10; ++r) censored += sample_census_walk(cfg, rng).censored;
  EXPECT_GT(censored, 0);
}

TEST(EmpiricalMutationChildren, CloseToMutationLaw) {
  SampleConfig cfg{testing_laws::diamond(), {1, 0}, 10'000'000};
  auto counts = empirical_mutation_children(cfg, 0, 10000, 7, 1);
  EXPECT_EQ(counts.censored_forests, 0);
  auto mu = mutation_progeny(cfg.law, 0);
  EXPECT_LT(total_variation(mu.pmf, counts.counts), 0.03);
}

TEST(EmpiricalMutationChildren, IndependentOfWorkerCount) {
  SampleConfig cfg{testing_laws::diamond(), {1, 1}, 10'000'000};
  auto a = empirical_mutation_children(cfg, 1, 500, 8, 1);
  auto b = empirical_mutation_children(cfg, 1, 500, 8, 4);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.vertices, b.vertices);
}

TEST(TotalVariation, Basics) {
  auto p = SparsePmf::from_entries(1, {{{0}, 0.5}, {{1}, 0.5}});
  EXPECT_NEAR(total_variation(p, {{{0}, 5}, {{1}, 5}}), 0.0, 1e-15);
  EXPECT_NEAR(total_variation(p, {{{0}, 10}}), 0.5, 1e-15);
  EXPECT_NEAR(total_variation(p, {{{2}, 10}}), 1.0, 1e-15);
  EXPECT_THROW(total_variation(p, {}), std::invalid_argument);
}

TEST(DirectionAsymptotics, TargetsOfDiamond) {
  DirectionOptions opts;
  opts.replicates = 50;
  auto e = direction_asymptotics(testing_laws::diamond(), {1, 0}, {20}, opts);
  ASSERT_EQ(e.c.size(), 2u);
  EXPECT_NEAR(e.c[0], 0.4 / 0.06, 1e-12);
  EXPECT_NEAR(e.mutation_target_stated[0], 1.0 + 0.2 * 0.4 / 0.06, 1e-12);
  EXPECT_NEAR(e.mutation_target_pathwise[0], -1.0 + 0.2 * 0.4 / 0.06, 1e-12);
  EXPECT_NEAR(e.ratio_target[0], 0.2, 1e-15);
  ASSERT_EQ(e.rows.size(), 2u);
  EXPECT_EQ(e.rows[0].total_per_n.count(), 50);
  EXPECT_FALSE(e.censoring_exceeded);
}

TEST(DirectionAsymptotics, PathwiseTargetAtModerateScale) {
  DirectionOptions opts;
  opts.replicates = 400;
  auto e = direction_asymptotics(testing_laws::diamond(), {1, 0}, {100}, opts);
  const auto& row = e.rows[0];
  EXPECT_NEAR(row.total_per_n.mean(), e.c[0], 4.0 * row.total_per_n.se());
  EXPECT_NEAR(row.mutations_per_n.mean(), e.mutation_target_pathwise[0], 4.0 * row.mutations_per_n.se());
}

TEST(DirectionAsymptotics, EnginesAgree) {
  DirectionOptions opts;
  opts.replicates = 300;
  opts.engine = CensusEngine::forest;
  auto f = direction_asymptotics(testing_laws::diamond(), {1, 1}, {10}, opts);
  opts.engine = CensusEngine::walk;
  auto w = direction_asymptotics(testing_laws::diamond(), {1, 1}, {10}, opts);
  for (int i = 0; i < 2; ++i) {
    const auto& a = f.rows[static_cast<std::size_t>(i)].total_per_n;
    const auto& b = w.rows[static_cast<std::size_t>(i)].total_per_n;
    EXPECT_NEAR(a.mean(), b.mean(), 4.0 * std::hypot(a.se(), b.se()));
  }
}

TEST(DirectionAsymptotics, RejectsBadInput) {
  DirectionOptions opts;
  opts.replicates = 1;
  EXPECT_THROW(direction_asymptotics(testing_laws::triangle(), {1, 0}, {10}, opts), std::domain_error);
  EXPECT_THROW(direction_asymptotics(testing_laws::diamond(), {0, 0}, {10}, opts), std::invalid_argument);
  EXPECT_THROW(direction_asymptotics(testing_laws::diamond(), {1}, {10}, opts), std::invalid_argument);
  EXPECT_THROW(direction_asymptotics(testing_laws::diamond(), {1, 0}, {0}, opts), std::invalid_argument);
}

TEST(DirectionAsymptotics, CriticalHasNoLinearTargets) {
  DirectionOptions opts;
  opts.replicates = 20;
  auto e = direction_asymptotics(testing_laws::critical(), {0, 1}, {5}, opts);
  EXPECT_EQ(e.criticality, Criticality::critical);
  EXPECT_TRUE(e.c.empty());
  EXPECT_NEAR(e.ratio_target[0], 0.5, 1e-15);
}

}  // namespace
}  // namespace mutforest
