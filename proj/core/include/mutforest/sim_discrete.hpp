#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mutforest/forest.hpp"
#include "mutforest/lattice_pmf.hpp"
#include "mutforest/rng.hpp"
#include "mutforest/stats.hpp"

namespace mutforest {

/// Draws child-count vectors from nu_i.
class ProgenySampler {
 public:
  explicit ProgenySampler(const ProgenyLaw& law);
  int dim() const { return dim_; }
  /// Index into support(type); the vector itself is point(type, index).
  std::size_t draw_index(int type, Rng& rng) const;
  std::span<const int> point(int type, std::size_t index) const { return laws_[static_cast<std::size_t>(type)].point(index); }
  std::span<const int> draw(int type, Rng& rng) const { return point(type, draw_index(type, rng)); }

 private:
  int dim_ = 0;
  std::vector<SparsePmf> laws_;
  std::vector<std::vector<double>> cumulative_;
};

struct SampleConfig {
  ProgenyLaw law;
  std::vector<std::int64_t> roots;  // x_i trees with type-i roots
  std::int64_t vertex_budget = 10'000'000;

  void validate() const;
};

struct ForestSample {
  TypedForest forest;  // the part built before the budget ran out when censored
  bool censored = false;
};

/// Tree-by-tree, generation-by-generation sampling; children sorted by type.
ForestSample sample_forest(const SampleConfig& cfg, Rng& rng);
ForestSample sample_forest(const SampleConfig& cfg, const ProgenySampler& sampler, Rng& rng);

struct WalkCensus {
  MutationCensus census;
  /// Final walk values X^{i,j}(N_i), row-major d x d.
  std::vector<std::int64_t> walk_values;
  bool censored = false;
  int relaxation_rounds = 0;

  std::int64_t walk_value(int i, int j) const { return walk_values[static_cast<std::size_t>(i * census.dim() + j)]; }
};

/// Samples the d coding walks lazily and finds the smallest solution of the
/// termination system by monotone relaxation from 0.
WalkCensus sample_census_walk(const SampleConfig& cfg, Rng& rng);
WalkCensus sample_census_walk(const SampleConfig& cfg, const ProgenySampler& sampler, Rng& rng);

/// Counts of (child-count vector) over type-`type` vertices of mutation
/// forests of `replicates` sampled forests. Censored forests are skipped.
struct MutationChildCounts {
  std::map<LatticeVector, std::int64_t> counts;
  std::int64_t vertices = 0;
  std::int64_t censored_forests = 0;
};

MutationChildCounts empirical_mutation_children(const SampleConfig& cfg, int type, std::int64_t replicates,
                                                std::uint64_t seed, int workers);

/// Total-variation distance between a pmf and empirical counts.
double total_variation(const SparsePmf& pmf, const std::map<LatticeVector, std::int64_t>& counts);

enum class CensusEngine { forest, walk };

struct DirectionRow {
  std::int64_t scale = 0;
  int type = 0;
  Moments total_per_n;      // N_i(nw)/n
  Moments mutations_per_n;  // M_i(nw)/n
  Moments mutation_ratio;   // M_i(nw)/N_i(nw) over replicates with N_i > 0
  std::int64_t replicates = 0;
  std::int64_t censored = 0;
};

struct DirectionExperiment {
  std::vector<std::int64_t> direction;
  std::vector<std::int64_t> scales;
  Criticality criticality = Criticality::subcritical;
  /// c_i(w) = sum_k w_k (I - M)^{-1}_{ki}; subcritical only.
  std::vector<double> c;
  /// Targets for M_i(nw)/n: the stated w_i + (1 - m_ii) c_i(w) and the value
  /// -w_i + (1 - m_ii) c_i(w) implied by M_i = -x_i - X^{ii}(N_i).
  std::vector<double> mutation_target_stated;
  std::vector<double> mutation_target_pathwise;
  std::vector<double> ratio_target;  // 1 - m_ii
  std::vector<DirectionRow> rows;
  bool censoring_exceeded = false;  // more than 0.1% of replicates censored at some scale
};

struct DirectionOptions {
  std::int64_t replicates = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::int64_t vertex_budget = 10'000'000;
  CensusEngine engine = CensusEngine::walk;
};

/// Throws std::domain_error for supercritical or non-primitive laws.
DirectionExperiment direction_asymptotics(const ProgenyLaw& law, const std::vector<std::int64_t>& w,
                                          const std::vector<std::int64_t>& scales, const DirectionOptions& opts);

/// (I - M)^{-1} for a subcritical mean matrix.
Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& m);

}  // namespace mutforest
