#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mutforest/lattice_pmf.hpp"

namespace mutforest {

/// (1/n) P(X^{ii}_n = -1) for the coding walk of type i, from the n-fold
/// convolution of the i-th marginal of the step law. This is the probability
/// that a type-i cluster has exactly n vertices.
double kemperman_mass(const ProgenyLaw& law, int type, std::int64_t n);

struct MutationProgenyOptions {
  double eps = 1e-8;
  /// Hard limit on series terms; reaching it leaves truncation_error > eps.
  std::int64_t max_terms = 200'000;
  /// Optional cap on the non-i coordinates of walk states. Mass beyond the
  /// cap is dropped and reported in support_dropped_mass.
  std::optional<SupportCap> cap;
  /// Upper bound on the dense walk-state box (number of cells).
  std::size_t max_cells = std::size_t{1} << 25;
};

enum class SeriesMode { series, dirac };

/// One component mu_i of the mutation-forest progeny law.
struct MutationProgeny {
  int type = 0;
  SeriesMode mode = SeriesMode::series;
  SparsePmf pmf;                   // supported on {k : k_i = 0}
  double truncation_error = 0.0;   // first-passage mass not yet assigned
  double support_dropped_mass = 0.0;
  std::int64_t terms = 0;
};

/// Partial sums of mu_i(k) = sum_n n^{-1} nu_i^{*n}(k + (n-1) e_i), stopping
/// once the accumulated cluster-size mass reaches 1 - eps. Under (B_i) the
/// result is the Dirac mass at 0. Throws std::domain_error when neither (A_i)
/// nor (B_i) holds.
MutationProgeny mutation_progeny(const ProgenyLaw& law, int type, const MutationProgenyOptions& opts = {});

struct MutationLaw {
  int dim = 0;
  std::vector<MutationProgeny> types;

  const SparsePmf& pmf(int type) const { return types.at(static_cast<std::size_t>(type)).pmf; }
  /// The law as a ProgenyLaw-like vector (masses may fall short of 1 by the truncation error).
  std::vector<SparsePmf> laws() const;
};

MutationLaw mutation_law(const ProgenyLaw& law, const MutationProgenyOptions& opts = {});

/// Mean matrix of the mutation forest. Entries that are infinite (m_ii >= 1
/// and m_ij > 0) are tagged in `infinite` and hold 0 in `finite_values`.
struct MutationMeanReport {
  Eigen::MatrixXd finite_values;
  std::vector<std::vector<bool>> infinite;
  bool any_infinite = false;
  bool irreducible = false;
  bool primitive = false;
  /// Present when every entry is finite.
  std::optional<double> spectral_radius;
  Criticality criticality = Criticality::subcritical;
  std::optional<Eigen::VectorXd> right_eigvec;
  std::optional<Eigen::VectorXd> left_eigvec;
  /// 1 when mu_i has first moments (m_ii < 1), 0 otherwise.
  std::vector<int> moment_order;

  bool is_infinite(int i, int j) const { return infinite[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
};

MutationMeanReport mutation_mean_report(const MeanReport& r);

/// Largest deviation of (I - diag(m_ii)) Mbar + diag(m_ii) from M over finite entries.
double mean_identity_residual(const MeanReport& r, const MutationMeanReport& rbar);

struct EigenRelationReport {
  bool applicable = false;  // M primitive, Mbar finite and irreducible
  double rho = 0.0;
  double rho_bar = 0.0;
  double right_error = 0.0;  // max |ubar - u|
  double left_error = 0.0;   // max |vbar - c v (I - diag m_ii)|, c fitted
  bool right_holds = false;
  bool left_holds = false;
  bool holds() const { return applicable && right_holds && left_holds; }
};

EigenRelationReport eigen_relation_check(const MeanReport& r, const MutationMeanReport& rbar, double tolerance = 1e-8);

/// Root vector x, per-type totals n_i = x_i + M_i and cross counts k_ij
/// (i != j; the diagonal of `cross` is ignored).
struct JointMutationQuery {
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> n;
  std::vector<std::vector<std::int64_t>> cross;

  /// Builds n from x and the cross counts.
  static JointMutationQuery from_cross(std::vector<std::int64_t> x, std::vector<std::vector<std::int64_t>> cross);
};

/// Empty when consistent, else the first violated constraint as text.
std::optional<std::string> check_query(const JointMutationQuery& q);

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
/// Throws std::overflow_error if an intermediate leaves the 64-bit range.
std::int64_t integer_determinant(std::vector<std::vector<std::int64_t>> a);

struct JointMutationTerm {
  double probability = 0.0;
  std::int64_t determinant = 0;
  double combinatorial_factor = 0.0;  // det(K) / prod nbar_i
};

/// P_x(N_i = n_i, M_ij = k_ij for all i != j) in the mutation forest.
/// Throws std::invalid_argument naming the violated constraint.
JointMutationTerm joint_mutation_pmf(const MutationLaw& mu, const JointMutationQuery& q);

}  // namespace mutforest
