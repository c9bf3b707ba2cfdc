#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mutforest {

/// Integer vector (children counts per type, or a signed walk increment).
using LatticeVector = std::vector<int>;

/// Finite-support measure on Z^d. Entries are kept sorted lexicographically,
/// with duplicate points merged and zero masses dropped.
class SparsePmf {
 public:
  enum class Support { nonnegative, signed_values };

  SparsePmf() = default;
  explicit SparsePmf(int dim);

  static SparsePmf delta(int dim, std::span<const int> at);
  static SparsePmf zero_delta(int dim);
  static SparsePmf from_entries(int dim, std::vector<std::pair<LatticeVector, double>> entries,
                                Support support = Support::nonnegative);

  int dim() const { return dim_; }
  std::size_t size() const { return probs_.size(); }
  bool empty() const { return probs_.empty(); }

  std::span<const int> point(std::size_t idx) const {
    return {coords_.data() + idx * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double prob(std::size_t idx) const { return probs_[idx]; }
  std::span<const double> probs() const { return probs_; }

  /// Mass at k (0 when k is outside the support).
  double operator()(std::span<const int> k) const;
  double at(std::initializer_list<int> k) const;

  double mass() const;
  double mean(int axis) const;
  /// Largest value of coordinate `axis` over the support.
  int max_coord(int axis) const;
  int min_coord(int axis) const;

  SparsePmf marginal(std::span<const int> axes) const;
  SparsePmf shifted(std::span<const int> offset) const;
  SparsePmf scaled(double factor) const;

  std::vector<std::pair<LatticeVector, double>> entries() const;

  friend bool operator==(const SparsePmf&, const SparsePmf&) = default;

 private:
  friend class PmfAccumulator;
  int dim_ = 0;
  std::vector<int> coords_;
  std::vector<double> probs_;
};

/// Collects (point, mass) contributions and produces a SparsePmf. Uses a
/// dense box when the bounding box is small and a hash table otherwise.
class PmfAccumulator {
 public:
  PmfAccumulator(int dim, LatticeVector lo, LatticeVector hi);
  void add(std::span<const int> k, double p);
  SparsePmf finish();

 private:
  std::uint64_t index_of(std::span<const int> k) const;
  int dim_;
  LatticeVector lo_;
  std::vector<std::uint64_t> stride_;
  std::vector<std::uint64_t> extent_;
  std::uint64_t volume_ = 0;
  bool dense_ = true;
  std::vector<double> dense_values_;
  std::vector<std::pair<std::uint64_t, double>> sparse_values_;
};

/// Per-coordinate upper bound applied to convolution results. Points beyond
/// the cap are dropped and their mass reported.
struct SupportCap {
  LatticeVector max_coord;
};

struct CappedPmf {
  SparsePmf pmf;
  double dropped_mass = 0.0;
};

SparsePmf convolve(const SparsePmf& p, const SparsePmf& q);
CappedPmf convolve(const SparsePmf& p, const SparsePmf& q, const SupportCap& cap);

/// n-fold convolution by binary exponentiation.
CappedPmf convolve_power(const SparsePmf& p, std::int64_t n, const std::optional<SupportCap>& cap = {});

/// Progeny distribution nu = (nu_1, ..., nu_d); nu_i is the law of the
/// child-count vector of a type-i individual. Types are 0-based here.
class ProgenyLaw {
 public:
  ProgenyLaw() = default;
  /// Validates dimensions, nonnegative support and unit mass (tolerance 1e-9).
  explicit ProgenyLaw(std::vector<SparsePmf> laws, double mass_tolerance = 1e-9);

  int dim() const { return static_cast<int>(laws_.size()); }
  const SparsePmf& law(int type) const { return laws_.at(static_cast<std::size_t>(type)); }
  const std::vector<SparsePmf>& laws() const { return laws_; }

  /// True when some type has P(exactly one child) < 1.
  bool non_singular() const;
  /// True when nu_i(e_i) = 0 for every i (required by the continuous-time engines).
  bool no_single_self_child() const;

 private:
  std::vector<SparsePmf> laws_;
};

/// Step law of the coding walk of type i: nu_i shifted by -e_i.
struct SignedStepPmf {
  int center = 0;
  SparsePmf pmf;
};

SignedStepPmf shifted_step_law(const ProgenyLaw& law, int type);

enum class Criticality { subcritical, critical, supercritical };
std::string to_string(Criticality c);

inline constexpr double kCriticalityTolerance = 1e-9;

Criticality classify_spectral_radius(double rho);

struct PerronData {
  double rho = 0.0;
  Eigen::VectorXd right;  // u, u.1 = 1
  Eigen::VectorXd left;   // v, u.v = 1
  int iterations = 0;
};

/// Boolean support-pattern analysis of a nonnegative matrix.
bool is_irreducible(const Eigen::MatrixXd& m);
bool is_primitive(const Eigen::MatrixXd& m);

/// Dominant eigenpair of a primitive nonnegative matrix by power iteration.
/// Throws std::runtime_error on non-convergence.
PerronData perron_eigenpair(const Eigen::MatrixXd& m, double tolerance = 1e-14,
                            int max_iterations = 1'000'000);

/// Dominant eigenpair of an essentially nonnegative matrix (nonnegative off
/// the diagonal), via iteration on m + cI.
PerronData dominant_eigenpair_shifted(const Eigen::MatrixXd& m, double tolerance = 1e-14,
                                      int max_iterations = 1'000'000);

struct MeanReport {
  Eigen::MatrixXd mean_matrix;
  bool irreducible = false;
  bool primitive = false;
  double spectral_radius = 0.0;
  std::optional<Eigen::VectorXd> right_eigvec;
  std::optional<Eigen::VectorXd> left_eigvec;
  Criticality criticality = Criticality::subcritical;
  std::vector<bool> diag_subunit;
  bool xlogx_ok = true;
  bool non_singular = true;
};

Eigen::MatrixXd mean_matrix(const ProgenyLaw& law);
MeanReport mean_report(const ProgenyLaw& law);

enum class MutationCondition { A, B, neither };
std::string to_string(MutationCondition c);

/// (A_i): m_ii <= 1; (B_i): m_ii > 1 and no cross-type births.
MutationCondition condition_ab(const ProgenyLaw& law, int type);

/// Extinction probabilities q_i = P_{e_i}(extinction), the smallest
/// fixed point of the offspring generating system, by monotone iteration from 0.
Eigen::VectorXd extinction_probabilities(const ProgenyLaw& law, double tolerance = 1e-13,
                                         int max_iterations = 10'000'000);

}  // namespace mutforest
