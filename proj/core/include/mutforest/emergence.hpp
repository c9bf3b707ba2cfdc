#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mutforest/lattice_pmf.hpp"
#include "mutforest/rng.hpp"
#include "mutforest/sim_continuous.hpp"
#include "mutforest/stats.hpp"

namespace mutforest {

/// Which set of chain conditions to enforce: general litters, or litters
/// with at most one child of the next type.
enum class ChainCondition { general, single_mutant };

/// Non-reversible mutation chain 1 -> 2 -> ... -> d (types 0-based here).
struct ChainModel {
  ProgenyLaw law;
  Rates rates;
  ChainCondition condition = ChainCondition::general;
  /// lambda_{i,j} = lambda_i (1 - sum_{k : k_j = 0} nu~_i(k)).
  Eigen::MatrixXd lambda_ij;
  /// Each type i < d splits into (2 e_i) or (e_i + e_{i+1}).
  bool binary_fission = false;
  /// lambda_i = lambda_{i,i} + lambda_{i,i+1} for every i < d.
  bool rates_additive = false;

  int dim() const { return law.dim(); }
  double self_rate(int i) const { return lambda_ij(i, i); }
  double mutation_rate(int i) const { return lambda_ij(i, i + 1); }
};

/// Checks the chain conditions and computes the derived rates. Throws
/// std::invalid_argument naming the violated clause.
ChainModel validate_chain(const ProgenyLaw& law, const Rates& rates, ChainCondition condition = ChainCondition::general);

/// Binary-fission chain from pairs (lambda_{i,i}, lambda_{i,i+1}), i = 1..d-1;
/// type d splits in two at rate `last_rate`.
ChainModel make_binary_chain(const std::vector<std::pair<double, double>>& pairs, double last_rate = 1.0);

struct EmergenceSample {
  /// tau[k] for k = 0..target (0-based types): tau[0] = 0 when started from type 1.
  std::vector<double> tau;
  /// Z^{(target-1)} right after tau[target].
  std::int64_t previous_type_count = 0;
  bool censored = false;
  double horizon = 0.0;

  double value() const { return tau.back(); }
};

struct TauOptions {
  /// Default horizon is 50 / lambda_{1,2} when unset.
  std::optional<double> horizon;
  std::int64_t population_cap = 10'000'000;
  int start_type = 0;
};

/// First time a type-`target` individual exists, by event-driven simulation
/// of types start..target-1 started from one individual of type `start_type`.
EmergenceSample sample_tau_direct(const ChainModel& model, int target, Rng& rng, const TauOptions& opts = {});

/// Time-change route started from one type-1 individual: the emergence
/// increments are integrals over the internal clocks of the compound Poisson
/// paths. Also returns the coupled theta_k on the same paths.
struct RepresentationSample {
  std::vector<double> tau;        // tau[k], k = 0..target; tau[0] = 0
  std::vector<double> increment;  // H_k = integral over [0, gamma_k] of 1/Z^{(k-1)}, index k
  std::vector<double> theta;      // theta_k on the same paths, index k
  std::vector<double> real_time_tau;  // tau[k] read off the real-time event clock
  std::vector<bool> single_birth;     // A_k: exactly one type-(k-1) birth before tau_k, index k >= 2
  std::int64_t previous_type_count = 0;

  double sum_theta() const;
};

RepresentationSample sample_tau_representation(const ChainModel& model, int target, Rng& rng);

struct ThetaSample {
  double theta = 0.0;
  double gamma = 0.0;             // first mutation in internal time
  std::int64_t endpoint = 0;      // 1 + X^{k-1,k-1} at gamma
};

/// theta_k = integral over [0, gamma_k] of ds / (X^{k-1,k-1}_s + 1); k >= 1 (0-based).
ThetaSample sample_theta(const ChainModel& model, int k, Rng& rng);

struct BoundReport {
  int target = 0;
  SurvivalCurve tau;        // P_{e_1}(tau_i > t)
  SurvivalCurve theta_sum;  // P(sum_k theta_k > t)
  std::vector<bool> holds;  // tau <= theta_sum + 3 joint SE
  std::int64_t censored = 0;
  bool all_hold() const;
};

struct McOptions {
  std::int64_t replicates = 10'000;
  std::uint64_t seed = 1;
  int workers = 1;
};

BoundReport bound_check(const ChainModel& model, int target, const std::vector<double>& grid, const McOptions& opts,
                        const TauOptions& tau_opts = {});

struct RungReport {
  std::vector<double> ratios;  // lambda_{k-2,k-1} / lambda_{k-1,k}, k = 3..target
  std::int64_t replicates = 0;
  double p_far_10 = 0.0;  // P(|tau/sum theta - 1| > 0.1)
  double p_far_5 = 0.0;   // P(|tau/sum theta - 1| > 0.05)
  double se_far_10 = 0.0;
  double se_far_5 = 0.0;
  std::vector<double> p_single_birth;  // P(A_k), k = 3..target
  std::vector<double> se_single_birth;
  Moments tau;
  Moments theta_sum;
  /// Candidates for E_{e_1} tau_i.
  double sum_expected_theta = 0.0;      // sum_k of the closed form (1/l_kk) ln(l_k / l_{k,k+1})
  double sum_inverse_square = 0.0;      // sum_k lambda_{k-1,k}^{-2}
  double sum_inverse = 0.0;             // sum_k lambda_{k-1,k}^{-1}
};

struct LadderReport {
  int target = 0;
  std::vector<RungReport> rungs;
  bool far_monotone = false;          // P(|ratio-1| > 0.1) nonincreasing within 2 SE
  bool single_birth_monotone = false; // P(A_k) nondecreasing within 2 SE
};

/// Throws std::invalid_argument unless lambda_{1,2} is fixed and the ratios
/// decrease along the ladder.
LadderReport ratio_convergence(const std::vector<ChainModel>& ladder, int target, const McOptions& opts);

struct LaplaceResult {
  double value = 0.0;          // sum with factors prod_{j=1}^{n+1} (lambda + alpha / j)
  double printed_value = 0.0;  // factors (lambda + alpha) prod_{j=1}^{n} (lambda + alpha / j)
  double tail_bound = 0.0;     // (lambda_{i-1,i-1} / lambda_{i-1})^{n_max + 1}
  std::int64_t terms = 0;
  bool converged = false;      // tail_bound <= tolerance
};

/// E_{e_{i-1}} exp(-alpha tau_i) for a binary-fission chain (target = i, 0-based).
LaplaceResult laplace_tau(const ChainModel& model, int target, double alpha, std::int64_t n_max = 100'000,
                          double tolerance = 1e-15);

struct ExpectationReport {
  double printed_value = 0.0;    // ln(lambda/lambda_mut) / (lambda_mut * lambda_self)
  double derived_value = 0.0;  // ln(lambda/lambda_mut) / lambda_self
  double oracle_value = 0.0;   // quadrature of the defining integral
  double oracle_error = 0.0;
  bool printed_supported = false;
  bool derived_supported = false;
};

/// E_{e_{i-1}} tau_i for a binary-fission chain by the two closed forms and by quadrature.
ExpectationReport expected_tau(const ChainModel& model, int target, double tolerance = 1e-9);

/// E theta_k for binary fission: integral of e^{-a s} (1 - e^{-b s}) / (b s), a = lambda_{k-1,k}, b = lambda_{k-1,k-1}.
double expected_theta_quadrature(double mutation_rate, double self_rate, double* error_estimate = nullptr);

}  // namespace mutforest
