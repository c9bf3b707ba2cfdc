#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mutforest/lattice_pmf.hpp"
#include "mutforest/rng.hpp"
#include "mutforest/sim_discrete.hpp"
#include "mutforest/stats.hpp"

namespace mutforest {

struct Rates {
  std::vector<double> lambda;

  int dim() const { return static_cast<int>(lambda.size()); }
  double operator[](int i) const { return lambda[static_cast<std::size_t>(i)]; }
  /// Throws unless there are d strictly positive finite rates.
  void validate(int d) const;
};

/// One reproduction event: a type-`parent_type` individual dies and is
/// replaced by `children` (counts per type).
struct CTEvent {
  double time = 0.0;
  int parent_type = 0;
  LatticeVector children;
};

/// Population counts right after an event (or at time 0).
struct CTState {
  std::vector<std::int64_t> z;      // Z^{(j)}
  std::vector<std::int64_t> cross;  // Z^{i,j}, row-major d x d; diagonal holds x_i + X^{ii}
  std::vector<std::int64_t> mutations;  // M_j

  std::int64_t z_ij(int i, int j, int d) const { return cross[static_cast<std::size_t>(i * d + j)]; }
};

/// Piecewise-constant record of one continuous-time realization on [0, horizon].
class CTTrajectory {
 public:
  CTTrajectory() = default;

  /// Replays events from the initial state x. Throws if an event is out of
  /// time order, beyond the horizon, or removes an individual that does not exist.
  static CTTrajectory from_events(int dim, std::vector<std::int64_t> x, std::vector<CTEvent> events, double horizon);

  int dim() const { return dim_; }
  double horizon() const { return horizon_; }
  const std::vector<std::int64_t>& initial() const { return initial_; }
  const std::vector<CTEvent>& events() const { return events_; }
  std::size_t event_count() const { return events_.size(); }
  /// Population cap was hit; the record stops at the time of the last event.
  bool truncated() const { return truncated_; }
  bool extinct() const;

  /// State after event k (k = 0 is the initial state, k = event_count() the final one).
  CTState state_after(std::size_t k) const;
  /// State at time t (right-continuous), t <= horizon.
  CTState state_at(double t) const;
  std::int64_t population(int j, double t) const { return state_at(t).z[static_cast<std::size_t>(j)]; }
  const CTState& final_state() const { return final_; }

  /// Checks Z^{(j)} = sum_i Z^{i,j}, Z >= 0, M_j = sum_{i != j} Z^{i,j} and
  /// monotone M at every event; returns false on the first violation.
  bool decomposition_holds() const;

  void mark_truncated() { truncated_ = true; }

 private:
  void apply(CTState& s, const CTEvent& e) const;

  int dim_ = 0;
  double horizon_ = 0.0;
  std::vector<std::int64_t> initial_;
  std::vector<CTEvent> events_;
  // Checkpoints every kCheckpoint events to make state_at cheap.
  static constexpr std::size_t kCheckpoint = 256;
  std::vector<CTState> checkpoints_;
  CTState final_;
  bool truncated_ = false;
};

/// Internal clocks and compound Poisson values recorded by the Lamperti
/// engine after each event.
struct LampertiTrace {
  std::vector<std::vector<double>> clocks;           // c_i(t_k), per event
  std::vector<std::vector<std::int64_t>> path_values;  // X^{i,j}(c_i(t_k)), row-major, per event
};

struct CTOptions {
  std::int64_t population_cap = 10'000'000;
};

/// Event-driven (Gillespie) simulation.
CTTrajectory simulate_direct(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                             double t_max, Rng& rng, const CTOptions& opts = {});

/// Lamperti construction over lazily extended compound Poisson paths; the
/// optional trace receives clocks and path values at every event.
CTTrajectory simulate_lamperti(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                               double t_max, Rng& rng, const CTOptions& opts = {}, LampertiTrace* trace = nullptr);

/// M_{i,t} = sum_{k != i} Z^{k,i}_t.
std::int64_t mutation_count_at(const CTTrajectory& traj, int i, double t);

struct MalthusData {
  Eigen::MatrixXd a;  // Lambda (M - I)
  double rho1 = 0.0;
  Eigen::VectorXd right;  // A u = rho1 u, u.1 = 1
  Eigen::VectorXd left;   // v A = rho1 v, u.v = 1
};

MalthusData malthus(const MeanReport& r, const Rates& rates);

struct GrowthOptions {
  std::vector<double> t_grid{5.0, 10.0, 15.0, 20.0, 25.0};
  std::int64_t replicates = 400;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Exact event simulation while the total population is below this size,
  /// then Poisson leaping on the time-changed compound Poisson paths.
  std::int64_t exact_until = 20'000;
  /// Leap length in units of 1/max(lambda_i).
  double leap = 0.005;
};

struct GrowthRow {
  double t = 0.0;
  int type = 0;
  std::int64_t survivors = 0;
  Moments scaled_population;  // e^{-rho1 t} Z^{(i)}_t
  Moments ratio;              // M_{i,t} / Z^{(i)}_t
  Moments log_slope;          // log Z_t / t (total population)
};

struct GrowthReport {
  MalthusData malthus;
  std::vector<GrowthRow> rows;
  std::int64_t replicates = 0;
  std::int64_t extinct = 0;  // extinct by the last grid time
  double survival_fraction = 0.0;
  double survival_theory = 0.0;  // 1 - prod q_i^{x_i}
  /// Candidate limits of M_{i,t}/Z^{(i)}_t, per type.
  std::vector<double> ratio_printed;    // 1 + (1 - m_ii) / (lambda_i rho1)
  std::vector<double> ratio_derived;  // 1 + lambda_i (1 - m_ii) / rho1
  std::vector<bool> printed_within_3se;
  std::vector<bool> derived_within_3se;
};

/// Throws std::domain_error unless the law is non-singular, primitive and
/// supercritical.
GrowthReport supercritical_growth(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                                  const GrowthOptions& opts);

struct GrowthPathState {
  bool extinct = false;
  std::vector<std::vector<std::int64_t>> z;          // per grid time
  std::vector<std::vector<std::int64_t>> mutations;  // per grid time
};

/// One hybrid realization observed at the (sorted) grid times.
GrowthPathState simulate_growth_path(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                                     const std::vector<double>& grid, const GrowthOptions& opts, Rng& rng);

}  // namespace mutforest
