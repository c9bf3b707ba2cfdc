#include "mutforest/sim_continuous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "mutforest/parallel.hpp"

namespace mutforest {

void Rates::validate(int d) const {
  if (dim() != d) throw std::invalid_argument("expected " + std::to_string(d) + " rates, got " + std::to_string(dim()));
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("rates must be positive and finite");
  }
}

namespace {

CTState initial_state(int d, const std::vector<std::int64_t>& x) {
  const auto ud = static_cast<std::size_t>(d);
  CTState s;
  s.z = x;
  s.cross.assign(ud * ud, 0);
  s.mutations.assign(ud, 0);
  for (std::size_t i = 0; i < ud; ++i) s.cross[i * ud + i] = x[i];
  return s;
}

void check_inputs(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x, double t_max) {
  rates.validate(law.dim());
  if (!law.no_single_self_child()) throw std::invalid_argument("continuous-time engines require nu_i(e_i) = 0 for every type");
  if (static_cast<int>(x.size()) != law.dim()) throw std::invalid_argument("initial state has wrong length");
  for (auto v : x) {
    if (v < 0) throw std::invalid_argument("initial state must be nonnegative");
  }
  if (!(t_max >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
}

}  // namespace

void CTTrajectory::apply(CTState& s, const CTEvent& e) const {
  const auto ud = static_cast<std::size_t>(dim_);
  const auto i = static_cast<std::size_t>(e.parent_type);
  if (s.z[i] < 1) throw std::invalid_argument("event removes a type-" + std::to_string(i + 1) + " individual that does not exist");
  for (std::size_t j = 0; j < ud; ++j) {
    const std::int64_t k = e.children[j];
    if (j == i) {
      s.z[j] += k - 1;
      s.cross[i * ud + j] += k - 1;
    } else {
      s.z[j] += k;
      s.cross[i * ud + j] += k;
      s.mutations[j] += k;
    }
  }
}

CTTrajectory CTTrajectory::from_events(int dim, std::vector<std::int64_t> x, std::vector<CTEvent> events, double horizon) {
  if (dim < 1) throw std::invalid_argument("trajectory dimension must be >= 1");
  if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("initial state has wrong length");
  CTTrajectory tr;
  tr.dim_ = dim;
  tr.horizon_ = horizon;
  tr.initial_ = std::move(x);
  tr.events_ = std::move(events);
  CTState s = initial_state(dim, tr.initial_);
  double last = 0.0;
  tr.checkpoints_.push_back(s);
  for (std::size_t k = 0; k < tr.events_.size(); ++k) {
    const auto& e = tr.events_[k];
    if (e.time < last || e.time > horizon) throw std::invalid_argument("event times must be nondecreasing and within the horizon");
    if (e.parent_type < 0 || e.parent_type >= dim || static_cast<int>(e.children.size()) != dim) {
      throw std::invalid_argument("malformed event");
    }
    last = e.time;
    tr.apply(s, e);
    if ((k + 1) % kCheckpoint == 0) tr.checkpoints_.push_back(s);
  }
  tr.final_ = std::move(s);
  return tr;
}

bool CTTrajectory::extinct() const {
  return std::all_of(final_.z.begin(), final_.z.end(), [](auto v) { return v == 0; });
}

CTState CTTrajectory::state_after(std::size_t k) const {
  if (k > events_.size()) throw std::out_of_range("state_after: event index out of range");
  CTState s = checkpoints_[k / kCheckpoint];
  for (std::size_t e = (k / kCheckpoint) * kCheckpoint; e < k; ++e) apply(s, events_[e]);
  return s;
}

CTState CTTrajectory::state_at(double t) const {
  if (t > horizon_) throw std::out_of_range("state_at: time beyond the horizon");
  const auto it = std::upper_bound(events_.begin(), events_.end(), t, [](double v, const CTEvent& e) { return v < e.time; });
  return state_after(static_cast<std::size_t>(it - events_.begin()));
}

bool CTTrajectory::decomposition_holds() const {
  const auto ud = static_cast<std::size_t>(dim_);
  CTState s = initial_state(dim_, initial_);
  auto check = [&](const CTState& st, const CTState* prev) {
    for (std::size_t j = 0; j < ud; ++j) {
      std::int64_t col = 0, mut = 0;
      for (std::size_t i = 0; i < ud; ++i) {
        col += st.cross[i * ud + j];
        if (i != j) mut += st.cross[i * ud + j];
      }
      if (col != st.z[j] || st.z[j] < 0 || mut != st.mutations[j]) return false;
      if (prev && st.mutations[j] < prev->mutations[j]) return false;
    }
    return true;
  };
  if (!check(s, nullptr)) return false;
  for (const auto& e : events_) {
    CTState prev = s;
    apply(s, e);
    if (!check(s, &prev)) return false;
  }
  return true;
}

CTTrajectory simulate_direct(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                             double t_max, Rng& rng, const CTOptions& opts) {
  check_inputs(law, rates, x, t_max);
  const int d = law.dim();
  const ProgenySampler sampler(law);
  std::vector<std::int64_t> z = x;
  std::int64_t total = 0;
  for (auto v : z) total += v;
  std::vector<CTEvent> events;
  double t = 0.0;
  bool truncated = false;
  for (;;) {
    double rate = 0.0;
    for (int i = 0; i < d; ++i) rate += rates[i] * static_cast<double>(z[static_cast<std::size_t>(i)]);
    if (rate <= 0.0) break;
    t += exponential(rng, rate);
    if (t > t_max) break;
    double u = uniform01(rng) * rate;
    int i = 0;
    for (; i < d - 1; ++i) {
      u -= rates[i] * static_cast<double>(z[static_cast<std::size_t>(i)]);
      if (u < 0.0) break;
    }
    while (z[static_cast<std::size_t>(i)] == 0) --i;  // rounding guard
    const auto k = sampler.draw(i, rng);
    CTEvent e{t, i, LatticeVector(k.begin(), k.end())};
    for (int j = 0; j < d; ++j) {
      const std::int64_t delta = k[static_cast<std::size_t>(j)] - (j == i ? 1 : 0);
      z[static_cast<std::size_t>(j)] += delta;
      total += delta;
    }
    events.push_back(std::move(e));
    if (total > opts.population_cap) {
      truncated = true;
      break;
    }
  }
  auto tr = CTTrajectory::from_events(d, x, std::move(events), truncated ? t : t_max);
  if (truncated) tr.mark_truncated();
  return tr;
}

CTTrajectory simulate_lamperti(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                               double t_max, Rng& rng, const CTOptions& opts, LampertiTrace* trace) {
  check_inputs(law, rates, x, t_max);
  const int d = law.dim();
  const auto ud = static_cast<std::size_t>(d);
  const ProgenySampler sampler(law);

  // Lazy compound Poisson paths: the next jump of X^{(i)} happens at internal
  // time next_time[i] with child vector index next_jump[i].
  std::vector<double> next_time(ud), clock(ud, 0.0);
  std::vector<std::size_t> next_jump(ud);
  std::vector<std::int64_t> path(ud * ud, 0);  // X^{i,j}(c_i)
  for (int i = 0; i < d; ++i) {
    next_time[static_cast<std::size_t>(i)] = exponential(rng, rates[i]);
    next_jump[static_cast<std::size_t>(i)] = sampler.draw_index(i, rng);
  }

  std::vector<std::int64_t> z = x;
  std::int64_t total = 0;
  for (auto v : z) total += v;
  std::vector<CTEvent> events;
  double t = 0.0;
  bool truncated = false;
  for (;;) {
    int fire = -1;
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ud; ++i) {
      if (z[i] == 0) continue;
      const double wait = (next_time[i] - clock[i]) / static_cast<double>(z[i]);
      if (wait < dt) {
        dt = wait;
        fire = static_cast<int>(i);
      }
    }
    if (fire < 0) break;
    if (t + dt > t_max) {
      for (std::size_t j = 0; j < ud; ++j) clock[j] += static_cast<double>(z[j]) * (t_max - t);
      break;
    }
    const auto uf = static_cast<std::size_t>(fire);
    for (std::size_t j = 0; j < ud; ++j) clock[j] += static_cast<double>(z[j]) * dt;
    clock[uf] = next_time[uf];  // the firing clock sits exactly on its jump
    t += dt;

    const auto k = sampler.point(fire, next_jump[uf]);
    CTEvent e{t, fire, LatticeVector(k.begin(), k.end())};
    for (std::size_t j = 0; j < ud; ++j) {
      const std::int64_t delta = k[j] - (j == uf ? 1 : 0);
      path[uf * ud + j] += delta;
      z[j] += delta;
      total += delta;
    }
    events.push_back(std::move(e));
    if (trace) {
      trace->clocks.push_back(clock);
      trace->path_values.push_back(path);
    }
    next_time[uf] += exponential(rng, rates[fire]);
    next_jump[uf] = sampler.draw_index(fire, rng);
    if (total > opts.population_cap) {
      truncated = true;
      break;
    }
  }
  auto tr = CTTrajectory::from_events(d, x, std::move(events), truncated ? t : t_max);
  if (truncated) tr.mark_truncated();
  return tr;
}

std::int64_t mutation_count_at(const CTTrajectory& traj, int i, double t) {
  if (i < 0 || i >= traj.dim()) throw std::out_of_range("mutation_count_at: type out of range");
  return traj.state_at(t).mutations[static_cast<std::size_t>(i)];
}

MalthusData malthus(const MeanReport& r, const Rates& rates) {
  const int d = static_cast<int>(r.mean_matrix.rows());
  rates.validate(d);
  if (!r.irreducible) throw std::domain_error("malthus: the mean matrix is not irreducible");
  MalthusData out;
  Eigen::VectorXd lambda(d);
  for (int i = 0; i < d; ++i) lambda(i) = rates[i];
  out.a = lambda.asDiagonal() * (r.mean_matrix - Eigen::MatrixXd::Identity(d, d));
  const auto eig = dominant_eigenpair_shifted(out.a);
  out.rho1 = eig.rho;
  out.right = eig.right;
  out.left = eig.left;
  return out;
}

GrowthPathState simulate_growth_path(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                                     const std::vector<double>& grid, const GrowthOptions& opts, Rng& rng) {
  const int d = law.dim();
  const auto ud = static_cast<std::size_t>(d);
  const ProgenySampler sampler(law);
  const Eigen::MatrixXd m = mean_matrix(law);
  double lambda_max = 0.0;
  for (int i = 0; i < d; ++i) lambda_max = std::max(lambda_max, rates[i]);

  GrowthPathState out;
  std::vector<std::int64_t> z = x, mut(ud, 0);
  double t = 0.0;
  std::size_t g = 0;
  auto record_until = [&](double until) {
    while (g < grid.size() && grid[g] < until) {
      out.z.push_back(z);
      out.mutations.push_back(mut);
      ++g;
    }
  };
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> z_try(ud), mut_try(ud);
  while (g < grid.size()) {
    std::int64_t total = 0;
    for (auto v : z) total += v;
    if (total == 0) {
      out.extinct = true;
      record_until(std::numeric_limits<double>::infinity());
      break;
    }
    if (total < opts.exact_until) {
      double rate = 0.0;
      for (int i = 0; i < d; ++i) rate += rates[i] * static_cast<double>(z[static_cast<std::size_t>(i)]);
      const double next = t + exponential(rng, rate);
      record_until(next);
      if (g == grid.size()) break;
      double u = uniform01(rng) * rate;
      int i = 0;
      for (; i < d - 1; ++i) {
        u -= rates[i] * static_cast<double>(z[static_cast<std::size_t>(i)]);
        if (u < 0.0) break;
      }
      while (z[static_cast<std::size_t>(i)] == 0) --i;
      const auto k = sampler.draw(i, rng);
      for (std::size_t j = 0; j < ud; ++j) {
        z[j] += k[j] - (static_cast<int>(j) == i ? 1 : 0);
        if (static_cast<int>(j) != i) mut[j] += k[j];
      }
      t = next;
      continue;
    }
    // Leap: internal time consumed by type i over [t, t+h] from a
    // second-order expansion of the integrated population.
    double h = std::min(opts.leap / lambda_max, grid[g] - t);
    for (;;) {
      z_try = z;
      mut_try = mut;
      bool ok = true;
      for (std::size_t i = 0; i < ud && ok; ++i) {
        double drift = 0.0;
        for (std::size_t k = 0; k < ud; ++k) {
          drift += rates[static_cast<int>(k)] * static_cast<double>(z[k]) * (m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) - (k == i ? 1.0 : 0.0));
        }
        const double consumed = std::max(0.0, h * (static_cast<double>(z[i]) + 0.5 * h * drift));
        const double mean_jumps = rates[static_cast<int>(i)] * consumed;
        if (mean_jumps <= 0.0) continue;
        std::int64_t remaining = std::poisson_distribution<std::int64_t>(mean_jumps)(rng);
        const auto& law_i = law.law(static_cast<int>(i));
        double mass_left = 1.0;
        for (std::size_t e = 0; e < law_i.size() && remaining > 0; ++e) {
          std::int64_t c = remaining;
          if (e + 1 < law_i.size()) {
            const double p = std::min(1.0, law_i.prob(e) / mass_left);
            c = std::binomial_distribution<std::int64_t>(remaining, p)(rng);
            mass_left -= law_i.prob(e);
          }
          remaining -= c;
          const auto k = law_i.point(e);
          for (std::size_t j = 0; j < ud; ++j) {
            z_try[j] += c * (k[j] - (j == i ? 1 : 0));
            if (j != i) mut_try[j] += c * k[j];
          }
        }
      }
      for (auto v : z_try) ok &= v >= 0;
      if (ok) break;
      h *= 0.5;
    }
    z = z_try;
    mut = mut_try;
    t += h;
    if (grid[g] - t <= 1e-12 * std::max(1.0, grid[g])) {
      t = grid[g];
      out.z.push_back(z);
      out.mutations.push_back(mut);
      ++g;
    }
  }
  return out;
}

GrowthReport supercritical_growth(const ProgenyLaw& law, const Rates& rates, const std::vector<std::int64_t>& x,
                                  const GrowthOptions& opts) {
  const int d = law.dim();
  rates.validate(d);
  if (!law.non_singular()) throw std::domain_error("supercritical_growth: law is singular");
  const auto report = mean_report(law);
  if (!report.primitive) throw std::domain_error("supercritical_growth: mean matrix is not primitive");
  if (report.criticality != Criticality::supercritical) throw std::domain_error("supercritical_growth: law is not supercritical");
  if (!law.no_single_self_child()) throw std::domain_error("supercritical_growth: requires nu_i(e_i) = 0");
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("initial state has wrong length");
  std::vector<double> grid = opts.t_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.empty() || grid.front() <= 0.0) throw std::invalid_argument("growth grid must contain positive times");

  GrowthReport out;
  out.malthus = malthus(report, rates);
  const double rho1 = out.malthus.rho1;
  if (!(rho1 > 0.0)) throw std::domain_error("supercritical_growth: Malthusian parameter is not positive");
  out.replicates = opts.replicates;

  auto paths = map_replicates<GrowthPathState>(opts.replicates, opts.workers, [&](std::int64_t r) {
    auto rng = make_rng(opts.seed, static_cast<std::uint64_t>(r), Stream::growth);
    return simulate_growth_path(law, rates, x, grid, opts, rng);
  });

  const auto ud = static_cast<std::size_t>(d);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t i = 0; i < ud; ++i) {
      GrowthRow row;
      row.t = grid[g];
      row.type = static_cast<int>(i);
      for (const auto& p : paths) {
        std::int64_t total = 0;
        for (auto v : p.z[g]) total += v;
        if (total == 0) continue;
        ++row.survivors;
        row.scaled_population.add(std::exp(-rho1 * grid[g]) * static_cast<double>(p.z[g][i]));
        if (p.z[g][i] > 0) row.ratio.add(static_cast<double>(p.mutations[g][i]) / static_cast<double>(p.z[g][i]));
        row.log_slope.add(std::log(static_cast<double>(total)) / grid[g]);
      }
      out.rows.push_back(row);
    }
  }
  for (const auto& p : paths) {
    std::int64_t total = 0;
    for (auto v : p.z.back()) total += v;
    if (total == 0) ++out.extinct;
  }
  out.survival_fraction = 1.0 - static_cast<double>(out.extinct) / static_cast<double>(std::max<std::int64_t>(opts.replicates, 1));
  const auto q = extinction_probabilities(law);
  double ext = 1.0;
  for (std::size_t i = 0; i < ud; ++i) ext *= std::pow(q(static_cast<Eigen::Index>(i)), static_cast<double>(x[i]));
  out.survival_theory = 1.0 - ext;

  const auto& m = report.mean_matrix;
  for (int i = 0; i < d; ++i) {
    out.ratio_printed.push_back(1.0 + (1.0 - m(i, i)) / (rates[i] * rho1));
    out.ratio_derived.push_back(1.0 + rates[i] * (1.0 - m(i, i)) / rho1);
    const auto& last = out.rows[(grid.size() - 1) * ud + static_cast<std::size_t>(i)].ratio;
    const double band = 3.0 * last.se();
    out.printed_within_3se.push_back(last.count() > 1 && std::abs(last.mean() - out.ratio_printed.back()) <= band);
    out.derived_within_3se.push_back(last.count() > 1 && std::abs(last.mean() - out.ratio_derived.back()) <= band);
  }
  return out;
}

}  // namespace mutforest
