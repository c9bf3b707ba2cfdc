#include "mutforest/emergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "mutforest/parallel.hpp"
#include "mutforest/sim_discrete.hpp"

namespace mutforest {

namespace {

std::string type_name(int i) { return "type " + std::to_string(i + 1); }

void require_target(const ChainModel& model, int target) {
  if (target < 1 || target >= model.dim()) {
    throw std::invalid_argument("emergence target must be a type in 2..d (got " + std::to_string(target + 1) + ")");
  }
}

}  // namespace

ChainModel validate_chain(const ProgenyLaw& law, const Rates& rates, ChainCondition condition) {
  const int d = law.dim();
  rates.validate(d);
  if (d < 2) throw std::invalid_argument("a mutation chain needs at least two types");
  ChainModel out;
  out.law = law;
  out.rates = rates;
  out.condition = condition;
  out.lambda_ij = Eigen::MatrixXd::Zero(d, d);
  out.binary_fission = true;
  out.rates_additive = true;
  for (int i = 0; i < d; ++i) {
    const auto& nu = law.law(i);
    const bool last = i == d - 1;
    double no_self = 0.0, no_next = 0.0;
    for (std::size_t e = 0; e < nu.size(); ++e) {
      const auto k = nu.point(e);
      for (int j = 0; j < d; ++j) {
        if (j != i && j != i + 1 && k[static_cast<std::size_t>(j)] != 0) {
          throw std::invalid_argument("chain condition violated: " + type_name(i) + " has a litter with children of " +
                                      type_name(j) + " (only types i and i+1 are allowed)");
        }
      }
      if (k[static_cast<std::size_t>(i)] == 0) no_self += nu.prob(e);
      if (!last) {
        if (k[static_cast<std::size_t>(i + 1)] == 0) no_next += nu.prob(e);
        if (condition == ChainCondition::single_mutant && k[static_cast<std::size_t>(i + 1)] > 1) {
          throw std::invalid_argument("single-mutant condition violated: " + type_name(i) + " has a litter with " +
                                      std::to_string(k[static_cast<std::size_t>(i + 1)]) + " children of " +
                                      type_name(i + 1));
        }
        const bool two_self = k[static_cast<std::size_t>(i)] == 2 && k[static_cast<std::size_t>(i + 1)] == 0;
        const bool split = k[static_cast<std::size_t>(i)] == 1 && k[static_cast<std::size_t>(i + 1)] == 1;
        if (!two_self && !split) out.binary_fission = false;
      }
    }
    if (!last) {
      if (no_self > 0.0) {
        throw std::invalid_argument("chain condition violated: sum_{k : k_i = 0} nu_i(k) = 0 fails for " + type_name(i));
      }
      if (no_next >= 1.0 - 1e-15) {
        throw std::invalid_argument("chain condition violated: sum_{k : k_{i+1} = 0} nu_i(k) < 1 fails for " + type_name(i));
      }
    }
    // lambda_{i,j}: nu~_i(k) with k_j = 0 means k_j = 0 for j != i and one type-i child for j = i.
    for (int j = 0; j < d; ++j) {
      double zero = 0.0;
      for (std::size_t e = 0; e < nu.size(); ++e) {
        const int kj = nu.point(e)[static_cast<std::size_t>(j)] - (j == i ? 1 : 0);
        if (kj == 0) zero += nu.prob(e);
      }
      out.lambda_ij(i, j) = rates[i] * std::max(0.0, 1.0 - zero);
    }
    if (!last) {
      if (!(out.lambda_ij(i, i + 1) > 0.0)) throw std::invalid_argument("mutation rate lambda_{i,i+1} is zero for " + type_name(i));
      const double sum = out.lambda_ij(i, i) + out.lambda_ij(i, i + 1);
      if (std::abs(sum - rates[i]) > 1e-12 * rates[i]) out.rates_additive = false;
    }
  }
  return out;
}

ChainModel make_binary_chain(const std::vector<std::pair<double, double>>& pairs, double last_rate) {
  const int d = static_cast<int>(pairs.size()) + 1;
  std::vector<SparsePmf> laws;
  std::vector<double> lambda;
  for (int i = 0; i + 1 < d; ++i) {
    const auto [self, mut] = pairs[static_cast<std::size_t>(i)];
    if (self < 0.0 || !(mut > 0.0)) throw std::invalid_argument("binary chain needs lambda_{i,i} >= 0 and lambda_{i,i+1} > 0");
    const double total = self + mut;
    LatticeVector two(static_cast<std::size_t>(d), 0), split(static_cast<std::size_t>(d), 0);
    two[static_cast<std::size_t>(i)] = 2;
    split[static_cast<std::size_t>(i)] = 1;
    split[static_cast<std::size_t>(i + 1)] = 1;
    std::vector<std::pair<LatticeVector, double>> entries{{split, mut / total}};
    if (self > 0.0) entries.emplace_back(two, self / total);
    laws.push_back(SparsePmf::from_entries(d, std::move(entries)));
    lambda.push_back(total);
  }
  LatticeVector two(static_cast<std::size_t>(d), 0);
  two[static_cast<std::size_t>(d - 1)] = 2;
  laws.push_back(SparsePmf::from_entries(d, {{two, 1.0}}));
  lambda.push_back(last_rate);
  return validate_chain(ProgenyLaw(std::move(laws)), Rates{std::move(lambda)}, ChainCondition::single_mutant);
}

EmergenceSample sample_tau_direct(const ChainModel& model, int target, Rng& rng, const TauOptions& opts) {
  require_target(model, target);
  const int start = opts.start_type;
  if (start < 0 || start >= target) throw std::invalid_argument("start type must precede the target type");
  const double horizon = opts.horizon.value_or(50.0 / model.mutation_rate(0));
  const ProgenySampler sampler(model.law);

  EmergenceSample out;
  out.horizon = horizon;
  out.tau.assign(static_cast<std::size_t>(target) + 1, 0.0);
  std::vector<std::int64_t> z(static_cast<std::size_t>(target), 0);  // types 0..target-1
  z[static_cast<std::size_t>(start)] = 1;
  std::vector<bool> emerged(static_cast<std::size_t>(target) + 1, false);
  for (int k = 0; k <= start; ++k) emerged[static_cast<std::size_t>(k)] = true;
  std::int64_t total = 1;
  double t = 0.0;
  for (;;) {
    double rate = 0.0;
    for (int j = start; j < target; ++j) rate += model.rates[j] * static_cast<double>(z[static_cast<std::size_t>(j)]);
    if (rate <= 0.0) {
      out.censored = true;  // all relevant lineages died out
      break;
    }
    t += exponential(rng, rate);
    if (t > horizon) {
      out.censored = true;
      break;
    }
    double u = uniform01(rng) * rate;
    int j = start;
    for (; j < target - 1; ++j) {
      u -= model.rates[j] * static_cast<double>(z[static_cast<std::size_t>(j)]);
      if (u < 0.0) break;
    }
    while (z[static_cast<std::size_t>(j)] == 0) --j;
    const auto k = sampler.draw(j, rng);
    const auto uj = static_cast<std::size_t>(j);
    z[uj] += k[uj] - 1;
    total += k[uj] - 1;
    if (j + 1 < target) {
      if (!emerged[uj + 1] && k[uj + 1] > 0) {
        emerged[uj + 1] = true;
        out.tau[uj + 1] = t;
      }
      z[uj + 1] += k[uj + 1];
      total += k[uj + 1];
    } else if (k[uj + 1] > 0) {
      out.tau[static_cast<std::size_t>(target)] = t;
      out.previous_type_count = z[uj];
      return out;
    }
    if (total > opts.population_cap) throw std::runtime_error("sample_tau_direct: population cap exceeded before emergence");
  }
  for (std::size_t k = 0; k < out.tau.size(); ++k) {
    if (!emerged[k]) out.tau[k] = horizon;
  }
  out.tau.back() = horizon;
  return out;
}

double RepresentationSample::sum_theta() const {
  double s = 0.0;
  for (std::size_t k = 1; k < theta.size(); ++k) s += theta[k];
  return s;
}

RepresentationSample sample_tau_representation(const ChainModel& model, int target, Rng& rng) {
  require_target(model, target);
  const auto ut = static_cast<std::size_t>(target);
  const ProgenySampler sampler(model.law);

  // Active types 0..target-1, each driven by its own compound Poisson path
  // X^{(a)} observed through the internal clock c_a = int_0^t Z^{(a)}.
  std::vector<double> next_time(ut), clock(ut, 0.0), piece_start(ut, 0.0);
  std::vector<std::size_t> next_jump(ut);
  std::vector<std::int64_t> self_value(ut, 0);  // X^{a,a}(c_a)
  std::vector<std::int64_t> immigrants(ut, 0);  // Z^{a-1,a}; Z^{0,1} == 1 for the first type
  std::vector<bool> mutated(ut, false);         // gamma_{a+1} reached
  immigrants[0] = 1;
  for (int a = 0; a < target; ++a) {
    next_time[static_cast<std::size_t>(a)] = exponential(rng, model.rates[a]);
    next_jump[static_cast<std::size_t>(a)] = sampler.draw_index(a, rng);
  }

  RepresentationSample out;
  out.tau.assign(ut + 1, 0.0);
  out.increment.assign(ut + 1, 0.0);
  out.theta.assign(ut + 1, 0.0);
  out.real_time_tau.assign(ut + 1, 0.0);
  out.single_birth.assign(ut + 1, false);

  auto population = [&](std::size_t a) { return self_value[a] + immigrants[a]; };
  // Close the current constant piece of type a's integrands at its clock value.
  auto close_piece = [&](std::size_t a) {
    if (mutated[a]) return;
    const double ds = clock[a] - piece_start[a];
    if (ds > 0.0) {
      out.increment[a + 1] += ds / static_cast<double>(population(a));
      out.theta[a + 1] += ds / static_cast<double>(self_value[a] + 1);
    }
    piece_start[a] = clock[a];
  };

  double t = 0.0;
  for (;;) {
    int fire = -1;
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < ut; ++a) {
      const auto z = population(a);
      if (z <= 0) continue;
      const double wait = (next_time[a] - clock[a]) / static_cast<double>(z);
      if (wait < dt) {
        dt = wait;
        fire = static_cast<int>(a);
      }
    }
    if (fire < 0) throw std::logic_error("sample_tau_representation: all active types are extinct");
    const auto uf = static_cast<std::size_t>(fire);
    for (std::size_t a = 0; a < ut; ++a) clock[a] += static_cast<double>(population(a)) * dt;
    clock[uf] = next_time[uf];
    t += dt;

    const auto k = sampler.point(fire, next_jump[uf]);
    close_piece(uf);
    const int births_next = k[uf + 1];
    if (births_next > 0 && !mutated[uf]) {
      // gamma_{fire+1} reached: H and theta of this type stop here.
      mutated[uf] = true;
      const std::size_t kk = uf + 1;
      out.tau[kk] = out.tau[uf] + out.increment[kk];
      out.real_time_tau[kk] = t;
      if (uf >= 1) out.single_birth[kk] = immigrants[uf] == 1;
      if (static_cast<int>(kk) == target) {
        out.previous_type_count = self_value[uf] + k[uf] - 1 + immigrants[uf];
        return out;
      }
    }
    self_value[uf] += k[uf] - 1;
    if (uf + 1 < ut && births_next > 0) {
      close_piece(uf + 1);
      immigrants[uf + 1] += births_next;
    }
    next_time[uf] += exponential(rng, model.rates[fire]);
    next_jump[uf] = sampler.draw_index(fire, rng);
  }
}

ThetaSample sample_theta(const ChainModel& model, int k, Rng& rng) {
  require_target(model, k);
  const int a = k - 1;
  const auto ua = static_cast<std::size_t>(a);
  const ProgenySampler sampler(model.law);
  ThetaSample out;
  std::int64_t x = 0;
  double s = 0.0;
  for (;;) {
    const double gap = exponential(rng, model.rates[a]);
    out.theta += gap / static_cast<double>(x + 1);
    s += gap;
    const auto jump = sampler.draw(a, rng);
    x += jump[ua] - 1;
    if (jump[ua + 1] > 0) {
      out.gamma = s;
      out.endpoint = x + 1;
      return out;
    }
  }
}

bool BoundReport::all_hold() const {
  return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; });
}

BoundReport bound_check(const ChainModel& model, int target, const std::vector<double>& grid, const McOptions& opts,
                        const TauOptions& tau_opts) {
  require_target(model, target);
  TauOptions to = tau_opts;
  to.start_type = 0;
  struct Pair {
    double tau = 0.0;
    double theta = 0.0;
    bool censored = false;
  };
  auto draws = map_replicates<Pair>(opts.replicates, opts.workers, [&](std::int64_t r) {
    Pair p;
    auto rng_tau = make_rng(opts.seed, static_cast<std::uint64_t>(r), Stream::tau_direct);
    const auto s = sample_tau_direct(model, target, rng_tau, to);
    p.censored = s.censored;
    p.tau = s.censored ? std::numeric_limits<double>::infinity() : s.value();
    auto rng_theta = make_rng(opts.seed, static_cast<std::uint64_t>(r), Stream::theta);
    for (int k = 1; k <= target; ++k) p.theta += sample_theta(model, k, rng_theta).theta;
    return p;
  });
  std::vector<double> taus, thetas;
  BoundReport out;
  out.target = target;
  for (const auto& p : draws) {
    taus.push_back(p.tau);
    thetas.push_back(p.theta);
    out.censored += p.censored ? 1 : 0;
  }
  out.tau = empirical_survival(taus, grid);
  out.theta_sum = empirical_survival(thetas, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double se = std::hypot(out.tau.se[g], out.theta_sum.se[g]);
    out.holds.push_back(out.tau.survival[g] <= out.theta_sum.survival[g] + 3.0 * se);
  }
  return out;
}

LadderReport ratio_convergence(const std::vector<ChainModel>& ladder, int target, const McOptions& opts) {
  if (ladder.empty()) throw std::invalid_argument("ladder is empty");
  for (const auto& m : ladder) require_target(m, target);
  const double first_rate = ladder.front().mutation_rate(0);
  std::vector<std::vector<double>> ratios;
  for (const auto& m : ladder) {
    if (std::abs(m.mutation_rate(0) - first_rate) > 1e-12 * first_rate) {
      throw std::invalid_argument("ladder rungs must share lambda_{1,2}");
    }
    std::vector<double> r;
    for (int k = 2; k <= target; ++k) r.push_back(m.mutation_rate(k - 2) / m.mutation_rate(k - 1));
    ratios.push_back(std::move(r));
  }
  for (std::size_t s = 1; s < ratios.size(); ++s) {
    bool strict = false;
    for (std::size_t c = 0; c < ratios[s].size(); ++c) {
      if (ratios[s][c] > ratios[s - 1][c]) throw std::invalid_argument("ladder ratios must decrease from rung to rung");
      strict |= ratios[s][c] < ratios[s - 1][c];
    }
    if (!strict && target >= 2) throw std::invalid_argument("ladder ratios must decrease from rung to rung");
  }

  LadderReport out;
  out.target = target;
  for (std::size_t s = 0; s < ladder.size(); ++s) {
    const auto& model = ladder[s];
    const auto samples = map_replicates<RepresentationSample>(opts.replicates, opts.workers, [&](std::int64_t r) {
      auto rng = make_rng(opts.seed, (static_cast<std::uint64_t>(s) << 40) | static_cast<std::uint64_t>(r),
                          Stream::tau_representation);
      return sample_tau_representation(model, target, rng);
    });
    RungReport rung;
    rung.ratios = ratios[s];
    rung.replicates = opts.replicates;
    std::int64_t far10 = 0, far5 = 0;
    std::vector<std::int64_t> single(static_cast<std::size_t>(target) + 1, 0);
    for (const auto& smp : samples) {
      const double ratio = smp.tau.back() / smp.sum_theta();
      far10 += std::abs(ratio - 1.0) > 0.1;
      far5 += std::abs(ratio - 1.0) > 0.05;
      rung.tau.add(smp.tau.back());
      rung.theta_sum.add(smp.sum_theta());
      for (int k = 2; k <= target; ++k) single[static_cast<std::size_t>(k)] += smp.single_birth[static_cast<std::size_t>(k)];
    }
    const double n = static_cast<double>(std::max<std::int64_t>(opts.replicates, 1));
    auto binom_se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
    rung.p_far_10 = static_cast<double>(far10) / n;
    rung.p_far_5 = static_cast<double>(far5) / n;
    rung.se_far_10 = binom_se(rung.p_far_10);
    rung.se_far_5 = binom_se(rung.p_far_5);
    for (int k = 2; k <= target; ++k) {
      const double p = static_cast<double>(single[static_cast<std::size_t>(k)]) / n;
      rung.p_single_birth.push_back(p);
      rung.se_single_birth.push_back(binom_se(p));
    }
    for (int k = 1; k <= target; ++k) {
      const double mut = model.mutation_rate(k - 1);
      const double self = model.self_rate(k - 1);
      rung.sum_expected_theta += self > 0.0 ? std::log((self + mut) / mut) / self : 1.0 / mut;
      rung.sum_inverse_square += 1.0 / (mut * mut);
      rung.sum_inverse += 1.0 / mut;
    }
    out.rungs.push_back(std::move(rung));
  }
  out.far_monotone = true;
  out.single_birth_monotone = true;
  for (std::size_t s = 1; s < out.rungs.size(); ++s) {
    const auto& a = out.rungs[s - 1];
    const auto& b = out.rungs[s];
    if (b.p_far_10 > a.p_far_10 + 2.0 * std::hypot(a.se_far_10, b.se_far_10)) out.far_monotone = false;
    for (std::size_t c = 0; c < a.p_single_birth.size(); ++c) {
      if (b.p_single_birth[c] < a.p_single_birth[c] - 2.0 * std::hypot(a.se_single_birth[c], b.se_single_birth[c])) {
        out.single_birth_monotone = false;
      }
    }
  }
  return out;
}

LaplaceResult laplace_tau(const ChainModel& model, int target, double alpha, std::int64_t n_max, double tolerance) {
  require_target(model, target);
  if (alpha < 0.0) throw std::invalid_argument("laplace_tau: alpha must be >= 0");
  if (!model.binary_fission) throw std::invalid_argument("laplace_tau: requires a binary-fission chain");
  const int a = target - 1;
  const double mut = model.mutation_rate(a);
  const double self = model.self_rate(a);
  const double lambda = model.rates[a];
  LaplaceResult out;
  // Term n: mut * self^n / prod_{j=1}^{n+1} (lambda + alpha / j), in logs.
  // The printed series uses (lambda + alpha) prod_{j=1}^{n} (lambda + alpha / j).
  double log_prod = 0.0;
  const double log_first = std::log(lambda + alpha);
  double sum = 0.0, printed = 0.0;
  const double q = self / lambda;
  for (std::int64_t n = 0; n <= n_max; ++n) {
    const double log_prev = log_prod;
    log_prod += std::log(lambda + alpha / static_cast<double>(n + 1));
    if (n > 0 && self == 0.0) break;
    const double log_num = std::log(mut) + (n > 0 ? static_cast<double>(n) * std::log(self) : 0.0);
    sum += std::exp(log_num - log_prod);
    printed += std::exp(log_num - log_first - log_prev);
    out.terms = n + 1;
    out.tail_bound = std::pow(q, static_cast<double>(n + 1));
    if (out.tail_bound <= tolerance) break;
  }
  if (self == 0.0) out.tail_bound = 0.0;
  out.value = sum;
  out.printed_value = printed;
  out.converged = out.tail_bound <= tolerance;
  return out;
}

double expected_theta_quadrature(double mutation_rate, double self_rate, double* error_estimate) {
  if (!(mutation_rate > 0.0) || self_rate < 0.0) throw std::invalid_argument("expected_theta_quadrature: bad rates");
  if (self_rate == 0.0) {
    if (error_estimate) *error_estimate = 0.0;
    return 1.0 / mutation_rate;
  }
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double s) {
    const double bs = self_rate * s;
    const double frac = bs < 1e-300 ? 1.0 : -std::expm1(-bs) / bs;
    return std::exp(-mutation_rate * s) * frac;
  };
  double err = 0.0;
  const double v = integrator.integrate(f, std::sqrt(std::numeric_limits<double>::epsilon()) * 1e-4, &err);
  if (error_estimate) *error_estimate = err;
  return v;
}

ExpectationReport expected_tau(const ChainModel& model, int target, double tolerance) {
  require_target(model, target);
  if (!model.binary_fission) throw std::invalid_argument("expected_tau: requires a binary-fission chain");
  const int a = target - 1;
  const double mut = model.mutation_rate(a);
  const double self = model.self_rate(a);
  const double lambda = model.rates[a];
  ExpectationReport out;
  if (self > 0.0) {
    out.derived_value = std::log(lambda / mut) / self;
    out.printed_value = std::log(lambda / mut) / (mut * self);
  } else {
    out.derived_value = 1.0 / mut;
    out.printed_value = std::numeric_limits<double>::quiet_NaN();
  }
  out.oracle_value = expected_theta_quadrature(mut, self, &out.oracle_error);
  const double band = std::max(tolerance, 10.0 * out.oracle_error);
  out.derived_supported = std::abs(out.derived_value - out.oracle_value) <= band;
  out.printed_supported = std::isfinite(out.printed_value) && std::abs(out.printed_value - out.oracle_value) <= band;
  return out;
}

}  // namespace mutforest
