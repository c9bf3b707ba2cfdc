#include "mutforest/mutation_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mutforest {

namespace {

constexpr double kUnitTolerance = 1e-12;

bool at_least_one(double m) { return m > 1.0 - kUnitTolerance; }

// Cluster-size masses (1/n) P(X^{ii}_n = -1), n = 1, 2, ..., from the 1-D
// marginal walk, until the running sum reaches 1 - eps or max_terms.
std::vector<double> first_passage_masses(const SparsePmf& marginal, double eps, std::int64_t max_terms) {
  const int down = marginal.min_coord(0);  // -1 or 0
  const int up = marginal.max_coord(0);
  std::vector<std::pair<int, double>> steps;
  for (std::size_t e = 0; e < marginal.size(); ++e) steps.emplace_back(marginal.point(e)[0], marginal.prob(e));

  // dist[s - lo] = P(X_n = s)
  std::int64_t lo = 0;
  std::vector<double> dist{1.0};
  std::vector<double> masses;
  double acc = 0.0;
  for (std::int64_t n = 1; n <= max_terms; ++n) {
    const std::int64_t new_lo = lo + down;
    std::vector<double> next(dist.size() + static_cast<std::size_t>(up - down), 0.0);
    for (std::size_t c = 0; c < dist.size(); ++c) {
      const double p = dist[c];
      if (p == 0.0) continue;
      for (const auto& [s, q] : steps) next[c + static_cast<std::size_t>(s - down)] += p * q;
    }
    dist.swap(next);
    lo = new_lo;
    const std::int64_t at = -1 - lo;
    const double m = (at >= 0 && at < static_cast<std::int64_t>(dist.size())) ? dist[static_cast<std::size_t>(at)] / static_cast<double>(n) : 0.0;
    masses.push_back(m);
    acc += m;
    if (acc >= 1.0 - eps) break;
    if (down == 0) break;  // walk never descends: the cluster is infinite
  }
  return masses;
}

// Dense box of walk states: axis `type` holds the signed walk coordinate,
// the other axes the nonnegative mutant counts.
struct WalkBox {
  int dim = 0;
  LatticeVector lo, hi;
  std::vector<std::size_t> stride;
  std::vector<double> cells;

  std::size_t volume() const { return cells.size(); }

  void reshape(LatticeVector new_lo, LatticeVector new_hi, std::size_t max_cells) {
    lo = std::move(new_lo);
    hi = std::move(new_hi);
    stride.assign(static_cast<std::size_t>(dim), 1);
    std::size_t vol = 1;
    for (int a = dim - 1; a >= 0; --a) {
      stride[static_cast<std::size_t>(a)] = vol;
      const auto ext = static_cast<std::size_t>(std::max(0, hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)] + 1));
      if (ext != 0 && vol > max_cells / ext) {
        throw std::length_error("mutation_progeny: walk-state box exceeds max_cells; set a support cap or raise max_cells");
      }
      vol *= ext;
    }
    cells.assign(vol, 0.0);
  }
};

}  // namespace

double kemperman_mass(const ProgenyLaw& law, int type, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("kemperman_mass: n must be >= 1");
  const auto step = shifted_step_law(law, type);
  const int axis[] = {type};
  const auto marginal = step.pmf.marginal(axis);
  const auto power = convolve_power(marginal, n);
  const int at[] = {-1};
  return power.pmf(at) / static_cast<double>(n);
}

MutationProgeny mutation_progeny(const ProgenyLaw& law, int type, const MutationProgenyOptions& opts) {
  const int d = law.dim();
  if (type < 0 || type >= d) throw std::out_of_range("mutation_progeny: type index out of range");
  if (!(opts.eps > 0.0)) throw std::invalid_argument("mutation_progeny: eps must be positive");
  if (opts.cap && static_cast<int>(opts.cap->max_coord.size()) != d) {
    throw std::invalid_argument("mutation_progeny: support cap has wrong dimension");
  }
  MutationProgeny out;
  out.type = type;
  const auto cond = condition_ab(law, type);
  if (cond == MutationCondition::neither) {
    std::ostringstream msg;
    msg << "mutation_progeny: type " << type + 1
        << " satisfies neither (A) nor (B); its clusters give birth to an infinite number of children";
    throw std::domain_error(msg.str());
  }
  if (cond == MutationCondition::B) {
    out.mode = SeriesMode::dirac;
    out.pmf = SparsePmf::zero_delta(d);
    return out;
  }

  const auto step = shifted_step_law(law, type).pmf;
  const int axis[] = {type};
  const auto masses = first_passage_masses(step.marginal(axis), opts.eps, opts.max_terms);
  const auto terms = static_cast<std::int64_t>(masses.size());
  double first_passage = 0.0;
  for (double m : masses) first_passage += m;

  const auto ti = static_cast<std::size_t>(type);
  LatticeVector step_lo(static_cast<std::size_t>(d)), step_hi(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    step_lo[static_cast<std::size_t>(a)] = step.min_coord(a);
    step_hi[static_cast<std::size_t>(a)] = step.max_coord(a);
  }

  WalkBox box;
  box.dim = d;
  box.reshape(LatticeVector(static_cast<std::size_t>(d), 0), LatticeVector(static_cast<std::size_t>(d), 0), opts.max_cells);
  box.cells[0] = 1.0;

  PmfAccumulator acc(d, LatticeVector(static_cast<std::size_t>(d), 0),
                     [&] {
                       LatticeVector hi(static_cast<std::size_t>(d), 0);
                       for (int a = 0; a < d; ++a) {
                         if (a == type) continue;
                         auto h = static_cast<std::int64_t>(std::max(0, step_hi[static_cast<std::size_t>(a)])) * std::max<std::int64_t>(terms, 1);
                         if (opts.cap) h = std::min<std::int64_t>(h, opts.cap->max_coord[static_cast<std::size_t>(a)]);
                         hi[static_cast<std::size_t>(a)] = static_cast<int>(std::min<std::int64_t>(h, std::numeric_limits<int>::max() / 2));
                       }
                       return hi;
                     }());

  std::vector<int> idx(static_cast<std::size_t>(d));
  std::vector<int> target(static_cast<std::size_t>(d));
  for (std::int64_t n = 1; n <= terms; ++n) {
    LatticeVector lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
      const auto sa = static_cast<std::size_t>(a);
      lo[sa] = box.lo[sa] + step_lo[sa];
      hi[sa] = box.hi[sa] + step_hi[sa];
      if (a != type && opts.cap) hi[sa] = std::min(hi[sa], opts.cap->max_coord[sa]);
    }
    // States above terms - n - 1 cannot come back to -1 within the series.
    hi[ti] = static_cast<int>(std::min<std::int64_t>(hi[ti], terms - n - 1 < -1 ? -1 : terms - n - 1));
    hi[ti] = std::max(hi[ti], -1);
    lo[ti] = std::min(lo[ti], hi[ti]);

    WalkBox next;
    next.dim = d;
    next.reshape(lo, hi, opts.max_cells);

    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t c = 0; c < box.volume(); ++c) {
      if (c > 0) {
        for (int a = d - 1; a >= 0; --a) {
          const auto sa = static_cast<std::size_t>(a);
          if (++idx[sa] <= box.hi[sa] - box.lo[sa]) break;
          idx[sa] = 0;
        }
      }
      const double p = box.cells[c];
      if (p == 0.0) continue;
      for (std::size_t e = 0; e < step.size(); ++e) {
        const auto s = step.point(e);
        std::size_t li = 0;
        bool inside = true;
        for (int a = 0; a < d && inside; ++a) {
          const auto sa = static_cast<std::size_t>(a);
          const int v = box.lo[sa] + idx[sa] + s[sa];
          if (v > next.hi[sa]) inside = false;
          li += static_cast<std::size_t>(v - next.lo[sa]) * next.stride[sa];
        }
        if (inside) next.cells[li] += p * step.prob(e);
      }
    }
    box = std::move(next);

    // Walk states with X^{ii}_n = -1 contribute (1/n) P(.) at (k with k_i = 0).
    const auto slice = static_cast<std::size_t>(-1 - box.lo[ti]);
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t c = 0; c < box.volume(); ++c) {
      if (c > 0) {
        for (int a = d - 1; a >= 0; --a) {
          const auto sa = static_cast<std::size_t>(a);
          if (++idx[sa] <= box.hi[sa] - box.lo[sa]) break;
          idx[sa] = 0;
        }
      }
      if (static_cast<std::size_t>(idx[ti]) != slice) continue;
      const double p = box.cells[c];
      if (p == 0.0) continue;
      for (int a = 0; a < d; ++a) target[static_cast<std::size_t>(a)] = a == type ? 0 : box.lo[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)];
      acc.add(target, p / static_cast<double>(n));
    }
  }

  out.pmf = acc.finish();
  out.terms = terms;
  out.truncation_error = std::max(0.0, 1.0 - first_passage);
  out.support_dropped_mass = std::max(0.0, first_passage - out.pmf.mass());
  return out;
}

std::vector<SparsePmf> MutationLaw::laws() const {
  std::vector<SparsePmf> out;
  for (const auto& t : types) out.push_back(t.pmf);
  return out;
}

MutationLaw mutation_law(const ProgenyLaw& law, const MutationProgenyOptions& opts) {
  MutationLaw mu;
  mu.dim = law.dim();
  for (int i = 0; i < law.dim(); ++i) mu.types.push_back(mutation_progeny(law, i, opts));
  return mu;
}

MutationMeanReport mutation_mean_report(const MeanReport& r) {
  const auto& m = r.mean_matrix;
  const int d = static_cast<int>(m.rows());
  MutationMeanReport out;
  out.finite_values = Eigen::MatrixXd::Zero(d, d);
  out.infinite.assign(static_cast<std::size_t>(d), std::vector<bool>(static_cast<std::size_t>(d), false));
  out.moment_order.assign(static_cast<std::size_t>(d), 1);
  Eigen::MatrixXd pattern = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const bool heavy = at_least_one(m(i, i));
    if (heavy) out.moment_order[static_cast<std::size_t>(i)] = 0;
    for (int j = 0; j < d; ++j) {
      if (i == j || m(i, j) == 0.0) continue;
      pattern(i, j) = 1.0;
      if (heavy) {
        out.infinite[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
        out.any_infinite = true;
      } else {
        out.finite_values(i, j) = m(i, j) / (1.0 - m(i, i));
      }
    }
  }
  out.irreducible = is_irreducible(pattern);
  out.primitive = is_primitive(pattern);
  if (out.any_infinite) {
    out.criticality = Criticality::supercritical;
    return out;
  }
  const Eigen::MatrixXd& mb = out.finite_values;
  if (out.irreducible) {
    // the diagonal is zero, so Mbar can be periodic; iterate on Mbar + I
    const auto perron = dominant_eigenpair_shifted(mb);
    out.spectral_radius = perron.rho;
    out.right_eigvec = perron.right;
    out.left_eigvec = perron.left;
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(mb, false);
    out.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  out.criticality = classify_spectral_radius(*out.spectral_radius);
  return out;
}

double mean_identity_residual(const MeanReport& r, const MutationMeanReport& rbar) {
  const auto& m = r.mean_matrix;
  const int d = static_cast<int>(m.rows());
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (rbar.is_infinite(i, j)) continue;
      const double rebuilt = (i == j ? 0.0 : (1.0 - m(i, i)) * rbar.finite_values(i, j)) + (i == j ? m(i, i) : 0.0);
      worst = std::max(worst, std::abs(rebuilt - m(i, j)));
    }
  }
  return worst;
}

EigenRelationReport eigen_relation_check(const MeanReport& r, const MutationMeanReport& rbar, double tolerance) {
  EigenRelationReport out;
  out.applicable = r.primitive && rbar.irreducible && rbar.right_eigvec && r.right_eigvec;
  if (!out.applicable) return out;
  out.rho = r.spectral_radius;
  out.rho_bar = *rbar.spectral_radius;
  const Eigen::VectorXd& u = *r.right_eigvec;
  const Eigen::VectorXd& v = *r.left_eigvec;
  const Eigen::VectorXd& ub = *rbar.right_eigvec;
  const Eigen::VectorXd& vb = *rbar.left_eigvec;
  out.right_error = (ub - u).cwiseAbs().maxCoeff();
  Eigen::VectorXd w = v.cwiseProduct((Eigen::VectorXd::Ones(v.size()) - r.mean_matrix.diagonal()));
  w /= ub.dot(w);
  out.left_error = (vb - w).cwiseAbs().maxCoeff();
  out.right_holds = out.right_error < tolerance;
  out.left_holds = out.left_error < tolerance;
  return out;
}

JointMutationQuery JointMutationQuery::from_cross(std::vector<std::int64_t> x,
                                                  std::vector<std::vector<std::int64_t>> cross) {
  JointMutationQuery q;
  const std::size_t d = x.size();
  q.n = x;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j) q.n[j] += cross.at(i).at(j);
    }
  }
  q.x = std::move(x);
  q.cross = std::move(cross);
  return q;
}

std::optional<std::string> check_query(const JointMutationQuery& q) {
  const std::size_t d = q.x.size();
  if (d == 0) return "root vector is empty";
  if (q.n.size() != d || q.cross.size() != d) return "query dimensions disagree";
  for (std::size_t i = 0; i < d; ++i) {
    if (q.cross[i].size() != d) return "cross-count matrix is not square";
    if (q.x[i] < 0) return "x_" + std::to_string(i + 1) + " < 0";
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j && q.cross[i][j] < 0) return "k_" + std::to_string(i + 1) + std::to_string(j + 1) + " < 0";
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::int64_t rhs = q.x[j];
    for (std::size_t i = 0; i < d; ++i) {
      if (i != j) rhs += q.cross[i][j];
    }
    if (q.n[j] != rhs) {
      return "n_" + std::to_string(j + 1) + " = x_" + std::to_string(j + 1) + " + sum_{i != " + std::to_string(j + 1) +
             "} k_i" + std::to_string(j + 1) + " violated (" + std::to_string(q.n[j]) + " != " + std::to_string(rhs) + ")";
    }
  }
  return std::nullopt;
}

namespace {
__extension__ using wide_int = __int128;
}  // namespace

std::int64_t integer_determinant(std::vector<std::vector<std::int64_t>> a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  std::vector<std::vector<wide_int>> m(n, std::vector<wide_int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != n) throw std::invalid_argument("integer_determinant: matrix is not square");
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a[i][j];
  }
  constexpr wide_int kLimit = static_cast<wide_int>(std::numeric_limits<std::int64_t>::max());
  int sign = 1;
  wide_int prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t swap = k + 1;
      while (swap < n && m[swap][k] == 0) ++swap;
      if (swap == n) return 0;
      std::swap(m[k], m[swap]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        const wide_int num = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        m[i][j] = num / prev;  // exact by Sylvester's identity
        if (m[i][j] > kLimit || m[i][j] < -kLimit) throw std::overflow_error("integer_determinant: entry overflow");
      }
      m[i][k] = 0;
    }
    prev = m[k][k];
  }
  return static_cast<std::int64_t>(sign * m[n - 1][n - 1]);
}

JointMutationTerm joint_mutation_pmf(const MutationLaw& mu, const JointMutationQuery& q) {
  if (auto err = check_query(q)) throw std::invalid_argument("joint_mutation_pmf: inconsistent query: " + *err);
  const int d = mu.dim;
  if (static_cast<int>(q.x.size()) != d) throw std::invalid_argument("joint_mutation_pmf: query dimension differs from the law");

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    if (q.n[i] > 0) kept.push_back(i);
  }
  std::vector<std::vector<std::int64_t>> k(kept.size(), std::vector<std::int64_t>(kept.size()));
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = 0; b < kept.size(); ++b) {
      k[a][b] = a == b ? q.n[kept[a]] : -q.cross[kept[a]][kept[b]];
    }
  }
  JointMutationTerm out;
  out.determinant = integer_determinant(k);
  double denom = 1.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) denom *= static_cast<double>(std::max<std::int64_t>(q.n[i], 1));
  out.combinatorial_factor = static_cast<double>(out.determinant) / denom;

  double prod = 1.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    LatticeVector row(static_cast<std::size_t>(d), 0);
    bool zero_row = true;
    for (std::size_t j = 0; j < static_cast<std::size_t>(d); ++j) {
      if (j == i) continue;
      row[j] = static_cast<int>(q.cross[i][j]);
      zero_row &= q.cross[i][j] == 0;
    }
    if (q.n[i] == 0) {
      if (!zero_row) return out;  // mu^{*0} is the Dirac mass at 0
      continue;
    }
    const auto power = convolve_power(mu.pmf(static_cast<int>(i)), q.n[i]);
    prod *= power.pmf(row);
    if (prod == 0.0) break;
  }
  out.probability = out.combinatorial_factor * prod;
  return out;
}

}  // namespace mutforest
