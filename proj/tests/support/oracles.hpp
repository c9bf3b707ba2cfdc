#pragma once

// Reference computations used by the tests. They take different routes from
// the library code on purpose and are kept small and slow.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mutforest/lattice_pmf.hpp"

namespace mutforest::oracle {

/// Smallest root of a s^2 - s + c = 0 (for q = c + a q^2).
inline double quadratic_fixed_point(double a, double c) {
  if (a == 0.0) return c;
  return (1.0 - std::sqrt(1.0 - 4.0 * a * c)) / (2.0 * a);
}

/// P(a type-i cluster has no child of another type): smallest fixed point of
/// s = sum_k nu_i(k) s^{k_i} over the litters with k_j = 0 for all j != i,
/// by monotone iteration from 0.
inline double cluster_without_mutants(const ProgenyLaw& law, int type, int iterations = 200000) {
  const auto& p = law.law(type);
  double s = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double next = 0.0;
    for (std::size_t e = 0; e < p.size(); ++e) {
      const auto k = p.point(e);
      bool pure = true;
      for (int j = 0; j < law.dim(); ++j) pure &= j == type || k[static_cast<std::size_t>(j)] == 0;
      if (pure) next += p.prob(e) * std::pow(s, k[static_cast<std::size_t>(type)]);
    }
    if (std::abs(next - s) < 1e-16) return next;
    s = next;
  }
  return s;
}

struct KilledWalk {
  std::map<LatticeVector, double> mu;  // mass absorbed by step n_max, keyed with k_i = 0
  double alive = 0.0;                  // mass still above -1 after n_max steps
};

/// First passage of the type-i walk to -1, followed step by step with the
/// walk killed on arrival; the other coordinates count mutant children.
/// Differs from the library route, which sums (1/n) P(free walk at -1).
inline KilledWalk killed_walk_mutation(const ProgenyLaw& law, int type, int n_max) {
  const int d = law.dim();
  const auto ti = static_cast<std::size_t>(type);
  const auto& p = law.law(type);
  std::map<LatticeVector, double> cur{{LatticeVector(static_cast<std::size_t>(d), 0), 1.0}};
  KilledWalk out;
  for (int n = 1; n <= n_max && !cur.empty(); ++n) {
    std::map<LatticeVector, double> next;
    for (const auto& [s, w] : cur) {
      for (std::size_t e = 0; e < p.size(); ++e) {
        const auto k = p.point(e);
        LatticeVector t = s;
        for (int a = 0; a < d; ++a) t[static_cast<std::size_t>(a)] += k[static_cast<std::size_t>(a)];
        t[ti] -= 1;
        const double q = w * p.prob(e);
        if (t[ti] == -1) {
          t[ti] = 0;
          out.mu[t] += q;
        } else if (t[ti] <= n_max - n - 1) {
          next[t] += q;
        } else {
          out.alive += q;  // cannot come down within the horizon
        }
      }
    }
    cur.swap(next);
  }
  for (const auto& [s, w] : cur) out.alive += w;
  return out;
}

/// Eigenvalues of a 2x2 matrix with real spectrum, largest first.
inline std::pair<double, double> eigenvalues_2x2(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = std::sqrt(tr * tr / 4.0 - det);
  return {tr / 2.0 + disc, tr / 2.0 - disc};
}

/// Brute-force n-fold convolution through a map.
inline std::map<LatticeVector, double> convolve_naive(const SparsePmf& p, int n) {
  std::map<LatticeVector, double> cur{{LatticeVector(static_cast<std::size_t>(p.dim()), 0), 1.0}};
  for (int r = 0; r < n; ++r) {
    std::map<LatticeVector, double> next;
    for (const auto& [k, w] : cur) {
      for (std::size_t e = 0; e < p.size(); ++e) {
        LatticeVector t = k;
        const auto s = p.point(e);
        for (std::size_t a = 0; a < t.size(); ++a) t[a] += s[a];
        next[t] += w * p.prob(e);
      }
    }
    cur.swap(next);
  }
  return cur;
}

/// Random law on {0..max_children}^d with `atoms` support points per type.
inline ProgenyLaw random_law(std::mt19937_64& rng, int d, int atoms, int max_children) {
  std::uniform_int_distribution<int> child(0, max_children);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<SparsePmf> laws;
  for (int i = 0; i < d; ++i) {
    std::vector<std::pair<LatticeVector, double>> entries;
    double total = 0.0;
    for (int a = 0; a < atoms; ++a) {
      LatticeVector k(static_cast<std::size_t>(d));
      for (auto& c : k) c = child(rng);
      const double w = weight(rng);
      total += w;
      entries.emplace_back(std::move(k), w);
    }
    for (auto& [k, w] : entries) w /= total;
    laws.push_back(SparsePmf::from_entries(d, std::move(entries)));
  }
  return ProgenyLaw(std::move(laws));
}

/// Mixture (1 - s) nu + s delta_0, whose mean matrix is (1 - s) M.
inline ProgenyLaw thinned(const ProgenyLaw& law, double s) {
  std::vector<SparsePmf> laws;
  const int d = law.dim();
  for (int i = 0; i < d; ++i) {
    auto entries = law.law(i).entries();
    for (auto& [k, w] : entries) w *= 1.0 - s;
    entries.emplace_back(LatticeVector(static_cast<std::size_t>(d), 0), s);
    laws.push_back(SparsePmf::from_entries(d, std::move(entries)));
  }
  return ProgenyLaw(std::move(laws));
}

}  // namespace mutforest::oracle
