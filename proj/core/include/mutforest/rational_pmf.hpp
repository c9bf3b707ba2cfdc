#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mutforest/lattice_pmf.hpp"

namespace mutforest {

using Rational = boost::multiprecision::cpp_rational;

/// Parses a decimal literal such as "0.3" or "-1.25" into an exact rational.
inline Rational parse_decimal(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("parse_decimal: empty literal");
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  boost::multiprecision::cpp_int num = 0, den = 1;
  bool dot = false, digits = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.' && !dot) {
      dot = true;
    } else if (c >= '0' && c <= '9') {
      num = num * 10 + (c - '0');
      if (dot) den *= 10;
      digits = true;
    } else {
      throw std::invalid_argument("parse_decimal: bad literal '" + std::string(text) + "'");
    }
  }
  if (!digits) throw std::invalid_argument("parse_decimal: bad literal '" + std::string(text) + "'");
  Rational r(num, den);
  return negative ? Rational(-r) : r;
}

/// Exact finite-support measure, used to check the floating-point routines.
/// Intended for small supports (a few thousand points).
class RationalPmf {
 public:
  static constexpr std::size_t kMaxSupport = 10'000;

  explicit RationalPmf(int dim = 1) : dim_(dim) {}

  static RationalPmf delta(int dim, const LatticeVector& at) {
    RationalPmf p(dim);
    p.add(at, Rational(1));
    return p;
  }

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<LatticeVector, Rational>& entries() const { return entries_; }

  void add(const LatticeVector& k, const Rational& p) {
    if (static_cast<int>(k.size()) != dim_) throw std::invalid_argument("RationalPmf: point has wrong dimension");
    if (p == 0) return;
    auto [it, inserted] = entries_.try_emplace(k, p);
    if (!inserted) {
      it->second += p;
      if (it->second == 0) entries_.erase(it);
    }
    if (entries_.size() > kMaxSupport) throw std::length_error("RationalPmf: support exceeds the exact-mode limit");
  }

  Rational operator()(const LatticeVector& k) const {
    auto it = entries_.find(k);
    return it == entries_.end() ? Rational(0) : it->second;
  }

  Rational mass() const {
    Rational m = 0;
    for (const auto& [k, p] : entries_) m += p;
    return m;
  }

  SparsePmf to_double(SparsePmf::Support support = SparsePmf::Support::signed_values) const {
    std::vector<std::pair<LatticeVector, double>> e;
    for (const auto& [k, p] : entries_) e.emplace_back(k, static_cast<double>(p));
    return SparsePmf::from_entries(dim_, std::move(e), support);
  }

 private:
  int dim_;
  std::map<LatticeVector, Rational> entries_;
};

inline RationalPmf convolve(const RationalPmf& p, const RationalPmf& q) {
  if (p.dim() != q.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  RationalPmf out(p.dim());
  LatticeVector k(static_cast<std::size_t>(p.dim()));
  for (const auto& [a, pa] : p.entries()) {
    for (const auto& [b, qb] : q.entries()) {
      for (std::size_t i = 0; i < k.size(); ++i) k[i] = a[i] + b[i];
      out.add(k, pa * qb);
    }
  }
  return out;
}

/// Exact partial sum of mu_i(k) = sum_{n <= n_terms} n^{-1} nu_i^{*n}(k + (n-1) e_i)
/// computed through the free walk with steps nu_i - e_i.
inline RationalPmf mutation_series_exact(const std::vector<RationalPmf>& law, int type, int n_terms) {
  const int d = static_cast<int>(law.size());
  RationalPmf step(d);
  for (const auto& [k, p] : law.at(static_cast<std::size_t>(type)).entries()) {
    LatticeVector s = k;
    --s[static_cast<std::size_t>(type)];
    step.add(s, p);
  }
  RationalPmf walk = RationalPmf::delta(d, LatticeVector(static_cast<std::size_t>(d), 0));
  RationalPmf mu(d);
  for (int n = 1; n <= n_terms; ++n) {
    walk = convolve(walk, step);
    for (const auto& [k, p] : walk.entries()) {
      if (k[static_cast<std::size_t>(type)] != -1) continue;
      LatticeVector target = k;
      target[static_cast<std::size_t>(type)] = 0;
      mu.add(target, p / n);
    }
  }
  return mu;
}

}  // namespace mutforest
