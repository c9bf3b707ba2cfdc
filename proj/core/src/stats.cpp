#include "mutforest/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace mutforest {

void Moments::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void Moments::merge(const Moments& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double Moments::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
double Moments::sd() const { return std::sqrt(variance()); }
double Moments::se() const { return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0; }

Moments moments_of(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.add(x);
  return m;
}

ChiSquareResult chi_square_two_sample(const std::map<std::vector<std::int64_t>, std::int64_t>& a,
                                      const std::map<std::vector<std::int64_t>, std::int64_t>& b,
                                      double min_expected) {
  std::map<std::vector<std::int64_t>, std::pair<double, double>> joint;
  double na = 0.0, nb = 0.0;
  for (const auto& [k, c] : a) {
    joint[k].first += static_cast<double>(c);
    na += static_cast<double>(c);
  }
  for (const auto& [k, c] : b) {
    joint[k].second += static_cast<double>(c);
    nb += static_cast<double>(c);
  }
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("chi_square_two_sample: empty sample");
  const double n = na + nb;
  const double smaller = std::min(na, nb);

  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> residual{0.0, 0.0};
  for (const auto& [k, c] : joint) {
    const double pooled = c.first + c.second;
    if (pooled * smaller / n >= min_expected) {
      bins.push_back(c);
    } else {
      residual.first += c.first;
      residual.second += c.second;
    }
  }
  if ((residual.first + residual.second) * smaller / n >= min_expected || bins.empty()) {
    bins.push_back(residual);
  } else if (residual.first + residual.second > 0.0) {
    // Too thin to stand alone: fold into the smallest regular bin.
    auto it = std::min_element(bins.begin(), bins.end(), [](const auto& x, const auto& y) {
      return x.first + x.second < y.first + y.second;
    });
    it->first += residual.first;
    it->second += residual.second;
  }

  ChiSquareResult out;
  out.bins = static_cast<int>(bins.size());
  out.dof = out.bins - 1;
  for (const auto& [ca, cb] : bins) {
    const double pooled = ca + cb;
    const double ea = pooled * na / n;
    const double eb = pooled * nb / n;
    out.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  if (out.dof > 0) {
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.statistic = d;
  out.critical = std::sqrt(std::log(2.0 / alpha) / 2.0) * std::sqrt((na + nb) / (na * nb));
  out.reject = d > out.critical;
  return out;
}

SurvivalCurve empirical_survival(std::span<const double> sample, std::span<const double> grid) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  SurvivalCurve out;
  out.grid.assign(grid.begin(), grid.end());
  const double n = static_cast<double>(sorted.size());
  for (double t : grid) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    const double s = n > 0 ? static_cast<double>(above) / n : 0.0;
    out.survival.push_back(s);
    out.se.push_back(n > 0 ? std::sqrt(s * (1.0 - s) / n) : 0.0);
  }
  return out;
}

double chi_square_quantile(int dof, double p) {
  return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

}  // namespace mutforest
