#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace mutforest {

/// Mean/variance accumulator. merge() is associative, so per-worker partials
/// can be combined in any fixed order.
class Moments {
 public:
  void add(double x);
  void merge(const Moments& other);

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double sd() const;
  double se() const;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

Moments moments_of(std::span<const double> xs);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins = 0;
};

/// Two-sample chi-square homogeneity test on categorical counts. Categories
/// whose pooled expected count is below `min_expected` are merged into one
/// residual bin.
ChiSquareResult chi_square_two_sample(const std::map<std::vector<std::int64_t>, std::int64_t>& a,
                                      const std::map<std::vector<std::int64_t>, std::int64_t>& b,
                                      double min_expected = 5.0);

struct KsResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double critical = 0.0;   // rejection threshold at the requested level
  bool reject = false;
};

/// Two-sample Kolmogorov-Smirnov distance with the asymptotic critical value
/// sqrt(ln(2/alpha)/2) * sqrt((n+m)/(n*m)).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha);

/// Empirical P(X > t) for each t of the grid, with binomial standard errors.
struct SurvivalCurve {
  std::vector<double> grid;
  std::vector<double> survival;
  std::vector<double> se;
};
SurvivalCurve empirical_survival(std::span<const double> sample, std::span<const double> grid);

double chi_square_quantile(int dof, double p);
double normal_quantile(double p);

}  // namespace mutforest
