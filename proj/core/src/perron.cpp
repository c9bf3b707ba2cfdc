#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "mutforest/lattice_pmf.hpp"

namespace mutforest {

namespace {

std::vector<int> reachable(const Eigen::MatrixXd& m, int start, bool transpose) {
  const int d = static_cast<int>(m.rows());
  std::vector<int> level(d, -1);
  std::queue<int> q;
  level[start] = 0;
  q.push(start);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v = 0; v < d; ++v) {
      const double w = transpose ? m(v, u) : m(u, v);
      if (w > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        q.push(v);
      }
    }
  }
  return level;
}

}  // namespace

bool is_irreducible(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  if (d == 0 || m.cols() != d) return false;
  if (!m.allFinite()) return false;
  if (d == 1) return m(0, 0) > 0.0;
  const auto fwd = reachable(m, 0, false);
  const auto bwd = reachable(m, 0, true);
  for (int i = 0; i < d; ++i) {
    if (fwd[i] < 0 || bwd[i] < 0) return false;
  }
  return true;
}

bool is_primitive(const Eigen::MatrixXd& m) {
  if (!is_irreducible(m)) return false;
  // Period of a strongly connected digraph = gcd of level[u] + 1 - level[v]
  // over all edges u -> v, with BFS levels from any vertex.
  const int d = static_cast<int>(m.rows());
  const auto level = reachable(m, 0, false);
  int g = 0;
  for (int u = 0; u < d; ++u) {
    for (int v = 0; v < d; ++v) {
      if (m(u, v) > 0.0) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    }
  }
  return g == 1;
}

PerronData perron_eigenpair(const Eigen::MatrixXd& m, double tolerance, int max_iterations) {
  const int d = static_cast<int>(m.rows());
  if (!is_primitive(m)) throw std::invalid_argument("perron_eigenpair: matrix is not primitive");
  PerronData out;
  auto iterate = [&](const Eigen::MatrixXd& a, Eigen::VectorXd& x) {
    x = Eigen::VectorXd::Constant(d, 1.0 / d);
    for (int it = 1; it <= max_iterations; ++it) {
      Eigen::VectorXd y = a * x;
      const double s = y.sum();
      if (!(s > 0.0)) throw std::runtime_error("perron_eigenpair: iteration collapsed to zero");
      y /= s;
      const double diff = (y - x).cwiseAbs().maxCoeff();
      x = y;
      if (diff < tolerance) return it;
    }
    throw std::runtime_error("perron_eigenpair: no convergence after " + std::to_string(max_iterations) +
                             " iterations");
  };
  Eigen::VectorXd u, v;
  out.iterations = iterate(m, u);
  out.iterations = std::max(out.iterations, iterate(m.transpose(), v));
  out.rho = (m * u).sum() / u.sum();
  u /= u.sum();
  v /= u.dot(v);
  out.right = u;
  out.left = v;
  return out;
}

PerronData dominant_eigenpair_shifted(const Eigen::MatrixXd& m, double tolerance, int max_iterations) {
  const int d = static_cast<int>(m.rows());
  double shift = 0.0;
  for (int i = 0; i < d; ++i) shift = std::max(shift, -m(i, i));
  shift += 1.0;
  Eigen::MatrixXd shifted = m + shift * Eigen::MatrixXd::Identity(d, d);
  auto out = perron_eigenpair(shifted, tolerance, max_iterations);
  out.rho -= shift;
  return out;
}

}  // namespace mutforest
