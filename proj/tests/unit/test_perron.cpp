#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "laws.hpp"
#include "mutforest/lattice_pmf.hpp"
#include "oracles.hpp"

namespace mutforest {
namespace {

TEST(Perron, DiamondSpectralRadius) {
  auto r = mean_report(testing_laws::diamond());
  EXPECT_TRUE(r.irreducible);
  EXPECT_TRUE(r.primitive);
  EXPECT_NEAR(r.spectral_radius, (1.4 + std::sqrt(0.12)) / 2.0, 1e-12);
  EXPECT_EQ(r.criticality, Criticality::subcritical);
  ASSERT_TRUE(r.right_eigvec && r.left_eigvec);
  EXPECT_NEAR(r.right_eigvec->sum(), 1.0, 1e-12);
  EXPECT_NEAR(r.right_eigvec->dot(*r.left_eigvec), 1.0, 1e-12);
}

TEST(Perron, MatchesEigenSolverOnRandomPositiveMatrices) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    const int d = 2 + rep % 4;
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = u(rng);
    }
    auto p = perron_eigenpair(m);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(p.rho, rho, 1e-10 * rho);
    EXPECT_LT((m * p.right - p.rho * p.right).cwiseAbs().maxCoeff(), 1e-10 * rho);
    EXPECT_LT((p.left.transpose() * m - p.rho * p.left.transpose()).cwiseAbs().maxCoeff(), 1e-10 * rho);
    EXPECT_GT(p.right.minCoeff(), 0.0);
  }
}

TEST(Perron, ShiftedHandlesNegativeDiagonal) {
  Eigen::MatrixXd a(2, 2);
  a << 0.8, 0.4, 0.1, 0.2;  // Lambda (M - I) of the supercritical test law with rates (2, 1)
  auto p = dominant_eigenpair_shifted(a);
  Eigen::Matrix2d a2 = a;
  EXPECT_NEAR(p.rho, oracle::eigenvalues_2x2(a2).first, 1e-12);
  Eigen::MatrixXd b(2, 2);
  b << -1.0, 0.5, 0.3, -2.0;
  auto q = dominant_eigenpair_shifted(b);
  Eigen::Matrix2d b2 = b;
  EXPECT_NEAR(q.rho, oracle::eigenvalues_2x2(b2).first, 1e-12);
}

TEST(Perron, PatternAnalysis) {
  Eigen::MatrixXd cyc(2, 2);
  cyc << 0, 1, 1, 0;
  EXPECT_TRUE(is_irreducible(cyc));
  EXPECT_FALSE(is_primitive(cyc));
  Eigen::MatrixXd tri(2, 2);
  tri << 1, 1, 0, 1;
  EXPECT_FALSE(is_irreducible(tri));
  EXPECT_FALSE(is_primitive(tri));
  Eigen::MatrixXd pos(2, 2);
  pos << 0, 1, 1, 1;
  EXPECT_TRUE(is_primitive(pos));
}

TEST(Perron, Classification) {
  EXPECT_EQ(classify_spectral_radius(0.9), Criticality::subcritical);
  EXPECT_EQ(classify_spectral_radius(1.0 + 1e-12), Criticality::critical);
  EXPECT_EQ(classify_spectral_radius(1.1), Criticality::supercritical);
  EXPECT_EQ(mean_report(testing_laws::critical()).criticality, Criticality::critical);
  EXPECT_EQ(mean_report(testing_laws::triangle()).criticality, Criticality::supercritical);
}

}  // namespace
}  // namespace mutforest
