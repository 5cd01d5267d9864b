#include "lhspline/spline.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace lhspline;

TEST(Spline, ConstantEverywhere) {
  const auto s = SplineModel::interpolate({0, 1, 2.5, 4}, {3, 3, 3, 3});
  for (double x : {-10.0, 0.0, 0.7, 3.9, 25.0}) EXPECT_DOUBLE_EQ(s(x), 3.0);
}

TEST(Spline, LinearEverywhere) {
  const std::vector<double> k{0, 1, 2.5, 4, 4.5};
  std::vector<double> v;
  for (double x : k) v.push_back(1.5 - 2.0 * x);
  const auto s = SplineModel::interpolate(k, v);
  for (double x : {-3.0, 0.2, 2.0, 4.2, 9.0}) EXPECT_NEAR(s(x), 1.5 - 2.0 * x, 1e-13);
  EXPECT_NEAR(s.left_slope, -2.0, 1e-13);
  EXPECT_NEAR(s.right_slope, -2.0, 1e-13);
}

TEST(Spline, MatchesDenseSolve) {
  const std::vector<double> k{0, 1, 2, 3, 4};
  const std::vector<double> v{0, 1, 0, 1, 0};
  const auto s = SplineModel::interpolate(k, v);
  EXPECT_NEAR(s(0.5), oracle::natural_spline_dense_eval(k, v, 0.5), 1e-14);
  EXPECT_NEAR(natural_spline_eval(s, 2.7), oracle::natural_spline_dense_eval(k, v, 2.7), 1e-14);
  const auto m = oracle::natural_second_derivs_dense(k, v);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(s.second_derivs[i], m[i], 1e-13);
}

TEST(Spline, LinearBeyondKnotsWithBoundarySlope) {
  const auto s = SplineModel::interpolate({0, 1, 2, 3}, {0, 2, 1, 5});
  EXPECT_NEAR(s(-2.0), s(0.0) - 2.0 * s.left_slope, 1e-13);
  EXPECT_NEAR(s(5.0), s(3.0) + 2.0 * s.right_slope, 1e-13);
  EXPECT_NEAR(s.derivative(3.0), s.right_slope, 1e-13);
  EXPECT_EQ(s.second_derivative(7.0), 0.0);
}

TEST(Penalty, LinearInNullSpace) {
  const std::vector<double> k{0, 0.3, 1.1, 2, 2.2, 3};
  const auto p = penalty_matrix(k);
  std::vector<double> g;
  for (double x : k) g.push_back(4.0 + 0.5 * x);
  EXPECT_NEAR(p.quadratic_form(g), 0.0, 1e-12);
}

TEST(Penalty, MatchesQuadrature) {
  const std::vector<double> k{0, 1, 2, 3};
  const std::vector<double> v{0, 1, 4, 9};
  const double q = penalty_matrix(k).quadratic_form(v);
  EXPECT_LT(oracle::rel_diff(q, oracle::roughness_by_quadrature(k, v)), 1e-10);
}

TEST(Penalty, RankNMinusTwo) {
  std::vector<double> k(12);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = 0.25 * static_cast<double>(i);
  const auto p = penalty_matrix(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.matrix);
  const auto& ev = eig.eigenvalues();
  EXPECT_NEAR(ev(0), 0.0, 1e-10);
  EXPECT_NEAR(ev(1), 0.0, 1e-10);
  EXPECT_GT(ev(2), 1e-6);
  EXPECT_NEAR((p.matrix - p.matrix.transpose()).norm(), 0.0, 1e-12);
}

TEST(Penalty, RandomSplines) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> gap(0.1, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> k{0.0}, v;
    for (int i = 1; i < 9; ++i) k.push_back(k.back() + gap(rng));
    for (std::size_t i = 0; i < k.size(); ++i) v.push_back(z(rng));
    EXPECT_LT(oracle::rel_diff(penalty_matrix(k).quadratic_form(v), oracle::roughness_by_quadrature(k, v)),
              1e-10);
    EXPECT_LT(oracle::rel_diff(oracle::roughness_closed_form(k, v), oracle::roughness_by_quadrature(k, v)),
              1e-12);
  }
}
