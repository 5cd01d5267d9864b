#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace lhspline {

/// Natural cubic spline stored by its knot values and second derivatives.
/// Linear outside [knots.front(), knots.back()].
struct SplineModel {
  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> second_derivs;  // front() == back() == 0
  double left_slope = 0.0;
  double right_slope = 0.0;

  /// Natural interpolating spline through (knots, values).
  static SplineModel interpolate(std::vector<double> knots, std::vector<double> values);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  std::size_t size() const { return knots.size(); }
};

double natural_spline_eval(const SplineModel& model, double x);

/// Roughness penalty on knot values: g' K g equals the integral of the
/// squared second derivative of the natural interpolant. K = Q R^-1 Q'
/// with Q the (N x N-2) second-difference map and R the tridiagonal
/// interior Gram matrix.
struct PenaltyMatrix {
  Eigen::MatrixXd matrix;

  double quadratic_form(std::span<const double> values) const;
};

PenaltyMatrix penalty_matrix(std::span<const double> knots);

}  // namespace lhspline
