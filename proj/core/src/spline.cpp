#include "lhspline/spline.hpp"

#include "lhspline/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lhspline {
namespace {

void check_knots(std::span<const double> knots, std::size_t min_size) {
  if (knots.size() < min_size) {
    throw UsageError(fmt::format("need at least {} knots, got {}", min_size, knots.size()));
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i])) throw DataError("knots must be finite");
    if (i > 0 && !(knots[i] > knots[i - 1])) {
      throw DataError(fmt::format("knots must be strictly increasing (knot {} = {} after {})", i,
                                  knots[i], knots[i - 1]));
    }
  }
}

// Solves the symmetric tridiagonal system R x = rhs in place (Thomas
// algorithm). diag has m entries, off has m-1.
void solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                       std::vector<double>& rhs) {
  const std::size_t m = diag.size();
  if (m == 0) return;
  std::vector<double> c(m, 0.0);
  double denom = diag[0];
  c[0] = m > 1 ? off[0] / denom : 0.0;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < m; ++i) {
    denom = diag[i] - off[i - 1] * c[i - 1];
    if (i + 1 < m) c[i] = off[i] / denom;
    rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

struct Banded {
  std::vector<double> h;       // N-1 interval widths
  std::vector<double> r_diag;  // N-2
  std::vector<double> r_off;   // N-3
};

Banded banded_parts(std::span<const double> knots) {
  const std::size_t n = knots.size();
  Banded b;
  b.h.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) b.h[i] = knots[i + 1] - knots[i];
  if (n >= 3) {
    b.r_diag.resize(n - 2);
    for (std::size_t j = 0; j < n - 2; ++j) b.r_diag[j] = (b.h[j] + b.h[j + 1]) / 3.0;
    if (n >= 4) {
      b.r_off.resize(n - 3);
      for (std::size_t j = 0; j + 1 < n - 2; ++j) b.r_off[j] = b.h[j + 1] / 6.0;
    }
  }
  return b;
}

// (Q' v)_j for interior knot j+1, j = 0..N-3.
std::vector<double> apply_q_transpose(const std::vector<double>& h, std::span<const double> v) {
  const std::size_t m = h.size() - 1;
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = (v[j + 2] - v[j + 1]) / h[j + 1] - (v[j + 1] - v[j]) / h[j];
  }
  return out;
}

}  // namespace

SplineModel SplineModel::interpolate(std::vector<double> knots, std::vector<double> values) {
  check_knots(knots, 2);
  if (values.size() != knots.size()) {
    throw UsageError(fmt::format("{} values for {} knots", values.size(), knots.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("spline values must be finite");
  }
  SplineModel model;
  const std::size_t n = knots.size();
  const Banded b = banded_parts(knots);
  model.second_derivs.assign(n, 0.0);
  if (n >= 3) {
    std::vector<double> gamma = apply_q_transpose(b.h, values);
    solve_tridiagonal(b.r_diag, b.r_off, gamma);
    std::copy(gamma.begin(), gamma.end(), model.second_derivs.begin() + 1);
  }
  const auto& g = values;
  const auto& gam = model.second_derivs;
  model.left_slope = (g[1] - g[0]) / b.h[0] - b.h[0] * gam[1] / 6.0;
  model.right_slope = (g[n - 1] - g[n - 2]) / b.h[n - 2] + b.h[n - 2] * gam[n - 2] / 6.0;
  model.knots = std::move(knots);
  model.values = std::move(values);
  return model;
}

double SplineModel::operator()(double x) const {
  if (!std::isfinite(x)) throw UsageError("spline evaluated at a non-finite point");
  const std::size_t n = knots.size();
  if (x <= knots.front()) return values.front() + left_slope * (x - knots.front());
  if (x >= knots.back()) return values.back() + right_slope * (x - knots.back());
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  const std::size_t k = std::min(i, n - 2);
  const double h = knots[k + 1] - knots[k];
  const double a = x - knots[k];
  const double b = knots[k + 1] - x;
  return (a * values[k + 1] + b * values[k]) / h -
         a * b / 6.0 * ((1.0 + a / h) * second_derivs[k + 1] + (1.0 + b / h) * second_derivs[k]);
}

double SplineModel::derivative(double x) const {
  const std::size_t n = knots.size();
  if (x <= knots.front()) return left_slope;
  if (x >= knots.back()) return right_slope;
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  const std::size_t k = std::min(i, n - 2);
  const double h = knots[k + 1] - knots[k];
  const double a = x - knots[k];
  const double b = knots[k + 1] - x;
  const double g0 = second_derivs[k];
  const double g1 = second_derivs[k + 1];
  return (values[k + 1] - values[k]) / h + (3.0 * a * a - h * h) / (6.0 * h) * g1 -
         (3.0 * b * b - h * h) / (6.0 * h) * g0;
}

double SplineModel::second_derivative(double x) const {
  const std::size_t n = knots.size();
  if (x <= knots.front() || x >= knots.back()) return 0.0;
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  const std::size_t k = std::min(i, n - 2);
  const double h = knots[k + 1] - knots[k];
  return ((x - knots[k]) * second_derivs[k + 1] + (knots[k + 1] - x) * second_derivs[k]) / h;
}

double natural_spline_eval(const SplineModel& model, double x) { return model(x); }

double PenaltyMatrix::quadratic_form(std::span<const double> values) const {
  const Eigen::Map<const Eigen::VectorXd> g(values.data(), static_cast<Eigen::Index>(values.size()));
  return g.dot(matrix * g);
}

PenaltyMatrix penalty_matrix(std::span<const double> knots) {
  check_knots(knots, 3);
  const std::size_t n = knots.size();
  const std::size_t m = n - 2;
  const Banded b = banded_parts(knots);

  // Columns of R^-1 Q' via one tridiagonal solve per unit vector; Q' e_i has
  // at most three nonzeros.
  Eigen::MatrixXd rinv_qt(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  std::vector<double> unit(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    unit[i] = 1.0;
    std::vector<double> col = apply_q_transpose(b.h, unit);
    solve_tridiagonal(b.r_diag, b.r_off, col);
    for (std::size_t j = 0; j < m; ++j) {
      rinv_qt(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = col[j];
    }
    unit[i] = 0.0;
  }
  // K = Q (R^-1 Q'); Q is banded, so each row of K combines three rows.
  PenaltyMatrix penalty;
  penalty.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < m; ++j) {
    const auto row = rinv_qt.row(static_cast<Eigen::Index>(j));
    const double q0 = 1.0 / b.h[j];
    const double q2 = 1.0 / b.h[j + 1];
    const double q1 = -q0 - q2;
    penalty.matrix.row(static_cast<Eigen::Index>(j)) += q0 * row;
    penalty.matrix.row(static_cast<Eigen::Index>(j + 1)) += q1 * row;
    penalty.matrix.row(static_cast<Eigen::Index>(j + 2)) += q2 * row;
  }
  penalty.matrix = 0.5 * (penalty.matrix + penalty.matrix.transpose()).eval();
  return penalty;
}

}  // namespace lhspline
