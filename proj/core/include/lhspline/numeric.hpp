#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lhspline::numeric {

// Objective returning f(x) and writing the gradient into `grad`. A
// non-finite return value marks x as outside the admissible region.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeOptions {
  int max_iter = 500;
  double grad_tol = 1e-7;   // max-norm of gradient, scaled by max(1, |f|)
  double f_rel_tol = 1e-14;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

/// BFGS with backtracking line search. Starts from `x0`, which must be
/// admissible.
MinimizeResult minimize_bfgs(const Objective& objective, Eigen::VectorXd x0,
                             const MinimizeOptions& options = {});

/// Central-difference Jacobian of an analytic gradient; symmetrized.
Eigen::MatrixXd hessian_from_gradient(const Objective& objective,
                                      const Eigen::VectorXd& x,
                                      double rel_step = 1e-5);

/// Composite Simpson rule on [a, b] with `panels` (even) subintervals.
double simpson(const std::function<double(double)>& f, double a, double b,
               int panels);

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending and non-empty.
double empirical_quantile_sorted(std::span<const double> sorted, double p);
double empirical_quantile(std::vector<double> values, double p);

double mean(std::span<const double> values);
double median(std::vector<double> values);

/// Runs fn(i) for i in [0, n) on a pool of worker threads. Results must be
/// written to per-index slots; the iteration order is unspecified.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Number of workers used by parallel_for (LHSPLINE_THREADS overrides).
std::size_t worker_count();

}  // namespace lhspline::numeric
