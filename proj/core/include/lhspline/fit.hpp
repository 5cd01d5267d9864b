#pragma once

#include "lhspline/binning.hpp"
#include "lhspline/spline.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lhspline {

/// Orthonormal basis U = [X Z] of knot-value space with X spanning the
/// affine functions (the penalty null space), and B = Z' K Z. Solving in
/// these coordinates keeps the penalized systems well conditioned for
/// large lambda.
struct PenaltyBasis {
  Eigen::MatrixXd u;
  Eigen::MatrixXd b;
};

/// Histogram together with its roughness penalty; shared by every fit on
/// the same bins.
class FitContext {
 public:
  explicit FitContext(LogHistogram hist);

  const LogHistogram& histogram() const { return hist_; }
  const PenaltyMatrix& penalty() const { return penalty_; }
  const PenaltyBasis& basis() const { return basis_; }

  /// Same bins and penalty, different counts.
  FitContext with_counts(std::vector<double> counts) const;

 private:
  LogHistogram hist_;
  PenaltyMatrix penalty_;
  PenaltyBasis basis_;
};

struct IrlsOptions {
  double tol = 1e-8;  // relative objective change
  int max_iter = 100;
};

/// Penalized Poisson fit of the histogram counts: knot values minimize
///   sum_j (exp(g_j) - z_j g_j) + lambda * g' K g.
struct PenalizedFit {
  SplineModel spline;  // unnormalized log-intensity
  double lambda = 0.0;
  double lambda_cv = 0.0;  // 0 when lambda was not selected by GCV
  std::vector<double> weights;     // exp(g_j) at the solution
  std::vector<double> pseudo_obs;  // working responses g + (z - exp(g)) / exp(g)
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> objective_trace;

  const std::vector<double>& values() const { return spline.values; }
};

double penalized_objective(const FitContext& context, std::span<const double> values,
                           double lambda);

/// Gradient of penalized_objective with respect to the knot values.
std::vector<double> penalized_gradient(const FitContext& context, std::span<const double> values,
                                       double lambda);

/// Fisher scoring (Newton) with step halving. Each step solves
/// (W + 2 lambda K) g_new = W u. Starts at log(max(z, 0.5)) unless `start`
/// is given. Throws NumericError if no descent is possible before
/// convergence or the system is singular.
PenalizedFit irls_fit(const FitContext& context, double lambda, const IrlsOptions& options = {},
                      std::optional<std::span<const double>> start = std::nullopt);

/// Smoother matrix (W + 2 lambda K)^-1 W of the converged working problem.
Eigen::MatrixXd smoother_matrix(const FitContext& context, const PenalizedFit& fit);

struct LambdaSelection {
  double lambda_cv = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  // +inf where the fit failed
  std::vector<double> traces;  // tr(A_lambda)
  PenalizedFit fit;            // fit at lambda_cv
};

/// 40 log-spaced values over 8 decades centred on N / (g0' K g0), where g0
/// is the log-intensity of a normal pilot moment-matched on the log scale.
std::vector<double> default_lambda_grid(const FitContext& context, std::size_t points = 40,
                                        double decades = 8.0);

/// Unbiased risk estimate for the Poisson fit (dispersion known):
///   score = deviance(z, exp(g)) + 2 tr(A),  A = (W + 2 lambda K)^-1 W,
/// which approximates the cross-validated Kullback-Leibler risk.
LambdaSelection select_lambda(const FitContext& context, std::span<const double> grid,
                              const IrlsOptions& options = {});

/// Refit at factor * lambda_cv (factor in (0, 1]).
PenalizedFit lambda_adjust(const FitContext& context, const LambdaSelection& selection,
                           double factor = 0.05, const IrlsOptions& options = {});

struct BootstrapCorrection {
  SplineModel corrected;
  std::vector<double> bias;  // mean bootstrap fit minus original, at knots
  std::size_t replicates = 0;
  std::size_t failures = 0;
};

/// Parametric bootstrap: Z*_j ~ Poisson(exp(g_j)), refit at the same lambda,
/// subtract the pointwise mean bias. Replicate b draws from a generator
/// seeded by (seed, b).
BootstrapCorrection bootstrap_bias_correct(const FitContext& context, const PenalizedFit& fit,
                                           std::size_t replicates, std::uint64_t seed,
                                           const IrlsOptions& options = {});

std::string fit_report(const PenalizedFit& fit);

}  // namespace lhspline
