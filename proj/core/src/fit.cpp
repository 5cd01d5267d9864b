#include "lhspline/fit.hpp"

#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"
#include "lhspline/numeric.hpp"
#include "lhspline/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace lhspline {
namespace {

using Eigen::Index;
using Eigen::Map;
using Eigen::VectorXd;

Map<const VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Index>(v.size())};
}

double objective_of(const VectorXd& counts, const Eigen::MatrixXd& k, const VectorXd& g,
                    double lambda) {
  double loglik_part = 0.0;
  for (Index j = 0; j < g.size(); ++j) loglik_part += std::exp(g(j)) - counts(j) * g(j);
  return loglik_part + lambda * g.dot(k * g);
}

// Same objective with the penalty evaluated in the basis coordinates, which
// avoids cancellation when g is close to affine and lambda is large.
double objective_in_basis(const VectorXd& counts, const PenaltyBasis& basis, const VectorXd& g,
                          double lambda) {
  double loglik_part = 0.0;
  for (Index j = 0; j < g.size(); ++j) loglik_part += std::exp(g(j)) - counts(j) * g(j);
  const Index r = basis.b.rows();
  const VectorXd c = basis.u.rightCols(r).transpose() * g;
  return loglik_part + lambda * c.dot(basis.b * c);
}

PenaltyBasis make_basis(const std::vector<double>& knots, const Eigen::MatrixXd& k) {
  const Index n = static_cast<Index>(knots.size());
  Eigen::MatrixXd affine(n, 2);
  for (Index j = 0; j < n; ++j) {
    affine(j, 0) = 1.0;
    affine(j, 1) = knots[static_cast<std::size_t>(j)];
  }
  // full orthonormal completion of span{1, knots}
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(affine);
  PenaltyBasis basis;
  basis.u = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const auto z = basis.u.rightCols(n - 2);
  basis.b = z.transpose() * k * z;
  basis.b = 0.5 * (basis.b + basis.b.transpose()).eval();
  return basis;
}

// (W + 2 lambda K)^-1 applied in basis coordinates with a symmetric
// diagonal scaling.
class PenalizedSystem {
 public:
  PenalizedSystem(const PenaltyBasis& basis, const VectorXd& w, double lambda) : basis_(basis) {
    const Index r = basis.b.rows();
    m_ = basis.u.transpose() * w.asDiagonal() * basis.u;
    m_.bottomRightCorner(r, r) += 2.0 * lambda * basis.b;
    scale_ = m_.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = scale_.asDiagonal() * m_ * scale_.asDiagonal();
    solver_.compute(scaled);
    ok_ = solver_.info() == Eigen::Success && solver_.vectorD().minCoeff() > 1e-14 * scaled.diagonal().maxCoeff();
  }

  bool ok() const { return ok_; }
  const Eigen::MatrixXd& matrix() const { return m_; }

  // Solution of (W + 2 lambda K) x = rhs, in knot-value coordinates.
  VectorXd solve(const VectorXd& rhs) const {
    const VectorXd y = solver_.solve(scale_.cwiseProduct(basis_.u.transpose() * rhs));
    return basis_.u * scale_.cwiseProduct(y);
  }

  // M^-1 applied to the columns of `rhs`, in basis coordinates.
  Eigen::MatrixXd solve_basis(const Eigen::MatrixXd& rhs) const {
    const Eigen::MatrixXd y = solver_.solve(scale_.asDiagonal() * rhs);
    return scale_.asDiagonal() * y;
  }

 private:
  const PenaltyBasis& basis_;
  Eigen::MatrixXd m_;
  VectorXd scale_;
  Eigen::LDLT<Eigen::MatrixXd> solver_;
  bool ok_ = false;
};

PenalizedFit finish(const FitContext& context, VectorXd g, double lambda) {
  PenalizedFit fit;
  fit.lambda = lambda;
  const auto& hist = context.histogram();
  fit.weights.resize(hist.size());
  fit.pseudo_obs.resize(hist.size());
  for (std::size_t j = 0; j < hist.size(); ++j) {
    const double w = std::exp(g(static_cast<Index>(j)));
    fit.weights[j] = w;
    fit.pseudo_obs[j] = g(static_cast<Index>(j)) + (hist.counts[j] - w) / w;
  }
  fit.spline = SplineModel::interpolate(hist.knots, std::vector<double>(g.data(), g.data() + g.size()));
  return fit;
}

}  // namespace

FitContext::FitContext(LogHistogram hist)
    : hist_(std::move(hist)),
      penalty_(penalty_matrix(hist_.knots)),
      basis_(make_basis(hist_.knots, penalty_.matrix)) {}

FitContext FitContext::with_counts(std::vector<double> counts) const {
  if (counts.size() != hist_.size()) throw UsageError("count vector has the wrong length");
  FitContext copy = *this;
  double total = 0.0;
  for (double c : counts) total += c;
  copy.hist_.counts = std::move(counts);
  copy.hist_.n_total = static_cast<std::size_t>(total);
  return copy;
}

double penalized_objective(const FitContext& context, std::span<const double> values,
                           double lambda) {
  const VectorXd g = as_vector(values);
  return objective_of(as_vector(context.histogram().counts), context.penalty().matrix, g, lambda);
}

std::vector<double> penalized_gradient(const FitContext& context, std::span<const double> values,
                                       double lambda) {
  const VectorXd g = as_vector(values);
  const auto z = as_vector(context.histogram().counts);
  VectorXd grad = 2.0 * lambda * (context.penalty().matrix * g);
  for (Index j = 0; j < g.size(); ++j) grad(j) += std::exp(g(j)) - z(j);
  return {grad.data(), grad.data() + grad.size()};
}

PenalizedFit irls_fit(const FitContext& context, double lambda, const IrlsOptions& options,
                      std::optional<std::span<const double>> start) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw UsageError(fmt::format("smoothing parameter must be positive, got {}", lambda));
  }
  const auto& hist = context.histogram();
  const Index n = static_cast<Index>(hist.size());
  const VectorXd z = as_vector(hist.counts);

  VectorXd g(n);
  if (start) {
    if (start->size() != hist.size()) throw UsageError("start vector has the wrong length");
    g = as_vector(*start);
  } else {
    for (Index j = 0; j < n; ++j) g(j) = std::log(std::max(z(j), 0.5));
  }

  const PenaltyBasis& basis = context.basis();
  std::vector<double> trace;
  double value = objective_in_basis(z, basis, g, lambda);
  trace.push_back(value);

  bool converged = false;
  int iter = 0;
  int polish = 0;
  VectorXd w(n), rhs(n);
  for (; iter < options.max_iter; ++iter) {
    for (Index j = 0; j < n; ++j) {
      w(j) = std::exp(g(j));
      rhs(j) = w(j) * g(j) + (z(j) - w(j));  // W u
    }
    const PenalizedSystem system(basis, w, lambda);
    if (!system.ok()) {
      throw NumericError(fmt::format("singular IRLS system at lambda = {} (iteration {})", lambda, iter));
    }
    const VectorXd step = system.solve(rhs) - g;

    double t = 1.0;
    double candidate_value = std::numeric_limits<double>::infinity();
    VectorXd candidate;
    bool descended = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = g + t * step;
      candidate_value = objective_in_basis(z, basis, candidate, lambda);
      if (std::isfinite(candidate_value) && candidate_value <= value) {
        descended = true;
        break;
      }
      t *= 0.5;
    }
    if (!descended) {
      if (converged) break;
      // At the optimum within rounding: the Newton decrement is below the
      // rounding level of the objective.
      const VectorXd ga = g.cwiseAbs();
      const VectorXd c = basis.u.transpose() * step;
      const double rounding = std::numeric_limits<double>::epsilon() * (w.sum() + z.cwiseProduct(ga).sum());
      const double decrement = c.dot(system.matrix() * c);
      if (decrement <= 1e3 * std::max(rounding, std::numeric_limits<double>::min())) {
        converged = true;
        break;
      }
      std::string trail;
      for (double v : trace) trail += fmt::format(" {:.12g}", v);
      throw NumericError(fmt::format(
          "IRLS failed to descend at lambda = {} after {} iterations; objective trace:{}", lambda,
          iter, trail));
    }
    const double change = std::abs(value - candidate_value) / std::max(1.0, std::abs(value));
    g = candidate;
    value = candidate_value;
    trace.push_back(value);
    if (converged) {
      // a couple of extra Newton steps drive the gradient to rounding level
      if (++polish >= 2 || change == 0.0) break;
    } else if (change < options.tol) {
      converged = true;
    }
  }

  PenalizedFit fit = finish(context, std::move(g), lambda);
  fit.converged = converged;
  fit.iterations = iter;
  fit.objective = value;
  fit.objective_trace = std::move(trace);
  return fit;
}

Eigen::MatrixXd smoother_matrix(const FitContext& context, const PenalizedFit& fit) {
  const VectorXd w = as_vector(fit.weights);
  const PenalizedSystem system(context.basis(), w, fit.lambda);
  if (!system.ok()) throw NumericError("singular smoother system");
  const auto& u = context.basis().u;
  // A = U M^-1 U' W
  return u * system.solve_basis(u.transpose() * w.asDiagonal());
}

std::vector<double> default_lambda_grid(const FitContext& context, std::size_t points,
                                        double decades) {
  const auto& hist = context.histogram();
  // normal pilot on the log scale, moment-matched to the binned sample
  double sum = 0.0, sum_sq = 0.0, total = 0.0;
  for (std::size_t j = 0; j < hist.size(); ++j) {
    sum += hist.counts[j] * hist.knots[j];
    sum_sq += hist.counts[j] * hist.knots[j] * hist.knots[j];
    total += hist.counts[j];
  }
  const double m = sum / total;
  const double var = std::max(sum_sq / total - m * m, hist.bin_width * hist.bin_width);
  std::vector<double> pilot(hist.size());
  for (std::size_t j = 0; j < hist.size(); ++j) {
    const double d = hist.knots[j] - m;
    pilot[j] = std::log(total * hist.bin_width) - 0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
  }
  double roughness = context.penalty().quadratic_form(pilot);
  if (!(roughness > 0.0) || !std::isfinite(roughness)) roughness = 1.0;
  const double center = static_cast<double>(hist.size()) / roughness;

  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double frac = points > 1 ? static_cast<double>(i) / static_cast<double>(points - 1) : 0.5;
    grid[i] = center * std::pow(10.0, decades * (frac - 0.5));
  }
  return grid;
}

LambdaSelection select_lambda(const FitContext& context, std::span<const double> grid,
                              const IrlsOptions& options) {
  if (grid.size() < 2) throw UsageError("lambda grid needs at least 2 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw UsageError("lambda grid must be positive");
  }
  const auto& hist = context.histogram();

  LambdaSelection selection;
  selection.grid.assign(grid.begin(), grid.end());
  selection.scores.assign(grid.size(), std::numeric_limits<double>::infinity());
  selection.traces.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::optional<PenalizedFit>> fits(grid.size());

  // Fits run from the largest lambda down, each warm-started from the last.
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return grid[a] > grid[b]; });
  std::optional<std::vector<double>> warm;
  for (std::size_t idx : order) {
    try {
      PenalizedFit fit = warm ? irls_fit(context, grid[idx], options, std::span<const double>(*warm))
                              : irls_fit(context, grid[idx], options);
      const Eigen::MatrixXd a = smoother_matrix(context, fit);
      // Poisson deviance plus twice the effective degrees of freedom
      const double trace = a.trace();
      double deviance = 0.0;
      for (std::size_t j = 0; j < hist.size(); ++j) {
        const double z = hist.counts[j];
        const double mu = fit.weights[j];
        deviance += 2.0 * ((z > 0.0 ? z * std::log(z / mu) : 0.0) - (z - mu));
      }
      selection.traces[idx] = trace;
      selection.scores[idx] = deviance + 2.0 * trace;
      warm = fit.spline.values;
      fits[idx] = std::move(fit);
    } catch (const NumericError&) {
      // recorded as +inf
    }
  }
  const auto best = std::min_element(selection.scores.begin(), selection.scores.end());
  if (!std::isfinite(*best)) throw NumericError("all fits on the lambda grid failed");
  const auto idx = static_cast<std::size_t>(best - selection.scores.begin());
  selection.lambda_cv = grid[idx];
  selection.fit = std::move(*fits[idx]);
  selection.fit.lambda_cv = selection.lambda_cv;
  return selection;
}

PenalizedFit lambda_adjust(const FitContext& context, const LambdaSelection& selection,
                           double factor, const IrlsOptions& options) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw UsageError(fmt::format("lambda adjustment factor must be in (0, 1], got {}", factor));
  }
  if (factor == 1.0) return selection.fit;
  PenalizedFit fit = irls_fit(context, factor * selection.lambda_cv, options,
                              std::span<const double>(selection.fit.spline.values));
  fit.lambda_cv = selection.lambda_cv;
  return fit;
}

BootstrapCorrection bootstrap_bias_correct(const FitContext& context, const PenalizedFit& fit,
                                           std::size_t replicates, std::uint64_t seed,
                                           const IrlsOptions& options) {
  if (replicates < 1) throw UsageError("bootstrap needs at least one replicate");
  const auto& base = fit.spline.values;
  const std::size_t n = base.size();
  std::vector<std::vector<double>> refits(replicates);
  std::vector<char> ok(replicates, 0);

  numeric::parallel_for(replicates, [&](std::size_t b) {
    Rng rng = make_rng(seed, streams::kBootstrap, b);
    std::vector<double> counts(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::poisson_distribution<long> draw(std::exp(base[j]));
      counts[j] = static_cast<double>(draw(rng));
    }
    const FitContext replicate_context = context.with_counts(std::move(counts));
    try {
      PenalizedFit refit = irls_fit(replicate_context, fit.lambda, options, std::span<const double>(base));
      if (refit.converged) {
        refits[b] = refit.spline.values;
        ok[b] = 1;
      }
    } catch (const NumericError&) {
    }
  });

  BootstrapCorrection out;
  out.replicates = replicates;
  out.bias.assign(n, 0.0);
  std::size_t good = 0;
  for (std::size_t b = 0; b < replicates; ++b) {
    if (!ok[b]) {
      ++out.failures;
      continue;
    }
    ++good;
    for (std::size_t j = 0; j < n; ++j) out.bias[j] += refits[b][j];
  }
  if (static_cast<double>(out.failures) > 0.05 * static_cast<double>(replicates)) {
    throw NumericError(fmt::format("bootstrap refits failed in {} of {} replicates (lambda = {})",
                                   out.failures, replicates, fit.lambda));
  }
  std::vector<double> corrected(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.bias[j] = out.bias[j] / static_cast<double>(good) - base[j];
    corrected[j] = base[j] - out.bias[j];
  }
  out.corrected = SplineModel::interpolate(fit.spline.knots, std::move(corrected));
  return out;
}

std::string fit_report(const PenalizedFit& fit) {
  std::string out;
  out += fmt::format("lambda_cv {}\n", csv::number(fit.lambda_cv));
  out += fmt::format("lambda_used {}\n", csv::number(fit.lambda));
  out += fmt::format("converged {}\n", fit.converged ? "true" : "false");
  out += fmt::format("iterations {}\n", fit.iterations);
  out += fmt::format("objective {}\n", csv::number(fit.objective));
  out += fmt::format("left_slope {}\n", csv::number(fit.spline.left_slope));
  out += fmt::format("right_slope {}\n", csv::number(fit.spline.right_slope));
  return out;
}

}  // namespace lhspline
