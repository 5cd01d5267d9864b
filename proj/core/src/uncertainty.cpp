#include "lhspline/uncertainty.hpp"

#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"
#include "lhspline/numeric.hpp"
#include "lhspline/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace lhspline {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Sampler {
  MatrixXd curvature_basis;  // columns V_k / sqrt(2 lambda e_k), k over the N-2 positive modes
  MatrixXd null_basis;       // orthonormal basis of span{1, knots}
  Eigen::LDLT<MatrixXd> smoother;
  VectorXd weights;
  VectorXd sqrt_weights;
};

Sampler make_sampler(const MatrixXd& penalty, std::span<const double> weights, double lambda) {
  const Index n = penalty.rows();
  if (static_cast<Index>(weights.size()) != n) throw UsageError("weights/penalty size mismatch");
  if (!(lambda > 0.0)) throw UsageError("conditional simulation needs lambda > 0");
  Sampler s;
  s.weights = Eigen::Map<const VectorXd>(weights.data(), n);
  if (!(s.weights.minCoeff() > 0.0)) throw NumericError("working weights must be positive");
  s.sqrt_weights = s.weights.cwiseSqrt();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(penalty);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the penalty failed");
  const VectorXd& ev = eig.eigenvalues();  // ascending; the first two span the affine null space
  if (!(ev(2) > 0.0)) {
    throw NumericError(fmt::format("penalty matrix has rank below N-2 (third eigenvalue {}, "
                                   "lambda {})", ev(2), lambda));
  }
  s.curvature_basis.resize(n, n - 2);
  for (Index k = 2; k < n; ++k) {
    s.curvature_basis.col(k - 2) = eig.eigenvectors().col(k) / std::sqrt(2.0 * lambda * ev(k));
  }
  s.null_basis = eig.eigenvectors().leftCols(2);

  MatrixXd system = 2.0 * lambda * penalty;
  system.diagonal() += s.weights;
  s.smoother.compute(system);
  if (s.smoother.info() != Eigen::Success || !(s.smoother.vectorD().minCoeff() > 0.0)) {
    throw NumericError(fmt::format("W + Gamma is not positive definite (lambda {}, min weight {})",
                                   lambda, s.weights.minCoeff()));
  }
  return s;
}

VectorXd draw_error(const Sampler& s, Rng& rng, double null_sd) {
  const Index n = s.weights.size();
  std::normal_distribution<double> normal;
  VectorXd z1(n - 2), z_null(2), z2(n);
  for (Index k = 0; k < n - 2; ++k) z1(k) = normal(rng);
  for (Index k = 0; k < 2; ++k) z_null(k) = normal(rng);
  for (Index j = 0; j < n; ++j) z2(j) = normal(rng);

  // step 1: g* = curvature part + affine part
  const VectorXd g_curv = s.curvature_basis * z1;
  const VectorXd g_null = s.null_basis * (null_sd * z_null);
  // step 2: u* = g* + eps with eps ~ N(0, W^-1); only W eps = sqrt(W) z2 is needed
  // step 3: the smoother reproduces affine functions exactly, so
  //   g*_hat = g_null + (W + Gamma)^-1 W (g_curv + eps)
  const VectorXd smoothed_curv =
      s.smoother.solve(s.weights.cwiseProduct(g_curv) + s.sqrt_weights.cwiseProduct(z2));
  // step 4: e = g* - g*_hat; g_null cancels exactly
  (void)g_null;
  return g_curv - smoothed_curv;
}

}  // namespace

MatrixXd conditional_errors(const MatrixXd& penalty, std::span<const double> weights,
                            double lambda, std::size_t draws, std::uint64_t seed,
                            const SimulationOptions& options) {
  const Sampler sampler = make_sampler(penalty, weights, lambda);
  MatrixXd out(static_cast<Index>(draws), penalty.rows());
  numeric::parallel_for(draws, [&](std::size_t m) {
    Rng rng = make_rng(seed, streams::kPosterior, m);
    out.row(static_cast<Index>(m)) = draw_error(sampler, rng, options.null_space_sd).transpose();
  });
  return out;
}

PosteriorEnsemble conditional_simulate(const FitContext& context, const PenalizedFit& fit,
                                       const DensityFit& base, std::size_t draws,
                                       std::uint64_t seed, const SimulationOptions& options) {
  if (draws == 0) throw UsageError("conditional simulation needs at least one draw");
  const auto& knots = base.spline().knots;
  const auto& center = base.spline().values;
  if (knots.size() != fit.weights.size()) throw UsageError("base density and fit differ in size");

  PosteriorEnsemble ensemble;
  ensemble.lambda = fit.lambda;
  ensemble.base_fit = base;
  ensemble.seed = seed;
  const MatrixXd errors =
      conditional_errors(context.penalty().matrix, fit.weights, fit.lambda, draws, seed, options);
  const Eigen::Map<const VectorXd> c(center.data(), static_cast<Index>(center.size()));
  ensemble.draws = errors.rowwise() + c.transpose();

  std::vector<std::optional<DensityFit>> normalized(draws);
  numeric::parallel_for(draws, [&](std::size_t m) {
    const auto row = ensemble.draws.row(static_cast<Index>(m));
    std::vector<double> values(static_cast<std::size_t>(row.size()));
    for (Index j = 0; j < row.size(); ++j) values[static_cast<std::size_t>(j)] = row(j);
    try {
      const SplineModel spline = SplineModel::interpolate(knots, std::move(values));
      normalized[m] = normalize(spline, base.lower_edge(), base.upper_edge(), base.support_low(),
                                base.wet_fraction());
    } catch (const NumericError&) {
    }
  });
  for (std::size_t m = 0; m < draws; ++m) {
    if (normalized[m]) {
      ensemble.densities.push_back(std::move(*normalized[m]));
      ensemble.valid_index.push_back(m);
    } else {
      ++ensemble.rejected;
    }
  }
  return ensemble;
}

Functional Functional::return_level(double years, double obs_per_year) {
  return {Kind::ReturnLevel, years, obs_per_year};
}

Functional Functional::quantile(double p) { return {Kind::Quantile, p, 1.0}; }

Functional Functional::return_period(double y, double obs_per_year) {
  return {Kind::ReturnPeriod, y, obs_per_year};
}

double Functional::operator()(const DensityFit& fit) const {
  switch (kind) {
    case Kind::ReturnLevel: return lhspline::return_level(fit, argument, obs_per_year);
    case Kind::Quantile: return lhspline::quantile(fit, argument);
    case Kind::ReturnPeriod: return lhspline::return_period(fit, argument, obs_per_year);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string Functional::label() const {
  switch (kind) {
    case Kind::ReturnLevel: return fmt::format("RL{}", argument);
    case Kind::Quantile: return fmt::format("Q{}", argument);
    case Kind::ReturnPeriod: return fmt::format("RP{}", argument);
  }
  return "?";
}

Interval interval(const PosteriorEnsemble& ensemble, const Functional& functional, double level,
                  double min_valid_fraction) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError(fmt::format("level {} outside (0, 1)", level));
  if (!(min_valid_fraction >= 0.0 && min_valid_fraction <= 1.0)) {
    throw UsageError("min_valid_fraction must lie in [0, 1]");
  }
  const std::size_t total = ensemble.size();
  if (ensemble.densities.empty() ||
      static_cast<double>(ensemble.densities.size()) < min_valid_fraction * static_cast<double>(total)) {
    throw NumericError(fmt::format("only {} of {} posterior draws are valid densities",
                                   ensemble.densities.size(), total));
  }
  std::vector<double> values;
  values.reserve(ensemble.densities.size());
  for (const auto& d : ensemble.densities) values.push_back(functional(d));
  std::sort(values.begin(), values.end());
  Interval out;
  out.used = values.size();
  out.lo = numeric::empirical_quantile_sorted(values, 0.5 * (1.0 - level));
  out.hi = numeric::empirical_quantile_sorted(values, 0.5 * (1.0 + level));
  return out;
}

std::string ensemble_csv(const PosteriorEnsemble& ensemble) {
  std::vector<std::string> header{"draw"};
  for (Index j = 0; j < ensemble.draws.cols(); ++j) header.push_back(fmt::format("knot_{}", j));
  csv::Writer out(header);
  for (Index m = 0; m < ensemble.draws.rows(); ++m) {
    std::vector<std::string> row{std::to_string(m)};
    for (Index j = 0; j < ensemble.draws.cols(); ++j) row.push_back(csv::number(ensemble.draws(m, j)));
    out.row(row);
  }
  return out.text();
}

}  // namespace lhspline
