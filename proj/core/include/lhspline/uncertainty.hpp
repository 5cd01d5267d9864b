#pragma once

#include "lhspline/density.hpp"
#include "lhspline/fit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace lhspline {

/// Approximate posterior draws of the log density at the knots. Row m of
/// `draws` is the centre plus one conditional-simulation error vector.
struct PosteriorEnsemble {
  Eigen::MatrixXd draws;  // M x N
  double lambda = 0.0;
  DensityFit base_fit;
  std::uint64_t seed = 0;
  std::vector<DensityFit> densities;  // normalized valid draws, in draw order
  std::vector<std::size_t> valid_index;
  std::size_t rejected = 0;           // draws with non-integrable tails

  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
};

struct SimulationOptions {
  // standard deviation of the affine (null-space) coordinates in step 1
  double null_space_sd = 1e6;
};

/// Conditional simulation around `center` (the knot values of `base`) with
/// the working weights W and smoothing parameter of `fit`:
///   1. g* ~ N(0, Gamma^-1), Gamma = 2 lambda K, affine part from a wide
///      proper prior;
///   2. u* ~ N(g*, W^-1);
///   3. g*_hat = (W + Gamma)^-1 W u*, the affine part passed through exactly;
///   4. e = g* - g*_hat;
///   5. draw = center + e.
/// Draw m uses a generator seeded by (seed, m).
PosteriorEnsemble conditional_simulate(const FitContext& context, const PenalizedFit& fit,
                                       const DensityFit& base, std::size_t draws,
                                       std::uint64_t seed, const SimulationOptions& options = {});

/// Error vectors e only (steps 1-4), one per row. Exposed for covariance
/// checks.
Eigen::MatrixXd conditional_errors(const Eigen::MatrixXd& penalty, std::span<const double> weights,
                                   double lambda, std::size_t draws, std::uint64_t seed,
                                   const SimulationOptions& options = {});

/// Quantity derived from a density.
struct Functional {
  enum class Kind { ReturnLevel, Quantile, ReturnPeriod };
  Kind kind = Kind::ReturnLevel;
  double argument = 0.0;  // T (years), p, or y (mm/day)
  double obs_per_year = 365.0;

  static Functional return_level(double years, double obs_per_year);
  static Functional quantile(double p);
  static Functional return_period(double y, double obs_per_year);

  double operator()(const DensityFit& fit) const;
  std::string label() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t used = 0;
};

/// Equal-tailed empirical interval of the functional across valid draws.
/// Throws NumericError when the valid share of draws is below
/// `min_valid_fraction`. Draws whose extrapolated tails are not integrable
/// are common where the histogram has long runs of empty bins, so the
/// default floor is low; ensemble.rejected reports how many were dropped.
Interval interval(const PosteriorEnsemble& ensemble, const Functional& functional, double level,
                  double min_valid_fraction = 0.25);

/// "draw,knot_0,...,knot_{N-1}" rows.
std::string ensemble_csv(const PosteriorEnsemble& ensemble);

}  // namespace lhspline
