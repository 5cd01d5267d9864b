#pragma once

#include "lhspline/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lhspline {

// ---------------------------------------------------------------------------
// Distributions. GPD is parameterized on excesses over its threshold.

namespace gpd {
double cdf(double excess, double sigma, double xi);
double survival(double excess, double sigma, double xi);
double pdf(double excess, double sigma, double xi);
double quantile(double p, double sigma, double xi);
/// Excess with P(E > excess) = q.
double upper_quantile(double q, double sigma, double xi);
}  // namespace gpd

namespace gev {
double cdf(double x, double mu, double sigma, double xi);
double quantile(double p, double mu, double sigma, double xi);
}  // namespace gev

/// Extended GPD, model (i): F(y) = H(y)^kappa with H the GPD(sigma, xi) cdf.
namespace egpd {
struct Params {
  double kappa = 0.8;
  double sigma = 8.5;
  double xi = 0.2;
};
double cdf(double y, const Params& p);
double survival(double y, const Params& p);
double pdf(double y, const Params& p);
/// Inverse cdf for p in [0, 1).
double quantile(double p, const Params& params);
/// y with P(Y > y) = q, accurate for small q.
double upper_quantile(double q, const Params& params);
/// Y = H^-1(U^(1/kappa)) with U uniform on (0, 1).
std::vector<double> simulate(std::size_t n, const Params& params, Rng& rng);
}  // namespace egpd

// ---------------------------------------------------------------------------
// Fits

enum class Family { GPD, GEV, EGPD1, Gamma };
std::string to_string(Family family);

/// Gamma prior on the shape parameter xi (generalized maximum likelihood).
struct ShapePrior {
  double shape = 2.0;
  double rate = 10.0;

  double log_density(double xi) const;
  double derivative(double xi) const;
};

struct EvtFit {
  Family family = Family::GPD;
  // GPD: sigma, xi. GEV: mu, sigma, xi. EGPD1: kappa, sigma, xi.
  // Gamma: shape, rate.
  std::vector<std::string> names;
  Eigen::VectorXd params;
  Eigen::MatrixXd cov;  // inverse observed information (prior included)
  double loglik = 0.0;  // log-likelihood plus log prior when a prior is used
  std::optional<ShapePrior> prior;
  double threshold = 0.0;    // GPD only
  double exceed_rate = 1.0;  // GPD only: exceedances / sample size
  std::size_t sample_size = 0;
  std::vector<double> data;  // excesses (GPD), maxima (GEV) or amounts
  bool converged = false;
  bool at_boundary = false;

  double param(std::string_view name) const;
  double standard_error(std::string_view name) const;
};

/// GPD on the values above `threshold` (each must exceed it);
/// `sample_size` is the size of the sample the exceedances came from.
EvtFit gpd_fit(std::span<const double> exceedances, double threshold, std::size_t sample_size,
               std::optional<ShapePrior> prior = std::nullopt);
EvtFit gev_fit(std::span<const double> block_maxima, std::optional<ShapePrior> prior = std::nullopt);
EvtFit egpd1_fit(std::span<const double> amounts);
EvtFit gamma_fit(std::span<const double> amounts);

/// Values strictly above the empirical `prob` quantile, and that threshold.
struct Exceedances {
  double threshold = 0.0;
  std::vector<double> values;
};
Exceedances exceedances_over_quantile(std::span<const double> sample, double prob);

/// Maxima of consecutive blocks; a trailing partial block is dropped.
std::vector<double> block_maxima(std::span<const double> sample, std::size_t block);

/// Log-likelihood (plus log prior) of `fit`'s data at natural parameters.
double evt_loglik(const EvtFit& fit, const Eigen::VectorXd& params);

// ---------------------------------------------------------------------------
// Return levels. `obs_per_year` counts sample observations per year (GPD,
// EGPD1, Gamma); GEV fits are on annual maxima and ignore it.

double evt_return_level(const EvtFit& fit, double years, double obs_per_year);
double evt_return_level_at(const EvtFit& fit, const Eigen::VectorXd& params, double years,
                           double obs_per_year);
double evt_return_period(const EvtFit& fit, double y, double obs_per_year);
double evt_return_period_at(const EvtFit& fit, const Eigen::VectorXd& params, double y,
                            double obs_per_year);
double evt_quantile(const EvtFit& fit, double p);

struct RlInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Normal interval from the gradient of the return level and the parameter
/// covariance.
RlInterval rl_interval_delta(const EvtFit& fit, double years, double obs_per_year, double level);

/// Delta-method interval for the return period of `y`.
RlInterval rp_interval_delta(const EvtFit& fit, double y, double obs_per_year, double level);

/// Profile likelihood in the return-level parameterization (GPD, GEV);
/// endpoints where 2 (l_max - l_p) equals the chi-square(1) quantile.
RlInterval rl_interval_profile(const EvtFit& fit, double years, double obs_per_year, double level);

// ---------------------------------------------------------------------------
// Threshold diagnostics

struct MeanExcessPoint {
  double threshold = 0.0;
  std::size_t n_exceed = 0;
  double mean_excess = 0.0;
  double se = 0.0;
  double lo = 0.0;  // 95% normal band
  double hi = 0.0;
};

struct ShapeStabilityPoint {
  double threshold = 0.0;
  std::size_t n_exceed = 0;
  double xi = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

template <class Point>
struct DiagnosticSeries {
  std::vector<Point> points;
  std::vector<double> dropped;  // thresholds with fewer than min_exceed exceedances
};

DiagnosticSeries<MeanExcessPoint> mean_residual_life(std::span<const double> amounts,
                                                     std::span<const double> thresholds,
                                                     std::size_t min_exceed = 30);
DiagnosticSeries<ShapeStabilityPoint> shape_stability(std::span<const double> amounts,
                                                      std::span<const double> thresholds,
                                                      std::size_t min_exceed = 30);

std::string mean_residual_life_csv(const DiagnosticSeries<MeanExcessPoint>& series);
std::string shape_stability_csv(const DiagnosticSeries<ShapeStabilityPoint>& series);

}  // namespace lhspline
