#pragma once

#include "lhspline/binning.hpp"
#include "lhspline/spline.hpp"

#include <string>
#include <vector>

namespace lhspline {

/// Normalized log-scale density exp(g(x)), x = log y, with exponential
/// (power-law on the original scale) pieces beyond the histogram edges.
/// Immutable after construction.
class DensityFit {
 public:
  const SplineModel& spline() const { return spline_; }
  double log_norm_const() const { return log_norm_const_; }
  double tail_index() const { return -spline_.right_slope; }  // alpha
  double left_slope() const { return spline_.left_slope; }
  double support_low() const { return support_low_; }
  double wet_fraction() const { return wet_fraction_; }
  double lower_edge() const { return lower_edge_; }
  double upper_edge() const { return upper_edge_; }

  /// Log density of X = log Y.
  double log_density(double x) const { return spline_(x); }

  /// P(X <= x) and P(X > x) on the log scale.
  double cdf_log(double x) const;
  double survival_log(double x) const;

  /// Smallest x with P(X > x) = q, for q in (0, 1).
  double upper_quantile_log(double q) const;

 private:
  friend DensityFit normalize(const SplineModel&, double, double, double, double);

  double partial_mass(std::size_t piece, double x) const;  // from nodes_[piece] to x

  SplineModel spline_;
  double log_norm_const_ = 0.0;
  double support_low_ = 0.0;
  double wet_fraction_ = 1.0;
  double lower_edge_ = 0.0;
  double upper_edge_ = 0.0;
  // Integration nodes: lower edge, knots strictly inside, upper edge. The
  // spline is a single polynomial between consecutive nodes.
  std::vector<double> nodes_;
  std::vector<double> piece_mass_;
  std::vector<double> below_;  // P(X < nodes_[j])
  std::vector<double> above_;  // P(X > nodes_[j])
  double left_tail_ = 0.0;
  double right_tail_ = 0.0;
};

/// Renormalizes an unnormalized log-intensity over (-inf, inf), or over
/// (log support_low, inf) when support_low > 0. The range between the edges
/// is integrated with composite Simpson (32 panels per polynomial piece); outside it the
/// boundary lines give closed forms. Throws NumericError naming the
/// boundary whose slope is not integrable.
DensityFit normalize(const SplineModel& spline, const LogHistogram& hist, double wet_fraction = 1.0);
DensityFit normalize(const SplineModel& spline, double lower_edge, double upper_edge,
                     double support_low, double wet_fraction);

/// Original-scale density f(y) = exp(g(log y)) / y for y > support_low.
double pdf(const DensityFit& fit, double y);
double cdf(const DensityFit& fit, double y);
double survival(const DensityFit& fit, double y);
double quantile(const DensityFit& fit, double p);

/// Level exceeded on average once per T years given obs_per_year
/// observations per year; the exceedance rate is scaled by the fit's wet
/// fraction (1 for i.i.d. samples).
double return_level(const DensityFit& fit, double years, double obs_per_year);

/// Inverse of return_level; +inf when P(Y > y) underflows to 0.
double return_period(const DensityFit& fit, double y, double obs_per_year);

/// Plot grid: log-scale x, log density, y, pdf(y), cdf(y).
std::string density_grid_csv(const DensityFit& fit, std::size_t points = 400);

}  // namespace lhspline
