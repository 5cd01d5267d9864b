#include "lhspline/density.hpp"

#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"
#include "lhspline/numeric.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lhspline {
namespace {

constexpr int kPanels = 32;

double integrate_exp(const SplineModel& g, double a, double b) {
  if (b <= a) return 0.0;
  return numeric::simpson([&](double x) { return std::exp(g(x)); }, a, b, kPanels);
}

}  // namespace

DensityFit normalize(const SplineModel& spline, double lower_edge, double upper_edge,
                     double support_low, double wet_fraction) {
  if (!(upper_edge > lower_edge)) throw UsageError("density edges must satisfy lower < upper");
  if (!(wet_fraction > 0.0 && wet_fraction <= 1.0)) {
    throw UsageError(fmt::format("wet fraction must be in (0, 1], got {}", wet_fraction));
  }
  const bool censored = support_low > 0.0;
  if (censored && std::abs(lower_edge - std::log(support_low)) > 1e-9 * std::max(1.0, std::abs(lower_edge))) {
    throw UsageError("with a censor bound the lower edge must equal log(bound)");
  }
  if (!censored && !(spline.left_slope > 0.0)) {
    throw NumericError(fmt::format(
        "left boundary slope {} is not positive; the left tail is not integrable (too little "
        "data or lambda too small)", spline.left_slope));
  }
  if (!(spline.right_slope < 0.0)) {
    throw NumericError(fmt::format(
        "right boundary slope {} is not negative; the right tail is not integrable (too little "
        "data or lambda too small)", spline.right_slope));
  }

  DensityFit fit;
  fit.support_low_ = censored ? support_low : 0.0;
  fit.wet_fraction_ = wet_fraction;
  fit.lower_edge_ = lower_edge;
  fit.upper_edge_ = upper_edge;

  fit.nodes_.push_back(lower_edge);
  for (double k : spline.knots) {
    if (k > lower_edge && k < upper_edge) fit.nodes_.push_back(k);
  }
  fit.nodes_.push_back(upper_edge);

  const std::size_t pieces = fit.nodes_.size() - 1;
  fit.piece_mass_.resize(pieces);
  double inner = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    fit.piece_mass_[i] = integrate_exp(spline, fit.nodes_[i], fit.nodes_[i + 1]);
    inner += fit.piece_mass_[i];
  }
  const double left = censored ? 0.0 : std::exp(spline(lower_edge)) / spline.left_slope;
  const double right = std::exp(spline(upper_edge)) / -spline.right_slope;
  const double mass = left + inner + right;
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericError(fmt::format("density mass is not finite and positive ({})", mass));
  }

  const double log_mass = std::log(mass);
  fit.log_norm_const_ = log_mass;
  fit.spline_ = spline;
  for (double& v : fit.spline_.values) v -= log_mass;
  for (double& m : fit.piece_mass_) m /= mass;
  fit.left_tail_ = left / mass;
  fit.right_tail_ = right / mass;

  fit.below_.resize(pieces + 1);
  fit.above_.resize(pieces + 1);
  fit.below_[0] = fit.left_tail_;
  for (std::size_t i = 0; i < pieces; ++i) fit.below_[i + 1] = fit.below_[i] + fit.piece_mass_[i];
  fit.above_[pieces] = fit.right_tail_;
  for (std::size_t i = pieces; i-- > 0;) fit.above_[i] = fit.above_[i + 1] + fit.piece_mass_[i];
  return fit;
}

DensityFit normalize(const SplineModel& spline, const LogHistogram& hist, double wet_fraction) {
  return normalize(spline, hist.breaks.front(), hist.breaks.back(), hist.support_low, wet_fraction);
}

double DensityFit::partial_mass(std::size_t piece, double x) const {
  return integrate_exp(spline_, nodes_[piece], x);
}

double DensityFit::cdf_log(double x) const {
  if (x <= lower_edge_) {
    if (support_low_ > 0.0) return 0.0;
    return std::exp(spline_(x)) / spline_.left_slope;
  }
  if (x >= upper_edge_) return 1.0 - survival_log(x);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const auto piece = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  // integrate from the nearer end of the piece
  if (x - nodes_[piece] <= nodes_[piece + 1] - x) return below_[piece] + partial_mass(piece, x);
  return below_[piece + 1] - integrate_exp(spline_, x, nodes_[piece + 1]);
}

double DensityFit::survival_log(double x) const {
  if (x >= upper_edge_) return std::exp(spline_(x)) / -spline_.right_slope;
  if (x <= lower_edge_) return 1.0 - cdf_log(x);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const auto piece = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  if (nodes_[piece + 1] - x <= x - nodes_[piece]) {
    return above_[piece + 1] + integrate_exp(spline_, x, nodes_[piece + 1]);
  }
  return above_[piece] - partial_mass(piece, x);
}

double DensityFit::upper_quantile_log(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw UsageError(fmt::format("tail probability {} outside (0, 1)", q));
  const double gl = spline_(lower_edge_);
  const double gu = spline_(upper_edge_);
  if (q <= right_tail_) {
    // exp(gu + s (x - u)) / |s| = q
    const double s = spline_.right_slope;
    return upper_edge_ + (std::log(q * -s) - gu) / s;
  }
  if (support_low_ <= 0.0 && q >= 1.0 - left_tail_) {
    const double p = 1.0 - q;
    const double s = spline_.left_slope;
    return lower_edge_ + (std::log(p * s) - gl) / s;
  }
  // above_ is decreasing in the node index
  const auto it = std::lower_bound(above_.begin(), above_.end(), q, std::greater<double>());
  std::size_t hi = static_cast<std::size_t>(it - above_.begin());
  hi = std::clamp<std::size_t>(hi, 1, nodes_.size() - 1);
  const std::size_t lo = hi - 1;
  const auto target = [&](double x) {
    // use whichever tail is smaller to keep relative accuracy
    return q < 0.5 ? survival_log(x) - q : (1.0 - q) - cdf_log(x);
  };
  double a = nodes_[lo], b = nodes_[hi];
  double fa = target(a), fb = target(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) {
    // rounding at a node; the answer is that node
    return std::abs(fa) < std::abs(fb) ? a : b;
  }
  std::uintmax_t max_iter = 200;
  const auto [x0, x1] = boost::math::tools::toms748_solve(
      target, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (x0 + x1);
}

double pdf(const DensityFit& fit, double y) {
  if (!(y > fit.support_low())) {
    throw UsageError(fmt::format("pdf evaluated at {} <= support lower limit {}", y, fit.support_low()));
  }
  const double x = std::log(y);
  return std::exp(fit.log_density(x)) / y;
}

double cdf(const DensityFit& fit, double y) {
  if (y <= fit.support_low()) return 0.0;
  if (std::isinf(y)) return 1.0;
  return fit.cdf_log(std::log(y));
}

double survival(const DensityFit& fit, double y) {
  if (y <= fit.support_low()) return 1.0;
  if (std::isinf(y)) return 0.0;
  return fit.survival_log(std::log(y));
}

double quantile(const DensityFit& fit, double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError(fmt::format("probability {} outside (0, 1)", p));
  return std::exp(fit.upper_quantile_log(1.0 - p));
}

double return_level(const DensityFit& fit, double years, double obs_per_year) {
  if (!(years > 0.0) || !(obs_per_year > 0.0)) {
    throw UsageError("return level needs positive period and observation rate");
  }
  const double q = 1.0 / (years * obs_per_year * fit.wet_fraction());
  if (!(q < 1.0)) {
    throw UsageError(fmt::format("return period {} years is too short: exceedance probability {} >= 1",
                                 years, q));
  }
  return std::exp(fit.upper_quantile_log(q));
}

double return_period(const DensityFit& fit, double y, double obs_per_year) {
  if (!(y > fit.support_low())) {
    throw UsageError(fmt::format("return period needs y > {}", fit.support_low()));
  }
  const double s = survival(fit, y);
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / (s * obs_per_year * fit.wet_fraction());
}

std::string density_grid_csv(const DensityFit& fit, std::size_t points) {
  csv::Writer out({"x", "log_density", "y", "pdf", "cdf"});
  const double a = fit.lower_edge();
  const double b = fit.upper_edge();
  for (std::size_t i = 0; i < points; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double y = std::exp(x);
    const double g = fit.log_density(x);
    const bool inside = y > fit.support_low();
    out.row({csv::number(x), csv::number(g), csv::number(y),
             csv::number(inside ? std::exp(g) / y : 0.0), csv::number(fit.cdf_log(x))});
  }
  return out.text();
}

}  // namespace lhspline
