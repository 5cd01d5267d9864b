#include "lhspline/binning.hpp"

#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lhspline {

LogHistogram build_histogram(std::span<const double> amounts, const BinningOptions& options) {
  const std::size_t n_bins = options.n_bins;
  if (n_bins < 3) throw UsageError(fmt::format("n_bins must be >= 3, got {}", n_bins));
  if (!(options.extension_factor >= 1.0)) {
    throw UsageError(fmt::format("extension factor must be >= 1, got {}", options.extension_factor));
  }
  if (!(options.censor_bound >= 0.0)) throw UsageError("censor bound must be >= 0");

  std::vector<double> logs;
  logs.reserve(amounts.size());
  for (double y : amounts) {
    if (!(y > 0.0) || !std::isfinite(y)) {
      throw DataError(fmt::format("histogram input must be positive and finite, got {}", y));
    }
    if (options.censor_bound > 0.0 && !(y > options.censor_bound)) {
      throw DataError(fmt::format("amount {} is not above the censor bound {}", y,
                                  options.censor_bound));
    }
    logs.push_back(std::log(y));
  }
  const auto [min_it, max_it] = std::minmax_element(logs.begin(), logs.end());
  if (logs.empty() || *min_it == *max_it) {
    throw DataError("histogram needs at least 2 distinct amounts");
  }
  const double x_min = *min_it;
  const double x_max = *max_it;
  const double factor = options.extension_factor;

  double lo = 0.0, hi = 0.0;
  if (options.censor_bound > 0.0) {
    lo = std::log(options.censor_bound);
    hi = lo + factor * (x_max - lo);
  } else {
    const double mid = 0.5 * (x_min + x_max);
    const double half = 0.5 * factor * (x_max - x_min);
    lo = mid - half;
    hi = mid + half;
    if (factor == 1.0) {
      lo = x_min;
      hi = x_max;
    }
  }

  LogHistogram hist;
  hist.extension_factor = factor;
  hist.support_low = options.censor_bound;
  hist.n_total = logs.size();
  hist.bin_width = (hi - lo) / static_cast<double>(n_bins);
  hist.breaks.resize(n_bins + 1);
  for (std::size_t j = 0; j <= n_bins; ++j) {
    hist.breaks[j] = lo + static_cast<double>(j) * hist.bin_width;
  }
  hist.breaks.back() = hi;
  hist.knots.resize(n_bins);
  for (std::size_t j = 0; j < n_bins; ++j) {
    hist.knots[j] = (hist.breaks[j] + hist.breaks[j + 1]) / 2;
  }
  hist.counts.assign(n_bins, 0.0);
  for (double x : logs) {
    const long j = bin_index(hist, x);
    if (j < 0) throw NumericError(fmt::format("log amount {} fell outside the histogram", x));
    hist.counts[static_cast<std::size_t>(j)] += 1.0;
  }
  return hist;
}

long bin_index(const LogHistogram& hist, double x) {
  const auto& b = hist.breaks;
  if (!(x >= b.front()) || !(x <= b.back())) return -1;
  const long last = static_cast<long>(hist.size()) - 1;
  long j = static_cast<long>(std::floor((x - b.front()) / hist.bin_width));
  j = std::clamp(j, 0L, last);
  // the computed index can be off by one next to a break point
  while (j > 0 && x < b[static_cast<std::size_t>(j)]) --j;
  while (j < last && x >= b[static_cast<std::size_t>(j) + 1]) ++j;
  return j;
}

double poisson_cell_intensity_check(const LogHistogram& hist,
                                    const std::function<double(double)>& log_density) {
  using Quad = boost::math::quadrature::gauss<double, 64>;
  double worst = 0.0;
  for (std::size_t j = 0; j < hist.size(); ++j) {
    const double a = hist.breaks[j];
    const double b = hist.breaks[j + 1];
    const double exact = Quad::integrate([&](double x) { return std::exp(log_density(x)); }, a, b);
    const double midpoint = std::exp(log_density(hist.knots[j])) * (b - a);
    if (exact > 0.0) worst = std::max(worst, std::abs(exact - midpoint) / exact);
  }
  return worst;
}

std::string histogram_csv(const LogHistogram& hist) {
  csv::Writer out({"break_lo", "break_hi", "knot", "count"});
  for (std::size_t j = 0; j < hist.size(); ++j) {
    out.row({csv::number(hist.breaks[j]), csv::number(hist.breaks[j + 1]),
             csv::number(hist.knots[j]), csv::number(hist.counts[j])});
  }
  return out.text();
}

}  // namespace lhspline
