#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lhspline {

/// Equal-width histogram of log-transformed positive data. Bin j covers
/// [breaks[j], breaks[j+1]) except the last, which is closed on both sides.
/// The spline knots are the bin midpoints.
struct LogHistogram {
  std::vector<double> breaks;
  std::vector<double> counts;  // integral counts stored as double for the solvers
  std::vector<double> knots;
  std::size_t n_total = 0;
  double bin_width = 0.0;
  double extension_factor = 1.0;
  double support_low = 0.0;  // mm/day; > 0 pins breaks.front() to log(support_low)

  std::size_t size() const { return counts.size(); }
};

struct BinningOptions {
  std::size_t n_bins = 150;
  double extension_factor = 1.5;
  // When positive, the left edge is pinned at log(censor_bound) and only the
  // right side of the range is extended.
  double censor_bound = 0.0;
};

LogHistogram build_histogram(std::span<const double> amounts, const BinningOptions& options);

/// Index of the bin containing log-scale point x under the half-open
/// convention, or -1 if x is outside [breaks.front(), breaks.back()].
long bin_index(const LogHistogram& hist, double x);

/// Max over bins of |integral of e^g over the bin - e^{g(knot)} * width| /
/// integral, the integral taken by 64-point Gauss-Legendre per bin.
double poisson_cell_intensity_check(const LogHistogram& hist,
                                    const std::function<double(double)>& log_density);

/// "break_lo,break_hi,knot,count" rows.
std::string histogram_csv(const LogHistogram& hist);

}  // namespace lhspline
