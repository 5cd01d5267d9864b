#include "lhspline/csv.hpp"
#include "lhspline/error.hpp"
#include "lhspline/evt.hpp"

#include <cmath>

namespace lhspline {

DiagnosticSeries<MeanExcessPoint> mean_residual_life(std::span<const double> amounts,
                                                     std::span<const double> thresholds,
                                                     std::size_t min_exceed) {
  DiagnosticSeries<MeanExcessPoint> out;
  for (double u : thresholds) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (double y : amounts) {
      if (y > u) {
        sum += y - u;
        sum_sq += (y - u) * (y - u);
        ++n;
      }
    }
    if (n < std::max<std::size_t>(min_exceed, 2)) {
      out.dropped.push_back(u);
      continue;
    }
    MeanExcessPoint p;
    p.threshold = u;
    p.n_exceed = n;
    p.mean_excess = sum / static_cast<double>(n);
    const double var = (sum_sq - static_cast<double>(n) * p.mean_excess * p.mean_excess) /
                       static_cast<double>(n - 1);
    p.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    p.lo = p.mean_excess - 1.959963984540054 * p.se;
    p.hi = p.mean_excess + 1.959963984540054 * p.se;
    out.points.push_back(p);
  }
  return out;
}

DiagnosticSeries<ShapeStabilityPoint> shape_stability(std::span<const double> amounts,
                                                      std::span<const double> thresholds,
                                                      std::size_t min_exceed) {
  DiagnosticSeries<ShapeStabilityPoint> out;
  for (double u : thresholds) {
    std::vector<double> above;
    for (double y : amounts) {
      if (y > u) above.push_back(y);
    }
    if (above.size() < std::max<std::size_t>(min_exceed, 30)) {
      out.dropped.push_back(u);
      continue;
    }
    try {
      const EvtFit fit = gpd_fit(above, u, amounts.size());
      ShapeStabilityPoint p;
      p.threshold = u;
      p.n_exceed = above.size();
      p.xi = fit.param("xi");
      p.se = fit.standard_error("xi");
      p.lo = p.xi - 1.959963984540054 * p.se;
      p.hi = p.xi + 1.959963984540054 * p.se;
      out.points.push_back(p);
    } catch (const Error&) {
      out.dropped.push_back(u);
    }
  }
  return out;
}

std::string mean_residual_life_csv(const DiagnosticSeries<MeanExcessPoint>& series) {
  csv::Writer w({"threshold", "n_exceed", "mean_excess", "se", "lo", "hi"});
  for (const auto& p : series.points) {
    w.row({csv::number(p.threshold), std::to_string(p.n_exceed), csv::number(p.mean_excess),
           csv::number(p.se), csv::number(p.lo), csv::number(p.hi)});
  }
  return w.text();
}

std::string shape_stability_csv(const DiagnosticSeries<ShapeStabilityPoint>& series) {
  csv::Writer w({"threshold", "n_exceed", "xi", "se", "lo", "hi"});
  for (const auto& p : series.points) {
    w.row({csv::number(p.threshold), std::to_string(p.n_exceed), csv::number(p.xi), csv::number(p.se),
           csv::number(p.lo), csv::number(p.hi)});
  }
  return w.text();
}

}  // namespace lhspline
