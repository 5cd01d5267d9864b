#include "lhspline/evt.hpp"

#include "lhspline/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <random>

namespace lhspline {
namespace {

constexpr double kXiZero = 1e-8;

// (1 + xi z)^(-1/xi), with the exp(-z) limit at xi = 0; 0 beyond an upper
// endpoint.
double gp_tail(double z, double xi) {
  if (std::abs(xi) < kXiZero) return std::exp(-z);
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return xi < 0 ? 0.0 : 1.0;
  return std::exp(-std::log1p(xi * z) / xi);
}

}  // namespace

namespace gpd {

double survival(double excess, double sigma, double xi) {
  if (excess <= 0.0) return 1.0;
  return gp_tail(excess / sigma, xi);
}

double cdf(double excess, double sigma, double xi) {
  if (excess <= 0.0) return 0.0;
  const double z = excess / sigma;
  double log_surv = -z;
  if (std::abs(xi) >= kXiZero) {
    const double t = 1.0 + xi * z;
    log_surv = t <= 0.0 ? -std::numeric_limits<double>::infinity() : -std::log1p(xi * z) / xi;
  }
  return -std::expm1(log_surv);
}

double pdf(double excess, double sigma, double xi) {
  if (excess < 0.0) return 0.0;
  const double z = excess / sigma;
  if (std::abs(xi) < kXiZero) return std::exp(-z) / sigma;
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return 0.0;
  return std::exp(-(1.0 + 1.0 / xi) * std::log(t)) / sigma;
}

double quantile(double p, double sigma, double xi) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError(fmt::format("GPD quantile: p = {} outside [0, 1)", p));
  if (std::abs(xi) < kXiZero) return -sigma * std::log1p(-p);
  return sigma / xi * std::expm1(-xi * std::log1p(-p));
}

double upper_quantile(double q, double sigma, double xi) {
  if (!(q > 0.0 && q <= 1.0)) throw UsageError(fmt::format("GPD tail probability {} outside (0, 1]", q));
  if (std::abs(xi) < kXiZero) return -sigma * std::log(q);
  return sigma / xi * std::expm1(-xi * std::log(q));
}

}  // namespace gpd

namespace gev {

double cdf(double x, double mu, double sigma, double xi) {
  const double z = (x - mu) / sigma;
  if (std::abs(xi) < kXiZero) return std::exp(-std::exp(-z));
  const double t = 1.0 + xi * z;
  if (t <= 0.0) return xi > 0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log(t) / xi));
}

double quantile(double p, double mu, double sigma, double xi) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError(fmt::format("GEV quantile: p = {} outside (0, 1)", p));
  const double y = -std::log(p);
  if (std::abs(xi) < kXiZero) return mu - sigma * std::log(y);
  return mu - sigma / xi * (1.0 - std::pow(y, -xi));
}

}  // namespace gev

namespace egpd {
namespace {
void check(const Params& p) {
  if (!(p.kappa > 0.0) || !(p.sigma > 0.0) || !std::isfinite(p.xi)) {
    throw UsageError(fmt::format("EGPD parameters need kappa > 0, sigma > 0 (got {}, {}, {})", p.kappa,
                                 p.sigma, p.xi));
  }
}
}  // namespace

double cdf(double y, const Params& p) {
  check(p);
  if (y <= 0.0) return 0.0;
  return std::pow(gpd::cdf(y, p.sigma, p.xi), p.kappa);
}

double survival(double y, const Params& p) {
  check(p);
  if (y <= 0.0) return 1.0;
  // 1 - H^kappa = -expm1(kappa log1p(-S_H))
  const double s = gpd::survival(y, p.sigma, p.xi);
  return -std::expm1(p.kappa * std::log1p(-s));
}

double pdf(double y, const Params& p) {
  check(p);
  if (y <= 0.0) return 0.0;
  const double h = gpd::pdf(y, p.sigma, p.xi);
  const double big_h = gpd::cdf(y, p.sigma, p.xi);
  if (h == 0.0) return 0.0;
  return p.kappa * h * std::pow(big_h, p.kappa - 1.0);
}

double quantile(double p, const Params& params) {
  check(params);
  if (!(p >= 0.0 && p < 1.0)) throw UsageError(fmt::format("EGPD quantile: p = {} outside [0, 1)", p));
  const double u = params.kappa == 1.0 ? p : std::pow(p, 1.0 / params.kappa);
  return gpd::quantile(u, params.sigma, params.xi);
}

double upper_quantile(double q, const Params& params) {
  check(params);
  if (!(q > 0.0 && q <= 1.0)) throw UsageError(fmt::format("EGPD tail probability {} outside (0, 1]", q));
  // P(Y > y) = q  <=>  S_H(y) = 1 - (1 - q)^(1/kappa)
  const double s = -std::expm1(std::log1p(-q) / params.kappa);
  if (s >= 1.0) return 0.0;
  return gpd::upper_quantile(s, params.sigma, params.xi);
}

std::vector<double> simulate(std::size_t n, const Params& params, Rng& rng) {
  check(params);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& y : out) {
    double u = 0.0;
    do {
      u = unif(rng);
    } while (u <= 0.0);
    y = quantile(u, params);
  }
  return out;
}

}  // namespace egpd

std::string to_string(Family family) {
  switch (family) {
    case Family::GPD: return "GPD";
    case Family::GEV: return "GEV";
    case Family::EGPD1: return "EGPD1";
    case Family::Gamma: return "Gamma";
  }
  return "?";
}

double ShapePrior::log_density(double xi) const {
  if (!(xi > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(xi) - rate * xi;
}

double ShapePrior::derivative(double xi) const { return (shape - 1.0) / xi - rate; }

}  // namespace lhspline
