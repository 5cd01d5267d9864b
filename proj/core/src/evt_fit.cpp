#include "lhspline/evt.hpp"

#include "lhspline/error.hpp"
#include "lhspline/numeric.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lhspline {
namespace {

using Eigen::VectorXd;

constexpr double kXiZero = 1e-8;
constexpr double kXiLo = -0.95;  // searched region for the shape parameter
constexpr double kXiHi = 1.5;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool xi_admissible(double xi, const std::optional<ShapePrior>& prior) {
  if (prior) return xi > 0.0 && xi < kXiHi;
  return xi > kXiLo && xi < kXiHi;
}

// log(1 + xi z) / xi^2 - z / (xi (1 + xi z)), the xi-derivative kernel
// shared by the GP-type likelihoods; z^2 / 2 in the limit.
double shape_kernel(double z, double xi, double t) {
  if (std::abs(xi) < 1e-5) {
    // series in xi: z^2/2 - 2 xi z^3 / 3 + ...
    return z * z / 2.0 - 2.0 * xi * z * z * z / 3.0;
  }
  return std::log(t) / (xi * xi) - z / (xi * t);
}

// GPD on excesses, gradient in (sigma, xi).
double gpd_loglik(std::span<const double> excess, double sigma, double xi, VectorXd* grad) {
  if (!(sigma > 0.0)) return -kInf;
  double ll = 0.0, d_sigma = 0.0, d_xi = 0.0;
  const bool gumbel = std::abs(xi) < kXiZero;
  for (double y : excess) {
    const double z = y / sigma;
    if (gumbel) {
      ll += -std::log(sigma) - z;
      d_sigma += (-1.0 + z) / sigma;
      d_xi += z * z / 2.0 - z;
      continue;
    }
    const double t = 1.0 + xi * z;
    if (t <= 0.0) return -kInf;
    const double log_t = std::log1p(xi * z);
    ll += -std::log(sigma) - (1.0 + 1.0 / xi) * log_t;
    d_sigma += (-1.0 + (1.0 + xi) * z / t) / sigma;
    d_xi += shape_kernel(z, xi, t) - z / t;
  }
  if (grad) {
    grad->resize(2);
    *grad << d_sigma, d_xi;
  }
  return ll;
}

// GEV, gradient in (mu, sigma, xi).
double gev_loglik(std::span<const double> x, double mu, double sigma, double xi, VectorXd* grad) {
  if (!(sigma > 0.0)) return -kInf;
  double ll = 0.0, d_mu = 0.0, d_sigma = 0.0, d_xi = 0.0;
  const bool gumbel = std::abs(xi) < kXiZero;
  for (double v : x) {
    const double z = (v - mu) / sigma;
    if (gumbel) {
      const double e = std::exp(-z);
      ll += -std::log(sigma) - z - e;
      d_mu += (1.0 - e) / sigma;
      d_sigma += (-1.0 + z - z * e) / sigma;
      d_xi += (1.0 - e) * z * z / 2.0 - z;
      continue;
    }
    const double t = 1.0 + xi * z;
    if (t <= 0.0) return -kInf;
    const double log_t = std::log1p(xi * z);
    const double w = std::exp(-log_t / xi);
    ll += -std::log(sigma) - (1.0 + 1.0 / xi) * log_t - w;
    d_mu += (1.0 + xi - w) / (sigma * t);
    d_sigma += (-1.0 + (1.0 + xi - w) * z / t) / sigma;
    d_xi += (1.0 - w) * shape_kernel(z, xi, t) - z / t;
  }
  if (grad) {
    grad->resize(3);
    *grad << d_mu, d_sigma, d_xi;
  }
  return ll;
}

// EGPD model (i), gradient in (kappa, sigma, xi).
double egpd_loglik(std::span<const double> y, double kappa, double sigma, double xi, VectorXd* grad) {
  if (!(kappa > 0.0) || !(sigma > 0.0)) return -kInf;
  double ll = 0.0, d_kappa = 0.0, d_sigma = 0.0, d_xi = 0.0;
  const bool gumbel = std::abs(xi) < kXiZero;
  const double log_kappa = std::log(kappa);
  for (double v : y) {
    const double z = v / sigma;
    double t = 1.0, log_t = 0.0, log_surv = -z, kernel = z * z / 2.0;
    if (!gumbel) {
      t = 1.0 + xi * z;
      if (t <= 0.0) return -kInf;
      log_t = std::log1p(xi * z);
      log_surv = -log_t / xi;
      kernel = shape_kernel(z, xi, t);
    }
    const double surv = std::exp(log_surv);  // v in the notes: 1 - H
    const double big_h = -std::expm1(log_surv);
    if (!(big_h > 0.0)) return -kInf;
    const double log_h = std::log(big_h);
    const double log_small_h = gumbel ? -std::log(sigma) - z : -std::log(sigma) - (1.0 + 1.0 / xi) * log_t;
    ll += log_kappa + log_small_h + (kappa - 1.0) * log_h;
    const double ratio = surv / big_h;
    d_kappa += 1.0 / kappa + log_h;
    const double dz = gumbel ? z : (1.0 + xi) * z / t;  // -sigma d(log h)/d sigma - 1
    const double dv_ds = gumbel ? z : z / t;               // sigma d(log v)/d sigma
    d_sigma += (-1.0 + dz - (kappa - 1.0) * ratio * dv_ds) / sigma;
    const double dlogh_dxi = gumbel ? z * z / 2.0 - z : kernel - z / t;
    d_xi += dlogh_dxi - (kappa - 1.0) * ratio * kernel;
  }
  if (grad) {
    grad->resize(3);
    *grad << d_kappa, d_sigma, d_xi;
  }
  return ll;
}

// Gamma(shape, rate), gradient in (shape, rate).
double gamma_loglik(std::span<const double> y, double shape, double rate, VectorXd* grad) {
  if (!(shape > 0.0) || !(rate > 0.0)) return -kInf;
  double sum_log = 0.0, sum = 0.0;
  for (double v : y) {
    if (!(v > 0.0)) return -kInf;
    sum_log += std::log(v);
    sum += v;
  }
  const double n = static_cast<double>(y.size());
  const double ll = n * (shape * std::log(rate) - std::lgamma(shape)) + (shape - 1.0) * sum_log - rate * sum;
  if (grad) {
    grad->resize(2);
    *grad << n * (std::log(rate) - boost::math::digamma(shape)) + sum_log, n * shape / rate - sum;
  }
  return ll;
}

std::size_t shape_index(Family family) {
  switch (family) {
    case Family::GPD: return 1;
    case Family::GEV: return 2;
    case Family::EGPD1: return 2;
    case Family::Gamma: return std::size_t(-1);
  }
  return std::size_t(-1);
}

double family_loglik(Family family, std::span<const double> data, const VectorXd& p,
                     const std::optional<ShapePrior>& prior, VectorXd* grad) {
  const std::size_t xi_at = shape_index(family);
  if (xi_at != std::size_t(-1) && !xi_admissible(p(static_cast<Eigen::Index>(xi_at)), prior)) return -kInf;
  double ll = -kInf;
  switch (family) {
    case Family::GPD: ll = gpd_loglik(data, p(0), p(1), grad); break;
    case Family::GEV: ll = gev_loglik(data, p(0), p(1), p(2), grad); break;
    case Family::EGPD1: ll = egpd_loglik(data, p(0), p(1), p(2), grad); break;
    case Family::Gamma: ll = gamma_loglik(data, p(0), p(1), grad); break;
  }
  if (!std::isfinite(ll)) return -kInf;
  if (prior && xi_at != std::size_t(-1)) {
    const double xi = p(static_cast<Eigen::Index>(xi_at));
    ll += prior->log_density(xi);
    if (grad) (*grad)(static_cast<Eigen::Index>(xi_at)) += prior->derivative(xi);
  }
  return ll;
}

// Positive parameters are optimized on the log scale.
std::vector<bool> log_scaled(Family family) {
  switch (family) {
    case Family::GPD: return {true, false};
    case Family::GEV: return {false, true, false};
    case Family::EGPD1: return {true, true, false};
    case Family::Gamma: return {true, true};
  }
  return {};
}

std::vector<std::string> param_names(Family family) {
  switch (family) {
    case Family::GPD: return {"sigma", "xi"};
    case Family::GEV: return {"mu", "sigma", "xi"};
    case Family::EGPD1: return {"kappa", "sigma", "xi"};
    case Family::Gamma: return {"shape", "rate"};
  }
  return {};
}

numeric::Objective natural_objective(const EvtFit& fit) {
  return [&fit](const VectorXd& p, VectorXd& grad) {
    VectorXd g;
    const double ll = family_loglik(fit.family, fit.data, p, fit.prior, &g);
    if (!std::isfinite(ll)) return kInf;
    grad = -g;
    return -ll;
  };
}

void fit_by_bfgs(EvtFit& fit, VectorXd start) {
  const auto scaled = log_scaled(fit.family);
  const Eigen::Index n = start.size();
  auto to_natural = [&](const VectorXd& x) {
    VectorXd p = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (scaled[static_cast<std::size_t>(i)]) p(i) = std::exp(x(i));
    }
    return p;
  };
  numeric::Objective objective = [&](const VectorXd& x, VectorXd& grad) {
    const VectorXd p = to_natural(x);
    VectorXd g;
    const double ll = family_loglik(fit.family, fit.data, p, fit.prior, &g);
    if (!std::isfinite(ll)) return kInf;
    grad.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      grad(i) = -g(i) * (scaled[static_cast<std::size_t>(i)] ? p(i) : 1.0);
    }
    return -ll;
  };
  VectorXd x0 = start;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (scaled[static_cast<std::size_t>(i)]) x0(i) = std::log(start(i));
  }
  VectorXd probe;
  if (!std::isfinite(objective(x0, probe))) {
    throw NumericError(fmt::format("{} fit: starting values are not admissible", to_string(fit.family)));
  }
  numeric::MinimizeOptions options;
  options.max_iter = 1000;
  const auto result = numeric::minimize_bfgs(objective, x0, options);
  fit.params = to_natural(result.x);
  fit.loglik = -result.value;
  const double scale = std::max(1.0, std::abs(result.value));
  fit.converged = result.converged || result.grad.lpNorm<Eigen::Infinity>() < 1e-4 * scale;

  const std::size_t xi_at = shape_index(fit.family);
  if (xi_at != std::size_t(-1)) {
    const double xi = fit.params(static_cast<Eigen::Index>(xi_at));
    const double lo = fit.prior ? 0.0 : kXiLo;
    fit.at_boundary = xi - lo < 1e-3 || kXiHi - xi < 1e-3;
  }
  if (!fit.converged && !fit.at_boundary) {
    throw NumericError(fmt::format("{} fit did not converge (gradient {:.3g} after {} iterations)",
                                   to_string(fit.family), result.grad.lpNorm<Eigen::Infinity>(),
                                   result.iterations));
  }

  const Eigen::MatrixXd info = numeric::hessian_from_gradient(natural_objective(fit), fit.params);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0) {
    fit.cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
              eig.eigenvectors().transpose();
  } else {
    fit.cov = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  }
}

void require_finite_positive(std::span<const double> v, std::string_view what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(fmt::format("{}: non-finite value", what));
  }
}

std::pair<double, double> mean_var(std::span<const double> v) {
  const double m = numeric::mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, ss / static_cast<double>(v.size() > 1 ? v.size() - 1 : 1)};
}

double z_level(double level) {
  if (!(level >= 0.0 && level < 1.0)) throw UsageError(fmt::format("level {} outside [0, 1)", level));
  if (level == 0.0) return 0.0;
  return boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + level));
}

}  // namespace

double EvtFit::param(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params(static_cast<Eigen::Index>(i));
  }
  throw UsageError(fmt::format("{} fit has no parameter '{}'", to_string(family), name));
}

double EvtFit::standard_error(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      const auto k = static_cast<Eigen::Index>(i);
      return std::sqrt(cov(k, k));
    }
  }
  throw UsageError(fmt::format("{} fit has no parameter '{}'", to_string(family), name));
}

EvtFit gpd_fit(std::span<const double> exceedances, double threshold, std::size_t sample_size,
               std::optional<ShapePrior> prior) {
  if (exceedances.size() < 30) {
    throw DataError(fmt::format("GPD fit needs at least 30 exceedances, got {}", exceedances.size()));
  }
  require_finite_positive(exceedances, "GPD fit");
  EvtFit fit;
  fit.family = Family::GPD;
  fit.names = param_names(fit.family);
  fit.prior = prior;
  fit.threshold = threshold;
  fit.sample_size = std::max(sample_size, exceedances.size());
  fit.exceed_rate = static_cast<double>(exceedances.size()) / static_cast<double>(fit.sample_size);
  fit.data.reserve(exceedances.size());
  for (double y : exceedances) {
    if (!(y > threshold)) {
      throw DataError(fmt::format("GPD fit: value {} does not exceed threshold {}", y, threshold));
    }
    fit.data.push_back(y - threshold);
  }
  const auto [m, v] = mean_var(fit.data);
  if (!(v > 0.0)) throw DataError("GPD fit: degenerate sample (zero variance)");
  double xi0 = 0.5 * (1.0 - m * m / v);
  xi0 = prior ? std::clamp(xi0, 0.05, 0.8) : std::clamp(xi0, -0.4, 0.8);
  const double sigma0 = m * (1.0 - xi0);
  fit_by_bfgs(fit, (VectorXd(2) << sigma0, xi0).finished());
  return fit;
}

EvtFit gev_fit(std::span<const double> block_maxima, std::optional<ShapePrior> prior) {
  if (block_maxima.size() < 20) {
    throw DataError(fmt::format("GEV fit needs at least 20 block maxima, got {}", block_maxima.size()));
  }
  require_finite_positive(block_maxima, "GEV fit");
  EvtFit fit;
  fit.family = Family::GEV;
  fit.names = param_names(fit.family);
  fit.prior = prior;
  fit.data.assign(block_maxima.begin(), block_maxima.end());
  fit.sample_size = fit.data.size();
  const auto [m, v] = mean_var(fit.data);
  if (!(v > 0.0)) throw DataError("GEV fit: degenerate sample (all maxima equal)");
  const double sigma0 = std::sqrt(6.0 * v) / std::numbers::pi;
  const double mu0 = m - 0.5772156649 * sigma0;
  fit_by_bfgs(fit, (VectorXd(3) << mu0, sigma0, 0.1).finished());
  return fit;
}

EvtFit egpd1_fit(std::span<const double> amounts) {
  if (amounts.size() < 100) {
    throw DataError(fmt::format("EGPD fit needs at least 100 amounts, got {}", amounts.size()));
  }
  EvtFit fit;
  fit.family = Family::EGPD1;
  fit.names = param_names(fit.family);
  fit.data.assign(amounts.begin(), amounts.end());
  for (double y : fit.data) {
    if (!(y > 0.0) || !std::isfinite(y)) throw DataError("EGPD fit: amounts must be positive");
  }
  fit.sample_size = fit.data.size();
  const auto [m, v] = mean_var(fit.data);
  if (!(v > 0.0)) throw DataError("EGPD fit: degenerate sample");
  const double xi0 = std::clamp(0.5 * (1.0 - m * m / v), 0.01, 0.5);
  const double sigma0 = m * (1.0 - xi0);
  fit_by_bfgs(fit, (VectorXd(3) << 1.0, sigma0, xi0).finished());
  return fit;
}

EvtFit gamma_fit(std::span<const double> amounts) {
  if (amounts.size() < 100) {
    throw DataError(fmt::format("gamma fit needs at least 100 amounts, got {}", amounts.size()));
  }
  EvtFit fit;
  fit.family = Family::Gamma;
  fit.names = param_names(fit.family);
  fit.data.assign(amounts.begin(), amounts.end());
  for (double y : fit.data) {
    if (!(y > 0.0) || !std::isfinite(y)) throw DataError("gamma fit: amounts must be positive");
  }
  fit.sample_size = fit.data.size();
  const auto [m, v] = mean_var(fit.data);
  if (!(v > 0.0)) throw DataError("gamma fit: degenerate sample");
  fit_by_bfgs(fit, (VectorXd(2) << m * m / v, m / v).finished());
  return fit;
}

Exceedances exceedances_over_quantile(std::span<const double> sample, double prob) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  Exceedances out;
  out.threshold = numeric::empirical_quantile_sorted(sorted, prob);
  for (double y : sample) {
    if (y > out.threshold) out.values.push_back(y);
  }
  return out;
}

std::vector<double> block_maxima(std::span<const double> sample, std::size_t block) {
  if (block == 0) throw UsageError("block size must be positive");
  std::vector<double> out;
  for (std::size_t start = 0; start + block <= sample.size(); start += block) {
    out.push_back(*std::max_element(sample.begin() + static_cast<std::ptrdiff_t>(start),
                                    sample.begin() + static_cast<std::ptrdiff_t>(start + block)));
  }
  return out;
}

double evt_loglik(const EvtFit& fit, const VectorXd& params) {
  return family_loglik(fit.family, fit.data, params, fit.prior, nullptr);
}

double evt_return_level_at(const EvtFit& fit, const VectorXd& p, double years, double obs_per_year) {
  if (!(years > 0.0)) throw UsageError("return period must be positive");
  switch (fit.family) {
    case Family::GPD: {
      const double q = 1.0 / (years * obs_per_year * fit.exceed_rate);
      if (!(q < 1.0)) {
        throw UsageError(fmt::format("{}-year level lies below the GPD threshold", years));
      }
      return fit.threshold + gpd::upper_quantile(q, p(0), p(1));
    }
    case Family::GEV: {
      if (!(years > 1.0)) throw UsageError("GEV return period must exceed one block");
      return gev::quantile(1.0 - 1.0 / years, p(0), p(1), p(2));
    }
    case Family::EGPD1: {
      const double q = 1.0 / (years * obs_per_year);
      if (!(q < 1.0)) throw UsageError("return period too short");
      return egpd::upper_quantile(q, {p(0), p(1), p(2)});
    }
    case Family::Gamma: {
      const double q = 1.0 / (years * obs_per_year);
      if (!(q < 1.0)) throw UsageError("return period too short");
      return boost::math::gamma_q_inv(p(0), q) / p(1);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double evt_return_level(const EvtFit& fit, double years, double obs_per_year) {
  return evt_return_level_at(fit, fit.params, years, obs_per_year);
}

double evt_return_period_at(const EvtFit& fit, const VectorXd& p, double y, double obs_per_year) {
  double exceed = 0.0;
  switch (fit.family) {
    case Family::GPD:
      if (!(y > fit.threshold)) {
        throw UsageError(fmt::format("return period of {} is below the GPD threshold {}", y, fit.threshold));
      }
      exceed = fit.exceed_rate * gpd::survival(y - fit.threshold, p(0), p(1));
      break;
    case Family::GEV: {
      const double g = gev::cdf(y, p(0), p(1), p(2));
      // per block
      return g >= 1.0 ? kInf : 1.0 / (1.0 - g);
    }
    case Family::EGPD1: exceed = egpd::survival(y, {p(0), p(1), p(2)}); break;
    case Family::Gamma: exceed = y <= 0 ? 1.0 : boost::math::gamma_q(p(0), p(1) * y); break;
  }
  if (!(exceed > 0.0)) return kInf;
  return 1.0 / (exceed * obs_per_year);
}

double evt_return_period(const EvtFit& fit, double y, double obs_per_year) {
  return evt_return_period_at(fit, fit.params, y, obs_per_year);
}

double evt_quantile(const EvtFit& fit, double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError(fmt::format("probability {} outside (0, 1)", p));
  const auto& x = fit.params;
  switch (fit.family) {
    case Family::GPD: return fit.threshold + gpd::quantile(p, x(0), x(1));
    case Family::GEV: return gev::quantile(p, x(0), x(1), x(2));
    case Family::EGPD1: return egpd::quantile(p, {x(0), x(1), x(2)});
    case Family::Gamma: return boost::math::gamma_p_inv(x(0), p) / x(1);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

template <class F>
RlInterval delta_interval(const EvtFit& fit, F&& functional, double level, bool log_scale) {
  const Eigen::Index n = fit.params.size();
  RlInterval out;
  out.estimate = functional(fit.params);
  auto transform = [&](double v) { return log_scale ? std::log(v) : v; };
  VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(fit.params(i)));
    VectorXd up = fit.params, down = fit.params;
    up(i) += h;
    down(i) -= h;
    grad(i) = (transform(functional(up)) - transform(functional(down))) / (2.0 * h);
  }
  const double var = grad.dot(fit.cov * grad);
  if (!(var >= 0.0)) throw NumericError("delta method: covariance not available at the fit");
  const double half = z_level(level) * std::sqrt(var);
  const double center = transform(out.estimate);
  out.lo = log_scale ? std::exp(center - half) : center - half;
  out.hi = log_scale ? std::exp(center + half) : center + half;
  return out;
}

// Profile log-likelihood with the return level r fixed.
class RlProfile {
 public:
  RlProfile(const EvtFit& fit, double years, double obs_per_year)
      : fit_(fit), years_(years), obs_(obs_per_year) {
    if (fit.family == Family::GPD) {
      q_ = 1.0 / (years * obs_per_year * fit.exceed_rate);
      if (!(q_ < 1.0)) throw UsageError("return level lies below the GPD threshold");
    } else if (fit.family == Family::GEV) {
      if (!(years > 1.0)) throw UsageError("GEV return period must exceed one block");
    } else {
      throw UsageError("profile likelihood intervals need a GPD or GEV fit");
    }
  }

  double operator()(double r) {
    if (fit_.family == Family::GPD) return gpd_profile(r);
    return gev_profile(r);
  }

 private:
  double xi_lo() const { return fit_.prior ? 1e-6 : kXiLo + 1e-6; }

  double gpd_profile(double r) {
    const double excess = r - fit_.threshold;
    if (!(excess > 0.0)) return -kInf;
    auto negative = [&](double xi) {
      const double a = gpd::upper_quantile(q_, 1.0, xi);
      VectorXd p(2);
      p << excess / a, xi;
      const double ll = evt_loglik(fit_, p);
      return std::isfinite(ll) ? -ll : 1e300;
    };
    const auto [xi, value] = boost::math::tools::brent_find_minima(negative, xi_lo(), kXiHi - 1e-6, 50);
    (void)xi;
    return value >= 1e300 ? -kInf : -value;
  }

  double gev_profile(double r) {
    const double c_at = 1.0 - 1.0 / years_;
    auto profile_ll = [&](double log_sigma, double xi) {
      const double sigma = std::exp(log_sigma);
      VectorXd p(3);
      p << r - sigma * gev::quantile(c_at, 0.0, 1.0, xi), sigma, xi;
      return evt_loglik(fit_, p);
    };
    numeric::Objective objective = [&](const VectorXd& x, VectorXd& grad) {
      const double f = profile_ll(x(0), x(1));
      if (!std::isfinite(f)) return kInf;
      grad.resize(2);
      for (int i = 0; i < 2; ++i) {
        VectorXd up = x, down = x;
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        up(i) += h;
        down(i) -= h;
        const double fu = profile_ll(up(0), up(1));
        const double fd = profile_ll(down(0), down(1));
        if (std::isfinite(fu) && std::isfinite(fd)) {
          grad(i) = -(fu - fd) / (2.0 * h);
        } else if (std::isfinite(fu)) {
          grad(i) = -(fu - f) / h;
        } else {
          grad(i) = -(f - fd) / h;
        }
      }
      return -f;
    };
    VectorXd start = warm_ ? *warm_ : (VectorXd(2) << std::log(fit_.params(1)), fit_.params(2)).finished();
    VectorXd probe;
    if (!std::isfinite(objective(start, probe))) {
      start << std::log(fit_.params(1)), fit_.params(2);
      if (!std::isfinite(objective(start, probe))) {
        // search sigma upward for an admissible start
        for (int k = 0; k < 60 && !std::isfinite(objective(start, probe)); ++k) start(0) += 0.25;
        if (!std::isfinite(objective(start, probe))) return -kInf;
      }
    }
    numeric::MinimizeOptions options;
    options.grad_tol = 1e-6;
    const auto result = numeric::minimize_bfgs(objective, start, options);
    warm_ = result.x;
    return -result.value;
  }

  const EvtFit& fit_;
  double years_;
  double obs_;
  double q_ = 0.0;
  std::optional<VectorXd> warm_;
};

}  // namespace

RlInterval rl_interval_delta(const EvtFit& fit, double years, double obs_per_year, double level) {
  return delta_interval(
      fit, [&](const VectorXd& p) { return evt_return_level_at(fit, p, years, obs_per_year); }, level,
      false);
}

RlInterval rp_interval_delta(const EvtFit& fit, double y, double obs_per_year, double level) {
  return delta_interval(
      fit, [&](const VectorXd& p) { return evt_return_period_at(fit, p, y, obs_per_year); }, level,
      true);
}

RlInterval rl_interval_profile(const EvtFit& fit, double years, double obs_per_year, double level) {
  if (!(level >= 0.0 && level < 1.0)) throw UsageError(fmt::format("level {} outside [0, 1)", level));
  RlProfile profile(fit, years, obs_per_year);
  RlInterval out;
  out.estimate = evt_return_level(fit, years, obs_per_year);
  out.lo = out.hi = out.estimate;
  if (level == 0.0) return out;

  const double peak = std::max(fit.loglik, profile(out.estimate));
  const double cutoff =
      peak - 0.5 * boost::math::quantile(boost::math::chi_squared(1.0), level);
  auto target = [&](double r) { return profile(r) - cutoff; };
  if (!(target(out.estimate) > 0.0)) return out;

  double se = 0.0;
  try {
    const auto d = rl_interval_delta(fit, years, obs_per_year, 0.6827);
    se = 0.5 * (d.hi - d.lo);
  } catch (const Error&) {
  }
  const double step0 = std::max({se, 0.02 * std::abs(out.estimate), 1e-6});
  boost::math::tools::eps_tolerance<double> tol(40);

  // upper endpoint
  {
    double inner = out.estimate, step = step0, outer = inner + step;
    int k = 0;
    for (; k < 60 && target(outer) > 0.0; ++k) {
      inner = outer;
      step *= 2.0;
      outer = inner + step;
    }
    if (k == 60) throw NumericError("profile likelihood: upper bracket not found");
    std::uintmax_t iters = 100;
    const auto [a, b] = boost::math::tools::toms748_solve(target, inner, outer, tol, iters);
    out.hi = 0.5 * (a + b);
  }
  // lower endpoint; a GPD return level cannot fall below the threshold
  {
    const double floor_value = fit.family == Family::GPD ? fit.threshold : -kInf;
    double inner = out.estimate, step = step0;
    double outer = std::max(inner - step, floor_value + 0.5 * (inner - floor_value));
    if (fit.family != Family::GPD) outer = inner - step;
    int k = 0;
    for (; k < 60 && target(outer) > 0.0; ++k) {
      inner = outer;
      step *= 2.0;
      outer = fit.family == Family::GPD ? std::max(inner - step, floor_value + 0.5 * (inner - floor_value))
                                        : inner - step;
    }
    if (k == 60) throw NumericError("profile likelihood: lower bracket not found");
    std::uintmax_t iters = 100;
    const auto [a, b] = boost::math::tools::toms748_solve(target, outer, inner, tol, iters);
    out.lo = 0.5 * (a + b);
  }
  return out;
}

}  // namespace lhspline
