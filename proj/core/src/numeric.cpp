#include "lhspline/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace lhspline::numeric {

MinimizeResult minimize_bfgs(const Objective& objective, Eigen::VectorXd x0,
                             const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  MinimizeResult result;
  result.x = std::move(x0);
  result.grad = Eigen::VectorXd::Zero(n);
  result.value = objective(result.x, result.grad);
  if (!std::isfinite(result.value)) {
    throw std::invalid_argument("minimize_bfgs: starting point is not admissible");
  }

  Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd trial_grad(n);
  bool first_step = true;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter;
    const double scale = std::max(1.0, std::abs(result.value));
    if (result.grad.lpNorm<Eigen::Infinity>() < options.grad_tol * scale) {
      result.converged = true;
      return result;
    }

    Eigen::VectorXd direction = -inv_hess * result.grad;
    double slope = direction.dot(result.grad);
    if (!(slope < 0.0)) {
      inv_hess.setIdentity();
      direction = -result.grad;
      slope = direction.dot(result.grad);
    }
    if (first_step) {
      // keep the first trial step modest in parameter space
      const double norm = direction.lpNorm<Eigen::Infinity>();
      if (norm > 1.0) direction /= norm;
    }

    double step = 1.0;
    Eigen::VectorXd trial;
    double trial_value = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = result.x + step * direction;
      trial_value = objective(trial, trial_grad);
      if (std::isfinite(trial_value) &&
          trial_value <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no descent possible along the quasi-Newton direction; retry once
      // with steepest descent before giving up
      if (!inv_hess.isIdentity()) {
        inv_hess.setIdentity();
        continue;
      }
      result.converged =
          result.grad.lpNorm<Eigen::Infinity>() < std::sqrt(options.grad_tol) * scale;
      return result;
    }

    const Eigen::VectorXd s = trial - result.x;
    const Eigen::VectorXd y = trial_grad - result.grad;
    const double previous = result.value;
    result.x = trial;
    result.value = trial_value;
    result.grad = trial_grad;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (first_step) {
        inv_hess *= sy / y.squaredNorm();
        first_step = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      inv_hess = (eye - rho * s * y.transpose()) * inv_hess *
                     (eye - rho * y * s.transpose()) +
                 rho * s * s.transpose();
    }

    if (std::abs(previous - result.value) <=
            options.f_rel_tol * std::max(1.0, std::abs(previous)) &&
        result.grad.lpNorm<Eigen::Infinity>() <
            std::sqrt(options.grad_tol) * scale) {
      result.converged = true;
      result.iterations = iter + 1;
      return result;
    }
  }
  result.iterations = options.max_iter;
  return result;
}

Eigen::MatrixXd hessian_from_gradient(const Objective& objective,
                                      const Eigen::VectorXd& x, double rel_step) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd gp(n), gm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const double fp = objective(xp, gp);
    const double fm = objective(xm, gm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      // one-sided difference at the edge of the admissible region
      Eigen::VectorXd g0(n);
      objective(x, g0);
      if (std::isfinite(fp)) {
        hess.col(j) = (gp - g0) / h;
      } else if (std::isfinite(fm)) {
        hess.col(j) = (g0 - gm) / h;
      } else {
        hess.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
      continue;
    }
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels) {
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) {
    sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

double empirical_quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (sorted.size() == 1) return sorted.front();
  p = std::clamp(p, 0.0, 1.0);
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empirical_quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return empirical_quantile_sorted(values, p);
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double median(std::vector<double> values) { return empirical_quantile(std::move(values), 0.5); }

std::size_t worker_count() {
  if (const char* env = std::getenv("LHSPLINE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
// Nested calls run serially on the calling worker.
thread_local bool in_parallel_region = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = in_parallel_region ? 1 : std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    const bool outer = in_parallel_region;
    in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    in_parallel_region = outer;
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace lhspline::numeric
