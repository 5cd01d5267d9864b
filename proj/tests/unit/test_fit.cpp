#include "lhspline/error.hpp"
#include "lhspline/fit.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace lhspline;
using lhspline::oracle::toy_histogram;

namespace {

const std::vector<double> kToyCounts{0, 1, 3, 7, 9, 8, 4, 2, 1, 0};

// Objective with the roughness computed by quadrature, not by K.
double oracle_objective(const LogHistogram& h, const std::vector<double>& g, double lambda) {
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) s += std::exp(g[j]) - h.counts[j] * g[j];
  return s + lambda * oracle::roughness_by_quadrature(h.knots, g);
}

// Newton iterations for the two-parameter Poisson regression log mu = a + b x.
std::pair<double, double> loglinear_poisson_mle(const std::vector<double>& x, const std::vector<double>& z) {
  double a = std::log(std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size()));
  double b = 0.0;
  for (int it = 0; it < 100; ++it) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double mu = std::exp(a + b * x[i]);
      g0 += z[i] - mu;
      g1 += (z[i] - mu) * x[i];
      h00 += mu;
      h01 += mu * x[i];
      h11 += mu * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    a += (h11 * g0 - h01 * g1) / det;
    b += (h00 * g1 - h01 * g0) / det;
  }
  return {a, b};
}

}  // namespace

TEST(Irls, MatchesDerivativeFreeMinimizer) {
  const auto h = toy_histogram(kToyCounts, -2.0, 0.4);
  const FitContext ctx(h);
  const double lambda = 0.3;
  const auto fit = irls_fit(ctx, lambda);
  ASSERT_TRUE(fit.converged);
  const auto nm = oracle::nelder_mead([&](const std::vector<double>& g) { return oracle_objective(h, g, lambda); },
                                       std::vector<double>(10, 0.0));
  const double ours = oracle_objective(h, fit.values(), lambda);
  const double theirs = oracle_objective(h, nm, lambda);
  EXPECT_LE(ours, theirs + 1e-6 * std::abs(theirs));
  EXPECT_LT(oracle::rel_diff(ours, theirs), 1e-6);
  EXPECT_LT(oracle::rel_diff(fit.objective, ours), 1e-9);
}

TEST(Irls, ObjectiveDecreasesAndGradientVanishes) {
  const FitContext ctx(toy_histogram(kToyCounts));
  const auto fit = irls_fit(ctx, 1.0);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] + 1e-12);
  }
  for (double d : penalized_gradient(ctx, fit.values(), 1.0)) EXPECT_NEAR(d, 0.0, 1e-6);
}

TEST(Irls, GradientMatchesFiniteDifference) {
  const FitContext ctx(toy_histogram(kToyCounts));
  std::vector<double> g{0.1, 0.2, 1.0, 1.8, 2.2, 2.0, 1.4, 0.8, 0.1, -0.5};
  const auto grad = penalized_gradient(ctx, g, 0.7);
  for (std::size_t j = 0; j < g.size(); ++j) {
    auto gp = g, gm = g;
    gp[j] += 1e-6;
    gm[j] -= 1e-6;
    const double fd = (penalized_objective(ctx, gp, 0.7) - penalized_objective(ctx, gm, 0.7)) / 2e-6;
    EXPECT_NEAR(grad[j], fd, 1e-6);
  }
}

TEST(Irls, HugeLambdaGivesLogLinearPoissonFit) {
  const auto h = toy_histogram({2, 3, 5, 6, 9, 12, 14, 20, 25, 31}, 0.0, 0.5);
  const auto fit = irls_fit(FitContext(h), 1e12);
  const auto [a, b] = loglinear_poisson_mle(h.knots, h.counts);
  for (std::size_t j = 0; j < h.size(); ++j) {
    EXPECT_NEAR(fit.values()[j], a + b * h.knots[j], 1e-6);
  }
}

TEST(Irls, RejectsBadArguments) {
  const FitContext ctx(toy_histogram(kToyCounts));
  EXPECT_THROW(irls_fit(ctx, 0.0), UsageError);
  EXPECT_THROW(irls_fit(ctx, -1.0), UsageError);
  EXPECT_THROW(ctx.with_counts({1, 2, 3}), UsageError);
}

TEST(LambdaGrid, TracesWithinBounds) {
  const FitContext ctx(toy_histogram(kToyCounts));
  const auto grid = default_lambda_grid(ctx);
  ASSERT_EQ(grid.size(), 40u);
  EXPECT_NEAR(std::log10(grid.back() / grid.front()), 8.0, 1e-9);
  const auto sel = select_lambda(ctx, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_TRUE(std::isfinite(sel.scores[i]));
    EXPECT_GE(sel.traces[i], 2.0 - 1e-6);
    EXPECT_LE(sel.traces[i], 10.0 + 1e-9);
  }
}

TEST(LambdaGrid, LogLinearIntensityPrefersLargeLambda) {
  // An unbiased risk criterion adds curvature by chance in a share of
  // samples, so the check is on the frequency of the top decade.
  int top = 0;
  const int reps = 40;
  for (int seed = 1; seed <= reps; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    std::vector<double> counts;
    for (int j = 0; j < 60; ++j) {
      std::poisson_distribution<int> pois(std::exp(3.0 + 0.04 * j));
      counts.push_back(pois(rng));
    }
    const FitContext ctx(toy_histogram(counts, 0.0, 0.1));
    const auto grid = default_lambda_grid(ctx);
    const auto sel = select_lambda(ctx, grid);
    const auto pos = std::find(grid.begin(), grid.end(), sel.lambda_cv) - grid.begin();
    if (pos >= static_cast<long>(grid.size()) - 5) ++top;
    EXPECT_LT(sel.traces[static_cast<std::size_t>(pos)], 8.0);
  }
  EXPECT_GE(top, reps * 2 / 5);
}

TEST(LambdaGrid, InteriorOnEgpdSample) {
  const oracle::EgpdFixture fx(101);
  const auto& grid = fx.selection.grid;
  EXPECT_GT(fx.selection.lambda_cv, grid.front());
  EXPECT_LT(fx.selection.lambda_cv, grid.back());
}

TEST(LambdaAdjust, FactorOneIsIdentity) {
  const FitContext ctx(toy_histogram(kToyCounts));
  const auto sel = select_lambda(ctx, default_lambda_grid(ctx));
  const auto same = lambda_adjust(ctx, sel, 1.0);
  for (std::size_t j = 0; j < same.values().size(); ++j) {
    EXPECT_NEAR(same.values()[j], sel.fit.values()[j], 1e-8);
  }
  EXPECT_THROW(lambda_adjust(ctx, sel, 0.0), UsageError);
  EXPECT_THROW(lambda_adjust(ctx, sel, 1.5), UsageError);
}

TEST(LambdaAdjust, SteeperTailThanSelectedFit) {
  // true log-scale right slope is -1/xi = -5
  int steeper = 0;
  double err_cv = 0.0, err_adj = 0.0;
  const int reps = 5;
  for (int r = 0; r < reps; ++r) {
    const oracle::EgpdFixture fx(200 + static_cast<std::uint64_t>(r));
    const auto adj = lambda_adjust(fx.context, fx.selection, 0.05);
    const double s_cv = fx.selection.fit.spline.right_slope;
    const double s_adj = adj.spline.right_slope;
    if (std::abs(s_adj + 5.0) < std::abs(s_cv + 5.0)) ++steeper;
    err_cv += std::abs(s_cv + 5.0);
    err_adj += std::abs(s_adj + 5.0);
  }
  EXPECT_GE(steeper, 4);
  EXPECT_LT(err_adj, err_cv);
}

TEST(Bootstrap, NoBiasWhenRefitsReproduceFit) {
  // Poisson noise is negligible at these counts, so every refit returns the fit.
  std::vector<double> counts;
  for (int j = 0; j < 12; ++j) counts.push_back(std::round(1e13 * std::exp(-0.5 * (j - 5.5) * (j - 5.5) / 9.0)));
  const FitContext ctx(toy_histogram(counts, 0.0, 0.5));
  const auto fit = irls_fit(ctx, 1.0);
  const auto corr = bootstrap_bias_correct(ctx, fit, 20, 3);
  for (double b : corr.bias) EXPECT_NEAR(b, 0.0, 1e-5);
  EXPECT_EQ(corr.failures, 0u);
}

TEST(Bootstrap, KeepsRightSlopeNegativeAndIsSeeded) {
  const oracle::EgpdFixture fx(301, 1.5, 5000);
  const auto a = bootstrap_bias_correct(fx.context, fx.selection.fit, 40, 9);
  const auto b = bootstrap_bias_correct(fx.context, fx.selection.fit, 40, 9);
  EXPECT_LT(a.corrected.right_slope, 0.0);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.replicates, 40u);
}
