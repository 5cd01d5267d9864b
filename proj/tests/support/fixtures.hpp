#pragma once

#include "lhspline/binning.hpp"
#include "lhspline/density.hpp"
#include "lhspline/evt.hpp"
#include "lhspline/fit.hpp"

#include <cstdint>
#include <vector>

namespace lhspline::oracle {

// EGPD(0.8, 8.5, 0.2) sample at the simulation-study size, binned and fitted
// with the selected smoothing parameter.
struct EgpdFixture {
  std::vector<double> sample;
  FitContext context;
  LambdaSelection selection;

  explicit EgpdFixture(std::uint64_t seed, double extension = 1.5, std::size_t n = 18250)
      : sample(simulate(seed, n)),
        context(build_histogram(sample, {.n_bins = 150, .extension_factor = extension})),
        selection(select_lambda(context, default_lambda_grid(context))) {}

 private:
  static std::vector<double> simulate(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    return egpd::simulate(n, {}, rng);
  }
};

}  // namespace lhspline::oracle
