#pragma once

#include "lhspline/evt.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lhspline {

enum class Estimator {
  LHS,         // extension factor 1, GCV lambda
  LHSer,       // extended range
  LHSboot,     // extended range + bootstrap bias correction
  LHSadj,      // extended range + lambda adjustment, cond-sim intervals
  GEV,         // annual maxima, GMLE
  GPD,         // exceedances over the .95 quantile, GMLE; delta and profile intervals
  EGPDOracle,  // MLE of the true model
  Gamma,
};

std::string to_string(Estimator estimator);
Estimator parse_estimator(std::string_view name);  // UsageError if unknown
std::vector<Estimator> all_estimators();

struct StudyConfig {
  std::size_t n_obs = 18250;
  egpd::Params params{0.8, 8.5, 0.2};
  std::size_t n_replicates = 20;
  std::vector<Estimator> estimators = all_estimators();
  std::vector<double> years{25.0, 50.0, 100.0};
  std::vector<double> probs{0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999};
  std::uint64_t seed = 2023;
  double level = 0.9;
  double obs_per_year = 365.0;
  std::size_t n_bins = 150;
  double extension_factor = 1.5;
  double lambda_factor = 0.05;
  std::size_t bootstrap_samples = 200;
  std::size_t posterior_draws = 1000;
  double gpd_quantile = 0.95;
  std::size_t block = 365;
  bool intervals = true;

  void validate() const;  // UsageError
};

/// One estimate of one target. lo/hi are NaN when no interval was computed.
struct StudyRow {
  std::size_t replicate = 0;
  std::string estimator;  // "GPD", "GPD-proflik", "LHS-ladj", ...
  std::string target;     // "RL25", "Q0.5", ...
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double truth = 0.0;
};

struct StudyFailure {
  std::size_t replicate = 0;
  std::string estimator;
  std::string message;
};

struct StudyResult {
  StudyConfig config;
  std::vector<StudyRow> rows;  // ordered by replicate, then estimator, then target
  std::vector<StudyFailure> failures;
  std::vector<std::uint64_t> checksums;  // FNV-1a of each replicate's data
};

/// Truth values from the analytic EGPD, in the order of config.years then
/// config.probs.
std::vector<std::pair<std::string, double>> study_truth(const StudyConfig& config);

/// Data of replicate r; identical for every estimator.
std::vector<double> replicate_data(const StudyConfig& config, std::size_t r);
std::uint64_t fnv1a(std::span<const double> values);

StudyResult run_study(const StudyConfig& config);

/// "replicate,estimator,target,estimate,lo,hi,truth"
std::string study_csv(const StudyResult& result);
std::string failures_csv(const StudyResult& result);

struct CoverageCell {
  std::string method;  // interval method column
  std::string target;
  std::size_t n = 0;   // replicates with an interval
  double ecp = 0.0;
  double mean_width = 0.0;
};

/// ECP and mean width of every interval-bearing estimator and target. The
/// intervals were computed at the study's level; a different `level` is a
/// usage error.
std::vector<CoverageCell> coverage_table(const StudyResult& result, double level);
/// Methods as columns, return levels as rows, "ecp (width)" cells.
std::string coverage_table_text(const std::vector<CoverageCell>& cells);
std::string coverage_csv(const std::vector<CoverageCell>& cells);

struct SummaryCell {
  std::string estimator;
  std::string target;
  std::size_t n = 0;
  double truth = 0.0;
  double median = 0.0;
  double median_bias = 0.0;  // median - truth
  double iqr = 0.0;
  double median_abs_error = 0.0;
};

std::vector<SummaryCell> summarize(const StudyResult& result);
std::string summary_csv(const std::vector<SummaryCell>& cells);

}  // namespace lhspline
