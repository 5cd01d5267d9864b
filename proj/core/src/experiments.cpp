#include "lhspline/experiments.hpp"

#include "lhspline/binning.hpp"
#include "lhspline/csv.hpp"
#include "lhspline/density.hpp"
#include "lhspline/error.hpp"
#include "lhspline/fit.hpp"
#include "lhspline/numeric.hpp"
#include "lhspline/uncertainty.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>

namespace lhspline {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string rl_label(double years) { return fmt::format("RL{:g}", years); }
std::string q_label(double p) { return fmt::format("Q{:g}", p); }

// Rows and failures of one replicate, filled independently of the others.
struct ReplicateOutput {
  std::vector<StudyRow> rows;
  std::vector<StudyFailure> failures;
  std::uint64_t checksum = 0;
};

class ReplicateRunner {
 public:
  ReplicateRunner(const StudyConfig& config, std::size_t replicate,
                  const std::vector<std::pair<std::string, double>>& truth)
      : config_(config), r_(replicate) {
    for (const auto& [label, value] : truth) truth_[label] = value;
  }

  ReplicateOutput run() {
    data_ = replicate_data(config_, r_);
    out_.checksum = fnv1a(data_);
    for (Estimator e : config_.estimators) {
      guarded(to_string(e), [&] { dispatch(e); });
    }
    return std::move(out_);
  }

 private:
  void dispatch(Estimator e) {
    switch (e) {
      case Estimator::LHS: lhs(1.0, Estimator::LHS); break;
      case Estimator::LHSer: lhs(config_.extension_factor, Estimator::LHSer); break;
      case Estimator::LHSboot: lhs(config_.extension_factor, Estimator::LHSboot); break;
      case Estimator::LHSadj: lhs(config_.extension_factor, Estimator::LHSadj); break;
      case Estimator::GEV: gev(); break;
      case Estimator::GPD: gpd(); break;
      case Estimator::EGPDOracle: parametric(egpd1_fit(data_), Estimator::EGPDOracle); break;
      case Estimator::Gamma: parametric(gamma_fit(data_), Estimator::Gamma); break;
    }
  }

  void guarded(const std::string& name, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& ex) {
      out_.failures.push_back({r_, name, ex.what()});
    }
  }

  void add(const std::string& estimator, const std::string& target, double estimate,
           double lo = kNaN, double hi = kNaN) {
    out_.rows.push_back({r_, estimator, target, estimate, lo, hi, truth_.at(target)});
  }

  void lhs(double extension, Estimator kind) {
    BinningOptions bins;
    bins.n_bins = config_.n_bins;
    bins.extension_factor = extension;
    const FitContext context(build_histogram(data_, bins));
    const auto grid = default_lambda_grid(context);
    const LambdaSelection selection = select_lambda(context, grid);
    const std::string name = to_string(kind);

    if (kind == Estimator::LHS || kind == Estimator::LHSer) {
      report_density(name, normalize(selection.fit.spline, context.histogram()));
      return;
    }
    if (kind == Estimator::LHSboot) {
      const auto correction = bootstrap_bias_correct(context, selection.fit, config_.bootstrap_samples,
                                                     derive_seed(config_.seed, streams::kBootstrap, r_));
      report_density(name, normalize(correction.corrected, context.histogram()));
      return;
    }
    const PenalizedFit adjusted = lambda_adjust(context, selection, config_.lambda_factor);
    const DensityFit density = normalize(adjusted.spline, context.histogram());
    if (!config_.intervals) {
      report_density(name, density);
      return;
    }
    const PosteriorEnsemble ensemble =
        conditional_simulate(context, adjusted, density, config_.posterior_draws,
                             derive_seed(config_.seed, streams::kPosterior, r_));
    for (double t : config_.years) {
      const double estimate = return_level(density, t, config_.obs_per_year);
      double lo = kNaN, hi = kNaN;
      guarded(name + " (cond-sim)", [&] {
        const Interval ci = interval(ensemble, Functional::return_level(t, config_.obs_per_year), config_.level);
        lo = ci.lo;
        hi = ci.hi;
      });
      add(name, rl_label(t), estimate, lo, hi);
    }
    for (double p : config_.probs) add(name, q_label(p), quantile(density, p));
  }

  void report_density(const std::string& name, const DensityFit& density) {
    for (double t : config_.years) add(name, rl_label(t), return_level(density, t, config_.obs_per_year));
    for (double p : config_.probs) add(name, q_label(p), quantile(density, p));
  }

  void parametric(const EvtFit& fit, Estimator kind) {
    const std::string name = to_string(kind);
    for (double t : config_.years) add(name, rl_label(t), evt_return_level(fit, t, config_.obs_per_year));
    for (double p : config_.probs) add(name, q_label(p), evt_quantile(fit, p));
  }

  void gev() {
    const auto maxima = block_maxima(data_, config_.block);
    const EvtFit fit = gev_fit(maxima, ShapePrior{});
    // one block is one year of observations
    const double blocks_per_year = config_.obs_per_year / static_cast<double>(config_.block);
    for (double t : config_.years) add("GEV", rl_label(t), evt_return_level(fit, t * blocks_per_year, 1.0));
  }

  void gpd() {
    const Exceedances ex = exceedances_over_quantile(data_, config_.gpd_quantile);
    const EvtFit fit = gpd_fit(ex.values, ex.threshold, data_.size(), ShapePrior{});
    for (double t : config_.years) {
      const double estimate = evt_return_level(fit, t, config_.obs_per_year);
      if (!config_.intervals) {
        add("GPD", rl_label(t), estimate);
        continue;
      }
      double lo = kNaN, hi = kNaN;
      guarded("GPD (delta)", [&] {
        const auto ci = rl_interval_delta(fit, t, config_.obs_per_year, config_.level);
        lo = ci.lo;
        hi = ci.hi;
      });
      add("GPD", rl_label(t), estimate, lo, hi);
      lo = hi = kNaN;
      guarded("GPD-proflik", [&] {
        const auto ci = rl_interval_profile(fit, t, config_.obs_per_year, config_.level);
        lo = ci.lo;
        hi = ci.hi;
      });
      add("GPD-proflik", rl_label(t), estimate, lo, hi);
    }
  }

  const StudyConfig& config_;
  std::size_t r_;
  std::map<std::string, double> truth_;
  std::vector<double> data_;
  ReplicateOutput out_;
};

double type7(std::vector<double> v, double p) { return numeric::empirical_quantile(std::move(v), p); }

// Column order of the coverage table.
int method_rank(const std::string& m) {
  if (m == "GPD") return 0;
  if (m == "GPD-proflik") return 1;
  if (m == "LHS-ladj") return 2;
  return 3;
}

std::string method_title(const std::string& m) {
  if (m == "GPD") return "Delta";
  if (m == "GPD-proflik") return "Proflik";
  if (m == "LHS-ladj") return "Cond-sim";
  return m;
}

}  // namespace

std::string to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::LHS: return "LHS";
    case Estimator::LHSer: return "LHS-er";
    case Estimator::LHSboot: return "LHS-boot";
    case Estimator::LHSadj: return "LHS-ladj";
    case Estimator::GEV: return "GEV";
    case Estimator::GPD: return "GPD";
    case Estimator::EGPDOracle: return "EGPD-oracle";
    case Estimator::Gamma: return "Gamma";
  }
  return "?";
}

std::vector<Estimator> all_estimators() {
  return {Estimator::LHS, Estimator::LHSer,      Estimator::LHSboot, Estimator::LHSadj,
          Estimator::GEV, Estimator::GPD, Estimator::EGPDOracle, Estimator::Gamma};
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : all_estimators()) {
    if (to_string(e) == name) return e;
  }
  throw UsageError(fmt::format("unknown estimator '{}'", name));
}

void StudyConfig::validate() const {
  if (n_obs < 365) throw UsageError(fmt::format("study needs n >= 365 observations, got {}", n_obs));
  if (n_replicates < 2) throw UsageError("study needs at least 2 replicates");
  if (!(params.kappa > 0.0) || !(params.sigma > 0.0)) throw UsageError("EGPD kappa and sigma must be positive");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (!(obs_per_year > 0.0)) throw UsageError("obs_per_year must be positive");
  if (estimators.empty()) throw UsageError("no estimators selected");
  if (block == 0 || block > n_obs) throw UsageError("block size must be in [1, n]");
  for (double t : years) {
    if (!(t > 1.0)) throw UsageError(fmt::format("return period {} must exceed one year", t));
  }
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError(fmt::format("probability {} outside (0, 1)", p));
  }
}

std::vector<std::pair<std::string, double>> study_truth(const StudyConfig& config) {
  std::vector<std::pair<std::string, double>> out;
  for (double t : config.years) {
    out.emplace_back(rl_label(t), egpd::upper_quantile(1.0 / (t * config.obs_per_year), config.params));
  }
  for (double p : config.probs) out.emplace_back(q_label(p), egpd::quantile(p, config.params));
  return out;
}

std::vector<double> replicate_data(const StudyConfig& config, std::size_t r) {
  Rng rng = make_rng(config.seed, streams::kReplicate, r);
  return egpd::simulate(config.n_obs, config.params, rng);
}

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  const auto truth = study_truth(config);
  std::vector<ReplicateOutput> outputs(config.n_replicates);
  numeric::parallel_for(config.n_replicates, [&](std::size_t r) {
    outputs[r] = ReplicateRunner(config, r, truth).run();
  });
  StudyResult result;
  result.config = config;
  for (auto& o : outputs) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.failures.insert(result.failures.end(), o.failures.begin(), o.failures.end());
    result.checksums.push_back(o.checksum);
  }
  return result;
}

std::string study_csv(const StudyResult& result) {
  csv::Writer w({"replicate", "estimator", "target", "estimate", "lo", "hi", "truth"});
  for (const auto& row : result.rows) {
    w.row({std::to_string(row.replicate), row.estimator, row.target, csv::number(row.estimate),
           csv::number(row.lo), csv::number(row.hi), csv::number(row.truth)});
  }
  return w.text();
}

std::string failures_csv(const StudyResult& result) {
  csv::Writer w({"replicate", "estimator", "message"});
  for (const auto& f : result.failures) {
    std::string message = f.message;
    std::replace(message.begin(), message.end(), '"', '\'');
    w.row({std::to_string(f.replicate), f.estimator, "\"" + message + "\""});
  }
  return w.text();
}

std::vector<CoverageCell> coverage_table(const StudyResult& result, double level) {
  if (std::abs(level - result.config.level) > 1e-12) {
    throw UsageError(fmt::format("intervals were computed at level {}, not {}", result.config.level, level));
  }
  std::map<std::pair<std::string, std::string>, CoverageCell> cells;
  for (const auto& row : result.rows) {
    if (std::isnan(row.lo) || std::isnan(row.hi)) continue;
    auto& cell = cells[{row.estimator, row.target}];
    cell.method = row.estimator;
    cell.target = row.target;
    ++cell.n;
    if (row.lo <= row.truth && row.truth <= row.hi) cell.ecp += 1.0;
    cell.mean_width += row.hi - row.lo;
  }
  std::vector<CoverageCell> out;
  for (auto& [key, cell] : cells) {
    cell.ecp /= static_cast<double>(cell.n);
    cell.mean_width /= static_cast<double>(cell.n);
    out.push_back(cell);
  }
  // targets in study order, methods in table order
  std::map<std::string, std::size_t> target_order;
  for (const auto& [label, value] : study_truth(result.config)) target_order.emplace(label, target_order.size());
  std::stable_sort(out.begin(), out.end(), [&](const CoverageCell& a, const CoverageCell& b) {
    const auto ta = target_order.count(a.target) ? target_order.at(a.target) : target_order.size();
    const auto tb = target_order.count(b.target) ? target_order.at(b.target) : target_order.size();
    if (ta != tb) return ta < tb;
    return method_rank(a.method) < method_rank(b.method);
  });
  return out;
}

std::string coverage_table_text(const std::vector<CoverageCell>& cells) {
  std::vector<std::string> methods, targets;
  for (const auto& c : cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(targets.begin(), targets.end(), c.target) == targets.end()) targets.push_back(c.target);
  }
  std::stable_sort(methods.begin(), methods.end(),
                   [](const auto& a, const auto& b) { return method_rank(a) < method_rank(b); });
  std::string text = fmt::format("{:<16}", "Method");
  for (const auto& m : methods) text += fmt::format("{:<16}", method_title(m));
  text += '\n';
  for (const auto& t : targets) {
    std::string row_name = t;
    if (t.starts_with("RL")) row_name = t.substr(2) + "-yr RL ECP";
    text += fmt::format("{:<16}", row_name);
    for (const auto& m : methods) {
      auto it = std::find_if(cells.begin(), cells.end(),
                             [&](const CoverageCell& c) { return c.method == m && c.target == t; });
      text += it == cells.end() ? fmt::format("{:<16}", "-")
                                : fmt::format("{:<16}", fmt::format("{:.2f} ({:.1f})", it->ecp, it->mean_width));
    }
    text += '\n';
  }
  return text;
}

std::string coverage_csv(const std::vector<CoverageCell>& cells) {
  csv::Writer w({"method", "target", "n", "ecp", "mean_width"});
  for (const auto& c : cells) {
    w.row({c.method, c.target, std::to_string(c.n), csv::number(c.ecp), csv::number(c.mean_width)});
  }
  return w.text();
}

std::vector<SummaryCell> summarize(const StudyResult& result) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> estimates;
  std::map<std::pair<std::string, std::string>, double> truth;
  for (const auto& row : result.rows) {
    const auto key = std::make_pair(row.estimator, row.target);
    if (!estimates.count(key)) order.push_back(key);
    estimates[key].push_back(row.estimate);
    truth[key] = row.truth;
  }
  std::vector<SummaryCell> out;
  for (const auto& key : order) {
    const auto& v = estimates.at(key);
    SummaryCell cell;
    cell.estimator = key.first;
    cell.target = key.second;
    cell.n = v.size();
    cell.truth = truth.at(key);
    cell.median = numeric::median(v);
    cell.median_bias = cell.median - cell.truth;
    cell.iqr = type7(v, 0.75) - type7(v, 0.25);
    std::vector<double> abs_err;
    for (double x : v) abs_err.push_back(std::abs(x - cell.truth));
    cell.median_abs_error = numeric::median(abs_err);
    out.push_back(cell);
  }
  std::stable_sort(out.begin(), out.end(), [](const SummaryCell& a, const SummaryCell& b) {
    return a.estimator < b.estimator;
  });
  return out;
}

std::string summary_csv(const std::vector<SummaryCell>& cells) {
  csv::Writer w({"estimator", "target", "n", "truth", "median", "median_bias", "iqr", "median_abs_error"});
  for (const auto& c : cells) {
    w.row({c.estimator, c.target, std::to_string(c.n), csv::number(c.truth), csv::number(c.median),
           csv::number(c.median_bias), csv::number(c.iqr), csv::number(c.median_abs_error)});
  }
  return w.text();
}

}  // namespace lhspline
