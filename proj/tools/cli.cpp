#include "cli.hpp"

#include "lhspline/binning.hpp"
#include "lhspline/csv.hpp"
#include "lhspline/density.hpp"
#include "lhspline/error.hpp"
#include "lhspline/evt.hpp"
#include "lhspline/experiments.hpp"
#include "lhspline/fit.hpp"
#include "lhspline/ingest.hpp"
#include "lhspline/numeric.hpp"
#include "lhspline/uncertainty.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>

namespace lhspline::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kDaysPerYear = 365.25;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LambdaMode {
  enum class Kind { CV, Adjusted, Fixed } kind = Kind::Adjusted;
  double value = 0.05;
};

struct BiasMode {
  std::size_t bootstrap = 0;  // 0 = none
};

LambdaMode parse_lambda_mode(const std::string& text) {
  LambdaMode mode;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--lambda-mode: '{}' is not a positive number", s));
    }
  };
  if (head == "cv" && tail.empty()) {
    mode.kind = LambdaMode::Kind::CV;
  } else if (head == "adjusted") {
    mode.kind = LambdaMode::Kind::Adjusted;
    mode.value = tail.empty() ? 0.05 : number(tail);
    if (mode.value > 1.0) throw UsageError("--lambda-mode adjusted factor must lie in (0, 1]");
  } else if (head == "fixed" && !tail.empty()) {
    mode.kind = LambdaMode::Kind::Fixed;
    mode.value = number(tail);
  } else {
    throw UsageError(fmt::format("--lambda-mode: expected cv, adjusted[:F] or fixed:V, got '{}'", text));
  }
  return mode;
}

BiasMode parse_bias_mode(const std::string& text) {
  if (text == "none") return {};
  if (text == "bootstrap") return {200};
  if (text.starts_with("bootstrap:")) {
    const std::string tail = text.substr(10);
    try {
      std::size_t used = 0;
      const long b = std::stol(tail, &used);
      if (used == tail.size() && b >= 2) return {static_cast<std::size_t>(b)};
    } catch (const std::exception&) {
    }
  }
  throw UsageError(fmt::format("--bias: expected none or bootstrap[:B] with B >= 2, got '{}'", text));
}

std::chrono::year_month_day parse_day(const std::string& text, const char* flag) {
  const auto date = parse_date(text);
  if (!date) throw UsageError(fmt::format("{}: '{}' is not a YYYY-MM-DD date", flag, text));
  return *date;
}

// Options shared by the subcommands that fit a density.
struct FitOptions {
  std::string input;
  std::string config;
  std::size_t bins = 150;
  double extension = 1.5;
  std::string lambda_mode = "adjusted:0.05";
  std::string bias = "none";
  std::optional<double> censor_bound;
  std::uint64_t seed = 1;
  double level = 0.9;
  std::size_t draws = 1000;
  std::string from;
  std::string until;
};

struct Common {
  std::string output_dir;
};

void add_fit_options(CLI::App* app, FitOptions& o, bool with_intervals) {
  app->add_option("--input", o.input, "Daily precipitation CSV")->required();
  app->add_option("--config", o.config, "Ingest configuration (key = value lines)");
  app->add_option("--bins", o.bins, "Number of histogram bins")->capture_default_str();
  app->add_option("--extension", o.extension, "Data-range extension factor")->capture_default_str();
  app->add_option("--lambda-mode", o.lambda_mode, "cv | adjusted[:F] | fixed:V")->capture_default_str();
  app->add_option("--bias", o.bias, "none | bootstrap[:B]")->capture_default_str();
  app->add_option("--censor-bound", o.censor_bound, "Left-censoring bound in mm/day");
  app->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app->add_option("--from", o.from, "First date used (YYYY-MM-DD)");
  app->add_option("--until", o.until, "Last date used (YYYY-MM-DD)");
  if (with_intervals) {
    app->add_option("--level", o.level, "Interval level")->capture_default_str();
    app->add_option("--draws", o.draws, "Conditional-simulation draws")->capture_default_str();
  }
}

IngestConfig ingest_config(const FitOptions& o) {
  IngestConfig config = o.config.empty() ? IngestConfig{} : load_ingest_config(o.config);
  if (o.censor_bound) config.censor_bound = *o.censor_bound;
  if (!(config.censor_bound >= 0.0)) throw UsageError("--censor-bound must be nonnegative");
  return config;
}

PrecipSeries load_series(const FitOptions& o, const IngestConfig& config) {
  PrecipSeries series = parse_daily_csv(o.input, config);
  if (!o.from.empty() || !o.until.empty()) {
    const auto from = o.from.empty() ? std::chrono::year_month_day{std::chrono::year::min() / 1 / 1}
                                     : parse_day(o.from, "--from");
    const auto until = o.until.empty() ? std::chrono::year_month_day{std::chrono::year::max() / 12 / 31}
                                       : parse_day(o.until, "--until");
    std::erase_if(series.records, [&](const DailyRecord& r) { return r.date < from || r.date > until; });
    std::size_t ok = 0, wet = 0;
    for (const auto& r : series.records) {
      if (r.quality != Quality::Ok) continue;
      ++ok;
      if (r.amount_mm > 0.0) ++wet;
    }
    if (ok == 0) throw DataError("no valid observations in the selected date range");
    series.wet_fraction = static_cast<double>(wet) / static_cast<double>(ok);
  }
  return series;
}

void validate(const FitOptions& o) {
  if (o.bins < 3) throw UsageError("--bins must be at least 3");
  if (!(o.extension >= 1.0)) throw UsageError("--extension must be >= 1");
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  if (o.draws < 10) throw UsageError("--draws must be at least 10");
  parse_lambda_mode(o.lambda_mode);
  parse_bias_mode(o.bias);
}

// Everything produced by one LHSpline fit of a station series.
struct StationFit {
  WetSample sample;
  double exceed_fraction = 0.0;  // analysed days / valid days
  FitContext context;
  std::optional<LambdaSelection> selection;
  PenalizedFit fit;
  std::optional<BootstrapCorrection> correction;
  DensityFit density;
};

FitContext make_context(const WetSample& sample, const FitOptions& o) {
  BinningOptions bins;
  bins.n_bins = o.bins;
  bins.extension_factor = o.extension;
  bins.censor_bound = sample.support_low;
  return FitContext(build_histogram(sample.amounts, bins));
}

StationFit fit_station(const PrecipSeries& series, const IngestConfig& config, const FitOptions& o) {
  WetSample sample = wet_subsample(series, config.censor_bound);
  const double fraction = static_cast<double>(sample.amounts.size()) / static_cast<double>(series.ok_count());
  FitContext context = make_context(sample, o);
  const LambdaMode mode = parse_lambda_mode(o.lambda_mode);
  std::optional<LambdaSelection> selection;
  PenalizedFit fit;
  if (mode.kind == LambdaMode::Kind::Fixed) {
    fit = irls_fit(context, mode.value);
  } else {
    const auto grid = default_lambda_grid(context);
    selection = select_lambda(context, grid);
    fit = mode.kind == LambdaMode::Kind::CV ? selection->fit : lambda_adjust(context, *selection, mode.value);
  }
  std::optional<BootstrapCorrection> correction;
  SplineModel center = fit.spline;
  if (const BiasMode bias = parse_bias_mode(o.bias); bias.bootstrap > 0) {
    correction = bootstrap_bias_correct(context, fit, bias.bootstrap, derive_seed(o.seed, streams::kBootstrap, 0));
    center = correction->corrected;
  }
  DensityFit density = normalize(center, context.histogram(), fraction);
  return {std::move(sample), fraction,   std::move(context), std::move(selection),
          std::move(fit),    std::move(correction), std::move(density)};
}

fs::path prepare_output_dir(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("LHSPLINE_OUTPUT_DIR");
    dir = env && *env ? env : "lhspline-out";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError(fmt::format("output directory '{}' is not writable", dir));
  return dir;
}

std::string num(double v) { return csv::number(v); }

std::string report_text(const StationFit& s, const PrecipSeries& series, const FitOptions& o) {
  std::string text;
  text += fmt::format("station {}\n", series.station_id.empty() ? "-" : series.station_id);
  text += fmt::format("valid_days {}\n", series.ok_count());
  text += fmt::format("analysed_days {}\n", s.sample.amounts.size());
  text += fmt::format("wet_fraction {}\n", num(series.wet_fraction));
  text += fmt::format("exceed_fraction {}\n", num(s.exceed_fraction));
  text += fmt::format("censor_bound {}\n", num(s.sample.support_low));
  text += fmt::format("bins {}\n", o.bins);
  text += fmt::format("extension_factor {}\n", num(o.extension));
  text += fmt::format("lambda_mode {}\n", o.lambda_mode);
  text += fmt::format("bias {}\n", o.bias);
  text += fit_report(s.fit);
  if (s.correction) {
    text += fmt::format("bootstrap_replicates {}\nbootstrap_failures {}\n", s.correction->replicates,
                        s.correction->failures);
  }
  text += fmt::format("log_norm_const {}\n", num(s.density.log_norm_const()));
  text += fmt::format("tail_index {}\n", num(s.density.tail_index()));
  text += fmt::format("seed {}\n", o.seed);
  return text;
}

int cmd_fit(const FitOptions& o, const Common& common, const std::optional<double>& event, std::ostream& out) {
  validate(o);
  const fs::path dir = prepare_output_dir(common.output_dir);
  const IngestConfig config = ingest_config(o);
  const PrecipSeries series = load_series(o, config);
  const StationFit s = fit_station(series, config, o);
  const double obs = kDaysPerYear;

  const PosteriorEnsemble ensemble = conditional_simulate(s.context, s.fit, s.density, o.draws,
                                                          derive_seed(o.seed, streams::kPosterior, 0));
  csv::Writer levels({"years", "return_level", "lo", "hi"});
  for (int t = 2; t <= 100; ++t) {
    const auto f = Functional::return_level(t, obs);
    const Interval ci = interval(ensemble, f, o.level);
    levels.row({std::to_string(t), num(f(s.density)), num(ci.lo), num(ci.hi)});
  }
  csv::Writer intervals({"functional", "estimate", "lo", "hi", "level", "draws_used"});
  std::vector<Functional> functionals;
  for (double t : {25.0, 50.0, 68.0, 100.0}) functionals.push_back(Functional::return_level(t, obs));
  for (double p : {0.5, 0.9, 0.99, 0.999}) functionals.push_back(Functional::quantile(p));
  if (event) functionals.push_back(Functional::return_period(*event, obs));
  for (const auto& f : functionals) {
    const Interval ci = interval(ensemble, f, o.level);
    intervals.row({f.label(), num(f(s.density)), num(ci.lo), num(ci.hi), num(o.level), std::to_string(ci.used)});
  }

  std::string report = report_text(s, series, o);
  report += fmt::format("draws {}\nrejected_draws {}\n", ensemble.size(), ensemble.rejected);
  csv::write_text(dir / "fit-report.txt", report);
  csv::write_text(dir / "density-grid.csv", density_grid_csv(s.density));
  csv::write_text(dir / "histogram.csv", histogram_csv(s.context.histogram()));
  levels.save(dir / "return-levels.csv");
  intervals.save(dir / "intervals.csv");
  out << fmt::format("wrote fit outputs to {}\n", dir.string());
  return 0;
}

struct ReturnsOptions {
  double event = 0.0;
  double threshold = 43.0;
  bool gmle = false;
};

int cmd_returns(const FitOptions& o, const ReturnsOptions& r, const Common& common, std::ostream& out) {
  validate(o);
  if (!(r.event > 0.0)) throw UsageError("--event must be positive");
  const fs::path dir = prepare_output_dir(common.output_dir);
  const IngestConfig config = ingest_config(o);
  const PrecipSeries series = load_series(o, config);
  const StationFit s = fit_station(series, config, o);
  const double obs = kDaysPerYear;
  const std::optional<ShapePrior> prior = r.gmle ? std::optional<ShapePrior>(ShapePrior{}) : std::nullopt;

  csv::Writer table({"method", "censor_bound", "event", "return_period", "lo", "hi", "return_level_68", "rl_lo", "rl_hi"});

  // Peaks over threshold on all wet days.
  const WetSample wet = wet_subsample(series, 0.0);
  const double wet_obs = obs * static_cast<double>(wet.amounts.size()) / static_cast<double>(series.ok_count());
  {
    std::vector<double> above;
    for (double y : wet.amounts) {
      if (y > r.threshold) above.push_back(y);
    }
    const EvtFit gpd = gpd_fit(above, r.threshold, wet.amounts.size(), prior);
    const auto rp = rp_interval_delta(gpd, r.event, wet_obs, o.level);
    const auto rl = rl_interval_delta(gpd, 68.0, wet_obs, o.level);
    table.row({"POT", num(0.0), num(r.event), num(rp.estimate), num(rp.lo), num(rp.hi), num(rl.estimate),
               num(rl.lo), num(rl.hi)});
  }
  {
    const PosteriorEnsemble ensemble = conditional_simulate(s.context, s.fit, s.density, o.draws,
                                                            derive_seed(o.seed, streams::kPosterior, 0));
    const auto fp = Functional::return_period(r.event, obs);
    const auto fl = Functional::return_level(68.0, obs);
    const Interval rp = interval(ensemble, fp, o.level);
    const Interval rl = interval(ensemble, fl, o.level);
    table.row({"LHSpline", num(s.sample.support_low), num(r.event), num(fp(s.density)), num(rp.lo), num(rp.hi),
               num(fl(s.density)), num(rl.lo), num(rl.hi)});
  }
  {
    const EvtFit egpd = egpd1_fit(wet.amounts);
    const auto rp = rp_interval_delta(egpd, r.event, wet_obs, o.level);
    const auto rl = rl_interval_delta(egpd, 68.0, wet_obs, o.level);
    table.row({"EGPD", num(0.0), num(r.event), num(rp.estimate), num(rp.lo), num(rp.hi), num(rl.estimate),
               num(rl.lo), num(rl.hi)});
  }
  table.save(dir / "returns.csv");
  csv::write_text(dir / "fit-report.txt", report_text(s, series, o));
  out << fmt::format("wrote return periods to {}\n", (dir / "returns.csv").string());
  return 0;
}

struct DiagnoseOptions {
  FitOptions fit;
  double q_lo = 0.75;
  double q_hi = 0.99;
  std::size_t points = 25;
  std::vector<double> thresholds;
  std::size_t min_exceed = 30;
};

int cmd_diagnose(const DiagnoseOptions& d, const Common& common, std::ostream& out) {
  if (!(d.q_lo > 0.0 && d.q_lo < d.q_hi && d.q_hi < 1.0)) throw UsageError("need 0 < --q-lo < --q-hi < 1");
  if (d.points < 2) throw UsageError("--points must be at least 2");
  const fs::path dir = prepare_output_dir(common.output_dir);
  const IngestConfig config = ingest_config(d.fit);
  const PrecipSeries series = load_series(d.fit, config);
  const WetSample wet = wet_subsample(series, config.censor_bound);
  std::vector<double> thresholds = d.thresholds;
  if (thresholds.empty()) {
    std::vector<double> sorted = wet.amounts;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < d.points; ++i) {
      const double p = d.q_lo + (d.q_hi - d.q_lo) * static_cast<double>(i) / static_cast<double>(d.points - 1);
      thresholds.push_back(numeric::empirical_quantile_sorted(sorted, p));
    }
  }
  const auto mrl = mean_residual_life(wet.amounts, thresholds, d.min_exceed);
  const auto stab = shape_stability(wet.amounts, thresholds, d.min_exceed);
  csv::write_text(dir / "mean-residual-life.csv", mean_residual_life_csv(mrl));
  csv::write_text(dir / "shape-stability.csv", shape_stability_csv(stab));
  csv::Writer dropped({"series", "threshold"});
  for (double u : mrl.dropped) dropped.row({"mean_residual_life", num(u)});
  for (double u : stab.dropped) dropped.row({"shape_stability", num(u)});
  dropped.save(dir / "dropped-thresholds.csv");
  const auto maxima = annual_maxima(series);
  csv::Writer am({"year", "maximum"});
  for (std::size_t i = 0; i < maxima.years.size(); ++i) am.row({std::to_string(maxima.years[i]), num(maxima.maxima[i])});
  am.save(dir / "annual-maxima.csv");
  out << fmt::format("wrote diagnostics for {} thresholds ({} dropped) to {}\n", thresholds.size(),
                     stab.dropped.size(), dir.string());
  return 0;
}

struct StudyOptions {
  std::size_t replicates = 20;
  std::size_t n = 18250;
  std::uint64_t seed = 2023;
  bool full = false;
  double level = 0.9;
  std::size_t draws = 1000;
  std::size_t bootstrap = 200;
  std::vector<std::string> estimators;
  bool no_intervals = false;
};

int cmd_study(const StudyOptions& so, const Common& common, std::ostream& out) {
  StudyConfig config;
  config.n_replicates = so.full ? 100 : so.replicates;
  config.n_obs = so.n;
  config.seed = so.seed;
  config.level = so.level;
  config.posterior_draws = so.draws;
  config.bootstrap_samples = so.bootstrap;
  config.intervals = !so.no_intervals;
  if (!so.estimators.empty()) {
    config.estimators.clear();
    for (const auto& e : so.estimators) config.estimators.push_back(parse_estimator(e));
  }
  config.validate();
  const fs::path dir = prepare_output_dir(common.output_dir);
  const StudyResult result = run_study(config);
  csv::write_text(dir / "study.csv", study_csv(result));
  csv::write_text(dir / "failures.csv", failures_csv(result));
  const auto cells = coverage_table(result, config.level);
  csv::write_text(dir / "coverage.csv", coverage_csv(cells));
  csv::write_text(dir / "coverage-table.txt", coverage_table_text(cells));
  csv::write_text(dir / "summary.csv", summary_csv(summarize(result)));
  csv::Writer sums({"replicate", "fnv1a"});
  for (std::size_t r = 0; r < result.checksums.size(); ++r) {
    sums.row({std::to_string(r), fmt::format("{:016x}", result.checksums[r])});
  }
  sums.save(dir / "checksums.csv");
  out << fmt::format("study: {} replicates, {} rows, {} failures -> {}\n", config.n_replicates, result.rows.size(),
                     result.failures.size(), dir.string());
  return 0;
}

struct SimulateOptions {
  std::size_t n = 24837;
  double wet_probability = 1.0;
  double kappa = 0.8, sigma = 8.5, xi = 0.2;
  std::uint64_t seed = 1;
  std::string start = "1949-01-01";
  std::string file = "simulated.csv";
};

int cmd_simulate(const SimulateOptions& so, const Common& common, std::ostream& out) {
  if (so.n == 0) throw UsageError("--n must be positive");
  if (!(so.wet_probability > 0.0 && so.wet_probability <= 1.0)) throw UsageError("--wet-probability must lie in (0, 1]");
  if (!(so.kappa > 0.0 && so.sigma > 0.0)) throw UsageError("--kappa and --sigma must be positive");
  const fs::path dir = prepare_output_dir(common.output_dir);
  Rng wet_rng = make_rng(so.seed, streams::kSimulate, 0);
  Rng amount_rng = make_rng(so.seed, streams::kSimulate, 1);
  const std::vector<double> amounts = egpd::simulate(so.n, {so.kappa, so.sigma, so.xi}, amount_rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::chrono::sys_days day{parse_day(so.start, "--start")};
  csv::Writer w({"DATE", "PRCP"});
  for (std::size_t i = 0; i < so.n; ++i, day += std::chrono::days{1}) {
    const bool wet = so.wet_probability >= 1.0 || unif(wet_rng) < so.wet_probability;
    w.row({format_date(std::chrono::year_month_day{day}), wet ? num(amounts[i]) : "0"});
  }
  w.save(dir / so.file);
  out << fmt::format("wrote {} days to {}\n", so.n, (dir / so.file).string());
  return 0;
}

void write_error(std::ostream& err, std::string_view kind, int code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heavy-tailed density estimation with log-histogram splines"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--output-dir", common.output_dir, "Output directory (default $LHSPLINE_OUTPUT_DIR)");

  FitOptions fit_opts;
  std::optional<double> fit_event;
  auto* fit = app.add_subcommand("fit", "Fit a density and export plot data, return levels and intervals");
  add_fit_options(fit, fit_opts, true);
  fit->add_option("--event", fit_event, "Also report the return period of this amount (mm/day)");

  FitOptions ret_opts;
  ReturnsOptions ret;
  auto* returns = app.add_subcommand("returns", "Return period of an event under POT, LHSpline and EGPD");
  add_fit_options(returns, ret_opts, true);
  returns->add_option("--event", ret.event, "Event amount (mm/day)")->required();
  returns->add_option("--threshold", ret.threshold, "POT threshold (mm/day)")->capture_default_str();
  returns->add_flag("--gmle", ret.gmle, "Use the shape prior for the POT fit");

  DiagnoseOptions diag;
  auto* diagnose = app.add_subcommand("diagnose", "Mean residual life and shape stability series");
  diagnose->add_option("--input", diag.fit.input, "Daily precipitation CSV")->required();
  diagnose->add_option("--config", diag.fit.config, "Ingest configuration");
  diagnose->add_option("--censor-bound", diag.fit.censor_bound, "Left-censoring bound in mm/day");
  diagnose->add_option("--from", diag.fit.from, "First date used (YYYY-MM-DD)");
  diagnose->add_option("--until", diag.fit.until, "Last date used (YYYY-MM-DD)");
  diagnose->add_option("--q-lo", diag.q_lo, "Lowest threshold quantile")->capture_default_str();
  diagnose->add_option("--q-hi", diag.q_hi, "Highest threshold quantile")->capture_default_str();
  diagnose->add_option("--points", diag.points, "Number of thresholds")->capture_default_str();
  diagnose->add_option("--thresholds", diag.thresholds, "Explicit thresholds (mm/day)");
  diagnose->add_option("--min-exceed", diag.min_exceed, "Minimum exceedances per threshold")->capture_default_str();

  StudyOptions study_opts;
  auto* study = app.add_subcommand("study", "Monte Carlo study on simulated EGPD data");
  study->add_option("--replicates", study_opts.replicates, "Replicates")->capture_default_str();
  study->add_option("--n", study_opts.n, "Observations per replicate")->capture_default_str();
  study->add_option("--seed", study_opts.seed, "Random seed")->capture_default_str();
  study->add_option("--level", study_opts.level, "Interval level")->capture_default_str();
  study->add_option("--draws", study_opts.draws, "Conditional-simulation draws")->capture_default_str();
  study->add_option("--bootstrap", study_opts.bootstrap, "Bootstrap samples")->capture_default_str();
  study->add_option("--estimators", study_opts.estimators, "Subset of estimators");
  study->add_flag("--full", study_opts.full, "Run 100 replicates");
  study->add_flag("--no-intervals", study_opts.no_intervals, "Skip interval estimation");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic daily series with EGPD amounts");
  simulate->add_option("--n", sim.n, "Number of days")->capture_default_str();
  simulate->add_option("--wet-probability", sim.wet_probability, "Probability of a wet day")->capture_default_str();
  simulate->add_option("--kappa", sim.kappa)->capture_default_str();
  simulate->add_option("--sigma", sim.sigma)->capture_default_str();
  simulate->add_option("--xi", sim.xi)->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--start", sim.start, "First date")->capture_default_str();
  simulate->add_option("--file", sim.file, "Output file name")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage", 2, e.what());
    return 2;
  }

  try {
    if (*fit) return cmd_fit(fit_opts, common, fit_event, out);
    if (*returns) return cmd_returns(ret_opts, ret, common, out);
    if (*diagnose) return cmd_diagnose(diag, common, out);
    if (*study) return cmd_study(study_opts, common, out);
    if (*simulate) return cmd_simulate(sim, common, out);
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::Usage ? 2 : e.kind() == ErrorKind::Data ? 3 : 4;
    write_error(err, to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    write_error(err, "numeric", 4, e.what());
    return 4;
  }
  return 0;
}

}  // namespace lhspline::cli
