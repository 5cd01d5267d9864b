// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero only when a check fails that is not listed as a known deviation
// in the README.

#include "lhspline/binning.hpp"
#include "lhspline/csv.hpp"
#include "lhspline/density.hpp"
#include "lhspline/evt.hpp"
#include "lhspline/experiments.hpp"
#include "lhspline/fit.hpp"
#include "lhspline/ingest.hpp"
#include "lhspline/numeric.hpp"
#include "lhspline/uncertainty.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#ifdef LHSPLINE_HAVE_CLI
#include "cli.hpp"
#endif

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>

using namespace lhspline;
namespace fs = std::filesystem;

namespace {

struct Part {
  std::string name;
  bool pass = false;
  std::string detail;
  bool known_deviation = false;
};

struct Report {
  int unexpected = 0;

  void print(int criterion, const std::vector<Part>& parts) {
    bool all = true;
    std::string detail;
    for (const auto& p : parts) {
      all = all && p.pass;
      if (!p.pass && !p.known_deviation) ++unexpected;
      if (!detail.empty()) detail += "; ";
      detail += fmt::format("{} {}{}", p.name, p.pass ? "ok" : "FAILED", p.detail.empty() ? "" : " (" + p.detail + ")");
      if (!p.pass && p.known_deviation) detail += " [known deviation]";
    }
    fmt::print("criterion {}: {}  {}\n", criterion, all ? "PASS" : "FAIL", detail);
    std::fflush(stdout);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. IRLS against a derivative-free minimizer of the penalized objective.

std::vector<Part> objective_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20231);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  bool irls_not_worse = true;
  for (int trial = 0; trial < 5; ++trial) {
    const double centre = 3.0 + 4.0 * unif(rng);
    const double spread = 1.2 + 2.0 * unif(rng);
    const double height = 5.0 + 25.0 * unif(rng);
    std::vector<double> counts;
    for (int j = 0; j < 10; ++j) {
      std::poisson_distribution<int> pois(height * std::exp(-0.5 * std::pow((j - centre) / spread, 2)));
      counts.push_back(pois(rng));
    }
    const auto hist = oracle::toy_histogram(counts, -1.0, 0.3);
    const double lambda = std::pow(10.0, -2.0 + 3.0 * unif(rng));
    const auto poisson = [&](const std::vector<double>& g) {
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) s += std::exp(g[j]) - counts[j] * g[j];
      return s;
    };
    const auto search = [&](const std::vector<double>& g) {
      return poisson(g) + lambda * oracle::roughness_closed_form(hist.knots, g);
    };
    const auto objective = [&](const std::vector<double>& g) {
      return poisson(g) + lambda * oracle::roughness_by_quadrature(hist.knots, g);
    };
    const auto fit = irls_fit(FitContext(hist), lambda);
    std::vector<double> start;
    for (double z : counts) start.push_back(std::log(std::max(z, 0.5)));
    const auto nm = oracle::nelder_mead(search, start, 0.5, 20000);
    const double ours = objective(fit.values());
    const double theirs = objective(nm);
    worst = std::max(worst, oracle::rel_diff(ours, theirs));
    irls_not_worse = irls_not_worse && ours <= theirs + 1e-9 * std::abs(theirs);
  }
  const double elapsed = seconds_since(t0);
  return {{"objective match", worst <= 1e-6, fmt::format("max rel diff {:.2e}", worst)},
          {"irls at least as low", irls_not_worse, ""},
          {"runtime", elapsed < 10.0, fmt::format("{:.2f} s", elapsed)}};
}

// ---------------------------------------------------------------------------
// 2. Penalty matrix against quadrature of the squared second derivative.

std::vector<Part> penalty_check() {
  std::mt19937_64 rng(20232);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> gap(0.05, 1.0);
  std::uniform_int_distribution<int> size(5, 40);
  double worst = 0.0;
  bool null_space = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = size(rng);
    std::vector<double> knots{z(rng)}, values;
    for (int i = 1; i < n; ++i) knots.push_back(knots.back() + gap(rng));
    for (int i = 0; i < n; ++i) values.push_back(3.0 * z(rng));
    const auto p = penalty_matrix(knots);
    worst = std::max(worst, oracle::rel_diff(p.quadratic_form(values), oracle::roughness_by_quadrature(knots, values)));

    const Eigen::Map<const Eigen::VectorXd> x(knots.data(), n);
    const double scale = p.matrix.norm();
    null_space = null_space && (p.matrix * Eigen::VectorXd::Ones(n)).norm() <= 1e-10 * scale &&
                 (p.matrix * x).norm() <= 1e-10 * scale * x.norm();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.matrix);
    const auto& ev = eig.eigenvalues();
    null_space = null_space && std::abs(ev(0)) <= 1e-10 * scale && std::abs(ev(1)) <= 1e-10 * scale &&
                 ev(2) > 1e-8 * scale;
  }
  return {{"quadratic form", worst <= 1e-10, fmt::format("max rel diff {:.2e}", worst)},
          {"affine null space", null_space, ""}};
}

// ---------------------------------------------------------------------------
// 3. Conditional-simulation error covariance against (W + Gamma)^-1.

std::vector<Part> covariance_check() {
  const auto hist = oracle::toy_histogram({4, 11, 25, 37, 30, 16, 7, 2}, 0.0, 0.5);
  const FitContext ctx(hist);
  const auto fit = irls_fit(ctx, 0.3);
  const std::size_t m = 50000;
  const Eigen::MatrixXd e = conditional_errors(ctx.penalty().matrix, fit.weights, fit.lambda, m, 20233);
  Eigen::MatrixXd a = 2.0 * fit.lambda * ctx.penalty().matrix;
  for (int j = 0; j < 8; ++j) a(j, j) += fit.weights[static_cast<std::size_t>(j)];
  const Eigen::MatrixXd target = a.inverse();
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    for (int j = i; j < 8; ++j) {
      const Eigen::ArrayXd prod = e.col(i).array() * e.col(j).array();
      const double mean = prod.mean();
      const double se = std::sqrt((prod - mean).square().sum() / static_cast<double>(m - 1) / static_cast<double>(m));
      worst = std::max(worst, std::abs(mean - target(i, j)) / se);
    }
  }
  return {{"entrywise", worst <= 3.0, fmt::format("max |z| {:.2f} over 36 entries", worst)}};
}

// ---------------------------------------------------------------------------
// 4-6. Desk-scale simulation study.

struct StudyView {
  StudyResult result;
  std::map<std::pair<std::string, std::string>, SummaryCell> summary;
  std::map<std::pair<std::string, std::string>, CoverageCell> coverage;
  double seconds = 0.0;

  const SummaryCell& cell(const std::string& est, const std::string& target) const {
    return summary.at({est, target});
  }
};

StudyView run_desk_study() {
  const auto t0 = std::chrono::steady_clock::now();
  StudyView v;
  v.result = run_study(StudyConfig{});
  v.seconds = seconds_since(t0);
  for (const auto& c : summarize(v.result)) v.summary[{c.estimator, c.target}] = c;
  for (const auto& c : coverage_table(v.result, v.result.config.level)) v.coverage[{c.method, c.target}] = c;
  return v;
}

std::vector<Part> study_ordering(const StudyView& v) {
  const auto& lhs100 = v.cell("LHS", "RL100");
  Part a{"LHS positive bias at 100 yr", lhs100.median_bias > 0.0,
         fmt::format("median {:.1f} vs truth {:.1f}", lhs100.median, lhs100.truth)};
  Part b{"LHS-ladj bias smaller", true, ""};
  Part c{"GEV spread exceeds GPD", true, ""};
  for (const char* t : {"RL25", "RL50", "RL100"}) {
    const auto& adj = v.cell("LHS-ladj", t);
    const auto& raw = v.cell("LHS", t);
    b.pass = b.pass && std::abs(adj.median_bias) < std::abs(raw.median_bias);
    b.detail += fmt::format("{}{} {:.1f}/{:.1f}", b.detail.empty() ? "" : ", ", t, adj.median_bias, raw.median_bias);
    const auto& gev = v.cell("GEV", t);
    const auto& gpd = v.cell("GPD", t);
    c.pass = c.pass && gev.iqr > gpd.iqr;
    c.detail += fmt::format("{}{} IQR {:.1f}/{:.1f}", c.detail.empty() ? "" : ", ", t, gev.iqr, gpd.iqr);
  }
  Part d{"runtime", v.seconds < 1800.0, fmt::format("{:.0f} s, {} failed fits", v.seconds, v.result.failures.size())};
  return {a, b, c, d};
}

std::vector<Part> coverage_check(const StudyView& v) {
  const auto& cs = v.coverage.at({"LHS-ladj", "RL50"});
  const auto& delta = v.coverage.at({"GPD", "RL25"});
  Part a{"cond-sim 50-yr ECP", std::abs(cs.ecp - 0.87) <= 0.15,
         fmt::format("{:.2f} (width {:.1f}), target 0.87 +/- 0.15", cs.ecp, cs.mean_width)};
  Part b{"GPD delta 25-yr ECP", std::abs(delta.ecp - 0.63) <= 0.15,
         fmt::format("{:.2f} (width {:.1f}), target 0.63 +/- 0.15", delta.ecp, delta.mean_width)};
  b.known_deviation = true;
  return {a, b};
}

std::vector<Part> quantile_check(const StudyView& v) {
  std::size_t wins = 0, total = 0;
  for (double p : v.result.config.probs) {
    const std::string t = fmt::format("Q{:g}", p);
    ++total;
    if (v.cell("LHS-ladj", t).median_abs_error <= v.cell("Gamma", t).median_abs_error) ++wins;
  }
  return {{"LHS-ladj beats gamma", static_cast<double>(wins) >= 0.8 * static_cast<double>(total),
           fmt::format("{} of {} grid points", wins, total)}};
}

// ---------------------------------------------------------------------------
// 7. EGPD analytics.

std::vector<Part> egpd_check() {
  double worst_rt = 0.0;
  for (const auto& p : {egpd::Params{}, egpd::Params{0.3, 2.0, 0.05}, egpd::Params{2.5, 15.0, 0.45}}) {
    for (int i = 1; i < 200; ++i) {
      const double q = i / 200.0;
      worst_rt = std::max(worst_rt, std::abs(egpd::cdf(egpd::quantile(q, p), p) - q));
      const double tail = std::pow(10.0, -1.0 - 8.0 * q);
      worst_rt = std::max(worst_rt, std::abs(egpd::survival(egpd::upper_quantile(tail, p), p) / tail - 1.0));
      // the density integrates back to the cdf between two quantiles
      if (i % 10 == 0 && q > 0.01) {
        const double a = egpd::quantile(0.01, p), b = egpd::quantile(q, p);
        const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double y) { return egpd::pdf(y, p); }, a, b, 20, 1e-14);
        worst_rt = std::max(worst_rt, std::abs(mass - (q - 0.01)));
      }
    }
  }
  bool exact = true;
  for (double sigma : {0.5, 8.5, 40.0}) {
    for (double xi : {0.01, 0.2, 0.6}) {
      const egpd::Params p{1.0, sigma, xi};
      for (int i = 0; i < 100; ++i) {
        const double q = i / 100.0;
        const double y = 0.3 + 3.0 * i;
        exact = exact && egpd::quantile(q, p) == gpd::quantile(q, sigma, xi) &&
                egpd::cdf(y, p) == gpd::cdf(y, sigma, xi) && egpd::pdf(y, p) == gpd::pdf(y, sigma, xi);
        exact = exact && std::abs(gpd::quantile(q, sigma, xi) - sigma / xi * (std::pow(1 - q, -xi) - 1)) <=
                             1e-12 * std::max(1.0, gpd::quantile(q, sigma, xi));
      }
    }
  }
  return {{"round trips", worst_rt <= 1e-10, fmt::format("max error {:.2e}", worst_rt)},
          {"kappa = 1 is GPD", exact, ""}};
}

// ---------------------------------------------------------------------------
// 8. Station workflow through the command-line tool.

#ifdef LHSPLINE_HAVE_CLI

struct CliRun {
  int code = 0;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, err.str()};
}

// Rows of a CSV file keyed by the value of column `key`.
std::map<std::string, std::map<std::string, double>> read_table(const fs::path& path, const std::string& key) {
  std::istringstream in(csv::read_text(path));
  std::string line;
  std::getline(in, line);
  const auto header = csv::split_record(line);
  std::map<std::string, std::map<std::string, double>> rows;
  while (std::getline(in, line)) {
    const auto fields = csv::split_record(line);
    std::map<std::string, double> row;
    std::string id;
    for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) {
      if (header[i] == key) id = fields[i];
      row[header[i]] = std::strtod(fields[i].c_str(), nullptr);
    }
    rows[id] = row;
  }
  return rows;
}

struct StationRun {
  double rl68 = 0, rl_lo = 0, rl_hi = 0;
  double rp = 0, rp_lo = 0, rp_hi = 0;
};

struct WorkflowResult {
  bool ok = true;
  std::string error;
  StationRun pot, egpd;
  std::vector<StationRun> lhs;  // uncensored, bound e, bound e^2
};

WorkflowResult station_workflow(const std::string& input, const std::string& config, const fs::path& dir,
                                double event, const std::string& until) {
  WorkflowResult w;
  const std::vector<std::string> bounds{"0", fmt::format("{:.17g}", std::exp(1.0)), fmt::format("{:.17g}", std::exp(2.0))};
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const fs::path out = dir / fmt::format("bound{}", i);
    std::vector<std::string> args{"--output-dir", out.string(), "returns", "--input", input, "--event",
                                  fmt::format("{:.17g}", event), "--threshold", "43", "--seed", "2017"};
    if (!config.empty()) args.insert(args.end(), {"--config", config});
    if (!until.empty()) args.insert(args.end(), {"--until", until});
    if (i > 0) args.insert(args.end(), {"--censor-bound", bounds[i]});
    const auto r = cli(args);
    if (r.code != 0) {
      w.ok = false;
      w.error = r.err;
      return w;
    }
    const auto rows = read_table(out / "returns.csv", "method");
    const auto grab = [&](const std::string& method) {
      const auto& row = rows.at(method);
      return StationRun{row.at("return_level_68"), row.at("rl_lo"), row.at("rl_hi"),
                        row.at("return_period"), row.at("lo"), row.at("hi")};
    };
    w.lhs.push_back(grab("LHSpline"));
    if (i == 0) {
      w.pot = grab("POT");
      w.egpd = grab("EGPD");
    }
  }
  return w;
}

std::vector<Part> houston_real(const std::string& input, const std::string& config, const fs::path& dir) {
  // fits use 1949-2016; the event is the 2017-08-26 daily total
  const auto w = station_workflow(input, config, dir, 306.58, "2016-12-31");
  if (!w.ok) return {{"workflow", false, w.error}};
  const auto within = [](double got, double want, double tol) { return std::abs(got / want - 1.0) <= tol; };
  std::vector<Part> parts;
  parts.push_back({"GPD 68-yr RL", within(w.pot.rl68, 395.47, 0.02), fmt::format("{:.2f} vs 395.47", w.pot.rl68)});
  const double rl[] = {371.04, 310.64, 287.06};
  const double rp[] = {34.8, 64.0, 98.0};
  for (int i = 0; i < 3; ++i) {
    parts.push_back({fmt::format("LHSpline{} 68-yr RL", i), within(w.lhs[i].rl68, rl[i], 0.02),
                     fmt::format("{:.2f} vs {:.2f}", w.lhs[i].rl68, rl[i])});
    parts.push_back({fmt::format("LHSpline{} return period", i), within(w.lhs[i].rp, rp[i], 0.10),
                     fmt::format("{:.1f} vs {:.1f}", w.lhs[i].rp, rp[i])});
  }
  parts.push_back({"POT return period", within(w.pot.rp, 30.5, 0.10), fmt::format("{:.1f} vs 30.5", w.pot.rp)});
  return parts;
}

// Independent maximum-likelihood fits for the synthetic station, by
// Nelder-Mead on likelihoods written out here.
double gpd_nll(const std::vector<double>& excess, double sigma, double xi) {
  if (!(sigma > 0.0)) return 1e300;
  double s = excess.size() * std::log(sigma);
  for (double e : excess) {
    const double t = 1.0 + xi * e / sigma;
    if (t <= 0.0) return 1e300;
    s += (1.0 + 1.0 / xi) * std::log(t);
  }
  return s;
}

double egpd_nll(const std::vector<double>& y, double kappa, double sigma, double xi) {
  if (!(kappa > 0.0 && sigma > 0.0 && xi > 0.0)) return 1e300;
  double s = 0.0;
  for (double v : y) {
    const double l = std::log1p(xi * v / sigma);
    const double big_g = -std::expm1(-l / xi);
    s -= std::log(kappa) + (kappa - 1.0) * std::log(big_g) - std::log(sigma) - (1.0 + 1.0 / xi) * l;
  }
  return s;
}

// Synthetic daily series of Houston size (24,837 days, 27.6% wet) with
// EGPD(0.8, 8.5, 0.2) amounts. POT and EGPD outputs are checked against
// independent likelihood fits of the same file, LHSpline outputs against a
// direct library fit, and every 68-yr level against the generating model.
std::vector<Part> houston_synthetic(const fs::path& dir) {
  const auto sim = cli({"--output-dir", dir.string(), "simulate", "--n", "24837", "--wet-probability", "0.276",
                        "--seed", "1949", "--file", "synthetic.csv"});
  if (sim.code != 0) return {{"simulate", false, sim.err}};
  const std::string input = (dir / "synthetic.csv").string();

  const auto series = parse_daily_csv(input, IngestConfig{});
  std::vector<double> wet, excess;
  std::size_t ok = 0;
  for (const auto& r : series.records) {
    if (r.quality != Quality::Ok) continue;
    ++ok;
    if (r.amount_mm > 0.0) wet.push_back(r.amount_mm);
    if (r.amount_mm > 43.0) excess.push_back(r.amount_mm - 43.0);
  }
  const double wet_per_year = 365.25 * static_cast<double>(wet.size()) / static_cast<double>(ok);
  const egpd::Params truth;
  const double rl68_true = egpd::upper_quantile(1.0 / (68.0 * wet_per_year), truth);
  const double event = egpd::upper_quantile(1.0 / (35.0 * wet_per_year), truth);

  const auto w = station_workflow(input, "", dir, event, "");
  if (!w.ok) return {{"workflow", false, w.error}};

  double mean_excess = 0.0, mean_wet = 0.0;
  for (double e : excess) mean_excess += e / excess.size();
  for (double y : wet) mean_wet += y / wet.size();
  const auto g = oracle::nelder_mead(
      [&](const std::vector<double>& v) { return gpd_nll(excess, std::exp(v[0]), v[1]); },
      {std::log(mean_excess), 0.1}, 0.2);
  const double g_sigma = std::exp(g[0]), g_xi = g[1];
  const double zeta = static_cast<double>(excess.size()) / static_cast<double>(wet.size());
  const double pot_rl = 43.0 + g_sigma / g_xi * std::expm1(g_xi * std::log(68.0 * wet_per_year * zeta));
  const double pot_rp =
      1.0 / (wet_per_year * zeta * std::exp(-std::log1p(g_xi * (event - 43.0) / g_sigma) / g_xi));

  const auto e = oracle::nelder_mead(
      [&](const std::vector<double>& v) { return egpd_nll(wet, std::exp(v[0]), std::exp(v[1]), v[2]); },
      {0.0, std::log(mean_wet), 0.1}, 0.2);
  const double e_kappa = std::exp(e[0]), e_sigma = std::exp(e[1]), e_xi = e[2];
  // H(y)^kappa = 1 - q  <=>  survival of the GPD part is 1 - (1 - q)^(1/kappa)
  const double s68 = -std::expm1(std::log1p(-1.0 / (68.0 * wet_per_year)) / e_kappa);
  const double egpd_rl = e_sigma / e_xi * std::expm1(-e_xi * std::log(s68));
  const double s_event = std::exp(-std::log1p(e_xi * event / e_sigma) / e_xi);
  const double egpd_rp = 1.0 / (wet_per_year * -std::expm1(e_kappa * std::log1p(-s_event)));

  std::vector<Part> parts;
  const auto match = [&](const std::string& name, double got, double want, double tol) {
    const double rel = std::abs(got / want - 1.0);
    parts.push_back({name, rel <= tol, fmt::format("{:.6g} vs {:.6g}", got, want)});
  };
  match("POT 68-yr RL", w.pot.rl68, pot_rl, 1e-5);
  match("POT return period", w.pot.rp, pot_rp, 1e-5);
  match("EGPD 68-yr RL", w.egpd.rl68, egpd_rl, 1e-5);
  match("EGPD return period", w.egpd.rp, egpd_rp, 1e-5);

  const double bounds[] = {0.0, std::exp(1.0), std::exp(2.0)};
  for (int i = 0; i < 3; ++i) {
    const WetSample sample = wet_subsample(series, bounds[i]);
    BinningOptions bins;
    bins.censor_bound = sample.support_low;
    const FitContext context(build_histogram(sample.amounts, bins));
    const auto selection = select_lambda(context, default_lambda_grid(context));
    const auto fit = lambda_adjust(context, selection, 0.05);
    const double fraction = static_cast<double>(sample.amounts.size()) / static_cast<double>(ok);
    const DensityFit density = normalize(fit.spline, context.histogram(), fraction);
    const std::string name = i == 0 ? "LHSpline" : fmt::format("LHSpline{}", i);
    match(name + " 68-yr RL", w.lhs[i].rl68, return_level(density, 68.0, 365.25), 1e-12);
    match(name + " return period", w.lhs[i].rp, return_period(density, event, 365.25), 1e-12);
  }

  bool plausible = true;
  std::string spread;
  for (const StationRun* r : {&w.pot, &w.egpd, &w.lhs[0], &w.lhs[1], &w.lhs[2]}) {
    plausible = plausible && std::abs(r->rl68 / rl68_true - 1.0) <= 0.35;
    spread += fmt::format("{}{:.1f}", spread.empty() ? "" : " ", r->rl68);
  }
  parts.push_back({"68-yr RLs near truth", plausible, fmt::format("{} vs {:.1f}", spread, rl68_true)});
  return parts;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical outputs from repeated seeded runs.

std::vector<Part> determinism_check(const fs::path& dir) {
  const auto run_all = [&](const fs::path& out) -> std::string {
    const std::string o = out.string();
    const std::vector<std::vector<std::string>> commands{
        {"--output-dir", o, "simulate", "--n", "9000", "--wet-probability", "0.4", "--seed", "77"},
        {"--output-dir", o + "/fit", "fit", "--input", o + "/simulated.csv", "--seed", "5", "--draws", "300",
         "--bias", "bootstrap:30", "--event", "120"},
        {"--output-dir", o + "/returns", "returns", "--input", o + "/simulated.csv", "--event", "120",
         "--threshold", "25", "--draws", "300"},
        {"--output-dir", o + "/diagnose", "diagnose", "--input", o + "/simulated.csv"},
        {"--output-dir", o + "/study", "study", "--replicates", "2", "--n", "3650", "--draws", "200",
         "--bootstrap", "20", "--seed", "9"},
    };
    for (const auto& c : commands) {
      const auto r = cli(c);
      if (r.code != 0) return fmt::format("{} failed: {}", c[2], r.err);
    }
    return {};
  };
  const fs::path a = dir / "run-a", b = dir / "run-b";
  for (const auto& d : {a, b}) {
    const std::string error = run_all(d);
    if (!error.empty()) return {{"commands", false, error}};
  }
  std::size_t files = 0, differ = 0;
  std::string first;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel) || csv::read_text(entry.path()) != csv::read_text(b / rel)) {
      ++differ;
      if (first.empty()) first = rel.string();
    }
  }
  return {{"identical files", differ == 0 && files >= 15,
           fmt::format("{} files compared, {} differ{}", files, differ, first.empty() ? "" : ", first " + first)}};
}

#endif  // LHSPLINE_HAVE_CLI

}  // namespace

int main() {
  Report report;
  report.print(1, objective_oracle());
  report.print(2, penalty_check());
  report.print(3, covariance_check());

  const StudyView study = run_desk_study();
  report.print(4, study_ordering(study));
  report.print(5, coverage_check(study));
  report.print(6, quantile_check(study));
  report.print(7, egpd_check());

#ifdef LHSPLINE_HAVE_CLI
  oracle::TempDir scratch("acceptance");
  const char* houston = std::getenv("LHSPLINE_HOUSTON_CSV");
  if (houston && *houston) {
    const char* config = std::getenv("LHSPLINE_HOUSTON_CONFIG");
    report.print(8, houston_real(houston, config ? config : "", scratch.path() / "houston"));
  } else {
    report.print(8, houston_synthetic(scratch.path() / "synthetic"));
  }
  report.print(9, determinism_check(scratch.path() / "determinism"));
#else
  report.print(8, {{"command-line tool not built", false, ""}});
  report.print(9, {{"command-line tool not built", false, ""}});
#endif

  if (report.unexpected > 0) {
    fmt::print("{} unexpected failure(s)\n", report.unexpected);
    return 1;
  }
  return 0;
}
