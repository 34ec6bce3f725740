// riverweb: runs one experiment and writes its records.
//
//   riverweb <experiment> --p <f> --n <int> --replicas <int> --seed <u64>
//            [--cap-l <int>] [--out <dir>] [--format csv|json] [--config <file.json>]
//
// Exit codes: 0 success, 1 runtime error, 2 configuration error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "riverweb/errors.hpp"
#include "riverweb/experiments.hpp"
#include "riverweb/parallel.hpp"
#include "riverweb/records.hpp"
#include "riverweb/scaling_obs.hpp"
#include "riverweb/stats_harness.hpp"

using namespace riverweb;

namespace {

const std::set<std::string> kExperiments = {"survival", "width-law", "coupling",    "gen-count-tail",
                                            "hack",     "dmax",      "area-tail",   "dual-kernel",
                                            "invariants", "oracle-suite", "xi-count"};

struct Options {
  std::string experiment;
  double p = 0.5;
  std::int64_t n = 256;
  std::int64_t replicas = 10000;
  std::uint64_t seed = 1;
  std::int64_t cap_l = 0;  // 0: 64 n
  std::string out = ".";
  std::string format = "csv";
  double u = 1.0;
  double lambda = 0.0;        // 0: solve for area_target
  double area_target = 0.1;
  double min_l = 32.0;
  unsigned threads = 0;
  std::string table_dir = "riverweb-tables";
  std::int64_t table_m = 2000;
  std::int64_t table_samples = kMinTableSamples;
  std::uint64_t table_seed = 1;
};

// Keys accepted in --config files; each matches the long flag with '-' -> '_'.
void apply_config_file(const std::string& path, Options& o, const std::set<std::string>& explicit_flags) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto take = [&](const std::string& key, auto& field) {
    if (!j.contains(key) || explicit_flags.count(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const Json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  };
  static const std::set<std::string> known = {"experiment", "p",       "n",        "replicas",      "seed",
                                              "cap_l",      "out",     "format",   "u",             "lambda",
                                              "area_target", "min_l",  "threads",  "table_dir",     "table_m",
                                              "table_samples", "table_seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  take("experiment", o.experiment);
  take("p", o.p);
  take("n", o.n);
  take("replicas", o.replicas);
  take("seed", o.seed);
  take("cap_l", o.cap_l);
  take("out", o.out);
  take("format", o.format);
  take("u", o.u);
  take("lambda", o.lambda);
  take("area_target", o.area_target);
  take("min_l", o.min_l);
  take("threads", o.threads);
  take("table_dir", o.table_dir);
  take("table_m", o.table_m);
  take("table_samples", o.table_samples);
  take("table_seed", o.table_seed);
}

void validate(const Options& o) {
  if (!kExperiments.count(o.experiment)) throw ConfigError("unknown experiment '" + o.experiment + "'");
  if (!(o.p > 0.0 && o.p < 1.0)) throw ConfigError("p must lie in (0, 1)");
  if (o.n < 1) throw ConfigError("n must be >= 1");
  if (o.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (o.experiment == "survival" && o.replicas < 1000) throw ConfigError("survival needs at least 1000 replicas");
  if (o.experiment == "xi-count" && o.replicas < 2) throw ConfigError("xi-count needs at least 2 replicas");
  if (o.cap_l < 0) throw ConfigError("cap-l must be >= 0");
  if (o.cap_l > 0 && o.cap_l < 1) throw ConfigError("cap-l must be >= 1");
  if (o.format != "csv" && o.format != "json") throw ConfigError("format must be csv or json");
  if (!(o.u > 0.0)) throw ConfigError("u must be positive");
  if (o.lambda < 0.0) throw ConfigError("lambda must be positive");
  if (!(o.area_target > 0.0 && o.area_target < 1.0)) throw ConfigError("area-target must lie in (0, 1)");
  if (o.min_l < 1.0) throw ConfigError("min-l must be >= 1");
  if (o.table_m < 2 || o.table_m % 2) throw ConfigError("table-m must be even and >= 2");
  if (o.table_samples < kMinTableSamples) throw ConfigError("table-samples must be >= 100000");
}

std::int64_t cap_length(const Options& o) { return o.cap_l > 0 ? o.cap_l : 64 * o.n; }

// Config echo: everything that determines the output, nothing that does not
// (threads and the output location are left out).
Json config_echo(const Options& o) {
  Json c = Json::object();
  c["p"] = o.p;
  c["n"] = o.n;
  c["replicas"] = o.replicas;
  c["seed"] = o.seed;
  c["cap_l"] = cap_length(o);
  c["format"] = o.format;
  if (o.experiment == "gen-count-tail") c["u"] = o.u;
  if (o.experiment == "area-tail") {
    c["lambda"] = o.lambda;
    c["area_target"] = o.area_target;
  }
  if (o.experiment == "hack" || o.experiment == "dmax") c["min_l"] = o.min_l;
  if (o.experiment == "area-tail" || o.experiment == "oracle-suite") {
    c["table_m"] = o.table_m;
    c["table_samples"] = o.table_samples;
    c["table_seed"] = o.table_seed;
  }
  return c;
}

ResultRecord base_record(const Options& o) {
  ResultRecord r;
  r.experiment = o.experiment;
  r.config = config_echo(o);
  r.summary["p"] = o.p;
  r.summary["n"] = o.n;
  r.summary["replicas"] = o.replicas;
  return r;
}

void put_tail(Json& s, const TailEstimate& e) {
  s["threshold"] = e.threshold;
  s["n_exceed"] = e.n_exceed;
  s["n_below"] = e.n_below;
  s["n_censored"] = e.n_censored;
  s["p_hat"] = e.p_hat;
  s["stderr"] = e.std_error;
  s["ci_lo"] = e.ci_lo;
  s["ci_hi"] = e.ci_hi;
}

void put_scaled(Json& s, const ScaledTail& t) {
  put_tail(s, t.estimate);
  s["sqrt_n_p_hat"] = t.scaled;
  s["sqrt_n_ci_lo"] = t.scaled_lo;
  s["sqrt_n_ci_hi"] = t.scaled_hi;
  s["target"] = t.target;
}

void put_fit(Json& s, const ExponentFit& f) {
  s["slope"] = f.fit.slope;
  s["slope_stderr"] = f.fit.slope_stderr;
  s["intercept"] = f.fit.intercept;
  s["r2"] = f.fit.r2;
  s["n_points"] = f.fit.n_points;
  s["min_L"] = f.fit.min_L;
  s["exponent"] = f.exponent;
  s["exponent_stderr"] = f.exponent_stderr;
  s["excluded_censored"] = f.excluded_censored;
}

std::vector<ClusterRecord> clusters(const Options& o, unsigned threads) {
  ClusterRunConfig cfg;
  cfg.p = o.p;
  cfg.seed = o.seed;
  cfg.replicas = o.replicas;
  cfg.cap_length = cap_length(o);
  cfg.n = o.n;
  cfg.threads = threads;
  return run_clusters(cfg);
}

TailTable area_table(const Options& o, unsigned threads) {
  return cached_table(FunctionalKind::excursion_area, o.table_m, o.table_samples, o.table_seed,
                      table_path(o.table_dir, FunctionalKind::excursion_area, o.table_m, o.table_samples,
                                 o.table_seed),
                      threads);
}

ResultRecord run(const Options& o, unsigned threads) {
  ResultRecord r = base_record(o);
  const std::string& e = o.experiment;
  Json& s = r.summary;

  if (e == "survival") {
    const SurvivalResult res = estimate_survival(o.p, o.n, o.replicas, o.seed, cap_length(o), threads);
    put_tail(s, res.estimate);
    s["target"] = res.target;
    s["sqrt_n_p_hat"] = res.sqrt_n_p_hat;
    r.columns = {"replica", "seed", "L", "censored"};
    for (const auto& c : res.records)
      r.rows.push_back(Json{{"replica", c.replica}, {"seed", c.seed}, {"L", c.L}, {"censored", c.censored}});
  } else if (e == "width-law") {
    const auto recs = clusters(o, threads);
    const WidthLawResult res = width_law_from_records(o.p, o.n, recs);
    s["survivors"] = res.survivors;
    s["ks"] = res.gof.statistic;
    s["ks_p_value"] = res.gof.p_value;
    // Plot-ready curve: sorted survivor values with empirical and Rayleigh CDFs.
    std::vector<double> v = res.values;
    std::sort(v.begin(), v.end());
    r.columns = {"value", "empirical_cdf", "rayleigh_cdf"};
    for (std::size_t i = 0; i < v.size(); ++i)
      r.rows.push_back(Json{{"value", v[i]},
                            {"empirical_cdf", static_cast<double>(i + 1) / static_cast<double>(v.size())},
                            {"rayleigh_cdf", ref_rayleigh_cdf(v[i])}});
  } else if (e == "coupling") {
    const auto recs = clusters(o, threads);
    const CouplingResult res = coupling_from_records(recs, o.n);
    s["survivors"] = res.survivors;
    s["median_sup"] = res.median_sup;
    s["mean_sup"] = res.mean_sup;
    r.columns = {"replica", "L", "coupling_sup"};
    for (const auto& c : recs)
      if (c.reached_n) r.rows.push_back(Json{{"replica", c.replica}, {"L", c.L}, {"coupling_sup", c.coupling_sup}});
  } else if (e == "gen-count-tail") {
    const auto recs = clusters(o, threads);
    const ScaledTail t = gen_count_tail_from_records(o.p, o.n, o.u, recs, cap_length(o));
    s["u"] = o.u;
    put_scaled(s, t);
    r.columns = {"replica", "L", "censored", "count_n"};
    for (const auto& c : recs)
      r.rows.push_back(Json{{"replica", c.replica}, {"L", c.L}, {"censored", c.censored}, {"count_n", c.count_n}});
  } else if (e == "hack" || e == "dmax") {
    const auto recs = clusters(o, threads);
    put_fit(s, e == "hack" ? hack_exponent(recs, o.min_l) : dmax_exponent(recs, o.min_l));
    r.columns = {"replica", "L", "area", "dmax"};
    for (const auto& c : recs)
      r.rows.push_back(Json{{"replica", c.replica}, {"L", c.L}, {"area", c.total}, {"dmax", c.dmax}});
  } else if (e == "area-tail") {
    const TailTable table = area_table(o, threads);
    const double lambda = o.lambda > 0.0 ? o.lambda : lambda_for_area_target(o.p, o.area_target, table);
    ScaledTail t = total_area_tail(o.p, o.n, lambda, o.replicas, o.seed, cap_length(o), threads);
    t.target = total_area_tail_target(o.p, lambda, table);
    s["lambda"] = lambda;
    put_scaled(s, t);
    s["table_bandwidth"] = table.bandwidth;
    s["table_mean"] = table.mean;
  } else if (e == "dual-kernel") {
    const DualKernelResult res = dual_kernel_experiment(o.p, o.replicas, o.seed, threads);
    s["increments"] = res.increments;
    s["integer_states"] = res.integer_states;
    s["chi2_non_integer"] = res.gof_non_integer.statistic;
    s["dof_non_integer"] = res.gof_non_integer.dof;
    s["p_value_non_integer"] = res.gof_non_integer.p_value;
    s["chi2_integer"] = res.gof_integer.statistic;
    s["dof_integer"] = res.gof_integer.dof;
    s["p_value_integer"] = res.gof_integer.p_value;
    s["homogeneity_chi2"] = res.homogeneity.statistic;
    s["homogeneity_dof"] = res.homogeneity.dof;
    s["homogeneity_p_value"] = res.homogeneity.p_value;
    s["homogeneity_groups"] = res.homogeneity_groups;
    s["mean_increment"] = res.mean_increment;
    s["mean_increment_stderr"] = res.mean_increment_stderr;
    s["kernel_mass_non_integer"] = res.kernel_mass_non_integer;
    s["kernel_mass_integer"] = res.kernel_mass_integer;
    s["kernel_mean_non_integer"] = res.kernel_mean_non_integer;
    s["kernel_mean_integer"] = res.kernel_mean_integer;
    r.columns = {"state_type", "v2", "observed", "expected"};
    for (const auto& c : res.cells) {
      std::string v2 = std::to_string(c.v2);
      if (c.tail < 0) v2 = "<=" + v2;
      if (c.tail > 0) v2 = ">=" + v2;
      r.rows.push_back(Json{{"state_type", c.integer_state ? "integer" : "non_integer"},
                            {"v2", v2},
                            {"observed", c.observed},
                            {"expected", c.expected}});
    }
  } else if (e == "invariants") {
    const InvariantsResult res = invariants_experiment(o.p, o.replicas, o.seed, threads);
    s["windows"] = res.windows;
    for (const auto& c : res.checks) {
      s[c.name + "_passed"] = c.passed;
      s[c.name + "_failed"] = c.failed;
    }
    s["violations"] = res.violations;
    r.columns = {"check", "passed", "failed"};
    for (const auto& c : res.checks) r.rows.push_back(Json{{"check", c.name}, {"passed", c.passed}, {"failed", c.failed}});
  } else if (e == "oracle-suite") {
    OracleSuiteConfig cfg;
    cfg.seed = o.seed;
    cfg.threads = threads;
    cfg.samples = std::max<std::int64_t>(o.replicas, kMinTableSamples);
    cfg.shifted_samples = o.replicas;
    cfg.area_m = o.table_m;
    cfg.table_dir = o.table_dir;
    const OracleSuiteResult res = oracle_suite(cfg);
    s["samples"] = cfg.samples;
    s["all_pass"] = res.all_pass();
    r.columns = {"check", "value", "target", "lo", "hi", "pass"};
    for (const auto& c : res.checks)
      r.rows.push_back(
          Json{{"check", c.name}, {"value", c.value}, {"target", c.target}, {"lo", c.lo}, {"hi", c.hi}, {"pass", c.pass}});
  } else if (e == "xi-count") {
    const XiResult res = xi_estimate(o.p, o.n, o.replicas, o.seed, threads);
    s["window"] = res.window;
    s["mean"] = res.mean;
    s["stderr"] = res.std_error;
    s["target"] = 1.0 / std::sqrt(std::numbers::pi);
    s["survival_via_xi"] = res.survival;
    s["survival_via_xi_stderr"] = res.survival_stderr;
    r.columns = {"replica", "xi"};
    for (std::size_t i = 0; i < res.counts.size(); ++i)
      r.rows.push_back(Json{{"replica", static_cast<std::int64_t>(i)}, {"xi", res.counts[i]}});
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  std::string config_path;
  CLI::App app{"Monte Carlo experiments on the headward-growth drainage network"};
  app.add_option("experiment", o.experiment, "one of: survival width-law coupling gen-count-tail hack dmax "
                                              "area-tail dual-kernel invariants oracle-suite xi-count");
  app.add_option("--config", config_path, "JSON file with any of the options below (underscored keys)");
  auto* p_opt = app.add_option("--p", o.p, "open-site probability");
  auto* n_opt = app.add_option("--n", o.n, "observation generation");
  auto* r_opt = app.add_option("--replicas", o.replicas,
                               "replicas (dual-kernel: increments, invariants: windows, oracle-suite: samples)");
  auto* seed_opt = app.add_option("--seed", o.seed, "master seed");
  auto* cap_opt = app.add_option("--cap-l", o.cap_l, "cluster length cap (default 64 n)");
  auto* out_opt = app.add_option("--out", o.out, "output directory");
  auto* fmt_opt = app.add_option("--format", o.format, "csv or json");
  auto* u_opt = app.add_option("--u", o.u, "gen-count-tail threshold in units of sqrt(n) gamma0");
  auto* l_opt = app.add_option("--lambda", o.lambda, "area-tail lambda (default: solve for --area-target)");
  auto* at_opt = app.add_option("--area-target", o.area_target, "area-tail limit value used to pick lambda");
  auto* ml_opt = app.add_option("--min-l", o.min_l, "smallest L kept in exponent fits");
  auto* th_opt = app.add_option("--threads", o.threads, "worker threads (0: RIVERWEB_THREADS or all cores)");
  auto* td_opt = app.add_option("--table-dir", o.table_dir, "cache directory for tabulated tails");
  auto* tm_opt = app.add_option("--table-m", o.table_m, "walk length of the excursion-area table");
  auto* ts_opt = app.add_option("--table-samples", o.table_samples, "samples in the excursion-area table");
  auto* tsd_opt = app.add_option("--table-seed", o.table_seed, "seed of the excursion-area table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) {
      std::set<std::string> given;
      const std::map<std::string, CLI::Option*> flags = {
          {"p", p_opt},        {"n", n_opt},       {"replicas", r_opt},      {"seed", seed_opt},
          {"cap_l", cap_opt},  {"out", out_opt},   {"format", fmt_opt},      {"u", u_opt},
          {"lambda", l_opt},   {"area_target", at_opt}, {"min_l", ml_opt},   {"threads", th_opt},
          {"table_dir", td_opt}, {"table_m", tm_opt}, {"table_samples", ts_opt}, {"table_seed", tsd_opt}};
      for (const auto& [key, opt] : flags)
        if (opt->count() > 0) given.insert(key);
      if (!o.experiment.empty()) given.insert("experiment");
      apply_config_file(config_path, o, given);
    }
    validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "riverweb: config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const unsigned threads = resolve_threads(o.threads);
    const auto start = std::chrono::steady_clock::now();
    const ResultRecord record = run(o, threads);
    const auto files = emit(record, o.out, o.format == "json" ? OutputFormat::json : OutputFormat::csv);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << summary_json(record).dump(2) << "\n";
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    std::cout << "wall_time_s " << wall << " threads " << threads << "\n";
  } catch (const std::exception& e) {
    std::cerr << "riverweb: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
