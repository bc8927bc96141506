#pragma once

// Experiment runner and reporting.  run_experiment executes the configured
// multi-seed pipeline and writes a self-contained artifact directory:
//
//   out_dir/config.json        effective (canonical) configuration
//   out_dir/seed_NNN/          persisted DSSolution + config copy, or failed.json
//   out_dir/oracle_cache.json  oracle values keyed by a content hash
//   out_dir/report.json        aggregate statistics, fully deterministic
//   out_dir/run_meta.json      wall-clock sidecar (the only nondeterministic file)
//
// report.json never contains timings, so regenerate_report() rebuilt from the
// persisted solutions and the cached oracle is byte-identical to the original.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dsplit/config.hpp"
#include "dsplit/deep_split.hpp"
#include "dsplit/format.hpp"
#include "dsplit/oracles.hpp"

namespace dsplit {

// Fixed seeds keep oracle values and domain-sample points reproducible across
// runs and machines; they are deliberately unrelated to experiment seeds.
constexpr std::uint64_t kOracleSeed = 615243;
constexpr std::uint64_t kDomainSampleSeed = 424242;
constexpr std::uint64_t kSliceOracleSeed = 777001;

struct OracleResult {
  std::string kind;  // "mc" | "ode"
  double value = 0.0;
  double std_error = 0.0;  // mc only
  long paths = 0;          // mc only
  int ode_steps = 0;       // ode only
};

// Content key over everything the oracle value depends on.
inline std::string oracle_key(const ExperimentConfig& cfg) {
  nlohmann::json key;
  key["problem"] = cfg.canonical.at("problem");
  key["eval_point"] = cfg.canonical.at("report").at("eval_point");
  if (cfg.kind == "basket")
    key["method"] = {{"kind", "mc"}, {"paths", cfg.report.oracle_paths}};
  else
    key["method"] = {{"kind", "ode"}, {"steps", cfg.report.ode_steps}};
  return hex64(fnv1a64(key.dump()));
}

inline OracleResult compute_oracle(const ExperimentConfig& cfg) {
  OracleResult out;
  if (cfg.kind == "basket") {
    const McResult mc = mc_basket_price(cfg.basket, cfg.horizon, cfg.report.eval_point,
                                        cfg.report.oracle_paths, RngStream{kOracleSeed, 0});
    out.kind = "mc";
    out.value = mc.value;
    out.std_error = mc.std_error;
    out.paths = mc.paths;
  } else {
    out.kind = "ode";
    out.value = regulator_value_ode(cfg.regulator, cfg.horizon, 0.0, cfg.report.eval_point,
                                    cfg.report.ode_steps);
    out.ode_steps = cfg.report.ode_steps;
  }
  return out;
}

// ---- oracle cache -----------------------------------------------------------

inline nlohmann::json oracle_cache_load(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) return {{"format", "dsplit-oracle-cache-v1"}, {"entries", nlohmann::json::object()}};
  nlohmann::json doc = nlohmann::json::parse(read_text_file(path));
  if (!doc.is_object() || doc.value("format", "") != "dsplit-oracle-cache-v1" ||
      !doc.contains("entries") || !doc["entries"].is_object())
    throw std::runtime_error("oracle cache: " + path + ": unsupported format");
  return doc;
}

// Values are stored as 17-digit decimal strings so a cache hit reproduces the
// original double bit for bit.
inline nlohmann::json oracle_to_json(const OracleResult& r) {
  nlohmann::json e;
  e["kind"] = r.kind;
  e["value"] = fmt_g17(r.value);
  if (r.kind == "mc") {
    e["std_error"] = fmt_g17(r.std_error);
    e["paths"] = r.paths;
  } else {
    e["ode_steps"] = r.ode_steps;
  }
  return e;
}

inline OracleResult oracle_from_json(const nlohmann::json& e) {
  OracleResult r;
  r.kind = e.at("kind").get<std::string>();
  r.value = parse_double(e.at("value").get<std::string>());
  if (r.kind == "mc") {
    r.std_error = parse_double(e.at("std_error").get<std::string>());
    r.paths = e.at("paths").get<long>();
  } else {
    r.ode_steps = e.at("ode_steps").get<int>();
  }
  return r;
}

// Looks the oracle up in `cache_path`, computing and persisting it on a miss.
inline OracleResult oracle_cached(const ExperimentConfig& cfg, const std::string& cache_path) {
  const std::string key = oracle_key(cfg);
  nlohmann::json cache = oracle_cache_load(cache_path);
  if (cache["entries"].contains(key)) return oracle_from_json(cache["entries"][key]);
  const OracleResult r = compute_oracle(cfg);
  cache["entries"][key] = oracle_to_json(r);
  std::filesystem::create_directories(std::filesystem::path(cache_path).parent_path());
  write_text_file(cache_path, cache.dump(2) + "\n");
  return r;
}

// ---- per-seed results and aggregation ---------------------------------------

struct SeedOutcome {
  bool failed = false;
  std::string error;          // TrainAbort message when failed
  double estimate = 0.0;      // U_0 at the eval point
  double domain_error = 0.0;  // mean |(U_0(xi) - u(0,xi)) / u(0,xi)|, regulator only
  double wall_seconds = 0.0;
};

struct RunReport {
  ExperimentConfig cfg;
  std::vector<SeedOutcome> outcomes;  // aligned with cfg.seeds
  OracleResult oracle;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stdev = std::numeric_limits<double>::quiet_NaN();  // n-1 estimator, >= 2 survivors
  double rel_err_pct = std::numeric_limits<double>::quiet_NaN();
  double domain_error = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  double total_seconds = 0.0;
};

namespace report_detail {

inline std::string seed_dir_name(size_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seed_%03zu", idx);
  return buf;
}

// Uniform evaluation points for the domain-average error; a fixed stream so
// every run scores against the same sample.
inline std::vector<Vec> domain_points(const ExperimentConfig& cfg) {
  std::vector<Vec> pts;
  if (cfg.report.domain_samples <= 0) return pts;
  const double hw = cfg.regulator.domain_halfwidth;
  RngEngine eng = RngStream{kDomainSampleSeed, 0}.engine();
  pts.resize(cfg.report.domain_samples, Vec(cfg.dim));
  for (auto& p : pts)
    for (int j = 0; j < cfg.dim; ++j) p[j] = eng.uniform(-hw, hw);
  return pts;
}

inline double domain_error(const DSSolution& sol, const RegulatorClosedForm& truth,
                           const std::vector<Vec>& pts) {
  double acc = 0.0;
  for (const Vec& p : pts) {
    const double u = truth.value(0.0, p);
    acc += std::abs((evaluate_solution(sol, 0, p) - u) / u);
  }
  return acc / static_cast<double>(pts.size());
}

// Scores one persisted/in-memory solution; shared by the runner and
// regenerate_report so both aggregate identically.
inline void score_solution(const ExperimentConfig& cfg, const DSSolution& sol,
                           const std::vector<Vec>& pts, SeedOutcome& out) {
  out.estimate = evaluate_solution(sol, 0, cfg.report.eval_point);
  if (!pts.empty())
    out.domain_error = domain_error(sol, RegulatorClosedForm(cfg.regulator, cfg.horizon), pts);
}

inline void aggregate(RunReport& rep) {
  std::vector<double> est;
  double derr = 0.0;
  for (const SeedOutcome& o : rep.outcomes) {
    if (o.failed) {
      rep.failed = true;
      continue;
    }
    est.push_back(o.estimate);
    derr += o.domain_error;
  }
  if (!est.empty()) {
    double m = 0.0;
    for (double e : est) m += e;
    rep.mean = m / static_cast<double>(est.size());
    if (est.size() >= 2) {
      double ss = 0.0;
      for (double e : est) ss += (e - rep.mean) * (e - rep.mean);
      rep.stdev = std::sqrt(ss / static_cast<double>(est.size() - 1));
    }
    if (rep.oracle.value != 0.0)
      rep.rel_err_pct = std::abs(rep.mean - rep.oracle.value) / std::abs(rep.oracle.value) * 100.0;
    if (rep.cfg.report.domain_samples > 0) rep.domain_error = derr / static_cast<double>(est.size());
  }
}

inline nlohmann::json report_json(const RunReport& rep) {
  using nlohmann::json;
  const ExperimentConfig& cfg = rep.cfg;
  json doc;
  doc["format"] = "dsplit-report-v1";
  doc["config_hash"] = cfg.hash;
  doc["preset"] = cfg.preset;
  doc["problem"] = {{"kind", cfg.kind}, {"dim", cfg.dim}, {"horizon", fmt_g9(cfg.horizon)}};
  doc["grid_steps"] = cfg.grid.steps;
  json pt = json::array();
  for (double x : cfg.report.eval_point) pt.push_back(fmt_g9(x));
  doc["eval_point"] = pt;
  json seeds = json::array(), estimates = json::array(), failures = json::array();
  for (size_t k = 0; k < cfg.seeds.size(); ++k) {
    seeds.push_back(cfg.seeds[k]);
    const SeedOutcome& o = rep.outcomes[k];
    estimates.push_back(o.failed ? json() : json(fmt_g9(o.estimate)));
    failures.push_back(o.failed ? json(o.error) : json());
  }
  doc["seeds"] = seeds;
  doc["estimates"] = estimates;
  doc["failures"] = failures;
  doc["failed"] = rep.failed;
  doc["mean"] = std::isnan(rep.mean) ? nlohmann::json() : nlohmann::json(fmt_g9(rep.mean));
  doc["std"] = std::isnan(rep.stdev) ? nlohmann::json() : nlohmann::json(fmt_g9(rep.stdev));
  json oracle;
  oracle["kind"] = rep.oracle.kind;
  oracle["value"] = fmt_g9(rep.oracle.value);
  if (rep.oracle.kind == "mc") {
    oracle["std_error"] = fmt_g9(rep.oracle.std_error);
    oracle["paths"] = rep.oracle.paths;
  } else {
    oracle["ode_steps"] = rep.oracle.ode_steps;
  }
  doc["oracle"] = oracle;
  doc["rel_err_pct"] =
      std::isnan(rep.rel_err_pct) ? nlohmann::json() : nlohmann::json(fmt_g9(rep.rel_err_pct));
  if (cfg.report.domain_samples > 0) {
    json de;
    de["samples"] = cfg.report.domain_samples;
    de["mean"] = std::isnan(rep.domain_error) ? nlohmann::json()
                                              : nlohmann::json(fmt_g9(rep.domain_error));
    json per = json::array();
    for (const SeedOutcome& o : rep.outcomes)
      per.push_back(o.failed ? json() : json(fmt_g9(o.domain_error)));
    de["per_seed"] = per;
    doc["domain_error"] = de;
  }
  return doc;
}

}  // namespace report_detail

struct RunOptions {
  bool parallel_seeds = false;
};

// Executes every configured seed, persists solutions, aggregates, writes the
// artifact directory.  A TrainAbort fails that seed only; the report is then
// flagged failed but still covers the survivors.
inline RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  fs::create_directories(out_dir);
  const std::string config_text = cfg.canonical.dump(2) + "\n";
  write_text_file(out_dir + "/config.json", config_text);

  RunReport rep;
  rep.cfg = cfg;
  rep.oracle = oracle_cached(cfg, out_dir + "/oracle_cache.json");
  rep.outcomes.resize(cfg.seeds.size());

  const ProblemSpec spec = cfg.make_problem();
  const std::vector<Vec> pts = report_detail::domain_points(cfg);

  const auto run_one = [&](size_t idx) {
    SeedOutcome& out = rep.outcomes[idx];
    const std::string dir = out_dir + "/" + report_detail::seed_dir_name(idx);
    const auto t0 = clock::now();
    try {
      const DSSolution sol = cfg.linear()
                                 ? run_ds_linear(spec, cfg.grid, cfg.net, cfg.train, cfg.seeds[idx])
                                 : run_ds(spec, cfg.grid, cfg.net, cfg.train, cfg.seeds[idx]);
      save_solution(sol, dir);
      write_text_file(dir + "/config.json", config_text);  // self-contained for slice/trace
      report_detail::score_solution(cfg, sol, pts, out);
    } catch (const TrainAbort& e) {
      out.failed = true;
      out.error = e.what();
      fs::create_directories(dir);
      nlohmann::json f;
      f["seed"] = cfg.seeds[idx];
      f["error"] = out.error;
      write_text_file(dir + "/failed.json", f.dump(2) + "\n");
      write_text_file(dir + "/config.json", config_text);
    }
    out.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  };

  const auto t_start = clock::now();
  if (opt.parallel_seeds && cfg.seeds.size() > 1) {
    std::vector<std::thread> workers;
    workers.reserve(cfg.seeds.size());
    for (size_t k = 0; k < cfg.seeds.size(); ++k) workers.emplace_back(run_one, k);
    for (auto& w : workers) w.join();
  } else {
    for (size_t k = 0; k < cfg.seeds.size(); ++k) run_one(k);
  }
  rep.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();

  report_detail::aggregate(rep);
  write_text_file(out_dir + "/report.json", report_detail::report_json(rep).dump(2) + "\n");

  nlohmann::json meta;
  meta["total_seconds"] = rep.total_seconds;
  nlohmann::json per = nlohmann::json::array();
  for (const SeedOutcome& o : rep.outcomes) per.push_back(o.wall_seconds);
  meta["seed_seconds"] = per;
  meta["parallel_seeds"] = opt.parallel_seeds;
  write_text_file(out_dir + "/run_meta.json", meta.dump(2) + "\n");
  return rep;
}

// Rebuilds report.json from the persisted artifacts alone and returns its
// bytes; byte-equality with the original is asserted by tests.
inline std::string regenerate_report(const std::string& out_dir) {
  const ExperimentConfig cfg = parse_effective_config(
      nlohmann::json::parse(read_text_file(out_dir + "/config.json")));
  RunReport rep;
  rep.cfg = cfg;
  rep.oracle = oracle_cached(cfg, out_dir + "/oracle_cache.json");
  rep.outcomes.resize(cfg.seeds.size());
  const std::vector<Vec> pts = report_detail::domain_points(cfg);
  const ProblemSpec spec = cfg.make_problem();
  for (size_t k = 0; k < cfg.seeds.size(); ++k) {
    const std::string dir = out_dir + "/" + report_detail::seed_dir_name(k);
    SeedOutcome& out = rep.outcomes[k];
    if (std::filesystem::exists(dir + "/failed.json")) {
      const nlohmann::json f = nlohmann::json::parse(read_text_file(dir + "/failed.json"));
      out.failed = true;
      out.error = f.at("error").get<std::string>();
      continue;
    }
    const DSSolution sol = load_solution(dir, spec.terminal);
    report_detail::score_solution(cfg, sol, pts, out);
  }
  report_detail::aggregate(rep);
  return report_detail::report_json(rep).dump(2) + "\n";
}

// ---- slices and traces -------------------------------------------------------

struct SliceSpec {
  int axis = 0;
  double lo = 0.0;
  double hi = 1.0;
  int res = 2;
  Vec anchor;              // empty -> (1, ..., 1)
  long oracle_points = 0;  // basket only: MC paths per gridpoint, 0 disables the column
};

// CSV slice of U_0 along one axis: columns x, estimate, and an oracle column
// when a reference is available (regulator: closed form at every row; basket:
// per-gridpoint MC when oracle_points > 0).
inline std::string emit_slice(const DSSolution& sol, const ExperimentConfig& cfg,
                              const SliceSpec& s) {
  if (s.axis < 0 || s.axis >= cfg.dim) throw std::invalid_argument("slice: axis out of range");
  if (s.res < 2) throw std::invalid_argument("slice: resolution must be >= 2");
  Vec point = s.anchor.empty() ? Vec(cfg.dim, 1.0) : s.anchor;
  if (static_cast<int>(point.size()) != cfg.dim)
    throw std::invalid_argument("slice: anchor dimension mismatch");

  const bool regulator_oracle = cfg.kind == "regulator";
  const bool mc_oracle = cfg.kind == "basket" && s.oracle_points > 0;
  RegulatorClosedForm truth = regulator_oracle ? RegulatorClosedForm(cfg.regulator, cfg.horizon)
                                               : RegulatorClosedForm(RegulatorParams::defaults(1), 1.0);

  std::string csv = regulator_oracle || mc_oracle ? "x,estimate,oracle\n" : "x,estimate\n";
  for (int k = 0; k < s.res; ++k) {
    const double x = s.lo + (s.hi - s.lo) * k / (s.res - 1);
    point[s.axis] = x;
    csv += fmt_g9(x) + "," + fmt_g9(evaluate_solution(sol, 0, point));
    if (regulator_oracle) {
      csv += "," + fmt_g9(truth.value(0.0, point));
    } else if (mc_oracle) {
      const McResult mc =
          mc_basket_price(cfg.basket, cfg.horizon, point, s.oracle_points,
                          RngStream{kSliceOracleSeed, 0}.child(static_cast<std::uint64_t>(k)));
      csv += "," + fmt_g9(mc.value);
    }
    csv += "\n";
  }
  return csv;
}

// CSV loss trace for one step plus a footer comment with a block-trend
// statistic: the trace is cut into up to 10 blocks and the footer reports the
// fraction of adjacent block-mean pairs that decrease.
inline std::string emit_loss_trace(const DSSolution& sol, int step) {
  if (step < 0 || step >= sol.grid.steps)
    throw std::invalid_argument("trace: step out of range");
  if (!sol.nets[step] || sol.loss_traces[step].empty())
    throw std::runtime_error("trace: step " + std::to_string(step) + " is untrained");
  const Vec& trace = sol.loss_traces[step];
  std::string csv = "iteration,loss\n";
  for (size_t k = 0; k < trace.size(); ++k)
    csv += std::to_string(k) + "," + fmt_g9(trace[k]) + "\n";

  const int blocks = static_cast<int>(std::min<size_t>(10, trace.size()));
  Vec means(blocks, 0.0);
  const size_t n = trace.size();
  for (int b = 0; b < blocks; ++b) {
    const size_t s0 = n * b / blocks, s1 = n * (b + 1) / blocks;
    for (size_t k = s0; k < s1; ++k) means[b] += trace[k];
    means[b] /= static_cast<double>(s1 - s0);
  }
  int down = 0;
  for (int b = 0; b + 1 < blocks; ++b)
    if (means[b + 1] < means[b]) ++down;
  const double frac = blocks > 1 ? static_cast<double>(down) / (blocks - 1) : 0.0;
  csv += "# blocks=" + std::to_string(blocks) + ",decreasing_fraction=" + fmt_g9(frac) + "\n";
  return csv;
}

}  // namespace dsplit
