// dsplit: experiment runner for the deep-splitting solver.
//
//   dsplit run <config.json> [--preset desk|paper] [--seeds n] [--out dir] [--parallel-seeds]
//   dsplit slice <solution-dir> --axis k --range a,b --res m [--anchor x1,..,xd]
//                [--oracle-points M] [--out file]
//   dsplit trace <solution-dir> --step i [--out file]
//   dsplit oracle <config.json> [--preset desk|paper] [--cache file]
//
// DSPLIT_OUT_DIR sets the base output directory (default "runs").  All numeric
// output uses 9 significant digits.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsplit/config.hpp"
#include "dsplit/report.hpp"

namespace {

using namespace dsplit;

std::string out_base() {
  const char* env = std::getenv("DSPLIT_OUT_DIR");
  return env && *env ? env : "runs";
}

std::vector<double> parse_csv_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t comma = s.find(',', pos);
    const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(parse_double(tok));
    } catch (const std::exception&) {
      throw std::runtime_error(std::string(what) + ": expected comma-separated numbers, got '" + s + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// Loads the self-contained artifacts a `run` leaves in each seed directory.
struct LoadedSolution {
  ExperimentConfig cfg;
  DSSolution sol;
};

LoadedSolution load_solution_dir(const std::string& dir) {
  LoadedSolution out;
  out.cfg = parse_effective_config(nlohmann::json::parse(read_text_file(dir + "/config.json")));
  out.sol = load_solution(dir, out.cfg.make_problem().terminal);
  return out;
}

void write_or_print(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_text_file(*path, text);
    std::fprintf(stderr, "wrote %s\n", path->c_str());
  } else {
    std::fputs(text.c_str(), stdout);
  }
}

int cmd_run(const std::string& config_path, const std::string& preset,
            std::optional<int> seeds_override, std::optional<std::string> out_dir, bool parallel) {
  const ExperimentConfig cfg = load_config(config_path, preset, seeds_override);
  const std::string dir = out_dir ? *out_dir
                                  : out_base() + "/" + cfg.kind + "_d" + std::to_string(cfg.dim) +
                                        "_" + cfg.preset + "_" + cfg.hash.substr(0, 12);
  const RunReport rep = run_experiment(cfg, dir, RunOptions{parallel});

  std::printf("%s d=%d preset=%s steps=%d hash=%s\n", cfg.kind.c_str(), cfg.dim,
              cfg.preset.c_str(), cfg.grid.steps, cfg.hash.c_str());
  for (size_t k = 0; k < cfg.seeds.size(); ++k) {
    const SeedOutcome& o = rep.outcomes[k];
    if (o.failed)
      std::printf("  seed %llu: FAILED (%s)\n", static_cast<unsigned long long>(cfg.seeds[k]),
                  o.error.c_str());
    else
      std::printf("  seed %llu: estimate %s  (%.1fs)\n",
                  static_cast<unsigned long long>(cfg.seeds[k]), fmt_g9(o.estimate).c_str(),
                  o.wall_seconds);
  }
  if (!std::isnan(rep.mean)) {
    std::printf("mean %s", fmt_g9(rep.mean).c_str());
    if (!std::isnan(rep.stdev)) std::printf("  std %s", fmt_g9(rep.stdev).c_str());
    std::printf("\noracle(%s) %s", rep.oracle.kind.c_str(), fmt_g9(rep.oracle.value).c_str());
    if (rep.oracle.kind == "mc") std::printf("  se %s", fmt_g9(rep.oracle.std_error).c_str());
    std::printf("\nrel err %s%%\n", fmt_g9(rep.rel_err_pct).c_str());
    if (cfg.report.domain_samples > 0 && !std::isnan(rep.domain_error))
      std::printf("domain err %s (M=%d)\n", fmt_g9(rep.domain_error).c_str(),
                  cfg.report.domain_samples);
  }
  std::printf("artifacts: %s (%.1fs total)\n", dir.c_str(), rep.total_seconds);
  return rep.failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep-splitting PIDE solver"};
  app.require_subcommand(1);

  std::string config_path, sol_dir, preset = "paper", range_str, anchor_str;
  std::optional<int> seeds_override;
  std::optional<std::string> out_path;
  bool parallel = false;
  int axis = 0, res = 2, step = 0;
  long oracle_points = 0;
  std::string cache_path = out_base() + "/oracle_cache.json";

  CLI::App* run = app.add_subcommand("run", "train on a config and write a report");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--preset", preset, "desk or paper (default paper)");
  int seeds_n = 0;
  CLI::Option* seeds_opt = run->add_option("--seeds", seeds_n, "override the seed count");
  run->add_option("--out", out_path, "output directory");
  run->add_flag("--parallel-seeds", parallel, "run seeds on separate threads");

  CLI::App* slice = app.add_subcommand("slice", "CSV slice of U_0 along one axis");
  slice->add_option("solution-dir", sol_dir, "seed directory written by run")->required();
  slice->add_option("--axis", axis, "coordinate to sweep")->required();
  slice->add_option("--range", range_str, "lo,hi")->required();
  slice->add_option("--res", res, "number of gridpoints (>= 2)")->required();
  slice->add_option("--anchor", anchor_str, "fixed coordinates (default all 1)");
  slice->add_option("--oracle-points", oracle_points, "basket: MC paths per gridpoint");
  slice->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* trace = app.add_subcommand("trace", "CSV loss trace for one step");
  trace->add_option("solution-dir", sol_dir, "seed directory written by run")->required();
  trace->add_option("--step", step, "time step index")->required();
  trace->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* oracle = app.add_subcommand("oracle", "compute and cache the oracle value");
  oracle->add_option("config", config_path, "experiment config JSON")->required();
  oracle->add_option("--preset", preset, "desk or paper (default paper)");
  oracle->add_option("--cache", cache_path, "cache file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (*seeds_opt) seeds_override = seeds_n;
      return cmd_run(config_path, preset, seeds_override, out_path, parallel);
    }
    if (slice->parsed()) {
      const std::vector<double> range = parse_csv_doubles(range_str, "--range");
      if (range.size() != 2) throw std::runtime_error("--range: expected exactly lo,hi");
      SliceSpec s;
      s.axis = axis;
      s.lo = range[0];
      s.hi = range[1];
      s.res = res;
      s.oracle_points = oracle_points;
      if (!anchor_str.empty()) s.anchor = parse_csv_doubles(anchor_str, "--anchor");
      const LoadedSolution ls = load_solution_dir(sol_dir);
      write_or_print(out_path, emit_slice(ls.sol, ls.cfg, s));
      return 0;
    }
    if (trace->parsed()) {
      const LoadedSolution ls = load_solution_dir(sol_dir);
      write_or_print(out_path, emit_loss_trace(ls.sol, step));
      return 0;
    }
    if (oracle->parsed()) {
      const ExperimentConfig cfg = load_config(config_path, preset);
      const OracleResult r = oracle_cached(cfg, cache_path);
      nlohmann::json doc;
      doc["kind"] = r.kind;
      doc["value"] = fmt_g9(r.value);
      if (r.kind == "mc") {
        doc["std_error"] = fmt_g9(r.std_error);
        doc["paths"] = r.paths;
      } else {
        doc["ode_steps"] = r.ode_steps;
      }
      doc["key"] = oracle_key(cfg);
      std::printf("%s\n", doc.dump(2).c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dsplit: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
