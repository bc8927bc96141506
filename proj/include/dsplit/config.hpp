#pragma once

// Experiment configuration: one JSON document with sections problem / grid /
// network / training / seeds / report.  Parsing is strict (unknown keys are
// errors, messages carry the offending path), defaults follow the full-scale
// experimental setup, and the effective document is canonicalized and hashed
// so runs and oracle caches can be keyed by content.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsplit/deep_split.hpp"
#include "dsplit/format.hpp"
#include "dsplit/problem.hpp"
#include "dsplit/time_grid.hpp"

namespace dsplit {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error("config: " + path + ": " + what) {}
};

namespace cfg_detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) ok = true;
    if (!ok) throw ConfigError(path + "." + item.key(), "unknown key");
  }
}

inline const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const char* key, const std::string& path, double dflt) {
  const json* v = find(obj, key);
  return v ? get_number(*v, path + "." + key) : dflt;
}

inline long integer_or(const json& obj, const char* key, const std::string& path, long dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return v->get<long>();
}

inline bool bool_or(const json& obj, const char* key, const std::string& path, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) throw ConfigError(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

inline std::string string_or(const json& obj, const char* key, const std::string& path,
                             const std::string& dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_string()) throw ConfigError(path + "." + key, "expected a string");
  return v->get<std::string>();
}

// scalar broadcast or per-coordinate array
inline Vec vec_or(const json& obj, const char* key, const std::string& path, int dim, double dflt) {
  const json* v = find(obj, key);
  if (!v) return Vec(dim, dflt);
  const std::string at = path + "." + key;
  if (v->is_number()) return Vec(dim, v->get<double>());
  if (!v->is_array()) throw ConfigError(at, "expected a number or an array");
  if (static_cast<int>(v->size()) != dim)
    throw ConfigError(at, "expected " + std::to_string(dim) + " entries, got " +
                              std::to_string(v->size()));
  Vec out(dim);
  for (int j = 0; j < dim; ++j) out[j] = get_number((*v)[j], at + "[" + std::to_string(j) + "]");
  return out;
}

inline json vec_json(const Vec& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

}  // namespace cfg_detail

struct ReportSpec {
  Vec eval_point;           // default (1, ..., 1)
  int domain_samples = 0;   // uniform-sample average relative error (pointwise oracle required)
  long oracle_paths = 1000000;
  int ode_steps = 10000;
};

struct ExperimentConfig {
  std::string preset = "paper";  // "paper" (full scale) or "desk"
  std::string kind;              // "basket" | "regulator"
  int dim = 0;
  double horizon = 1.0;
  BasketParams basket;
  RegulatorParams regulator;
  TimeGrid grid;
  NetworkConfig net;
  TrainConfig train;
  std::vector<std::uint64_t> seeds;
  ReportSpec report;

  nlohmann::json canonical;  // effective document, every key explicit
  std::string hash;          // fnv1a64(canonical.dump()), 16 hex chars

  bool linear() const { return kind == "basket"; }

  ProblemSpec make_problem() const {
    return kind == "basket" ? make_basket_problem(basket, horizon)
                            : make_regulator_problem(regulator);
  }

  // pointwise reference u(0, x), available for the regulator only
  bool has_pointwise_oracle() const { return kind == "regulator"; }
};

// Parses, applies the preset, fills defaults, canonicalizes, hashes.  The
// desk preset divides batch size, iteration count, decay milestones, and
// oracle paths by 10 and runs 3 seeds.
inline ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& preset = "paper",
                                     std::optional<int> seed_count_override = std::nullopt) {
  using cfg_detail::bool_or;
  using cfg_detail::check_keys;
  using cfg_detail::find;
  using cfg_detail::integer_or;
  using cfg_detail::number_or;
  using cfg_detail::string_or;
  using cfg_detail::vec_or;
  using nlohmann::json;

  if (!doc.is_object()) throw ConfigError("$", "expected an object");
  check_keys(doc, "$", {"problem", "grid", "network", "training", "seeds", "report"});
  if (preset != "paper" && preset != "desk")
    throw ConfigError("preset", "expected 'paper' or 'desk', got '" + preset + "'");
  const bool desk = preset == "desk";

  ExperimentConfig out;
  out.preset = preset;

  // ---- problem ----
  const json* prob = find(doc, "problem");
  if (!prob) throw ConfigError("problem", "missing section");
  if (!prob->is_object()) throw ConfigError("problem", "expected an object");
  out.kind = string_or(*prob, "kind", "problem", "");
  if (out.kind != "basket" && out.kind != "regulator")
    throw ConfigError("problem.kind", "expected 'basket' or 'regulator', got '" + out.kind + "'");
  const long dim = integer_or(*prob, "dim", "problem", 0);
  if (dim < 1) throw ConfigError("problem.dim", "expected a positive integer");
  out.dim = static_cast<int>(dim);
  out.horizon = number_or(*prob, "horizon", "problem", 1.0);
  if (!(out.horizon > 0.0)) throw ConfigError("problem.horizon", "must be > 0");

  json prob_canon;
  prob_canon["kind"] = out.kind;
  prob_canon["dim"] = out.dim;
  prob_canon["horizon"] = out.horizon;
  if (out.kind == "basket") {
    check_keys(*prob, "problem",
               {"kind", "dim", "horizon", "rate", "corr", "strike", "vol", "jump_sys", "jump_idio",
                "intensity_sys", "intensity_idio", "domain_low", "domain_high"});
    BasketParams p = BasketParams::defaults(out.dim);
    p.rate = number_or(*prob, "rate", "problem", p.rate);
    p.corr = number_or(*prob, "corr", "problem", p.corr);
    p.strike = number_or(*prob, "strike", "problem", p.strike);
    p.vols = vec_or(*prob, "vol", "problem", out.dim, 0.1);
    p.jump_sys = vec_or(*prob, "jump_sys", "problem", out.dim, 0.1);
    p.jump_idio = vec_or(*prob, "jump_idio", "problem", out.dim, 0.1);
    p.intensity_sys = number_or(*prob, "intensity_sys", "problem", p.intensity_sys);
    p.intensity_idio = vec_or(*prob, "intensity_idio", "problem", out.dim, 10.0);
    p.domain_low = vec_or(*prob, "domain_low", "problem", out.dim, 0.0);
    p.domain_high = vec_or(*prob, "domain_high", "problem", out.dim, 2.0);
    out.basket = p;
    prob_canon["rate"] = p.rate;
    prob_canon["corr"] = p.corr;
    prob_canon["strike"] = p.strike;
    prob_canon["vol"] = cfg_detail::vec_json(p.vols);
    prob_canon["jump_sys"] = cfg_detail::vec_json(p.jump_sys);
    prob_canon["jump_idio"] = cfg_detail::vec_json(p.jump_idio);
    prob_canon["intensity_sys"] = p.intensity_sys;
    prob_canon["intensity_idio"] = cfg_detail::vec_json(p.intensity_idio);
    prob_canon["domain_low"] = cfg_detail::vec_json(p.domain_low);
    prob_canon["domain_high"] = cfg_detail::vec_json(p.domain_high);
  } else {
    check_keys(*prob, "problem",
               {"kind", "dim", "horizon", "vol", "terminal_weight", "control_cost", "intensity",
                "gamma_shape", "gamma_rate", "domain_halfwidth"});
    RegulatorParams p = RegulatorParams::defaults(out.dim);
    p.vols = vec_or(*prob, "vol", "problem", out.dim, 0.1);
    p.terminal_weights = vec_or(*prob, "terminal_weight", "problem", out.dim, 1.0);
    p.control_costs = vec_or(*prob, "control_cost", "problem", out.dim, 0.5);
    p.intensities = vec_or(*prob, "intensity", "problem", out.dim, 10.0);
    p.gamma_shapes = vec_or(*prob, "gamma_shape", "problem", out.dim, 0.4);
    p.gamma_rates = vec_or(*prob, "gamma_rate", "problem", out.dim, 4.0);
    p.domain_halfwidth = number_or(*prob, "domain_halfwidth", "problem", p.domain_halfwidth);
    out.regulator = p;
    prob_canon["vol"] = cfg_detail::vec_json(p.vols);
    prob_canon["terminal_weight"] = cfg_detail::vec_json(p.terminal_weights);
    prob_canon["control_cost"] = cfg_detail::vec_json(p.control_costs);
    prob_canon["intensity"] = cfg_detail::vec_json(p.intensities);
    prob_canon["gamma_shape"] = cfg_detail::vec_json(p.gamma_shapes);
    prob_canon["gamma_rate"] = cfg_detail::vec_json(p.gamma_rates);
    prob_canon["domain_halfwidth"] = p.domain_halfwidth;
  }
  try {
    out.make_problem();  // reuse the factory validation (positivity, PD correlation, ...)
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem", e.what());
  }

  const bool is_basket = out.kind == "basket";

  // ---- grid ----
  long steps = is_basket ? 1 : 10;
  if (const json* grid = find(doc, "grid")) {
    if (!grid->is_object()) throw ConfigError("grid", "expected an object");
    check_keys(*grid, "grid", {"steps"});
    steps = integer_or(*grid, "steps", "grid", steps);
    if (steps < 1) throw ConfigError("grid.steps", "expected a positive integer");
  }
  out.grid = TimeGrid(out.horizon, static_cast<int>(steps));

  // ---- network ----
  out.net.activation = is_basket ? Activation::softplus : Activation::sigmoid;
  out.net.hidden = default_hidden_widths(out.dim);
  out.net.standardize = true;
  if (const json* net = find(doc, "network")) {
    if (!net->is_object()) throw ConfigError("network", "expected an object");
    check_keys(*net, "network", {"hidden", "activation", "standardize"});
    if (const json* hidden = find(*net, "hidden")) {
      if (!hidden->is_array() || hidden->empty())
        throw ConfigError("network.hidden", "expected a non-empty array of widths");
      out.net.hidden.clear();
      for (size_t k = 0; k < hidden->size(); ++k) {
        const json& w = (*hidden)[k];
        if (!w.is_number_integer() || w.get<long>() < 1)
          throw ConfigError("network.hidden[" + std::to_string(k) + "]",
                            "expected a positive integer");
        out.net.hidden.push_back(w.get<int>());
      }
    }
    const std::string act =
        string_or(*net, "activation", "network", activation_name(out.net.activation));
    try {
      out.net.activation = activation_from_name(act);
    } catch (const std::invalid_argument&) {
      throw ConfigError("network.activation", "expected softplus, sigmoid, or relu2");
    }
    out.net.standardize = bool_or(*net, "standardize", "network", true);
  }

  // ---- training ----
  out.train.batch_size = is_basket ? 6000 : 10000;
  out.train.iterations = is_basket ? 10000 : 12000;
  out.train.learning_rate = is_basket ? 0.01 : 0.1;
  out.train.decay_milestones = is_basket ? std::vector<long>{2000, 4000, 7000}
                                         : std::vector<long>{3000, 6000, 9000};
  if (const json* tr = find(doc, "training")) {
    if (!tr->is_object()) throw ConfigError("training", "expected an object");
    check_keys(*tr, "training",
               {"batch_size", "iterations", "learning_rate", "decay_milestones", "decay_factor",
                "mark_cache_size", "mark_cap", "warm_start"});
    out.train.batch_size = static_cast<int>(integer_or(*tr, "batch_size", "training",
                                                       out.train.batch_size));
    out.train.iterations = integer_or(*tr, "iterations", "training", out.train.iterations);
    out.train.learning_rate = number_or(*tr, "learning_rate", "training", out.train.learning_rate);
    if (const json* ms = find(*tr, "decay_milestones")) {
      if (!ms->is_array()) throw ConfigError("training.decay_milestones", "expected an array");
      out.train.decay_milestones.clear();
      for (size_t k = 0; k < ms->size(); ++k) {
        const json& m = (*ms)[k];
        if (!m.is_number_integer() || m.get<long>() < 1)
          throw ConfigError("training.decay_milestones[" + std::to_string(k) + "]",
                            "expected a positive integer");
        out.train.decay_milestones.push_back(m.get<long>());
      }
    }
    out.train.decay_factor = number_or(*tr, "decay_factor", "training", out.train.decay_factor);
    out.train.mark_cache_size =
        static_cast<int>(integer_or(*tr, "mark_cache_size", "training", out.train.mark_cache_size));
    out.train.mark_cap = static_cast<int>(integer_or(*tr, "mark_cap", "training", out.train.mark_cap));
    out.train.warm_start = bool_or(*tr, "warm_start", "training", out.train.warm_start);
  }
  if (out.train.batch_size < 1) throw ConfigError("training.batch_size", "must be >= 1");
  if (out.train.iterations < 0) throw ConfigError("training.iterations", "must be >= 0");
  if (!(out.train.learning_rate > 0.0)) throw ConfigError("training.learning_rate", "must be > 0");
  if (out.train.mark_cache_size < 1) throw ConfigError("training.mark_cache_size", "must be >= 1");
  if (out.train.mark_cap < 1) throw ConfigError("training.mark_cap", "must be >= 1");

  if (desk) {
    out.train.batch_size = std::max(1, out.train.batch_size / 10);
    out.train.iterations = std::max<long>(1, out.train.iterations / 10);
    for (long& m : out.train.decay_milestones) m = std::max<long>(1, m / 10);
  }

  // ---- seeds ----
  long seed_count = 10, seed_base = 1;
  std::vector<std::uint64_t> explicit_seeds;
  if (const json* seeds = find(doc, "seeds")) {
    if (!seeds->is_object()) throw ConfigError("seeds", "expected an object");
    check_keys(*seeds, "seeds", {"count", "base", "list"});
    if (const json* list = find(*seeds, "list")) {
      if (find(*seeds, "count") || find(*seeds, "base"))
        throw ConfigError("seeds", "give either list or count/base, not both");
      if (!list->is_array() || list->empty())
        throw ConfigError("seeds.list", "expected a non-empty array");
      for (size_t k = 0; k < list->size(); ++k) {
        const json& s = (*list)[k];
        if (!s.is_number_integer() || s.get<long>() < 0)
          throw ConfigError("seeds.list[" + std::to_string(k) + "]",
                            "expected a non-negative integer");
        explicit_seeds.push_back(s.get<std::uint64_t>());
      }
    } else {
      seed_count = integer_or(*seeds, "count", "seeds", seed_count);
      seed_base = integer_or(*seeds, "base", "seeds", seed_base);
      if (seed_count < 1) throw ConfigError("seeds.count", "must be >= 1");
      if (seed_base < 0) throw ConfigError("seeds.base", "must be >= 0");
    }
  }
  if (explicit_seeds.empty()) {
    if (desk) seed_count = 3;
    if (seed_count_override) seed_count = *seed_count_override;
    if (seed_count < 1) throw ConfigError("seeds.count", "must be >= 1");
    for (long k = 0; k < seed_count; ++k)
      out.seeds.push_back(static_cast<std::uint64_t>(seed_base + k));
  } else {
    if (desk && explicit_seeds.size() > 3) explicit_seeds.resize(3);
    if (seed_count_override) {
      if (*seed_count_override < 1 ||
          static_cast<size_t>(*seed_count_override) > explicit_seeds.size())
        throw ConfigError("seeds.list", "seed override exceeds the configured list");
      explicit_seeds.resize(*seed_count_override);
    }
    out.seeds = std::move(explicit_seeds);
  }

  // ---- report ----
  out.report.eval_point = Vec(out.dim, 1.0);
  out.report.domain_samples = is_basket ? 0 : 10000;
  if (const json* rep = find(doc, "report")) {
    if (!rep->is_object()) throw ConfigError("report", "expected an object");
    check_keys(*rep, "report", {"eval_point", "domain_samples", "oracle_paths", "ode_steps"});
    out.report.eval_point = vec_or(*rep, "eval_point", "report", out.dim, 1.0);
    out.report.domain_samples = static_cast<int>(
        integer_or(*rep, "domain_samples", "report", out.report.domain_samples));
    out.report.oracle_paths = integer_or(*rep, "oracle_paths", "report", out.report.oracle_paths);
    out.report.ode_steps =
        static_cast<int>(integer_or(*rep, "ode_steps", "report", out.report.ode_steps));
  }
  if (out.report.domain_samples < 0) throw ConfigError("report.domain_samples", "must be >= 0");
  if (out.report.domain_samples > 0 && !out.has_pointwise_oracle())
    throw ConfigError("report.domain_samples",
                      "domain-average error needs a pointwise oracle (regulator only)");
  if (out.report.oracle_paths < 2) throw ConfigError("report.oracle_paths", "must be >= 2");
  if (out.report.ode_steps < 1) throw ConfigError("report.ode_steps", "must be >= 1");
  if (desk) out.report.oracle_paths = std::max<long>(2, out.report.oracle_paths / 10);

  // ---- canonical document & hash ----
  nlohmann::json canon;
  canon["preset"] = out.preset;
  canon["problem"] = prob_canon;
  canon["grid"] = {{"steps", out.grid.steps}};
  canon["network"] = {{"hidden", out.net.hidden},
                      {"activation", activation_name(out.net.activation)},
                      {"standardize", out.net.standardize}};
  canon["training"] = {{"batch_size", out.train.batch_size},
                       {"iterations", out.train.iterations},
                       {"learning_rate", out.train.learning_rate},
                       {"decay_milestones", out.train.decay_milestones},
                       {"decay_factor", out.train.decay_factor},
                       {"mark_cache_size", out.train.mark_cache_size},
                       {"mark_cap", out.train.mark_cap},
                       {"warm_start", out.train.warm_start}};
  nlohmann::json seed_arr = nlohmann::json::array();
  for (std::uint64_t s : out.seeds) seed_arr.push_back(s);
  canon["seeds"] = {{"list", seed_arr}};
  canon["report"] = {{"eval_point", cfg_detail::vec_json(out.report.eval_point)},
                     {"domain_samples", out.report.domain_samples},
                     {"oracle_paths", out.report.oracle_paths},
                     {"ode_steps", out.report.ode_steps}};
  out.canonical = std::move(canon);
  out.hash = hex64(fnv1a64(out.canonical.dump()));
  return out;
}

// Re-parses a canonical document (as written to out_dir/config.json).  The
// values are already preset-scaled, so no preset transform is applied; only
// the recorded label is restored.  Round-tripping reproduces the same hash.
inline ExperimentConfig parse_effective_config(nlohmann::json doc) {
  std::string label = "paper";
  if (doc.is_object() && doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("preset", "expected a string");
    label = doc["preset"].get<std::string>();
    doc.erase("preset");
  }
  if (label != "paper" && label != "desk")
    throw ConfigError("preset", "expected 'paper' or 'desk', got '" + label + "'");
  ExperimentConfig cfg = parse_config(doc, "paper");
  cfg.preset = label;
  cfg.canonical["preset"] = label;
  cfg.hash = hex64(fnv1a64(cfg.canonical.dump()));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& preset = "paper",
                                    std::optional<int> seed_count_override = std::nullopt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return parse_config(doc, preset, seed_count_override);
}

}  // namespace dsplit
