#pragma once

// Deep splitting: backward induction over the grid, one regression problem
// per step against the frozen next-step approximation.
//
// Semilinear step-i loss per sample,
//   | U_next(X_{i+1}) - U(X_i) - dt f(t_i, X_{i+1}, U_next(X_{i+1}),
//       Z(X_{i+1}), I[U_next, X_i](X^c_{i+1})) |^2,
// is regressed with targets precomputed per batch, so gradients never flow
// into U_next.  The linear case regresses H_i = g(X_N) - dt sum f(t_n, X_n)
// directly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsplit/adam.hpp"
#include "dsplit/network.hpp"
#include "dsplit/oracles.hpp"
#include "dsplit/problem.hpp"
#include "dsplit/simulate.hpp"
#include "dsplit/time_grid.hpp"

namespace dsplit {

namespace rng_tag {
inline constexpr std::uint64_t marks = 0x2001;
inline constexpr std::uint64_t batches = 0x2002;
inline constexpr std::uint64_t net_init = 0x2003;
}  // namespace rng_tag

// Marks drawn off-line once per step and reused across all paths and
// gradient iterations of that step.
struct MarkCache {
  int dim = 0;
  int count = 0;
  std::vector<double> z;        // count * dim
  std::vector<double> weights;  // rho(z_k)

  const double* mark(int k) const { return z.data() + static_cast<size_t>(k) * dim; }

  static MarkCache draw(const JumpMeasureSpec& measure, int count, const RngStream& rng) {
    MarkCache c;
    c.dim = measure.dim;
    if (measure.total_intensity == 0.0) return c;
    if (count < 1) throw std::invalid_argument("MarkCache: count must be >= 1");
    c.count = count;
    c.z.resize(static_cast<size_t>(count) * measure.dim);
    c.weights.resize(count);
    RngEngine eng = rng.engine();
    for (int k = 0; k < count; ++k) {
      double* zk = c.z.data() + static_cast<size_t>(k) * measure.dim;
      measure.mark_sampler(eng, zk);
      c.weights[k] = measure.weight(zk);
    }
    return c;
  }
};

// Frozen next-step function: a network, or the analytic terminal condition.
struct NetworkEval {
  const Network* net;
  NetScratch scratch;

  explicit NetworkEval(const Network& n) : net(&n) { net->prepare(scratch); }
  double value(const double* x) { return net->value(x, scratch); }
  double value_and_grad(const double* x, double* g) { return net->value_and_grad(x, g, scratch); }
};

struct TerminalEval {
  const ProblemSpec* spec;
  Vec xv, gv;

  explicit TerminalEval(const ProblemSpec& s) : spec(&s), xv(s.dim), gv(s.dim) {}
  double value(const double* x) {
    xv.assign(x, x + spec->dim);
    return spec->terminal(xv);
  }
  double value_and_grad(const double* x, double* g) {
    xv.assign(x, x + spec->dim);
    if (spec->terminal_grad) {
      spec->terminal_grad(xv, gv);
      for (int j = 0; j < spec->dim; ++j) g[j] = gv[j];
    } else {
      const auto f = [this](const Vec& p) { return spec->terminal(p); };
      const Vec fd = finite_difference_gradient(f, xv, 1e-6);
      for (int j = 0; j < spec->dim; ++j) g[j] = fd[j];
    }
    return spec->terminal(xv);
  }
};

// Monte Carlo nonlocal term
//   I[U, x_prev](x_c) ~= nu(R^d)/M sum_k rho(z_k) [U(x_c + gamma(x_prev, z_k)) - U(x_c)]
// over the cached marks.  Exactly zero for constant U (termwise cancellation)
// and for the null measure.
template <class UNext>
double mc_integral_operator(UNext& u, const ProblemSpec& spec, const double* x_prev,
                            const double* x_cont, const MarkCache& cache) {
  if (spec.measure.total_intensity == 0.0) return 0.0;
  if (cache.count == 0) throw std::invalid_argument("mc_integral_operator: empty mark cache");
  if (cache.dim != spec.dim) throw std::invalid_argument("mc_integral_operator: cache dim mismatch");
  const int d = spec.dim;
  const double u0 = u.value(x_cont);
  Vec xprev_v(x_prev, x_prev + d), gam(d), shifted(d);
  double acc = 0.0;
  for (int k = 0; k < cache.count; ++k) {
    spec.jump_map(xprev_v, cache.mark(k), gam);
    for (int j = 0; j < d; ++j) shifted[j] = x_cont[j] + gam[j];
    acc += cache.weights[k] * (u.value(shifted.data()) - u0);
  }
  return spec.measure.total_intensity / cache.count * acc;
}

struct TargetOptions {
  bool f_at_next = true;  // driver's spatial argument: X_{i+1} (default) or X_i
};

// Per-sample regression targets for the step whose transition sits at
// `batch_step` inside `batch`:
//   target_m = U_next(X_{i+1}) - dt f(t_i, x_f, U_next(X_{i+1}), Z_m, I_m).
template <class UNext>
Vec semilinear_target(const ProblemSpec& spec, double t_i, double dt, const PathBatch& batch,
                      int batch_step, UNext& u_next, const MarkCache& cache,
                      const TargetOptions& opt = {}) {
  const int d = spec.dim;
  const int m_count = batch.paths;
  if (batch_step < 0 || batch_step >= batch.grid.steps)
    throw std::invalid_argument("semilinear_target: batch_step out of range");
  const bool need_nonlocal = spec.driver_uses_nonlocal && spec.measure.total_intensity > 0.0;
  if (need_nonlocal && !batch.has_cont_states())
    throw std::invalid_argument("semilinear_target: batch lacks continuous states for the nonlocal term");

  const bool sigma_conv = spec.grad_convention == GradConvention::sigma_t_grad_u;
  Vec grad(d), z(d), x_prev(d), x_f(d);
  Mat sig(d, d);
  Vec targets(m_count);
  for (int m = 0; m < m_count; ++m) {
    const double* xp = batch.state(batch_step, m);
    const double* xn = batch.state(batch_step + 1, m);
    const double y = u_next.value_and_grad(xn, grad.data());
    x_prev.assign(xp, xp + d);
    if (sigma_conv) {
      spec.diffusion(x_prev, sig);
      matvec_t(sig, grad.data(), z.data());
    } else {
      z = grad;
    }
    double nonlocal = 0.0;
    if (need_nonlocal)
      nonlocal = mc_integral_operator(u_next, spec, xp, batch.cont_state(batch_step, m), cache);
    const double* xf_ptr = opt.f_at_next ? xn : xp;
    x_f.assign(xf_ptr, xf_ptr + d);
    const double f_val = spec.driver(t_i, x_f, y, z, nonlocal);
    const double target = y - dt * f_val;
    if (!std::isfinite(target))
      throw std::runtime_error("semilinear_target: non-finite target at path " + std::to_string(m));
    targets[m] = target;
  }
  return targets;
}

struct TrainConfig {
  int batch_size = 1000;
  long iterations = 1000;
  double learning_rate = 0.01;
  std::vector<long> decay_milestones;
  double decay_factor = 0.1;
  int mark_cache_size = 10000;
  int mark_cap = 64;
  bool warm_start = true;
  bool f_at_next = true;
  std::vector<int> train_steps;  // linear case only; empty means {0}
};

struct NetworkConfig {
  std::vector<int> hidden;  // empty -> {d+10, d+10}
  Activation activation = Activation::softplus;
  bool standardize = true;
};

struct TrainAbort : std::runtime_error {
  Vec trace;
  TrainAbort(const std::string& msg, Vec t) : std::runtime_error(msg), trace(std::move(t)) {}
};

struct TrainResult {
  Network net;
  Vec loss_trace;
};

// One regression: fresh batch per iteration, targets from the frozen
// next-step function, Adam on the mean squared residual.
template <class UNext>
TrainResult train_step(const ProblemSpec& spec, double t_i, double dt, UNext& u_next,
                       const std::function<PathBatch(long)>& batch_source, int batch_step,
                       const MarkCache& cache, Network initial, const TrainConfig& cfg) {
  TrainResult res;
  res.net = std::move(initial);
  res.loss_trace.reserve(cfg.iterations);

  AdamState adam(res.net.param_count());
  LrSchedule sched{cfg.learning_rate, cfg.decay_milestones, cfg.decay_factor};
  NetScratch scratch;
  res.net.prepare(scratch);
  Vec resid, grad, values;
  const TargetOptions topt{cfg.f_at_next};

  for (long it = 0; it < cfg.iterations; ++it) {
    const PathBatch batch = batch_source(it);
    Vec targets;
    try {
      targets = semilinear_target(spec, t_i, dt, batch, batch_step, u_next, cache, topt);
    } catch (const std::runtime_error& e) {
      // non-finite targets mean the (warm-started) next-step net diverged
      throw TrainAbort(e.what(), res.loss_trace);
    }
    const int m_count = batch.paths;
    const double* xs = batch.state(batch_step, 0);  // paths are contiguous per step
    resid.resize(m_count);
    double loss = 0.0;
    for (int m = 0; m < m_count; ++m) {
      const double diff = res.net.value(xs + static_cast<size_t>(m) * spec.dim, scratch) - targets[m];
      resid[m] = 2.0 * diff;
      loss += diff * diff;
    }
    loss /= m_count;
    res.loss_trace.push_back(loss);
    if (!std::isfinite(loss))
      throw TrainAbort("train_step: non-finite loss at iteration " + std::to_string(it),
                       res.loss_trace);
    res.net.backprop_params(xs, m_count, resid.data(), grad, scratch);
    adam_step(res.net.params(), grad, adam, sched);
  }
  return res;
}

struct DSSolution {
  TimeGrid grid;
  int dim = 0;
  std::uint64_t seed = 0;
  std::vector<std::optional<Network>> nets;  // index = step, size grid.steps
  bool terminal_is_network = false;
  std::optional<Network> terminal_net;
  std::function<double(const Vec&)> terminal_fn;  // used when terminal_is_network == false
  std::vector<Vec> loss_traces;                   // per step; empty when untrained
};

inline double evaluate_solution(const DSSolution& sol, int step, const Vec& x) {
  if (step < 0 || step > sol.grid.steps)
    throw std::invalid_argument("evaluate_solution: step out of range");
  if (static_cast<int>(x.size()) != sol.dim)
    throw std::invalid_argument("evaluate_solution: point dimension mismatch");
  if (step == sol.grid.steps) {
    if (sol.terminal_is_network) return sol.terminal_net->value(x);
    if (!sol.terminal_fn) throw std::runtime_error("evaluate_solution: terminal function not attached");
    return sol.terminal_fn(x);
  }
  if (!sol.nets[step])
    throw std::runtime_error("evaluate_solution: step " + std::to_string(step) + " is untrained");
  return sol.nets[step]->value(x);
}

namespace detail {

inline Standardizer make_input_map(const ProblemSpec& spec, bool enabled) {
  if (!enabled || !spec.init_uniform) return Standardizer{};
  return Standardizer::from_box(spec.init_low, spec.init_high);
}

inline std::vector<int> resolve_hidden(const NetworkConfig& cfg, int dim) {
  return cfg.hidden.empty() ? default_hidden_widths(dim) : cfg.hidden;
}

}  // namespace detail

// Full backward induction for the semilinear case.  Every random quantity
// derives from (seed, step, iteration, path), so reruns are bit-identical.
inline DSSolution run_ds(const ProblemSpec& spec, const TimeGrid& grid, const NetworkConfig& net_cfg,
                         const TrainConfig& cfg, std::uint64_t seed) {
  if (spec.restart_each_interval && !spec.init_uniform)
    throw std::invalid_argument("run_ds: restart sampling requires a uniform initial law");

  DSSolution sol;
  sol.grid = grid;
  sol.dim = spec.dim;
  sol.seed = seed;
  sol.nets.resize(grid.steps);
  sol.loss_traces.resize(grid.steps);
  sol.terminal_fn = spec.terminal;

  const RngStream root{seed, 0};
  const Standardizer std_map = detail::make_input_map(spec, net_cfg.standardize);
  const std::vector<int> hidden = detail::resolve_hidden(net_cfg, spec.dim);
  const double dt = grid.dt();
  SimOptions sim_opt;
  sim_opt.mark_cap = cfg.mark_cap;

  for (int i = grid.steps - 1; i >= 0; --i) {
    const MarkCache cache =
        spec.driver_uses_nonlocal
            ? MarkCache::draw(spec.measure, cfg.mark_cache_size,
                              root.child(rng_tag::marks).child(static_cast<std::uint64_t>(i)))
            : MarkCache{};

    const RngStream batch_root =
        root.child(rng_tag::batches).child(static_cast<std::uint64_t>(i));
    std::function<PathBatch(long)> batch_source;
    int batch_step = 0;
    if (spec.restart_each_interval) {
      const double t_lo = grid.t(i), t_hi = grid.t(i + 1);
      batch_source = [&spec, t_lo, t_hi, &cfg, batch_root, sim_opt](long it) {
        return simulate_regulator_interval(spec, t_lo, t_hi, cfg.batch_size,
                                           batch_root.child(static_cast<std::uint64_t>(it)),
                                           sim_opt);
      };
    } else {
      batch_source = [&spec, &grid, &cfg, batch_root, sim_opt](long it) {
        return simulate_euler(spec, grid, cfg.batch_size,
                              batch_root.child(static_cast<std::uint64_t>(it)), sim_opt);
      };
      batch_step = i;
    }

    Network initial =
        (cfg.warm_start && i < grid.steps - 1 && sol.nets[i + 1])
            ? *sol.nets[i + 1]
            : init_network(spec.dim, hidden, net_cfg.activation, std_map,
                           root.child(rng_tag::net_init).child(static_cast<std::uint64_t>(i)));

    TrainResult tr;
    if (i == grid.steps - 1) {
      TerminalEval term(spec);
      tr = train_step(spec, grid.t(i), dt, term, batch_source, batch_step, cache,
                      std::move(initial), cfg);
    } else {
      NetworkEval next(*sol.nets[i + 1]);
      tr = train_step(spec, grid.t(i), dt, next, batch_source, batch_step, cache,
                      std::move(initial), cfg);
    }
    sol.nets[i] = std::move(tr.net);
    sol.loss_traces[i] = std::move(tr.loss_trace);
  }
  return sol;
}

// Linear case: trains each requested step by direct regression on
//   H_i = g(X_N) - dt * sum_{n=i}^{N-1} f(t_n, X_n)
// with full forward paths (exact law when the problem provides one).
inline DSSolution run_ds_linear(const ProblemSpec& spec, const TimeGrid& grid,
                                const NetworkConfig& net_cfg, const TrainConfig& cfg,
                                std::uint64_t seed) {
  if (spec.driver_form == DriverForm::semilinear)
    throw std::invalid_argument("run_ds_linear: driver must not depend on (y, z, w)");

  DSSolution sol;
  sol.grid = grid;
  sol.dim = spec.dim;
  sol.seed = seed;
  sol.nets.resize(grid.steps);
  sol.loss_traces.resize(grid.steps);
  sol.terminal_fn = spec.terminal;

  std::vector<int> steps = cfg.train_steps.empty() ? std::vector<int>{0} : cfg.train_steps;
  for (int s : steps)
    if (s < 0 || s >= grid.steps) throw std::invalid_argument("run_ds_linear: train step out of range");

  const RngStream root{seed, 0};
  const Standardizer std_map = detail::make_input_map(spec, net_cfg.standardize);
  const std::vector<int> hidden = detail::resolve_hidden(net_cfg, spec.dim);
  const double dt = grid.dt();
  const int n = grid.steps;
  SimOptions sim_opt;
  sim_opt.mark_cap = cfg.mark_cap;
  sim_opt.store_marks = false;
  const bool exact = spec.exact_sim == ProblemSpec::ExactSim::basket_closed_form;
  const bool has_f = spec.driver_form == DriverForm::time_state;

  for (int step : steps) {
    const RngStream batch_root =
        root.child(rng_tag::batches).child(static_cast<std::uint64_t>(step));
    Network net = init_network(spec.dim, hidden, net_cfg.activation, std_map,
                               root.child(rng_tag::net_init).child(static_cast<std::uint64_t>(step)));
    AdamState adam(net.param_count());
    LrSchedule sched{cfg.learning_rate, cfg.decay_milestones, cfg.decay_factor};
    NetScratch scratch;
    net.prepare(scratch);
    Vec targets, resid, grad, xv(spec.dim);
    const Vec zdummy;
    Vec& trace = sol.loss_traces[step];
    trace.reserve(cfg.iterations);

    for (long it = 0; it < cfg.iterations; ++it) {
      const RngStream bs = batch_root.child(static_cast<std::uint64_t>(it));
      const PathBatch batch = exact
                                  ? simulate_basket_exact(*spec.basket, grid, cfg.batch_size, bs)
                                  : simulate_euler(spec, grid, cfg.batch_size, bs, sim_opt);
      const int m_count = batch.paths;
      targets.resize(m_count);
      for (int m = 0; m < m_count; ++m) {
        xv.assign(batch.state(n, m), batch.state(n, m) + spec.dim);
        double h = spec.terminal(xv);
        if (has_f) {
          double fs = 0.0;
          for (int k = step; k < n; ++k) {
            xv.assign(batch.state(k, m), batch.state(k, m) + spec.dim);
            fs += spec.driver(grid.t(k), xv, 0.0, zdummy, 0.0);
          }
          h -= dt * fs;
        }
        if (!std::isfinite(h))
          throw TrainAbort("run_ds_linear: non-finite target at path " + std::to_string(m), trace);
        targets[m] = h;
      }
      const double* xs = batch.state(step, 0);
      resid.resize(m_count);
      double loss = 0.0;
      for (int m = 0; m < m_count; ++m) {
        const double diff = net.value(xs + static_cast<size_t>(m) * spec.dim, scratch) - targets[m];
        resid[m] = 2.0 * diff;
        loss += diff * diff;
      }
      loss /= m_count;
      trace.push_back(loss);
      if (!std::isfinite(loss))
        throw TrainAbort("run_ds_linear: non-finite loss at iteration " + std::to_string(it), trace);
      net.backprop_params(xs, m_count, resid.data(), grad, scratch);
      adam_step(net.params(), grad, adam, sched);
    }
    sol.nets[step] = std::move(net);
  }
  return sol;
}

// ---- persistence ----------------------------------------------------------

inline std::string step_net_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "net_%03d.json", step);
  return buf;
}
inline std::string step_loss_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "loss_%03d.csv", step);
  return buf;
}

inline void save_solution(const DSSolution& sol, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "dsplit-solution-v1";
  manifest["dim"] = sol.dim;
  manifest["grid"] = {{"horizon", fmt_g17(sol.grid.horizon)}, {"steps", sol.grid.steps}};
  manifest["seed"] = std::to_string(sol.seed);
  manifest["terminal"] = sol.terminal_is_network ? "network" : "analytic";
  std::vector<int> trained;
  for (int i = 0; i < sol.grid.steps; ++i)
    if (sol.nets[i]) trained.push_back(i);
  manifest["trained_steps"] = trained;
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

  for (int i : trained) {
    write_text_file(dir + "/" + step_net_name(i), sol.nets[i]->to_json().dump(2) + "\n");
    std::string csv = "iteration,loss\n";
    for (size_t k = 0; k < sol.loss_traces[i].size(); ++k)
      csv += std::to_string(k) + "," + fmt_g9(sol.loss_traces[i][k]) + "\n";
    write_text_file(dir + "/" + step_loss_name(i), csv);
  }
  if (sol.terminal_is_network)
    write_text_file(dir + "/net_terminal.json", sol.terminal_net->to_json().dump(2) + "\n");
}

inline DSSolution load_solution(const std::string& dir,
                                std::function<double(const Vec&)> terminal_fn = nullptr) {
  const nlohmann::json manifest = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
  if (!manifest.contains("format") || manifest["format"] != "dsplit-solution-v1")
    throw std::runtime_error("load_solution: " + dir + "/manifest.json: unsupported format");
  DSSolution sol;
  sol.dim = manifest["dim"].get<int>();
  sol.grid = TimeGrid(parse_double(manifest["grid"]["horizon"].get<std::string>()),
                      manifest["grid"]["steps"].get<int>());
  sol.seed = std::stoull(manifest["seed"].get<std::string>());
  sol.nets.resize(sol.grid.steps);
  sol.loss_traces.resize(sol.grid.steps);
  sol.terminal_fn = std::move(terminal_fn);
  for (int i : manifest["trained_steps"].get<std::vector<int>>()) {
    sol.nets[i] =
        Network::from_json(nlohmann::json::parse(read_text_file(dir + "/" + step_net_name(i))));
    const CsvDoc doc = CsvDoc::parse(read_text_file(dir + "/" + step_loss_name(i)));
    Vec& trace = sol.loss_traces[i];
    for (size_t r = 1; r < doc.rows.size(); ++r)
      if (!doc.is_comment[r] && doc.rows[r].size() == 2) trace.push_back(parse_double(doc.rows[r][1]));
  }
  if (manifest["terminal"] == "network") {
    sol.terminal_is_network = true;
    sol.terminal_net =
        Network::from_json(nlohmann::json::parse(read_text_file(dir + "/net_terminal.json")));
  }
  return sol;
}

}  // namespace dsplit
