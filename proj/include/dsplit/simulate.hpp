#pragma once

// Forward simulation: Euler scheme with compensated jumps, the exact basket
// law, per-interval restart batches, and a strong-error diagnostic.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsplit/format.hpp"
#include "dsplit/problem.hpp"
#include "dsplit/time_grid.hpp"

namespace dsplit {

struct SimOptions {
  int mark_cap = 64;      // per-interval jump storage limit; overflow is an error
  bool store_marks = true;
};

// Substream tags within one simulation stream.
namespace rng_tag {
inline constexpr std::uint64_t init = 0x1001;
}

// Batch layout: states[(i*paths + m)*dim + j] = X^j at t_i for path m.
// cont_states / brownian / comp_jump are per-interval (i = 0..steps-1).
// Marks are stored path-major: offset index m*steps + i.
struct PathBatch {
  TimeGrid grid;
  double start_time = 0.0;
  int paths = 0;
  int dim = 0;
  enum class Kind { euler, exact, interval } kind = Kind::euler;

  std::vector<double> states;
  std::vector<double> cont_states;  // empty for exact-law batches
  std::vector<double> brownian;
  std::vector<double> comp_jump;
  std::vector<std::int64_t> mark_offset;
  std::vector<double> marks;

  const double* state(int i, int m) const {
    return states.data() + (static_cast<size_t>(i) * paths + m) * dim;
  }
  double* state(int i, int m) {
    return states.data() + (static_cast<size_t>(i) * paths + m) * dim;
  }
  bool has_cont_states() const { return !cont_states.empty(); }
  const double* cont_state(int i, int m) const {
    return cont_states.data() + (static_cast<size_t>(i) * paths + m) * dim;
  }
  double* cont_state(int i, int m) {
    return cont_states.data() + (static_cast<size_t>(i) * paths + m) * dim;
  }
  const double* dw(int i, int m) const {
    return brownian.data() + (static_cast<size_t>(i) * paths + m) * dim;
  }
  double* dw(int i, int m) { return brownian.data() + (static_cast<size_t>(i) * paths + m) * dim; }
  double comp(int i, int m) const { return comp_jump[static_cast<size_t>(i) * paths + m]; }

  int mark_count(int i, int m) const {
    if (mark_offset.empty()) return 0;
    const size_t k = static_cast<size_t>(m) * grid.steps + i;
    return static_cast<int>((mark_offset[k + 1] - mark_offset[k]) / dim);
  }
  const double* mark(int i, int m, int k) const {
    const size_t at = static_cast<size_t>(m) * grid.steps + i;
    return marks.data() + mark_offset[at] + static_cast<size_t>(k) * dim;
  }

  void allocate(const TimeGrid& g, int n_paths, int d, Kind k, bool with_cont, bool with_marks) {
    grid = g;
    paths = n_paths;
    dim = d;
    kind = k;
    const size_t nm = static_cast<size_t>(g.steps) * n_paths;
    states.assign((static_cast<size_t>(g.steps) + 1) * n_paths * d, 0.0);
    cont_states.assign(with_cont ? nm * d : 0, 0.0);
    brownian.assign(nm * d, 0.0);
    comp_jump.assign(nm, 0.0);
    if (with_marks) {
      mark_offset.assign(nm + 1, 0);
      marks.clear();
    } else {
      mark_offset.clear();
      marks.clear();
    }
  }
};

namespace detail {

[[noreturn]] inline void sim_fail(const std::string& what, int step, int path) {
  throw std::runtime_error("simulate: " + what + " at step " + std::to_string(step) + " path " +
                           std::to_string(path));
}

inline void check_finite(const Vec& x, int step, int path) {
  for (double v : x)
    if (!std::isfinite(v)) sim_fail("non-finite state", step, path);
}

}  // namespace detail

// Euler scheme with compensated jumps:
//   X_{i+1} = X_i + b(X_i) dt + sigma(X_i) dW_i
//             + sum_k gamma(X_i, z_k) - dt * integral gamma(X_i, z) nu(dz).
// Per-interval counts are Poisson(nu_total * dt); the compensated count
// increment Delta M_i = sum_k rho(z_k) - dt * integral rho dnu is stored.
inline PathBatch simulate_euler(const ProblemSpec& spec, const TimeGrid& grid, int paths,
                                const RngStream& rng, const SimOptions& opt = {}) {
  if (paths < 1) throw std::invalid_argument("simulate_euler: paths must be >= 1");
  const int d = spec.dim;
  const int n = grid.steps;
  const double dt = grid.dt();
  const double lam_dt = spec.measure.total_intensity * dt;

  PathBatch batch;
  batch.allocate(grid, paths, d, PathBatch::Kind::euler, true, opt.store_marks);

  const RngStream init_stream = rng.child(rng_tag::init);
  Vec x(d), xc(d), b(d), dwv(d), sdw(d), z(d), gam(d), compv(d), jump_sum(d);
  Mat sig(d, d);

  for (int m = 0; m < paths; ++m) {
    {
      RngEngine eng = init_stream.at(m, 0);
      x = spec.sample_initial(eng);
    }
    std::copy(x.begin(), x.end(), batch.state(0, m));
    for (int i = 0; i < n; ++i) {
      RngEngine eng = rng.at(m, i);
      const double sqdt = std::sqrt(dt);
      for (int j = 0; j < d; ++j) dwv[j] = sqdt * eng.normal();

      spec.drift(x, b);
      spec.diffusion(x, sig);
      matvec(sig, dwv.data(), sdw.data());
      for (int j = 0; j < d; ++j) xc[j] = x[j] + b[j] * dt + sdw[j];

      std::fill(jump_sum.begin(), jump_sum.end(), 0.0);
      std::fill(compv.begin(), compv.end(), 0.0);
      double rho_sum = 0.0;
      long count = 0;
      if (lam_dt > 0.0) {
        count = eng.poisson(lam_dt);
        if (count > opt.mark_cap)
          detail::sim_fail("jump count " + std::to_string(count) + " exceeds mark cap " +
                               std::to_string(opt.mark_cap) + " (raise SimOptions::mark_cap)",
                           i, m);
        for (long k = 0; k < count; ++k) {
          spec.measure.mark_sampler(eng, z.data());
          spec.jump_map(x, z.data(), gam);
          for (int j = 0; j < d; ++j) jump_sum[j] += gam[j];
          rho_sum += spec.measure.weight(z.data());
          if (opt.store_marks) batch.marks.insert(batch.marks.end(), z.begin(), z.end());
        }
      }
      if (opt.store_marks)
        batch.mark_offset[static_cast<size_t>(m) * n + i + 1] =
            static_cast<std::int64_t>(batch.marks.size());

      if (lam_dt > 0.0) spec.jump_compensator(x, compv);
      for (int j = 0; j < d; ++j) x[j] = xc[j] + jump_sum[j] - dt * compv[j];
      detail::check_finite(x, i, m);

      std::copy(xc.begin(), xc.end(), batch.cont_state(i, m));
      std::copy(dwv.begin(), dwv.end(), batch.dw(i, m));
      std::copy(x.begin(), x.end(), batch.state(i + 1, m));
      batch.comp_jump[static_cast<size_t>(i) * paths + m] =
          rho_sum - dt * spec.measure.weight_nu_integral;
    }
  }
  return batch;
}

// Exact basket marginals on the grid: per step the log increment is
//   (r - sigma_i^2/2 - h0_i lam0 - h1_i lam1_i) dt + sigma_i dW_i
//   + ln(1+h0_i) dN0 + ln(1+h1_i) dN_i
// with Brownian increments correlated via the Cholesky factor and one
// systematic Poisson count shared by all assets.  Marks are not stored
// (counts drive the law); cont_states stays empty.
inline PathBatch simulate_basket_exact(const BasketParams& p, const TimeGrid& grid, int paths,
                                       const RngStream& rng, const Vec* fixed_init = nullptr) {
  const int d = p.dim;
  const int n = grid.steps;
  const double dt = grid.dt();
  const Mat chol_corr = cholesky(equicorrelation(d, d > 1 ? p.corr : 0.0));
  const JumpMeasureSpec measure = make_basket_jump_measure(p);

  const bool sys_active = [&] {
    for (int i = 0; i < d; ++i)
      if (p.jump_sys[i] != 0.0) return p.intensity_sys > 0.0;
    return false;
  }();

  Vec log_drift(d);
  for (int i = 0; i < d; ++i)
    log_drift[i] = p.rate - 0.5 * p.vols[i] * p.vols[i] - p.jump_sys[i] * p.intensity_sys -
                   p.jump_idio[i] * p.intensity_idio[i];

  PathBatch batch;
  batch.allocate(grid, paths, d, PathBatch::Kind::exact, false, false);

  const RngStream init_stream = rng.child(rng_tag::init);
  Vec x(d), xi(d), dwv(d);
  for (int m = 0; m < paths; ++m) {
    if (fixed_init) {
      x = *fixed_init;
    } else {
      RngEngine eng = init_stream.at(m, 0);
      Vec drawn = [&] {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = eng.uniform(p.domain_low[j], p.domain_high[j]);
        return v;
      }();
      x = drawn;
    }
    std::copy(x.begin(), x.end(), batch.state(0, m));
    const double sqdt = std::sqrt(dt);
    for (int i = 0; i < n; ++i) {
      RngEngine eng = rng.at(m, i);
      for (int j = 0; j < d; ++j) xi[j] = eng.normal();
      matvec(chol_corr, xi.data(), dwv.data());
      for (int j = 0; j < d; ++j) dwv[j] *= sqdt;

      const long n_sys = p.intensity_sys > 0.0 ? eng.poisson(p.intensity_sys * dt) : 0;
      double active_count = sys_active ? static_cast<double>(n_sys) : 0.0;
      for (int j = 0; j < d; ++j) {
        long n_idio =
            p.intensity_idio[j] > 0.0 ? eng.poisson(p.intensity_idio[j] * dt) : 0;
        if (p.intensity_idio[j] > 0.0 && p.jump_idio[j] != 0.0) active_count += n_idio;
        const double growth = log_drift[j] * dt + p.vols[j] * dwv[j] +
                              std::log1p(p.jump_sys[j]) * n_sys +
                              std::log1p(p.jump_idio[j]) * n_idio;
        x[j] *= std::exp(growth);
      }
      detail::check_finite(x, i, m);
      std::copy(dwv.begin(), dwv.end(), batch.dw(i, m));
      std::copy(x.begin(), x.end(), batch.state(i + 1, m));
      batch.comp_jump[static_cast<size_t>(i) * paths + m] =
          active_count - dt * measure.total_intensity;
    }
  }
  return batch;
}

// One training interval of the auxiliary process: restart from the uniform
// law on the problem's box, take a single compensated Euler step of length
// t_to - t_from.  The caller derives `rng` per interval.
inline PathBatch simulate_regulator_interval(const ProblemSpec& spec, double t_from, double t_to,
                                             int paths, const RngStream& rng,
                                             const SimOptions& opt = {}) {
  if (!(t_to > t_from)) throw std::invalid_argument("simulate_regulator_interval: need t_to > t_from");
  if (!spec.init_uniform)
    throw std::invalid_argument("simulate_regulator_interval: spec has no uniform restart law");
  PathBatch batch = simulate_euler(spec, TimeGrid(t_to - t_from, 1), paths, rng, opt);
  batch.kind = PathBatch::Kind::interval;
  batch.start_time = t_from;
  return batch;
}

// Strong-error diagnostic (1-d): couple each coarse grid to a fine reference
// through shared Brownian increments and shared jump events, return RMS
// terminal errors and the fitted log-log slope.
struct StrongErrorResult {
  std::vector<double> dts;
  std::vector<double> rms_errors;
  double slope = 0.0;
};

inline StrongErrorResult strong_error_probe(const ProblemSpec& spec, double horizon,
                                            const std::vector<int>& coarse_steps, int fine_steps,
                                            int paths, const RngStream& rng) {
  if (spec.dim != 1) throw std::invalid_argument("strong_error_probe: 1-d problems only");
  if (coarse_steps.size() < 2)
    throw std::invalid_argument("strong_error_probe: need at least two grid levels");
  for (size_t k = 0; k < coarse_steps.size(); ++k) {
    if (coarse_steps[k] < 1 || fine_steps % coarse_steps[k] != 0)
      throw std::invalid_argument("strong_error_probe: each level must divide fine_steps");
    if (k > 0 && coarse_steps[k] <= coarse_steps[k - 1])
      throw std::invalid_argument("strong_error_probe: levels must be strictly increasing");
  }
  if (coarse_steps.back() >= fine_steps)
    throw std::invalid_argument("strong_error_probe: fine grid must be finer than every level");

  struct JumpEvent {
    double time;
    double mark;
  };

  const RngStream init_stream = rng.child(rng_tag::init);
  const size_t levels = coarse_steps.size();
  std::vector<double> sq_err(levels, 0.0);

  Vec x(1), b(1), gam(1), compv(1);
  Mat sig(1, 1);
  std::vector<double> fine_dw(fine_steps);
  std::vector<JumpEvent> events;

  auto run_grid = [&](int n, double x0, const std::vector<JumpEvent>& evs) {
    const double dt = horizon / n;
    const int ratio = fine_steps / n;
    double state = x0;
    size_t ev = 0;  // events sorted by time
    for (int i = 0; i < n; ++i) {
      x[0] = state;
      spec.drift(x, b);
      spec.diffusion(x, sig);
      double dw = 0.0;
      for (int j = i * ratio; j < (i + 1) * ratio; ++j) dw += fine_dw[j];
      double jump = 0.0;
      const double t_hi = dt * (i + 1);
      while (ev < evs.size() && evs[ev].time < t_hi) {
        spec.jump_map(x, &evs[ev].mark, gam);
        jump += gam[0];
        ++ev;
      }
      if (spec.measure.total_intensity > 0.0)
        spec.jump_compensator(x, compv);
      else
        compv[0] = 0.0;
      state += b[0] * dt + sig(0, 0) * dw + jump - dt * compv[0];
    }
    return state;
  };

  for (int m = 0; m < paths; ++m) {
    double x0;
    {
      RngEngine eng = init_stream.at(m, 0);
      x0 = spec.sample_initial(eng)[0];
    }
    RngEngine eng = rng.at(m, 0);
    const double sq = std::sqrt(horizon / fine_steps);
    for (int j = 0; j < fine_steps; ++j) fine_dw[j] = sq * eng.normal();
    events.clear();
    if (spec.measure.total_intensity > 0.0) {
      const long count = eng.poisson(spec.measure.total_intensity * horizon);
      double z;
      for (long k = 0; k < count; ++k) {
        const double u = eng.uniform(0.0, horizon);
        spec.measure.mark_sampler(eng, &z);
        events.push_back({u, z});
      }
      std::sort(events.begin(), events.end(),
                [](const JumpEvent& a, const JumpEvent& bb) { return a.time < bb.time; });
    }
    const double ref = run_grid(fine_steps, x0, events);
    for (size_t k = 0; k < levels; ++k) {
      const double e = run_grid(coarse_steps[k], x0, events) - ref;
      sq_err[k] += e * e;
    }
  }

  StrongErrorResult res;
  for (size_t k = 0; k < levels; ++k) {
    res.dts.push_back(horizon / coarse_steps[k]);
    res.rms_errors.push_back(std::sqrt(sq_err[k] / paths));
  }
  // least-squares slope of log(rms) against log(dt)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < levels; ++k) {
    const double lx = std::log(res.dts[k]);
    const double ly = std::log(res.rms_errors[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double nlev = static_cast<double>(levels);
  res.slope = (nlev * sxy - sx * sy) / (nlev * sxx - sx * sx);
  return res;
}

// Columnar debug dump: path,step,coord,value for every stored state.
inline std::string dump_paths_csv(const PathBatch& batch) {
  std::string out = "path,step,coord,value\n";
  for (int m = 0; m < batch.paths; ++m)
    for (int i = 0; i <= batch.grid.steps; ++i) {
      const double* x = batch.state(i, m);
      for (int j = 0; j < batch.dim; ++j) {
        out += std::to_string(m);
        out += ',';
        out += std::to_string(i);
        out += ',';
        out += std::to_string(j);
        out += ',';
        out += fmt_g9(x[j]);
        out += '\n';
      }
    }
  return out;
}

}  // namespace dsplit
