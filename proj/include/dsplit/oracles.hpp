#pragma once

// Independent reference values: closed-form / ODE regulator value, direct
// Monte Carlo basket price under the exact terminal law, brute-force inner
// conditional expectations, and a central-difference gradient checker.
// None of these touch the solver or the simulation batching.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsplit/problem.hpp"
#include "dsplit/rng.hpp"
#include "dsplit/time_grid.hpp"

namespace dsplit {

// Quadratic Ansatz u(t,x) = sum_i a_i(t) x_i^2 + b(t) with
//   a_i' = a_i^2/theta_i - 1,            a_i(T) = rho_i
//   b'   = -sum_i a_i (sigma_i^2 + m2_i), b(T) = 0
// solved in closed form.  w_i(t) = q_i exp(2(t-T)/sqrt(theta_i)) keeps b(T)
// exactly zero; a_i(T) returns the terminal condition directly (the formula
// lands one ulp off rho_i in doubles).
struct RegulatorClosedForm {
  RegulatorParams params;
  double horizon = 1.0;
  Vec sqrt_theta, q, m2;

  RegulatorClosedForm(const RegulatorParams& p, double horizon_) : params(p), horizon(horizon_) {
    if (!(horizon > 0.0)) throw std::invalid_argument("closed form: horizon must be > 0");
    const int d = p.dim;
    sqrt_theta.resize(d);
    q.resize(d);
    m2.resize(d);
    for (int i = 0; i < d; ++i) {
      if (!(p.control_costs[i] > 0.0) || !(p.terminal_weights[i] > 0.0))
        throw std::invalid_argument("closed form: needs theta_i > 0 and rho_i > 0");
      sqrt_theta[i] = std::sqrt(p.control_costs[i]);
      q[i] = (p.terminal_weights[i] - sqrt_theta[i]) / (p.terminal_weights[i] + sqrt_theta[i]);
      const double lam = p.intensities[i];
      m2[i] = lam == 0.0 ? 0.0
                         : lam * p.gamma_shapes[i] * (p.gamma_shapes[i] + 1.0) /
                               (p.gamma_rates[i] * p.gamma_rates[i]);
    }
  }

  double a(int i, double t) const {
    check_time(t);
    if (t == horizon) return params.terminal_weights[i];
    const double w = q[i] * std::exp(2.0 * (t - horizon) / sqrt_theta[i]);
    const double denom = 1.0 - w;
    if (!(std::abs(denom) > 1e-14)) throw std::runtime_error("closed form: pole in a_i(t)");
    return sqrt_theta[i] * (1.0 + w) / denom;
  }

  double b(double t) const {
    check_time(t);
    double acc = 0.0;
    for (int i = 0; i < params.dim; ++i) {
      const double w_t = q[i] * std::exp(2.0 * (t - horizon) / sqrt_theta[i]);
      const double w_T = q[i];
      const double num = 1.0 - w_t;
      const double den = 1.0 - w_T;
      if (!(num > 0.0) || !(den > 0.0)) throw std::runtime_error("closed form: pole in b(t)");
      acc += (params.vols[i] * params.vols[i] + m2[i]) *
             (sqrt_theta[i] * (horizon - t) + params.control_costs[i] * std::log(num / den));
    }
    return acc;
  }

  double value(double t, const Vec& x) const {
    double acc = b(t);
    for (int i = 0; i < params.dim; ++i) acc += a(i, t) * x[i] * x[i];
    return acc;
  }

 private:
  void check_time(double t) const {
    if (t > horizon) throw std::invalid_argument("closed form: t must be <= horizon");
  }
};

inline double regulator_value_closed_form(const RegulatorParams& p, double horizon, double t,
                                          const Vec& x) {
  return RegulatorClosedForm(p, horizon).value(t, x);
}

struct RegulatorOdeCurves {
  Vec a;
  double b = 0.0;
};

// Fixed-step RK4 from the terminal condition backward to t.  At t == horizon
// the terminal condition is returned untouched (exact).
inline RegulatorOdeCurves solve_regulator_ode(const RegulatorParams& p, double horizon, double t,
                                              int nsteps = 10000) {
  if (t > horizon) throw std::invalid_argument("regulator ode: t must be <= horizon");
  if (nsteps < 1) throw std::invalid_argument("regulator ode: nsteps must be >= 1");
  const int d = p.dim;
  Vec m2(d);
  for (int i = 0; i < d; ++i) {
    const double lam = p.intensities[i];
    m2[i] = lam == 0.0 ? 0.0
                       : lam * p.gamma_shapes[i] * (p.gamma_shapes[i] + 1.0) /
                             (p.gamma_rates[i] * p.gamma_rates[i]);
  }

  RegulatorOdeCurves y;
  y.a = p.terminal_weights;
  y.b = 0.0;
  if (t == horizon) return y;

  const double h = (t - horizon) / nsteps;  // negative: integrate backward
  Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
  auto da = [&](const Vec& a, Vec& out) {
    for (int i = 0; i < d; ++i) out[i] = a[i] * a[i] / p.control_costs[i] - 1.0;
  };
  auto db = [&](const Vec& a) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc -= a[i] * (p.vols[i] * p.vols[i] + m2[i]);
    return acc;
  };

  for (int step = 0; step < nsteps; ++step) {
    da(y.a, k1);
    const double b1 = db(y.a);
    for (int i = 0; i < d; ++i) tmp[i] = y.a[i] + 0.5 * h * k1[i];
    da(tmp, k2);
    const double b2 = db(tmp);
    for (int i = 0; i < d; ++i) tmp[i] = y.a[i] + 0.5 * h * k2[i];
    da(tmp, k3);
    const double b3 = db(tmp);
    for (int i = 0; i < d; ++i) tmp[i] = y.a[i] + h * k3[i];
    da(tmp, k4);
    const double b4 = db(tmp);
    for (int i = 0; i < d; ++i) {
      y.a[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!(std::abs(y.a[i]) < 1e6))
        throw std::runtime_error("regulator ode: Riccati blow-up before reaching t");
    }
    y.b += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
  }
  return y;
}

inline double regulator_value_ode(const RegulatorParams& p, double horizon, double t, const Vec& x,
                                  int nsteps = 10000) {
  const RegulatorOdeCurves c = solve_regulator_ode(p, horizon, t, nsteps);
  double acc = c.b;
  for (int i = 0; i < p.dim; ++i) acc += c.a[i] * x[i] * x[i];
  return acc;
}

struct McResult {
  double value = 0.0;
  double std_error = 0.0;
  long paths = 0;
};

// Plain Monte Carlo on the exact terminal law; no grid, no solver code.
inline McResult mc_basket_price(const BasketParams& p, double horizon, const Vec& s0, long paths,
                                const RngStream& rng) {
  const int d = p.dim;
  if (static_cast<int>(s0.size()) != d) throw std::invalid_argument("mc_basket_price: s0 size");
  if (paths < 2) throw std::invalid_argument("mc_basket_price: needs >= 2 paths");
  const Mat chol_corr = cholesky(equicorrelation(d, d > 1 ? p.corr : 0.0));
  Vec log_drift(d);
  for (int i = 0; i < d; ++i)
    log_drift[i] = (p.rate - 0.5 * p.vols[i] * p.vols[i] - p.jump_sys[i] * p.intensity_sys -
                    p.jump_idio[i] * p.intensity_idio[i]) *
                   horizon;
  const double discount = std::exp(-p.rate * horizon);
  const double sqt = std::sqrt(horizon);

  double sum = 0.0, sum_sq = 0.0;
  Vec xi(d), w(d);
  for (long m = 0; m < paths; ++m) {
    RngEngine eng = rng.at(static_cast<std::uint64_t>(m), 0);
    for (int j = 0; j < d; ++j) xi[j] = eng.normal();
    matvec(chol_corr, xi.data(), w.data());
    const long n_sys = p.intensity_sys > 0.0 ? eng.poisson(p.intensity_sys * horizon) : 0;
    double avg = 0.0;
    for (int j = 0; j < d; ++j) {
      const long n_idio =
          p.intensity_idio[j] > 0.0 ? eng.poisson(p.intensity_idio[j] * horizon) : 0;
      avg += s0[j] * std::exp(log_drift[j] + p.vols[j] * sqt * w[j] +
                              std::log1p(p.jump_sys[j]) * n_sys +
                              std::log1p(p.jump_idio[j]) * n_idio);
    }
    avg /= d;
    const double payoff = avg > p.strike ? discount * (avg - p.strike) : 0.0;
    sum += payoff;
    sum_sq += payoff * payoff;
  }
  McResult res;
  res.paths = paths;
  res.value = sum / paths;
  const double var = (sum_sq - sum * sum / paths) / (paths - 1);
  res.std_error = std::sqrt(std::max(var, 0.0) / paths);
  return res;
}

// Inner Monte Carlo for E[ g(X_N) - dt * sum_{n=i}^{N-1} f(t_n, X_n) | X_i = x ]
// in one dimension, straight Euler loop, independent of the batching code.
inline double bruteforce_conditional_expectation_1d(const ProblemSpec& spec, const TimeGrid& grid,
                                                    int step, const double x, long inner_paths,
                                                    const RngStream& rng) {
  if (spec.dim != 1)
    throw std::invalid_argument("bruteforce_conditional_expectation_1d: 1-d problems only");
  if (spec.driver_form == DriverForm::semilinear)
    throw std::invalid_argument("bruteforce_conditional_expectation_1d: linear-case drivers only");
  if (step < 0 || step > grid.steps)
    throw std::invalid_argument("bruteforce_conditional_expectation_1d: step out of range");
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  const double lam_dt = spec.measure.total_intensity * dt;
  const Vec zdummy;
  Vec xv(1), b(1), gam(1), compv(1);
  Mat sig(1, 1);

  double sum = 0.0;
  for (long m = 0; m < inner_paths; ++m) {
    double state = x;
    double running_f = 0.0;
    for (int n = step; n < grid.steps; ++n) {
      RngEngine eng = rng.at(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n));
      xv[0] = state;
      if (spec.driver_form == DriverForm::time_state)
        running_f += spec.driver(grid.t(n), xv, 0.0, zdummy, 0.0);
      spec.drift(xv, b);
      spec.diffusion(xv, sig);
      double next = state + b[0] * dt + sig(0, 0) * sqdt * eng.normal();
      if (lam_dt > 0.0) {
        const long count = eng.poisson(lam_dt);
        double z;
        for (long k = 0; k < count; ++k) {
          spec.measure.mark_sampler(eng, &z);
          spec.jump_map(xv, &z, gam);
          next += gam[0];
        }
        spec.jump_compensator(xv, compv);
        next -= dt * compv[0];
      }
      state = next;
    }
    xv[0] = state;
    sum += spec.terminal(xv) - dt * running_f;
  }
  return sum / inner_paths;
}

// Central differences with per-coordinate step h * max(1, |x_j|).
template <class F>
Vec finite_difference_gradient(F&& f, const Vec& x, double h = 1e-4) {
  Vec g(x.size());
  Vec xp = x;
  for (size_t j = 0; j < x.size(); ++j) {
    const double hj = h * std::max(1.0, std::abs(x[j]));
    const double orig = xp[j];
    xp[j] = orig + hj;
    const double up = f(xp);
    xp[j] = orig - hj;
    const double dn = f(xp);
    xp[j] = orig;
    g[j] = (up - dn) / (2.0 * hj);
  }
  return g;
}

}  // namespace dsplit
