#pragma once

// Problem definition for the semilinear PIDE / FBSDE-with-jumps solver:
// forward coefficients (b, sigma, gamma), jump measure, driver f, terminal g,
// and the sampling law used to generate training batches.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "dsplit/jump_measure.hpp"
#include "dsplit/linalg.hpp"

namespace dsplit {

// Meaning of the driver's z argument: the raw gradient D_x u, or sigma^T D_x u.
enum class GradConvention { grad_u, sigma_t_grad_u };

enum class DriverForm {
  zero,        // f == 0 (plain conditional expectation)
  time_state,  // f = f(t, x): linear case, H_i regression applies
  semilinear   // f = f(t, x, y, z, w)
};

struct BasketParams {
  int dim = 1;
  double rate = 0.05;
  double corr = 0.2;
  double strike = 1.2;
  Vec vols;             // sigma_i
  Vec jump_sys;         // relative jump size on a systematic event (h0_i)
  Vec jump_idio;        // relative jump size on an idiosyncratic event (h1_i)
  double intensity_sys = 10.0;
  Vec intensity_idio;
  Vec domain_low, domain_high;  // training initial law: uniform box

  static BasketParams defaults(int d) {
    BasketParams p;
    p.dim = d;
    p.vols.assign(d, 0.1);
    p.jump_sys.assign(d, 0.1);
    p.jump_idio.assign(d, 0.1);
    p.intensity_idio.assign(d, 10.0);
    p.domain_low.assign(d, 0.0);
    p.domain_high.assign(d, 2.0);
    return p;
  }
};

struct RegulatorParams {
  int dim = 1;
  Vec vols;              // sigma_i
  Vec terminal_weights;  // rho_i in g = sum rho_i x_i^2
  Vec control_costs;     // theta_i
  Vec intensities;       // lambda_i
  Vec gamma_shapes;      // alpha_i
  Vec gamma_rates;       // beta_i
  double domain_halfwidth = 2.0;

  static RegulatorParams defaults(int d) {
    RegulatorParams p;
    p.dim = d;
    p.vols.assign(d, 0.1);
    p.terminal_weights.assign(d, 1.0);
    p.control_costs.assign(d, 0.5);
    p.intensities.assign(d, 10.0);
    p.gamma_shapes.assign(d, 0.4);
    p.gamma_rates.assign(d, 4.0);
    return p;
  }
};

struct ProblemSpec {
  int dim = 0;
  std::string name = "custom";

  std::function<void(const Vec&, Vec&)> drift;                    // b(x)
  std::function<void(const Vec&, Mat&)> diffusion;                // sigma(x), d x d
  std::function<void(const Vec&, const double*, Vec&)> jump_map;  // gamma(x, z)
  // integral of gamma(x, z) nu(dz); exact for the shipped problems.
  std::function<void(const Vec&, Vec&)> jump_compensator;
  JumpMeasureSpec measure;

  std::function<double(double, const Vec&, double, const Vec&, double)> driver;  // f(t,x,y,z,w)
  DriverForm driver_form = DriverForm::zero;
  bool driver_uses_nonlocal = false;
  GradConvention grad_convention = GradConvention::sigma_t_grad_u;

  std::function<double(const Vec&)> terminal;  // g(x)
  // Analytic D_x g where available; the last backward step falls back to
  // central differences when absent.
  std::function<void(const Vec&, Vec&)> terminal_grad;

  // Initial law: fixed point, or uniform on a box.
  bool init_uniform = false;
  Vec init_point;
  Vec init_low, init_high;
  // Auxiliary-process semantics: every training interval restarts from the
  // uniform law instead of continuing the path from time 0.
  bool restart_each_interval = false;

  enum class ExactSim { none, basket_closed_form } exact_sim = ExactSim::none;
  std::optional<BasketParams> basket;
  std::optional<RegulatorParams> regulator;

  Vec sample_initial(RngEngine& eng) const {
    if (!init_uniform) return init_point;
    Vec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = eng.uniform(init_low[j], init_high[j]);
    return x;
  }
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
inline void require_size(const Vec& v, int d, const std::string& what) {
  require(static_cast<int>(v.size()) == d, what + ": expected " + std::to_string(d) + " entries");
}
}  // namespace detail

// Jump measure for the basket: one systematic point mass at (h0_1..h0_d) plus
// d idiosyncratic point masses h1_i e_i.  Streams with zero intensity or zero
// jump size carry no mass and are dropped so marks are never the zero vector.
inline JumpMeasureSpec make_basket_jump_measure(const BasketParams& p) {
  const int d = p.dim;
  struct Stream {
    double intensity;
    Vec mark;
  };
  std::vector<Stream> streams;
  bool sys_active = false;
  for (int i = 0; i < d; ++i) sys_active = sys_active || p.jump_sys[i] != 0.0;
  if (p.intensity_sys > 0.0 && sys_active) streams.push_back({p.intensity_sys, p.jump_sys});
  for (int i = 0; i < d; ++i) {
    if (p.intensity_idio[i] > 0.0 && p.jump_idio[i] != 0.0) {
      Vec mark(d, 0.0);
      mark[i] = p.jump_idio[i];
      streams.push_back({p.intensity_idio[i], std::move(mark)});
    }
  }
  JumpMeasureSpec m;
  m.dim = d;
  m.family = JumpMeasureSpec::Family::basket_point_mass;
  m.weight = [](const double*) { return 1.0; };
  double total = 0.0;
  for (const auto& s : streams) total += s.intensity;
  m.total_intensity = total;
  m.weight_nu_integral = total;
  if (!streams.empty()) {
    Vec cum;
    for (const auto& s : streams) cum.push_back((cum.empty() ? 0.0 : cum.back()) + s.intensity);
    std::vector<Vec> marks;
    for (auto& s : streams) marks.push_back(std::move(s.mark));
    m.mark_sampler = [cum, marks, d](RngEngine& eng, double* z) {
      const double pick = eng.uniform() * cum.back();
      size_t j = 0;
      while (j + 1 < cum.size() && pick > cum[j]) ++j;
      for (int i = 0; i < d; ++i) z[i] = marks[j][i];
    };
  }
  return m;
}

// Pricing-measure dynamics dS^i = S^i [r dt + sigma_i dW^i + z_i dJtilde];
// discounting is folded into the terminal payoff, so f == 0.
inline ProblemSpec make_basket_problem(const BasketParams& p, double horizon) {
  const int d = p.dim;
  detail::require(d >= 1, "basket: dim must be >= 1");
  detail::require_size(p.vols, d, "basket.vols");
  detail::require_size(p.jump_sys, d, "basket.jump_sys");
  detail::require_size(p.jump_idio, d, "basket.jump_idio");
  detail::require_size(p.intensity_idio, d, "basket.intensity_idio");
  detail::require_size(p.domain_low, d, "basket.domain_low");
  detail::require_size(p.domain_high, d, "basket.domain_high");
  detail::require(p.strike >= 0.0, "basket: strike must be >= 0");
  detail::require(p.intensity_sys >= 0.0, "basket: intensity_sys must be >= 0");
  detail::require(horizon > 0.0, "basket: horizon must be > 0");
  for (int i = 0; i < d; ++i) {
    detail::require(p.vols[i] >= 0.0, "basket: vols must be >= 0");
    detail::require(p.jump_sys[i] > -1.0, "basket: jump_sys must be > -1");
    detail::require(p.jump_idio[i] > -1.0, "basket: jump_idio must be > -1");
    detail::require(p.intensity_idio[i] >= 0.0, "basket: intensity_idio must be >= 0");
    detail::require(p.domain_low[i] < p.domain_high[i], "basket: domain_low < domain_high required");
  }
  // rejects non-positive-definite correlation (d=1 has no off-diagonal)
  Mat chol_corr = cholesky(equicorrelation(d, d > 1 ? p.corr : 0.0));

  ProblemSpec s;
  s.dim = d;
  s.name = "basket";
  s.basket = p;
  s.exact_sim = ProblemSpec::ExactSim::basket_closed_form;
  s.measure = make_basket_jump_measure(p);

  const double r = p.rate;
  s.drift = [r, d](const Vec& x, Vec& out) {
    out.resize(d);
    for (int i = 0; i < d; ++i) out[i] = r * x[i];
  };
  s.diffusion = [p, chol_corr, d](const Vec& x, Mat& out) {
    if (out.rows != d || out.cols != d) out = Mat(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = p.vols[i] * x[i] * chol_corr(i, j);
  };
  s.jump_map = [d](const Vec& x, const double* z, Vec& out) {
    out.resize(d);
    for (int i = 0; i < d; ++i) out[i] = x[i] * z[i];
  };
  Vec m1(d);
  for (int i = 0; i < d; ++i) m1[i] = p.intensity_sys * p.jump_sys[i] + p.intensity_idio[i] * p.jump_idio[i];
  s.jump_compensator = [m1, d](const Vec& x, Vec& out) {
    out.resize(d);
    for (int i = 0; i < d; ++i) out[i] = x[i] * m1[i];
  };

  s.driver = [](double, const Vec&, double, const Vec&, double) { return 0.0; };
  s.driver_form = DriverForm::zero;
  s.grad_convention = GradConvention::sigma_t_grad_u;

  const double discount = std::exp(-r * horizon);
  const double strike = p.strike;
  s.terminal = [discount, strike, d](const Vec& x) {
    double avg = 0.0;
    for (int i = 0; i < d; ++i) avg += x[i];
    avg /= d;
    const double intrinsic = avg - strike;
    return intrinsic > 0.0 ? discount * intrinsic : 0.0;
  };

  s.init_uniform = true;
  s.init_low = p.domain_low;
  s.init_high = p.domain_high;
  return s;
}

// Controlled-regulator value PIDE: zero forward drift, constant diagonal
// diffusion, identity jump map with exact first-moment compensation, driver
// f = sum_i (z_i^2 / (4 theta_i) - x_i^2), terminal g = sum_i rho_i x_i^2.
// z follows the plain-gradient convention.
inline ProblemSpec make_regulator_problem(const RegulatorParams& p) {
  const int d = p.dim;
  detail::require(d >= 1, "regulator: dim must be >= 1");
  detail::require_size(p.vols, d, "regulator.vols");
  detail::require_size(p.terminal_weights, d, "regulator.terminal_weights");
  detail::require_size(p.control_costs, d, "regulator.control_costs");
  detail::require_size(p.intensities, d, "regulator.intensities");
  detail::require_size(p.gamma_shapes, d, "regulator.gamma_shapes");
  detail::require_size(p.gamma_rates, d, "regulator.gamma_rates");
  detail::require(p.domain_halfwidth > 0.0, "regulator: domain_halfwidth must be > 0");
  for (int i = 0; i < d; ++i) {
    detail::require(p.vols[i] >= 0.0, "regulator: vols must be >= 0");
    detail::require(p.terminal_weights[i] > 0.0, "regulator: terminal_weights must be > 0");
    detail::require(p.control_costs[i] > 0.0, "regulator: control_costs must be > 0");
    detail::require(p.intensities[i] >= 0.0, "regulator: intensities must be >= 0");
  }

  ProblemSpec s;
  s.dim = d;
  s.name = "regulator";
  s.regulator = p;
  s.measure = make_product_gamma_measure(p.intensities, p.gamma_shapes, p.gamma_rates);

  s.drift = [d](const Vec&, Vec& out) { out.assign(d, 0.0); };
  Vec vols = p.vols;
  s.diffusion = [vols, d](const Vec&, Mat& out) {
    if (out.rows != d || out.cols != d) out = Mat(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = (i == j) ? vols[i] : 0.0;
  };
  s.jump_map = [d](const Vec&, const double* z, Vec& out) { out.assign(z, z + d); };
  Vec m1(d);
  for (int i = 0; i < d; ++i)
    m1[i] = p.intensities[i] == 0.0 ? 0.0 : nu_moment(s.measure, i, 1);
  s.jump_compensator = [m1](const Vec&, Vec& out) { out = m1; };

  Vec theta = p.control_costs;
  s.driver = [theta, d](double, const Vec& x, double, const Vec& z, double) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += z[i] * z[i] / (4.0 * theta[i]) - x[i] * x[i];
    return acc;
  };
  s.driver_form = DriverForm::semilinear;
  s.grad_convention = GradConvention::grad_u;

  Vec w = p.terminal_weights;
  s.terminal = [w, d](const Vec& x) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += w[i] * x[i] * x[i];
    return acc;
  };
  s.terminal_grad = [w, d](const Vec& x, Vec& out) {
    out.resize(d);
    for (int i = 0; i < d; ++i) out[i] = 2.0 * w[i] * x[i];
  };

  s.init_uniform = true;
  s.init_low.assign(d, -p.domain_halfwidth);
  s.init_high.assign(d, p.domain_halfwidth);
  s.restart_each_interval = true;
  return s;
}

}  // namespace dsplit
