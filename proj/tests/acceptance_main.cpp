// Acceptance suite: one [PASS]/[FAIL]/[SKIP] line per criterion, exit 0 iff
// nothing failed.  Criteria 2 and 4 replicate the full-scale protocol and run
// only with --long (or alone with --long-only); everything else is sized for
// a workstation.  All tolerances are pinned here as literals.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dsplit/config.hpp"
#include "dsplit/deep_split.hpp"
#include "dsplit/oracles.hpp"
#include "dsplit/report.hpp"
#include "dsplit/simulate.hpp"

using namespace dsplit;
using nlohmann::json;

namespace {

std::string g_base;  // scratch directory for run artifacts
int g_failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void print_line(int idx, const std::string& title, const char* tag, const std::string& detail) {
  std::printf("[%s] %2d. %s: %s\n", tag, idx, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

void run_criterion(int idx, const std::string& title, const std::function<Outcome()>& fn) {
  try {
    const Outcome o = fn();
    print_line(idx, title, o.pass ? "PASS" : "FAIL", o.detail);
    if (!o.pass) ++g_failures;
  } catch (const std::exception& e) {
    print_line(idx, title, "FAIL", std::string("exception: ") + e.what());
    ++g_failures;
  }
}

void skip_criterion(int idx, const std::string& title, const std::string& why) {
  print_line(idx, title, "SKIP", why);
}

std::string pct(double v) { return fmt_g9(v) + "%"; }

// ---- experiment-level criteria ------------------------------------------------

struct RunStats {
  double mean, stdev, rel_err_pct, oracle, oracle_se, seconds;
  bool failed;
};

RunStats run_stats(const json& doc, const std::string& preset, const std::string& tag) {
  const ExperimentConfig cfg = parse_config(doc, preset);
  const RunReport rep = run_experiment(cfg, g_base + "/" + tag);
  return {rep.mean,     rep.stdev,          rep.rel_err_pct, rep.oracle.value,
          rep.oracle.std_error, rep.total_seconds, rep.failed};
}

// Criterion 1: basket d=4 at desk scale (batch 600, 1000 iterations, 3 seeds)
// against the M=1e5 MC oracle.  The 1000-iteration budget needs a slower lr
// decay than the full-scale schedule, hence the explicit milestones.
Outcome criterion_basket_desk() {
  const double tol_pct = 8.0;
  const json doc = json::parse(R"({
    "problem": { "kind": "basket", "dim": 4 },
    "training": { "batch_size": 600, "iterations": 1000, "learning_rate": 0.03,
                  "decay_milestones": [400, 700, 900] },
    "seeds": { "base": 1, "count": 3 },
    "report": { "oracle_paths": 100000 }
  })");
  const RunStats r = run_stats(doc, "paper", "c1_basket_desk");
  Outcome o;
  o.pass = !r.failed && r.rel_err_pct <= tol_pct;
  o.detail = "rel err " + pct(r.rel_err_pct) + " <= " + pct(tol_pct) + " (mean " + fmt_g9(r.mean) +
             ", mc oracle " + fmt_g9(r.oracle) + " se " + fmt_g9(r.oracle_se) + ", " +
             fmt_g9(r.seconds) + "s)";
  return o;
}

// Criterion 2 (long): basket d=4 at full scale against the M=1e6 oracle.
Outcome criterion_basket_paper() {
  const double tol_pct = 4.0, tol_std = 0.001;
  const json doc = json::parse(R"({
    "problem": { "kind": "basket", "dim": 4 },
    "training": { "batch_size": 6000, "iterations": 10000, "learning_rate": 0.01,
                  "decay_milestones": [2000, 4000, 7000] },
    "seeds": { "base": 1, "count": 10 },
    "report": { "oracle_paths": 1000000 }
  })");
  const RunStats r = run_stats(doc, "paper", "c2_basket_paper");
  Outcome o;
  o.pass = !r.failed && r.rel_err_pct <= tol_pct && r.stdev < tol_std;
  o.detail = "rel err " + pct(r.rel_err_pct) + " <= " + pct(tol_pct) + ", std " + fmt_g9(r.stdev) +
             " < " + fmt_g9(tol_std) + " (mean " + fmt_g9(r.mean) + ", mc oracle " +
             fmt_g9(r.oracle) + " se " + fmt_g9(r.oracle_se) + ", " + fmt_g9(r.seconds) + "s)";
  return o;
}

// Criterion 3: regulator d=1 at desk scale, N=10 headline within 10% of the
// ODE oracle, plus the refinement trend N in {5,10,20}: absolute error
// non-increasing within one cross-seed standard deviation.
Outcome criterion_regulator_desk() {
  const double tol_pct = 10.0;
  const std::vector<int> grids = {5, 10, 20};
  std::vector<RunStats> runs;
  for (int n : grids) {
    json doc = json::parse(R"({
      "problem": { "kind": "regulator", "dim": 1 },
      "seeds": { "base": 1, "count": 3 },
      "report": { "domain_samples": 0 }
    })");
    doc["grid"] = {{"steps", n}};
    runs.push_back(run_stats(doc, "desk", "c3_regulator_N" + std::to_string(n)));
  }
  const RunStats& head = runs[1];  // N=10
  bool trend = true;
  std::string trend_txt;
  for (size_t k = 0; k < runs.size(); ++k) {
    const double err = std::abs(runs[k].mean - runs[k].oracle);
    trend_txt += (k ? " -> " : "") + fmt_g9(err);
    if (k > 0) {
      const double prev = std::abs(runs[k - 1].mean - runs[k - 1].oracle);
      const double slack = std::max(runs[k - 1].stdev, runs[k].stdev);
      if (err > prev + slack) trend = false;
    }
  }
  double seconds = 0.0;
  bool any_failed = false;
  for (const RunStats& r : runs) {
    seconds += r.seconds;
    any_failed = any_failed || r.failed;
  }
  Outcome o;
  o.pass = !any_failed && head.rel_err_pct <= tol_pct && trend;
  o.detail = "N=10 rel err " + pct(head.rel_err_pct) + " <= " + pct(tol_pct) + " (mean " +
             fmt_g9(head.mean) + ", ode oracle " + fmt_g9(head.oracle) +
             "), |err| over N=5,10,20: " + trend_txt + (trend ? " non-increasing" : " NOT monotone") +
             " within 1 std (" + fmt_g9(seconds) + "s)";
  return o;
}

// Criterion 4 (long): regulator d=4 at full scale within 5% of the ODE
// oracle; the gap to the reference table value 4.743960 is reported, never
// asserted (the printed closed form mixes exponent conventions).
Outcome criterion_regulator_paper() {
  const double tol_pct = 5.0, table_value = 4.743960;
  const json doc = json::parse(R"({
    "problem": { "kind": "regulator", "dim": 4 },
    "grid": { "steps": 10 },
    "training": { "batch_size": 10000, "iterations": 12000, "learning_rate": 0.1,
                  "decay_milestones": [3000, 6000, 9000] },
    "seeds": { "base": 1, "count": 10 },
    "report": { "domain_samples": 10000 }
  })");
  const RunStats r = run_stats(doc, "paper", "c4_regulator_paper");
  const double table_gap_pct = std::abs(r.oracle - table_value) / table_value * 100.0;
  Outcome o;
  o.pass = !r.failed && r.rel_err_pct <= tol_pct;
  o.detail = "rel err " + pct(r.rel_err_pct) + " <= " + pct(tol_pct) + " (mean " + fmt_g9(r.mean) +
             ", ode oracle " + fmt_g9(r.oracle) + "; table value " + fmt_g9(table_value) +
             " differs from the ode oracle by " + pct(table_gap_pct) + ", reported not asserted; " +
             fmt_g9(r.seconds) + "s)";
  return o;
}

// ---- oracle verification -------------------------------------------------------

Outcome criterion_closed_form() {
  const double riccati_tol = 1e-8, halving_tol = 1e-6, fd_h = 1e-5;

  RegulatorParams varied = RegulatorParams::defaults(3);
  varied.vols = {0.1, 0.2, 0.05};
  varied.terminal_weights = {1.0, 2.0, 0.4};
  varied.control_costs = {0.5, 0.8, 1.25};
  varied.intensities = {10.0, 5.0, 0.0};
  varied.gamma_shapes = {0.4, 0.7, 0.4};
  varied.gamma_rates = {4.0, 3.0, 4.0};

  double max_resid = 0.0;
  bool terminal_exact = true;
  for (const RegulatorParams& p : {RegulatorParams::defaults(4), varied}) {
    const double horizon = 1.3;
    const RegulatorClosedForm cf(p, horizon);
    for (int i = 0; i < p.dim; ++i) {
      terminal_exact = terminal_exact && cf.a(i, horizon) == p.terminal_weights[i];
      for (int k = 0; k < 100; ++k) {
        const double t = horizon * (k + 0.5) / 100.0;
        const double da = (cf.a(i, t + fd_h) - cf.a(i, t - fd_h)) / (2.0 * fd_h);
        const double resid = std::abs(da - (cf.a(i, t) * cf.a(i, t) / p.control_costs[i] - 1.0));
        max_resid = std::max(max_resid, resid);
      }
    }
    terminal_exact = terminal_exact && cf.b(horizon) == 0.0;
  }

  const Vec x(4, 1.0);
  const RegulatorParams p4 = RegulatorParams::defaults(4);
  const double halving =
      std::abs(regulator_value_ode(p4, 1.0, 0.0, x, 10000) - regulator_value_ode(p4, 1.0, 0.0, x, 20000));

  Outcome o;
  o.pass = max_resid < riccati_tol && terminal_exact && halving < halving_tol;
  o.detail = "riccati residual " + fmt_g9(max_resid) + " < " + fmt_g9(riccati_tol) +
             " at 100 times x 7 coords, a_i(T)=rho_i and b(T)=0 " +
             (terminal_exact ? "exact" : "NOT exact") + ", ode halving change " + fmt_g9(halving) +
             " < " + fmt_g9(halving_tol);
  return o;
}

// ---- simulator properties ------------------------------------------------------

ProblemSpec scalar_spec(std::function<double(double)> b, std::function<double(double)> s) {
  ProblemSpec p;
  p.dim = 1;
  p.drift = [b](const Vec& x, Vec& out) { out.assign(1, b(x[0])); };
  p.diffusion = [s](const Vec& x, Mat& out) {
    if (out.rows != 1) out = Mat(1, 1);
    out(0, 0) = s(x[0]);
  };
  p.terminal = [](const Vec& x) { return x[0]; };
  p.init_uniform = false;
  p.init_point = {1.0};
  return p;
}

Outcome criterion_simulator() {
  const int m_count = 100000;
  std::vector<std::string> bad;

  // (a) Ito isometry with multiplicative noise: E[(sigma(X_i) dW)^2 - sigma^2 dt] = 0
  {
    ProblemSpec p = scalar_spec([](double) { return 0.0; },
                                [](double x) { return 0.4 * (1.0 + 0.3 * std::sin(x)); });
    TimeGrid g(1.0, 4);
    PathBatch b = simulate_euler(p, g, m_count, RngStream{101, 0});
    Mat sig(1, 1);
    Vec xv(1);
    for (int i = 0; i < g.steps; ++i) {
      double sum = 0, sum2 = 0;
      for (int m = 0; m < m_count; ++m) {
        xv.assign(b.state(i, m), b.state(i, m) + 1);
        p.diffusion(xv, sig);
        const double inc = sig(0, 0) * b.dw(i, m)[0];
        const double dev = inc * inc - sig(0, 0) * sig(0, 0) * g.dt();
        sum += dev;
        sum2 += dev * dev;
      }
      const double se = std::sqrt(std::max(sum2 / m_count, 1e-30) / m_count);
      if (std::abs(sum / m_count) > 3 * se)
        bad.push_back("isometry step " + std::to_string(i) + ": " + fmt_g9(sum / m_count) +
                      " vs 3se " + fmt_g9(3 * se));
    }
  }

  // (b) martingale checks: driftless state and the compensated count increment
  {
    auto spec = make_regulator_problem(RegulatorParams::defaults(1));
    TimeGrid g(1.0, 4);
    PathBatch b = simulate_euler(spec, g, m_count, RngStream{102, 0});
    for (int i = 0; i < g.steps; ++i) {
      double sx = 0, sx2 = 0, sm = 0, sm2 = 0;
      for (int m = 0; m < m_count; ++m) {
        const double dx = b.state(i + 1, m)[0] - b.state(i, m)[0];
        sx += dx;
        sx2 += dx * dx;
        const double dm = b.comp(i, m);
        sm += dm;
        sm2 += dm * dm;
      }
      const double se_x = std::sqrt(std::max(sx2 / m_count, 1e-30) / m_count);
      const double se_m = std::sqrt(std::max(sm2 / m_count, 1e-30) / m_count);
      if (std::abs(sx / m_count) > 3 * se_x)
        bad.push_back("state martingale step " + std::to_string(i));
      if (std::abs(sm / m_count) > 3 * se_m)
        bad.push_back("count martingale step " + std::to_string(i));
    }
  }

  // (c) Var(dM) = nu(R^d) dt, second moment against its own 3-se band
  {
    auto spec = make_regulator_problem(RegulatorParams::defaults(3));  // nu = 30
    TimeGrid g(0.5, 5);
    PathBatch b = simulate_euler(spec, g, m_count, RngStream{103, 0});
    const double target = spec.measure.total_intensity * g.dt();
    for (int i = 0; i < g.steps; ++i) {
      double s2 = 0, s4 = 0;
      for (int m = 0; m < m_count; ++m) {
        const double dm = b.comp(i, m);
        s2 += dm * dm;
        s4 += dm * dm * dm * dm;
      }
      const double se = std::sqrt(std::max(s4 / m_count - target * target, 0.0) / m_count);
      if (std::abs(s2 / m_count - target) > 3 * se)
        bad.push_back("Var(dM) step " + std::to_string(i) + ": " + fmt_g9(s2 / m_count) + " vs " +
                      fmt_g9(target));
    }
  }

  // (d) Euler strong-error slope ~ 1/2 with multiplicative noise and jumps
  double slope;
  {
    ProblemSpec p = scalar_spec([](double x) { return 0.5 * std::sin(x); },
                                [](double x) { return 0.4 * (1.0 + 0.3 * std::sin(x)); });
    auto measure = make_product_gamma_measure({2.0}, {0.8}, {2.0});
    p.measure = measure;
    p.jump_map = [](const Vec& x, const double* z, Vec& out) {
      out.assign(1, 0.2 * std::cos(x[0]) * z[0]);
    };
    const double m1 = nu_moment(measure, 0, 1);
    p.jump_compensator = [m1](const Vec& x, Vec& out) { out.assign(1, 0.2 * std::cos(x[0]) * m1); };
    slope = strong_error_probe(p, 1.0, {8, 16, 32, 64}, 1024, 3000, RngStream{104, 0}).slope;
    if (!(slope > 0.35 && slope < 0.65)) bad.push_back("strong-error slope " + fmt_g9(slope));
  }

  Outcome o;
  o.pass = bad.empty();
  o.detail = "isometry, martingales, Var(dM)=nu*dt all within 3 se at M=" +
             std::to_string(m_count) + "; strong-error slope " + fmt_g9(slope) + " in [0.35,0.65]";
  if (!bad.empty()) {
    o.detail = "violations:";
    for (const std::string& s : bad) o.detail += " [" + s + "]";
  }
  return o;
}

// ---- gradient machinery ----------------------------------------------------------

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
}

Outcome criterion_gradients() {
  const double tol = 1e-4;
  const Activation acts[] = {Activation::softplus, Activation::sigmoid, Activation::relu2};
  int configs = 0;
  double worst_input = 0.0, worst_param = 0.0;

  for (int c = 0; c < 108; ++c) {
    const RngStream stream{2024, static_cast<std::uint64_t>(c)};
    RngEngine eng = stream.engine();
    const int dim = 1 + static_cast<int>(eng.next_u64() % 5);
    const int layers = 1 + static_cast<int>(eng.next_u64() % 3);
    std::vector<int> hidden(layers);
    for (int& w : hidden) w = 2 + static_cast<int>(eng.next_u64() % 8);
    const Activation act = acts[c % 3];
    const bool standardized = (eng.next_u64() & 1) != 0;
    const Standardizer std_map =
        standardized ? Standardizer::from_box(Vec(dim, -1.3), Vec(dim, 1.7)) : Standardizer{};
    Network net = init_network(dim, hidden, act, std_map, stream.child(7));
    NetScratch scratch;
    net.prepare(scratch);

    // input gradient vs central differences at two points
    for (int rep = 0; rep < 2; ++rep) {
      Vec x(dim), grad(dim);
      for (double& v : x) v = eng.uniform(-1.2, 1.2);
      net.value_and_grad(x.data(), grad.data(), scratch);
      for (int j = 0; j < dim; ++j) {
        const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (net.value(xp.data(), scratch) - net.value(xm.data(), scratch)) / (2 * h);
        worst_input = std::max(worst_input, rel_err(grad[j], fd));
      }
    }

    // parameter gradient of L = mean_m resid_m * out_m vs central differences
    const int batch = 5;
    Vec xs(static_cast<size_t>(batch) * dim), resid(batch);
    for (double& v : xs) v = eng.uniform(-1.5, 1.5);
    for (double& r : resid) r = eng.uniform(-2.0, 2.0);
    Vec grad;
    net.backprop_params(xs.data(), batch, resid.data(), grad, scratch);
    auto loss = [&]() {
      double acc = 0.0;
      for (int m = 0; m < batch; ++m)
        acc += resid[m] * net.value(xs.data() + static_cast<size_t>(m) * dim, scratch);
      return acc / batch;
    };
    Vec& params = net.params();
    for (size_t k = 0; k < params.size(); k += 1 + k / 8) {
      const double h = 1e-4 * std::max(1.0, std::abs(params[k]));
      const double saved = params[k];
      params[k] = saved + h;
      const double lp = loss();
      params[k] = saved - h;
      const double lm = loss();
      params[k] = saved;
      worst_param = std::max(worst_param, rel_err(grad[k], (lp - lm) / (2 * h)));
    }
    ++configs;
  }

  // one Adam step against the hand-derived update
  Vec theta = {0.0};
  AdamState st(1);
  adam_step(theta, {1.0}, st, LrSchedule{0.01, {}, 0.1});
  const double mhat = 0.1 / (1.0 - 0.9), vhat = 0.001 / (1.0 - 0.999);
  const double adam_dev = std::abs(theta[0] - (-0.01 * mhat / (std::sqrt(vhat) + 1e-8)));

  Outcome o;
  o.pass = configs >= 100 && worst_input < tol && worst_param < tol && adam_dev < 1e-12;
  o.detail = std::to_string(configs) + " configs: max input-grad rel err " + fmt_g9(worst_input) +
             ", max param-grad rel err " + fmt_g9(worst_param) + " (tol " + fmt_g9(tol) +
             "); adam step dev " + fmt_g9(adam_dev) + " < 1e-12";
  return o;
}

// ---- nonlocal operator ------------------------------------------------------------

Outcome criterion_nonlocal() {
  const auto spec = make_regulator_problem(RegulatorParams::defaults(1));
  const int m_nu = 100000;
  const MarkCache cache = MarkCache::draw(spec.measure, m_nu, RngStream{55, 0});

  struct ConstU {
    double value(const double*) const { return 3.7; }
  } const_u;
  struct QuadU {
    double value(const double* x) const { return x[0] * x[0]; }
  } quad_u;

  const double xc = 0.3, xprev = 0.3;
  const double at_const = mc_integral_operator(const_u, spec, &xprev, &xc, cache);

  const double estimate = mc_integral_operator(quad_u, spec, &xprev, &xc, cache);
  // closed form: integral of (xc+z)^2 - xc^2 over nu = 2 xc m1 + m2
  const double m1 = nu_moment(spec.measure, 0, 1), m2 = nu_moment(spec.measure, 0, 2);
  const double exact = 2.0 * xc * m1 + m2;
  double sd = 0.0;
  for (int k = 0; k < cache.count; ++k) {
    const double z = cache.mark(k)[0];
    const double term = spec.measure.total_intensity * (2.0 * xc * z + z * z);
    sd += (term - exact) * (term - exact);
  }
  const double se = std::sqrt(sd / cache.count / cache.count);

  Outcome o;
  o.pass = at_const == 0.0 && std::abs(estimate - exact) <= 3 * se;
  o.detail = "constant network -> " + fmt_g9(at_const) + " (exact zero); quadratic " +
             fmt_g9(estimate) + " vs gamma-moment value " + fmt_g9(exact) + ", dev " +
             fmt_g9(std::abs(estimate - exact)) + " <= 3se " + fmt_g9(3 * se) +
             " at M_nu=" + std::to_string(m_nu);
  return o;
}

// ---- linear-case oracle equivalence -------------------------------------------------

Outcome criterion_linear_equivalence() {
  const double tol = 0.05;
  ProblemSpec p;
  p.dim = 1;
  p.drift = [](const Vec&, Vec& out) { out.assign(1, 0.0); };
  p.diffusion = [](const Vec&, Mat& out) {
    if (out.rows != 1) out = Mat(1, 1);
    out(0, 0) = 1.3;
  };
  p.driver_form = DriverForm::zero;
  p.terminal = [](const Vec& x) { return x[0] * x[0]; };
  p.init_uniform = true;
  p.init_low = {-2.0};
  p.init_high = {2.0};

  const TimeGrid grid(1.0, 2);
  NetworkConfig net_cfg;
  net_cfg.activation = Activation::softplus;
  net_cfg.hidden = {16, 16};
  TrainConfig cfg;
  cfg.batch_size = 1024;
  cfg.iterations = 8000;
  cfg.learning_rate = 0.01;
  cfg.decay_milestones = {4000, 6400};
  cfg.train_steps = {0, 1};
  const DSSolution sol = run_ds_linear(p, grid, net_cfg, cfg, 1);

  double worst = 0.0;
  double worst_x = 0.0;
  int worst_step = 0;
  for (int step : {0, 1}) {
    for (int k = 0; k <= 12; ++k) {
      const double x = -1.5 + 0.25 * k;
      const double truth = bruteforce_conditional_expectation_1d(
          p, grid, step, x, 200000, RngStream{56, static_cast<std::uint64_t>(step)});
      const double dev = std::abs(evaluate_solution(sol, step, Vec{x}) - truth) / std::abs(truth);
      if (dev > worst) {
        worst = dev;
        worst_x = x;
        worst_step = step;
      }
    }
  }
  Outcome o;
  o.pass = worst < tol;
  o.detail = "max rel dev " + pct(worst * 100.0) + " < " + pct(tol * 100.0) + " on [-1.5,1.5] (at x=" +
             fmt_g9(worst_x) + ", step " + std::to_string(worst_step) +
             "; f=0, g=x^2, Brownian sigma=1.3, N=2, bruteforce 200000 inner paths)";
  return o;
}

// ---- determinism ---------------------------------------------------------------------

Outcome criterion_determinism() {
  const json doc = json::parse(R"({
    "problem": { "kind": "regulator", "dim": 1 },
    "grid": { "steps": 2 },
    "training": { "batch_size": 128, "iterations": 150, "learning_rate": 0.1,
                  "decay_milestones": [75] },
    "seeds": { "base": 1, "count": 2 },
    "report": { "domain_samples": 25, "ode_steps": 2000 }
  })");
  const ExperimentConfig cfg = parse_config(doc);
  run_experiment(cfg, g_base + "/c10_a");
  run_experiment(cfg, g_base + "/c10_b");
  const bool reports = read_text_file(g_base + "/c10_a/report.json") ==
                       read_text_file(g_base + "/c10_b/report.json");
  const bool nets = read_text_file(g_base + "/c10_a/seed_000/net_000.json") ==
                        read_text_file(g_base + "/c10_b/seed_000/net_000.json") &&
                    read_text_file(g_base + "/c10_a/seed_001/net_001.json") ==
                        read_text_file(g_base + "/c10_b/seed_001/net_001.json");
  Outcome o;
  o.pass = reports && nets;
  o.detail = std::string("two identical runs: report.json ") +
             (reports ? "bit-identical" : "DIFFER") + ", persisted networks " +
             (nets ? "bit-identical" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  bool run_long = false, long_only = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--long") == 0) run_long = true;
    else if (std::strcmp(argv[i], "--long-only") == 0) long_only = run_long = true;
    else {
      std::fprintf(stderr, "usage: %s [--long | --long-only]\n", argv[0]);
      return 2;
    }
  }

  g_base = (std::filesystem::temp_directory_path() / "dsplit_acceptance").string();
  std::filesystem::remove_all(g_base);
  std::filesystem::create_directories(g_base);

  const std::string long_note = "full-scale run, enable with --long";
  if (!long_only) {
    run_criterion(1, "basket d=4 desk scale vs MC oracle", criterion_basket_desk);
  } else {
    skip_criterion(1, "basket d=4 desk scale vs MC oracle", "--long-only");
  }
  if (run_long) {
    run_criterion(2, "basket d=4 paper scale vs M=1e6 oracle", criterion_basket_paper);
  } else {
    skip_criterion(2, "basket d=4 paper scale vs M=1e6 oracle", long_note);
  }
  if (!long_only) {
    run_criterion(3, "regulator d=1 desk scale + refinement trend", criterion_regulator_desk);
  } else {
    skip_criterion(3, "regulator d=1 desk scale + refinement trend", "--long-only");
  }
  if (run_long) {
    run_criterion(4, "regulator d=4 paper scale vs ODE oracle", criterion_regulator_paper);
  } else {
    skip_criterion(4, "regulator d=4 paper scale vs ODE oracle", long_note);
  }
  if (!long_only) {
    run_criterion(5, "closed-form Riccati verification", criterion_closed_form);
    run_criterion(6, "simulator property suite", criterion_simulator);
    run_criterion(7, "gradient suite", criterion_gradients);
    run_criterion(8, "nonlocal operator suite", criterion_nonlocal);
    run_criterion(9, "linear-case oracle equivalence", criterion_linear_equivalence);
    run_criterion(10, "determinism of reports", criterion_determinism);
  } else {
    skip_criterion(5, "closed-form Riccati verification", "--long-only");
    skip_criterion(6, "simulator property suite", "--long-only");
    skip_criterion(7, "gradient suite", "--long-only");
    skip_criterion(8, "nonlocal operator suite", "--long-only");
    skip_criterion(9, "linear-case oracle equivalence", "--long-only");
    skip_criterion(10, "determinism of reports", "--long-only");
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all executed criteria passed\n");
  return 0;
}
