#pragma once

// Adam with bias correction and a step-decay learning-rate schedule.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsplit/linalg.hpp"

namespace dsplit {

struct LrSchedule {
  double base = 0.01;
  std::vector<long> milestones;  // ascending iteration counts
  double factor = 0.1;

  // Rate used for update number `step` (1-based): decays once `milestone`
  // updates have completed, so update 2000 still uses the base rate and
  // update 2001 uses base * factor.
  double at(long step) const {
    double lr = base;
    for (long m : milestones)
      if (step > m) lr *= factor;
    return lr;
  }
};

struct AdamState {
  Vec m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(Vec& params, const Vec& grad, AdamState& st, const LrSchedule& sched) {
  if (params.size() != grad.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  ++st.step;
  const double lr = sched.at(st.step);
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

}  // namespace dsplit
