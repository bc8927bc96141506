#pragma once

#include <stdexcept>

namespace dsplit {

// Uniform grid 0 = t_0 < ... < t_N = horizon.
struct TimeGrid {
  double horizon = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  }

  double dt() const { return horizon / steps; }
  // t(steps) == horizon exactly.
  double t(int i) const { return horizon * static_cast<double>(i) / steps; }
};

}  // namespace dsplit
