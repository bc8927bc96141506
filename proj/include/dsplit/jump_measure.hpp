#pragma once

// Finite-activity jump measure nu on R^d: total mass, normalized mark
// sampler, optional weight rho(z) for the compensated count process, and
// exact moments where the family supports them.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsplit/linalg.hpp"
#include "dsplit/rng.hpp"

namespace dsplit {

struct JumpMeasureSpec {
  enum class Family { product_gamma, basket_point_mass, custom };

  int dim = 0;
  // nu(R^d); zero disables jumps entirely (degenerate but allowed for tests).
  double total_intensity = 0.0;
  // Draws z ~ nu / nu(R^d) into a dim-vector.  Must not return the zero
  // vector with positive probability.
  std::function<void(RngEngine&, double*)> mark_sampler;
  // rho(z) weighting the counting martingale; identity by default.
  std::function<double(const double*)> weight;
  // integral of rho dnu (equals total_intensity for rho == 1).
  double weight_nu_integral = 0.0;

  Family family = Family::custom;
  // product_gamma parameters (one compound-Poisson-Gamma factor per coordinate)
  Vec intensities, shapes, rates;
};

// Product measure nu = sum_i lambda_i * Gamma(alpha_i, beta_i) x e_i
// (beta is the rate: mean mark alpha/beta).
inline JumpMeasureSpec make_product_gamma_measure(Vec intensities, Vec shapes, Vec rates) {
  const int d = static_cast<int>(intensities.size());
  if (static_cast<int>(shapes.size()) != d || static_cast<int>(rates.size()) != d)
    throw std::invalid_argument("product_gamma: size mismatch");
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    if (intensities[i] < 0.0) throw std::invalid_argument("product_gamma: negative intensity");
    if (intensities[i] > 0.0 && (shapes[i] <= 0.0 || rates[i] <= 0.0))
      throw std::invalid_argument("product_gamma: shape/rate must be positive");
    total += intensities[i];
  }
  JumpMeasureSpec m;
  m.dim = d;
  m.family = JumpMeasureSpec::Family::product_gamma;
  m.total_intensity = total;
  m.intensities = intensities;
  m.shapes = std::move(shapes);
  m.rates = std::move(rates);
  m.weight = [](const double*) { return 1.0; };
  m.weight_nu_integral = total;
  Vec cum(intensities);
  for (int i = 1; i < d; ++i) cum[i] += cum[i - 1];
  m.mark_sampler = [d, cum, shapes = m.shapes, rates = m.rates](RngEngine& eng, double* z) {
    const double pick = eng.uniform() * cum.back();
    int j = 0;
    while (j < d - 1 && pick > cum[j]) ++j;
    for (int i = 0; i < d; ++i) z[i] = 0.0;
    z[j] = eng.gamma(shapes[j], rates[j]);
  };
  return m;
}

// k-th marginal moment integral z_i^k nu(dz).  Exact for the product-Gamma
// family; other families have no closed moments here.
inline double nu_moment(const JumpMeasureSpec& m, int coord, int k) {
  if (m.family != JumpMeasureSpec::Family::product_gamma)
    throw std::invalid_argument("nu_moment: unsupported measure family");
  if (coord < 0 || coord >= m.dim) throw std::invalid_argument("nu_moment: coord out of range");
  if (k < 1) throw std::invalid_argument("nu_moment: order must be >= 1");
  if (m.intensities[coord] == 0.0) return 0.0;
  // E[G^k] = alpha (alpha+1) ... (alpha+k-1) / beta^k
  double num = 1.0;
  for (int j = 0; j < k; ++j) num *= m.shapes[coord] + j;
  return m.intensities[coord] * num / std::pow(m.rates[coord], k);
}

}  // namespace dsplit
