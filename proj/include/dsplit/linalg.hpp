#pragma once

// Minimal dense helpers for d <= O(10) problems; row-major storage.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dsplit {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

inline void matvec(const Mat& a, const double* x, double* y) {
  for (int r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    const double* row = a.data.data() + static_cast<size_t>(r) * a.cols;
    for (int c = 0; c < a.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// y = A^T x
inline void matvec_t(const Mat& a, const double* x, double* y) {
  for (int c = 0; c < a.cols; ++c) y[c] = 0.0;
  for (int r = 0; r < a.rows; ++r) {
    const double* row = a.data.data() + static_cast<size_t>(r) * a.cols;
    for (int c = 0; c < a.cols; ++c) y[c] += row[c] * x[r];
  }
}

// Lower-triangular Cholesky factor; throws on non-positive-definite input.
inline Mat cholesky(const Mat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix not square");
  const int n = a.rows;
  Mat l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (int k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (sum <= 0.0) throw std::invalid_argument("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

// Equicorrelation matrix: ones on the diagonal, `rho` off-diagonal.
inline Mat equicorrelation(int d, double rho) {
  Mat c(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c(i, j) = (i == j) ? 1.0 : rho;
  return c;
}

}  // namespace dsplit
