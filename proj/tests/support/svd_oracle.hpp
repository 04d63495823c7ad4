#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vrplab/mat.hpp"

// Dense largest-singular-value oracle via one-sided Jacobi: orthogonalize the
// columns of the taller orientation, sigma_max = largest column norm.
// Independent of the power-iteration code under test.

namespace vrplab::testing {

inline double svd_sigma_max(const vrplab::mat& w) {
  std::size_t m = w.rows, n = w.cols;
  std::vector<double> a;
  if (m >= n) {
    a = w.v;
  } else {
    a.resize(w.v.size());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) a[j * m + i] = w.v[i * n + j];
    std::swap(m, n);
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return a[i * n + j];
  };

  for (int sweep = 0; sweep < 60; ++sweep) {
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += at(i, p) * at(i, p);
          aqq += at(i, q) * at(i, q);
          apq += at(i, p) * at(i, q);
        }
        const double denom = std::sqrt(app * aqq);
        if (denom == 0.0 || std::abs(apq) <= 1e-15 * denom) continue;
        worst = std::max(worst, std::abs(apq) / denom);
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double vp = at(i, p), vq = at(i, q);
          at(i, p) = c * vp - s * vq;
          at(i, q) = s * vp + c * vq;
        }
      }
    }
    if (worst < 1e-14) break;
  }

  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) s2 += at(i, j) * at(i, j);
    best = std::max(best, s2);
  }
  return std::sqrt(best);
}

}  // namespace vrplab::testing
