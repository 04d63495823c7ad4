#pragma once
#include <algorithm>
#include <cstddef>
#include <vector>

namespace vrplab {

// minimal row-major dense matrix; kernels operate on the raw buffer
struct mat {
  int rows = 0, cols = 0;
  std::vector<double> v;

  mat() = default;
  mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}

  double* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const {
    return v.data() + static_cast<std::size_t>(i) * cols;
  }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return v[static_cast<std::size_t>(i) * cols + j];
  }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

}  // namespace vrplab
