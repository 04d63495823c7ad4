#include "vrplab/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace vrplab::kernels {
namespace {

backend probe() {
#if defined(VRPLAB_HAVE_AVX2)
  if (const char* env = std::getenv("VRPLAB_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return backend::avx2;
  }
  if (avx2_supported()) return backend::avx2;
#endif
  return backend::scalar;
}

backend& current() {
  static backend b = probe();
  return b;
}

}  // namespace

bool avx2_supported() {
#if defined(VRPLAB_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

backend active_backend() { return current(); }

const char* backend_name() {
  return current() == backend::avx2 ? "avx2" : "scalar";
}

void force_backend(backend b) {
  if (b == backend::avx2 && !avx2_supported()) b = backend::scalar;
  current() = b;
}

#if defined(VRPLAB_HAVE_AVX2)
#define VRPLAB_DISPATCH(fn, ...)                       \
  do {                                                 \
    if (current() == backend::avx2)                    \
      return avx2::fn(__VA_ARGS__);                    \
    return scalar::fn(__VA_ARGS__);                    \
  } while (0)
#else
#define VRPLAB_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) {
  VRPLAB_DISPATCH(dot, a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  VRPLAB_DISPATCH(axpy, alpha, x, y, n);
}

void scale(double* x, std::size_t n, double alpha) {
  VRPLAB_DISPATCH(scale, x, n, alpha);
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  VRPLAB_DISPATCH(gemm_nn, a, b, c, m, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  VRPLAB_DISPATCH(gemm_nt, a, b, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  VRPLAB_DISPATCH(gemm_tn, a, b, c, m, k, n, accumulate);
}

void rmsnorm(const double* x, const double* gain, double* y,
             std::size_t n, double eps) {
  VRPLAB_DISPATCH(rmsnorm, x, gain, y, n, eps);
}

#undef VRPLAB_DISPATCH

void softmax_inplace(double* x, std::size_t n) {
  if (n == 0) return;
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

double swish(double x) { return x / (1.0 + std::exp(-x)); }

}  // namespace vrplab::kernels
