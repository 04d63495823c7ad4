#pragma once
#include <cstddef>

// Dense primitives behind the policy network. Two backends: a scalar reference
// and an AVX2+FMA variant picked at runtime (cpuid probe, overridable via the
// VRPLAB_KERNELS env var or force_backend()). Ops dominated by libm calls
// (softmax, swish) are shared scalar code so both backends produce identical
// transcendentals; the dispatch covers the matmul/reduction hot loops.
//
// All matrices are row-major, contiguous, non-aliased.

namespace vrplab::kernels {

enum class backend { scalar, avx2 };

backend active_backend();
const char* backend_name();
void force_backend(backend b);   // tests; avx2 falls back to scalar if unsupported
bool avx2_supported();

double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double alpha);

// C[m x n] = A[m x k] * B[k x n]            (accumulate: C += ...)
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// C[m x n] = A[m x k] * B^T with B[n x k]
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// C[m x n] = A^T * B with A[k x m], B[k x n]
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// y = x / sqrt(mean(x^2) + eps) * gain
void rmsnorm(const double* x, const double* gain, double* y,
             std::size_t n, double eps);

// shared scalar implementations (identical under both backends)
void softmax_inplace(double* x, std::size_t n);
double swish(double x);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double alpha);
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void rmsnorm(const double* x, const double* gain, double* y,
             std::size_t n, double eps);
}  // namespace scalar

#if defined(VRPLAB_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, std::size_t n, double alpha);
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void rmsnorm(const double* x, const double* gain, double* y,
             std::size_t n, double eps);
}  // namespace avx2
#endif

}  // namespace vrplab::kernels
