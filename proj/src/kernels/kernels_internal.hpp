#pragma once

#include <cstddef>

#include "s2f/kernels.hpp"

namespace s2f::kernels {

// beta == 0 overwrites C so stale NaNs never leak into the product.
inline void prepare_output(double beta, double* c, std::size_t count) {
  if (beta == 0.0) {
    for (std::size_t i = 0; i < count; ++i) c[i] = 0.0;
  } else if (beta != 1.0) {
    for (std::size_t i = 0; i < count; ++i) c[i] *= beta;
  }
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double beta, double* c);
}  // namespace scalar

#if defined(S2F_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double beta, double* c);
}  // namespace avx2
#endif

}  // namespace s2f::kernels
