#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Dense double-precision kernels used by every layer. Each kernel has a
// scalar reference implementation and, where the CPU supports it, an AVX2+FMA
// variant. The active table is chosen once at startup (S2F_KERNELS=scalar|avx2
// overrides auto-detection) and can be switched by tests.
namespace s2f::kernels {

enum class Variant { kScalar, kAvx2 };

struct KernelTable {
  Variant variant;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // out = a * b (elementwise); out may alias a or b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // C(m x n) = beta * C + op(A)(m x k) * op(B)(k x n), row-major, dense strides.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double beta, double* c);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();

std::vector<Variant> available_variants();
const KernelTable& table(Variant v);
const KernelTable& active();
void set_active(Variant v);
std::string_view variant_name(Variant v);

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
inline void mul(const double* a, const double* b, double* out, std::size_t n) {
  active().mul(a, b, out, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, const double* b, double beta, double* c) {
  active().gemm(trans_a, trans_b, m, n, k, a, b, beta, c);
}

}  // namespace s2f::kernels
