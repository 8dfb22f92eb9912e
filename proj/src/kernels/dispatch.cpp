#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace s2f::kernels {
namespace {

const KernelTable kScalarTable{Variant::kScalar, "scalar", scalar::dot, scalar::axpy,
                               scalar::scale,    scalar::mul, scalar::sum, scalar::gemm};

#if defined(S2F_HAVE_AVX2)
const KernelTable kAvx2Table{Variant::kAvx2, "avx2", avx2::dot, avx2::axpy,
                             avx2::scale,     avx2::mul, avx2::sum, avx2::gemm};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* detect() {
  const char* env = std::getenv("S2F_KERNELS");
  const std::string_view choice = env ? env : "auto";
  if (choice == "scalar") return &kScalarTable;
  if (const KernelTable* t = avx2_table()) return t;
  return &kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{detect()};
  return slot;
}

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

const KernelTable* avx2_table() {
#if defined(S2F_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

std::vector<Variant> available_variants() {
  std::vector<Variant> out{Variant::kScalar};
  if (avx2_table()) out.push_back(Variant::kAvx2);
  return out;
}

const KernelTable& table(Variant v) {
  if (v == Variant::kAvx2 && avx2_table()) return *avx2_table();
  return kScalarTable;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(Variant v) { active_slot().store(&table(v), std::memory_order_relaxed); }

std::string_view variant_name(Variant v) { return v == Variant::kAvx2 ? "avx2" : "scalar"; }

}  // namespace s2f::kernels
