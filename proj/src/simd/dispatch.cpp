#include <atomic>
#include <cstdlib>
#include <string>

#include "pilid/simd.hpp"

namespace pilid::simd {

#if defined(PILID_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(PILID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("PILID_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::kScalar;
  }
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{
      initial_backend() == Backend::kAvx2 ? avx2_kernels() : &scalar_kernels()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(PILID_HAVE_AVX2)
  static const bool available = cpu_has_avx2();
  return available ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_relaxed); }

Backend active_backend() {
  return active_table().load() == &scalar_kernels() ? Backend::kScalar : Backend::kAvx2;
}

bool set_backend(Backend backend) {
  const KernelTable* table = backend == Backend::kScalar ? &scalar_kernels() : avx2_kernels();
  if (table == nullptr) return false;
  active_table().store(table);
  return true;
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kScalar ? "scalar" : "avx2";
}

}  // namespace pilid::simd
