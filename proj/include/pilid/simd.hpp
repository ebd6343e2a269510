#pragma once

#include <cstddef>
#include <string_view>

// Vector kernels used by the MLP and the optimizer. Each kernel has a scalar
// reference and, on x86-64, an AVX2+FMA variant. The variant is chosen once at
// startup from CPUID; PILID_SIMD=scalar in the environment forces the
// reference path.

namespace pilid::simd {

enum class Backend { kScalar, kAvx2 };

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
  void (*adam_update)(double* param, const double* grad, double* m, double* v,
                      std::size_t n, const AdamCoefficients& c);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

Backend active_backend();
// Returns false (and leaves the backend alone) if the requested one is unavailable.
bool set_backend(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& kernels();

inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { kernels().axpy(alpha, x, y, n); }
inline void add(const double* x, double* y, std::size_t n) { kernels().add(x, y, n); }
inline void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoefficients& c) {
  kernels().adam_update(param, grad, m, v, n, c);
}

}  // namespace pilid::simd
