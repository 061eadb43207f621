#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense vector kernels used by the belief update. Every variant uses the same
// arithmetic order (elementwise multiply then add, no fused multiply-add;
// reductions accumulate in four interleaved lanes combined as (l0+l1)+(l2+l3)
// followed by the tail), so all variants are bit-identical to the scalar one.

namespace psdg::kernels {

struct KernelTable {
  const char* name;
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y[i] += a[i] * x[i]
  void (*mul_add)(const double* a, const double* x, double* y, std::size_t n);
  /// y[i] = a * x[i]
  void (*scale)(double a, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// True when the running CPU can execute the variant.
bool avx2_supported();
bool neon_supported();

/// Selected once per process: the best supported variant, unless the
/// PSDG_KERNELS environment variable names one of "scalar", "avx2", "neon".
const KernelTable& active();

/// Forces a variant by name for the rest of the process (tests, benchmarks).
/// Returns false if the name is unknown or unsupported here.
bool select(std::string_view name);

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void mul_add(std::span<const double> a, std::span<const double> x, std::span<double> y) {
  active().mul_add(a.data(), x.data(), y.data(), y.size());
}
inline void scale(double a, std::span<const double> x, std::span<double> y) {
  active().scale(a, x.data(), y.data(), y.size());
}
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

}  // namespace psdg::kernels
