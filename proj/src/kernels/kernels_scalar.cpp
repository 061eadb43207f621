#include "psdg/kernels.hpp"

namespace psdg::kernels {

namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a * x[i];
    y[i] = y[i] + t;
  }
}

void mul_add_scalar(const double* a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a[i] * x[i];
    y[i] = y[i] + t;
  }
}

void scale_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    l0 += x[i];
    l1 += x[i + 1];
    l2 += x[i + 2];
    l3 += x[i + 3];
  }
  double s = (l0 + l1) + (l2 + l3);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double p0 = x[i] * y[i];
    const double p1 = x[i + 1] * y[i + 1];
    const double p2 = x[i + 2] * y[i + 2];
    const double p3 = x[i + 3] * y[i + 3];
    l0 += p0;
    l1 += p1;
    l2 += p2;
    l3 += p3;
  }
  double s = (l0 + l1) + (l2 + l3);
  for (; i < n; ++i) {
    const double p = x[i] * y[i];
    s += p;
  }
  return s;
}

constexpr KernelTable kScalar{"scalar", axpy_scalar, mul_add_scalar, scale_scalar, sum_scalar,
                              dot_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace psdg::kernels
