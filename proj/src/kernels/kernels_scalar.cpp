#include "dneig/kernels.hpp"

namespace dneig::kernels::scalar {

double dot(const double* x, const double* y, int n) noexcept {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, int n) noexcept {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, int n) noexcept {
  for (int i = 0; i < n; ++i) x[i] *= a;
}

void spmv(const CsrView& a, const double* x, double* y) noexcept {
  for (int r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) s += a.val[k] * x[a.col[k]];
    y[r] = s;
  }
}

}  // namespace dneig::kernels::scalar
