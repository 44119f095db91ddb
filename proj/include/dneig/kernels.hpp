#pragma once

// Data-parallel inner loops of the iterative eigensolver: dot products, axpy, CSR SpMV.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA variant.
// The active backend is chosen once at startup (CPU feature probe). Setting the environment
// variable DNEIG_KERNELS=scalar forces the reference kernels. Variants agree to rounding, not
// bitwise: a run is reproducible on a given machine and backend.

#include <span>

namespace dneig::kernels {

enum class Backend { Scalar, Avx2 };

const char* to_string(Backend b) noexcept;
bool backend_available(Backend b) noexcept;
Backend active_backend() noexcept;
/// Throws InputError if the backend is not available on this CPU.
void set_backend(Backend b);

/// Compressed sparse row matrix view (all rows stored, no symmetry folding).
struct CsrView {
  int rows = 0;
  const int* row_ptr = nullptr;
  const int* col = nullptr;
  const double* val = nullptr;
};

double dot(std::span<const double> x, std::span<const double> y);
/// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);
/// y = A x
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);

namespace scalar {
double dot(const double* x, const double* y, int n) noexcept;
void axpy(double a, const double* x, double* y, int n) noexcept;
void scale(double a, double* x, int n) noexcept;
void spmv(const CsrView& a, const double* x, double* y) noexcept;
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, int n) noexcept;
void axpy(double a, const double* x, double* y, int n) noexcept;
void scale(double a, double* x, int n) noexcept;
void spmv(const CsrView& a, const double* x, double* y) noexcept;
}  // namespace avx2

}  // namespace dneig::kernels
