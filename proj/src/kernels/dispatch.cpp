#include <atomic>
#include <cstdlib>
#include <cstring>

#include "dneig/error.hpp"
#include "dneig/kernels.hpp"

namespace dneig::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(DNEIG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() noexcept {
  if (const char* env = std::getenv("DNEIG_KERNELS"); env && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

int size_of(std::span<const double> x) noexcept { return static_cast<int>(x.size()); }

}  // namespace

const char* to_string(Backend b) noexcept { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) noexcept { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) throw InputError(std::string("kernel backend not available: ") + to_string(b));
  current().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> x, std::span<const double> y) {
#ifdef DNEIG_HAVE_AVX2
  if (active_backend() == Backend::Avx2) return avx2::dot(x.data(), y.data(), size_of(x));
#endif
  return scalar::dot(x.data(), y.data(), size_of(x));
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
#ifdef DNEIG_HAVE_AVX2
  if (active_backend() == Backend::Avx2) return avx2::axpy(a, x.data(), y.data(), size_of(x));
#endif
  scalar::axpy(a, x.data(), y.data(), size_of(x));
}

void scale(double a, std::span<double> x) {
#ifdef DNEIG_HAVE_AVX2
  if (active_backend() == Backend::Avx2) return avx2::scale(a, x.data(), static_cast<int>(x.size()));
#endif
  scalar::scale(a, x.data(), static_cast<int>(x.size()));
}

void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) {
#ifdef DNEIG_HAVE_AVX2
  if (active_backend() == Backend::Avx2) return avx2::spmv(a, x.data(), y.data());
#endif
  scalar::spmv(a, x.data(), y.data());
}

}  // namespace dneig::kernels
