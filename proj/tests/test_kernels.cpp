#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <vector>

#include "dneig/error.hpp"
#include "dneig/kernels.hpp"
#include "doctest.h"

using namespace dneig;
namespace k = dneig::kernels;

namespace {

struct Csr {
  std::vector<int> row_ptr{0}, col;
  std::vector<double> val;
  k::CsrView view() const { return {static_cast<int>(row_ptr.size()) - 1, row_ptr.data(), col.data(), val.data()}; }
};

Csr random_csr(int rows, int cols, std::mt19937& rng) {
  std::uniform_int_distribution<int> len(0, 11), c(0, cols - 1);
  std::uniform_real_distribution<double> v(-1, 1);
  Csr a;
  for (int i = 0; i < rows; ++i) {
    const int n = len(rng);
    for (int j = 0; j < n; ++j) {
      a.col.push_back(c(rng));
      a.val.push_back(v(rng));
    }
    a.row_ptr.push_back(static_cast<int>(a.col.size()));
  }
  return a;
}

std::vector<double> random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> v(-1, 1);
  std::vector<double> x(n);
  for (auto& e : x) e = v(rng);
  return x;
}

// Runs fn under each available backend and restores the startup choice.
template <class Fn>
void for_each_backend(Fn&& fn) {
  const k::Backend saved = k::active_backend();
  for (k::Backend b : {k::Backend::Scalar, k::Backend::Avx2}) {
    if (!k::backend_available(b)) continue;
    k::set_backend(b);
    fn(b);
  }
  k::set_backend(saved);
}

}  // namespace

TEST_CASE("environment override selects the reference kernels") {
  const char* env = std::getenv("DNEIG_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) CHECK(k::active_backend() == k::Backend::Scalar);
  CHECK(k::backend_available(k::Backend::Scalar));
  CHECK(std::string(k::to_string(k::Backend::Avx2)) == "avx2");
  if (!k::backend_available(k::Backend::Avx2)) CHECK_THROWS_AS(k::set_backend(k::Backend::Avx2), InputError);
}

TEST_CASE("dot, axpy and scale agree across backends for every tail length") {
  std::mt19937 rng(1);
  for (int n = 0; n <= 67; ++n) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);
    std::vector<double> dots, axpys, scales;
    for_each_backend([&](k::Backend) {
      dots.push_back(k::dot(x, y));
      std::vector<double> z = y;
      k::axpy(0.37, x, z);
      axpys.insert(axpys.end(), z.begin(), z.end());
      std::vector<double> s = x;
      k::scale(-1.25, s);
      scales.insert(scales.end(), s.begin(), s.end());
    });
    double ref = 0, mag = 0;
    for (int i = 0; i < n; ++i) {
      ref += x[i] * y[i];
      mag += std::abs(x[i] * y[i]);
    }
    for (double d : dots) CHECK(std::abs(d - ref) <= 1e-15 * (mag + 1));
    const std::size_t runs = dots.size();
    for (std::size_t r = 1; r < runs; ++r)
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(axpys[r * n + i] - axpys[i]) <= 2e-16 * (std::abs(axpys[i]) + 1));
        CHECK(scales[r * n + i] == scales[i]);
      }
    for (int i = 0; i < n; ++i) CHECK(scales[i] == -1.25 * x[i]);
  }
}

TEST_CASE("sparse matrix-vector products agree across backends") {
  std::mt19937 rng(2);
  for (int rows : {1, 3, 17, 200}) {
    const Csr a = random_csr(rows, 150, rng);
    const auto x = random_vector(150, rng);
    std::vector<double> ref(rows, 0.0);
    for (int i = 0; i < rows; ++i)
      for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) ref[i] += a.val[p] * x[a.col[p]];
    for_each_backend([&](k::Backend b) {
      std::vector<double> y(rows, 99.0);
      k::spmv(a.view(), x, y);
      for (int i = 0; i < rows; ++i) {
        INFO("backend " << k::to_string(b) << " row " << i);
        CHECK(std::abs(y[i] - ref[i]) <= 1e-14 * (std::abs(ref[i]) + 1));
      }
    });
  }
}

TEST_CASE("scalar kernels are deterministic") {
  std::mt19937 rng(3);
  const auto x = random_vector(1001, rng);
  const auto y = random_vector(1001, rng);
  for_each_backend([&](k::Backend) { CHECK(k::dot(x, y) == k::dot(x, y)); });
}
