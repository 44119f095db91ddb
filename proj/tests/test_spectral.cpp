#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "dneig/assembly.hpp"
#include "dneig/error.hpp"
#include "dneig/kernels.hpp"
#include "dneig/spectral.hpp"
#include "doctest.h"

using namespace dneig;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

struct Pencil {
  SparseMatrix K, M;
};

ChartMetric metric_of(MetricFamily fam, const char* phi = nullptr) {
  MetricParams p;
  if (phi) p.phi = phi;
  return builtin_metric(fam, p);
}

Pencil scalar_pencil(const DomainSpec& d, const ChartMetric& g, bool dirichlet) {
  const Mesh m = triangulate(d);
  const ScalarOperators s = assemble_scalar(m, g);
  if (!dirichlet) return {s.K, s.M};
  const ReducedOperators r = apply_dirichlet(s);
  return {r.K, r.M};
}

SparseMatrix sparse(const MatrixXd& a) { return a.sparseView(); }

void check_invariants(const SpectralResult& r, const SparseMatrix& K, const SparseMatrix& M, double tol) {
  for (std::size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i] >= r.values[i - 1]);
  const MatrixXd& X = r.vectors;
  const MatrixXd gram = X.transpose() * (M * X);
  CHECK((gram - MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-8);
  for (int i = 0; i < X.cols(); ++i) {
    const VectorXd x = X.col(i);
    const double lam = r.values[i];
    const double rq = x.dot(K * x) / x.dot(M * x);
    CHECK(std::abs(rq - lam) <= 10 * tol * std::max(1.0, std::abs(lam)));
    const double res = (K * x - lam * (M * x)).norm() / std::sqrt(x.dot(M * x));
    CHECK(std::abs(res - r.residuals[i]) <= 1e-6 * std::max(res, 1e-300) + 1e-14);
    CHECK(r.residuals[i] <= tol * std::max(1.0, std::abs(lam)));
  }
}

}  // namespace

TEST_CASE("diagonal pencil") {
  const SparseMatrix K = sparse((MatrixXd(2, 2) << 1, 0, 0, 2).finished());
  const SparseMatrix M = sparse(MatrixXd::Identity(2, 2));
  const SpectralResult r = solve_smallest(K, M, 2);
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.values[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.method == "dense");
}

TEST_CASE("flat square spectra at n=32") {
  const DomainSpec sq = DomainSpec::rectangle({0, kPi, 0, kPi}, 32);
  const ChartMetric flat = metric_of(MetricFamily::Euclidean);
  const Pencil d = scalar_pencil(sq, flat, true);
  const SpectralResult rd = solve_smallest(d.K, d.M, 4, {}, BoundaryTag::Dirichlet);
  const double dir[4] = {2, 5, 5, 8};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(rd.values[i] / dir[i] - 1) <= 0.01);
  check_invariants(rd, d.K, d.M, 1e-9);

  const Pencil n = scalar_pencil(sq, flat, false);
  const SpectralResult rn = solve_smallest(n.K, n.M, 4, {}, BoundaryTag::Neumann);
  CHECK(std::abs(rn.values[0]) <= 1e-8);
  const double neu[3] = {1, 1, 2};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(rn.values[i + 1] / neu[i] - 1) <= 0.01);
  // constant first eigenvector
  const VectorXd x0 = rn.vectors.col(0);
  CHECK((x0.array() - x0.mean()).abs().maxCoeff() <= 1e-8 * x0.cwiseAbs().maxCoeff());
  check_invariants(rn, n.K, n.M, 1e-9);

  const auto clusters = cluster_multiplicities(rn.values, 1e-3);
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[1].multiplicity == 2);
  CHECK(clusters[1].value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("dense path agrees with the full generalized eigensolver") {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 40 + 10 * trial;
    MatrixXd A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A(i, j) = nd(rng);
        B(i, j) = nd(rng);
      }
    const MatrixXd K = A * A.transpose();
    const MatrixXd M = B * B.transpose() + n * MatrixXd::Identity(n, n);
    std::vector<double> all;
    const SpectralResult r = solve_dense(K, M, 6, BoundaryTag::Dirichlet, &all);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> oracle(K, M);
    REQUIRE(oracle.info() == Eigen::Success);
    REQUIRE(all.size() == static_cast<std::size_t>(n));
    const double scale = oracle.eigenvalues().cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) CHECK(std::abs(all[i] - oracle.eigenvalues()[i]) <= 1e-10 * scale);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(r.values[i] - oracle.eigenvalues()[i]) <= 1e-10 * scale);
  }
  // an assembled curved pencil
  const Pencil hp = scalar_pencil(DomainSpec::rectangle({0, 1, 1, std::numbers::e}, 8),
                                  metric_of(MetricFamily::HyperbolicHalfPlane), true);
  const SpectralResult r = solve_smallest(hp.K, hp.M, 5);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> oracle{MatrixXd(hp.K), MatrixXd(hp.M)};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(r.values[i] / oracle.eigenvalues()[i] - 1) <= 1e-10);
}

TEST_CASE("iterative and dense paths agree") {
  SolverOptions iter;
  iter.method = SolverMethod::Iterative;
  struct Case {
    DomainSpec d;
    ChartMetric g;
    bool dirichlet;
    int k;
  };
  const std::vector<Case> cases = {
      {DomainSpec::rectangle({0, kPi, 0, kPi}, 24), metric_of(MetricFamily::Euclidean), true, 8},
      {DomainSpec::rectangle({0, kPi, 0, kPi}, 24), metric_of(MetricFamily::Euclidean), false, 6},
      {DomainSpec::rectangle({0, 1, 1, std::numbers::e}, 20), metric_of(MetricFamily::HyperbolicHalfPlane), true, 4},
      {DomainSpec::periodic_band(-1, 0, 2 * kPi, 20), metric_of(MetricFamily::Twisted, "exp(r)"), false, 5},
      {DomainSpec::periodic_band(0, kPi, 2 * kPi, 16), metric_of(MetricFamily::Warped, "1"), true, 8},
  };
  for (const auto& c : cases) {
    const Pencil p = scalar_pencil(c.d, c.g, c.dirichlet);
    const BoundaryTag bc = c.dirichlet ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
    const SpectralResult dense = solve_smallest(p.K, p.M, c.k, {}, bc);
    const SpectralResult it = solve_smallest(p.K, p.M, c.k, iter, bc);
    CHECK(it.method == "shift-invert-lanczos");
    CHECK(it.converged);
    for (int i = 0; i < c.k; ++i)
      CHECK(std::abs(it.values[i] - dense.values[i]) <= 1e-8 * std::max(1.0, std::abs(dense.values[i])));
    check_invariants(it, p.K, p.M, 1e-9);
    check_invariants(dense, p.K, p.M, 1e-9);
  }
}

TEST_CASE("iterative path resolves the double eigenvalues of the band") {
  const Pencil p = scalar_pencil(DomainSpec::periodic_band(0, kPi, 2 * kPi, 48),
                                 metric_of(MetricFamily::Warped, "1"), true);
  REQUIRE(p.K.rows() > 2000);
  const SpectralResult r = solve_smallest(p.K, p.M, 8);
  CHECK(r.method == "shift-invert-lanczos");
  const double oracle[8] = {1, 2, 2, 4, 5, 5, 5, 5};
  for (int i = 0; i < 8; ++i) CHECK(std::abs(r.values[i] / oracle[i] - 1) <= 0.02);
  CHECK(std::abs(r.values[1] - r.values[2]) <= 1e-8 * r.values[1]);
}

TEST_CASE("fixed seed gives bit-identical output") {
  const Pencil p = scalar_pencil(DomainSpec::rectangle({0, 1, 1, 2}, 20), metric_of(MetricFamily::HyperbolicHalfPlane),
                                 true);
  SolverOptions o;
  o.method = SolverMethod::Iterative;
  const SpectralResult a = solve_smallest(p.K, p.M, 4, o);
  const SpectralResult b = solve_smallest(p.K, p.M, 4, o);
  CHECK(a.values == b.values);
  CHECK((a.vectors.array() == b.vectors.array()).all());
  o.seed = 7;
  const SpectralResult c = solve_smallest(p.K, p.M, 4, o);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(c.values[i] - a.values[i]) <= 1e-9 * a.values[i]);
}

TEST_CASE("scalar and vector kernels give the same spectrum") {
  const Pencil p = scalar_pencil(DomainSpec::rectangle({0, kPi, 0, kPi}, 20), metric_of(MetricFamily::Euclidean), true);
  SolverOptions o;
  o.method = SolverMethod::Iterative;
  const kernels::Backend saved = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  const SpectralResult a = solve_smallest(p.K, p.M, 6, o);
  if (kernels::backend_available(kernels::Backend::Avx2)) {
    kernels::set_backend(kernels::Backend::Avx2);
    const SpectralResult b = solve_smallest(p.K, p.M, 6, o);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-10 * a.values[i]);
  }
  kernels::set_backend(saved);
}

TEST_CASE("one-form spectra: harmonic dimension follows the topology") {
  const ChartMetric flat = metric_of(MetricFamily::Euclidean);
  const Mesh sq = triangulate(DomainSpec::rectangle({0, kPi, 0, kPi}, 8));
  const OneFormOperators o = assemble_oneform(sq, flat);
  const SpectralResult r = solve_oneform(o, 6);
  CHECK(r.harmonic_dimension == 0);
  CHECK(r.bc == BoundaryTag::OneForm);
  for (double v : r.values) CHECK(v > 0.0);

  const ChartMetric cyl = metric_of(MetricFamily::Warped, "1");
  const Mesh band = triangulate(DomainSpec::periodic_band(0, kPi, 2 * kPi, 8));
  const SpectralResult rb = solve_oneform(assemble_oneform(band, cyl), 6);
  CHECK(rb.harmonic_dimension == 1);
  // the smallest positive value is the first Dirichlet / second Neumann value ≈ 1
  CHECK(rb.values[0] == doctest::Approx(1.0).epsilon(0.05));

  const Mesh ann = triangulate(DomainSpec::annulus({0, 0}, 0.5, 1.0, 4));
  CHECK(solve_oneform(assemble_oneform(ann, flat), 4).harmonic_dimension == 1);
}

TEST_CASE("one-form iterative path matches the dense path") {
  const ChartMetric hp = metric_of(MetricFamily::HyperbolicHalfPlane);
  const Mesh m = triangulate(DomainSpec::rectangle({0, 1, 1, std::numbers::e}, 10));
  const OneFormOperators o = assemble_oneform(m, hp);
  const SpectralResult dense = solve_oneform(o, 8);
  SolverOptions it;
  it.method = SolverMethod::Iterative;
  const SpectralResult iter = solve_oneform(o, 8, it);
  CHECK(dense.method == "dense");
  CHECK(iter.method == "shift-invert-lanczos");
  CHECK(iter.harmonic_dimension == dense.harmonic_dimension);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(iter.values[i] / dense.values[i] - 1) <= 1e-8);
}

TEST_CASE("cluster multiplicities") {
  const auto c = cluster_multiplicities({1.0, 1.0000001, 2.0});
  REQUIRE(c.size() == 2);
  CHECK(c[0].multiplicity == 2);
  CHECK(c[0].value == doctest::Approx(1.00000005).epsilon(1e-15));
  CHECK(c[1].multiplicity == 1);
  CHECK(c[1].value == 2.0);
  CHECK(cluster_multiplicities({}).empty());
  CHECK(cluster_multiplicities({0.0, 0.0, 1.0}).size() == 2);
  CHECK(cluster_multiplicities({1.0, 1.001}, 1e-6).size() == 2);
  CHECK(cluster_multiplicities({1.0, 1.001}, 1e-2).size() == 1);
}

TEST_CASE("solver errors") {
  const SparseMatrix I3 = sparse(MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(solve_smallest(I3, I3, 0), InputError);
  CHECK_THROWS_AS(solve_smallest(I3, I3, 4), InputError);
  SolverOptions iter;
  iter.method = SolverMethod::Iterative;
  CHECK_THROWS_AS(solve_smallest(I3, I3, 3, iter), InputError);
  CHECK_THROWS_AS(solve_smallest(I3, sparse(MatrixXd::Identity(2, 2)), 1), InputError);

  // K + σM indefinite: factorization must refuse and quote the shift
  const int n = 50;
  MatrixXd K = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) K(i, i) = i - 10.0;
  iter.shift = 0.5;
  try {
    solve_smallest(sparse(K), sparse(MatrixXd::Identity(n, n)), 2, iter);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("sigma") != std::string::npos);
  }
}

TEST_CASE("iteration cap yields a flagged partial result") {
  const Pencil p = scalar_pencil(DomainSpec::rectangle({0, kPi, 0, kPi}, 40), metric_of(MetricFamily::Euclidean), true);
  SolverOptions o;
  o.method = SolverMethod::Iterative;
  o.max_basis = 8;
  o.tolerance = 1e-14;
  const SpectralResult r = solve_smallest(p.K, p.M, 6, o);
  CHECK_FALSE(r.converged);
  CHECK(r.values.size() == 6u);
}

TEST_CASE("uniform stream") {
  UniformStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next();
    CHECK(x == b.next());
    CHECK(x >= -1.0);
    CHECK(x < 1.0);
  }
}
