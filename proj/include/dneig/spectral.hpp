#pragma once

// Smallest eigenpairs of symmetric pencils K x = λ M x, for scalar Laplacians and for the mixed
// 1-form Hodge Laplacian.
//
// Dense path (dimension ≤ dense_threshold): Cholesky reduction to a standard problem, Householder
// tridiagonalization, implicit QL eigenvalues, then inverse iteration on the tridiagonal matrix for
// the wanted vectors only. Iterative path: block shift-invert Lanczos on (K+σM)⁻¹M with full
// M-reorthogonalization and Rayleigh-Ritz on the whole basis. Both paths are single-threaded and
// deterministic for a fixed seed.

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dneig/assembly.hpp"

namespace dneig {

enum class BoundaryTag { Dirichlet, Neumann, OneForm };

const char* to_string(BoundaryTag b) noexcept;

enum class SolverMethod { Auto, Dense, Iterative };

struct SolverOptions {
  /// Convergence when ‖Kx-λMx‖ ≤ tol·max(1,|λ|) for every wanted pair (x M-normalized).
  double tolerance = 1e-9;
  std::uint64_t seed = 42;
  int dense_threshold = 2000;
  SolverMethod method = SolverMethod::Auto;
  int block_size = 4;
  /// Krylov basis cap; 0 picks max(40·k, 400) limited by the dimension.
  int max_basis = 0;
  /// Shift for shift-invert; NaN picks 1e-3·(Σ K_ii/M_ii)/dim.
  double shift = std::numeric_limits<double>::quiet_NaN();
};

struct SpectralResult {
  /// Ascending, with multiplicity. For one-form problems: positive eigenvalues only.
  std::vector<double> values;
  /// Columns M-orthonormal, one per value.
  Eigen::MatrixXd vectors;
  /// ‖Kx-λMx‖₂ / ‖x‖_M per pair.
  std::vector<double> residuals;
  BoundaryTag bc = BoundaryTag::Dirichlet;
  std::string method;
  int iterations = 0;
  double shift = 0.0;
  bool converged = true;
  /// One-form problems: count of eigenvalues below 1e-10 · (largest computed eigenvalue).
  int harmonic_dimension = 0;
  /// One-form problems: the zero eigenvalues that were split off.
  std::vector<double> zero_values;
};

/// k smallest eigenpairs. Throws InputError unless 0 < k < dim (k = dim is accepted on the dense path), SolverError on factorization
/// breakdown (message carries the shift). Non-convergence returns a result with converged = false.
SpectralResult solve_smallest(const SparseSymMatrix& K, const SparseSymMatrix& M, int k,
                              const SolverOptions& opts = {}, BoundaryTag bc = BoundaryTag::Dirichlet);

/// Dense generalized solve (always the dense path); used for small pencils that are not sparse.
SpectralResult solve_dense(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M, int k, BoundaryTag bc,
                           std::vector<double>* all_values = nullptr);

/// The mixed 1-form eigenproblem with tangential (essential) boundary edges eliminated:
/// vertex space = interior vertices, edge space = interior edges. Returns the k smallest positive
/// eigenvalues and the harmonic dimension.
SpectralResult solve_oneform(const OneFormOperators& ops, int k, const SolverOptions& opts = {});

/// Interior edge and vertex index lists used by solve_oneform.
struct OneFormDofs {
  std::vector<int> edges;
  std::vector<int> vertices;
};
OneFormDofs oneform_dofs(const OneFormOperators& ops);

/// Restriction of a sparse matrix to the given row and column index lists.
SparseMatrix restrict_matrix(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols);

struct Cluster {
  double value;
  int multiplicity;
};

/// Greedy grouping of an ascending list: a value joins the current cluster when it lies within
/// rel_gap·max(|a|,|b|) of its predecessor. Representative = mean.
std::vector<Cluster> cluster_multiplicities(const std::vector<double>& values, double rel_gap = 1e-6);

/// Uniform numbers in [-1, 1) from std::mt19937_64. The mapping is done here rather than with a
/// standard distribution, whose output is implementation-defined.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-52 - 1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dneig
