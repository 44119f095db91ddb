#include "dneig/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>

#include "dneig/error.hpp"
#include "dneig/kernels.hpp"

namespace dneig {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

constexpr double kZeroModeFraction = 1e-10;

std::span<const double> view(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> column(MatrixXd& a, Eigen::Index j) {
  return {a.data() + j * a.rows(), static_cast<std::size_t>(a.rows())};
}

// CSR copy of a sparse matrix whose products go through the dispatched kernels.
class CsrOperator {
 public:
  explicit CsrOperator(const SparseMatrix& a) : a_(a) { a_.makeCompressed(); }
  void apply(const VectorXd& x, VectorXd& y) const {
    y.resize(a_.rows());
    const kernels::CsrView v{static_cast<int>(a_.rows()), a_.outerIndexPtr(), a_.innerIndexPtr(), a_.valuePtr()};
    kernels::spmv(v, view(x), view(y));
  }
  VectorXd operator*(const VectorXd& x) const {
    VectorXd y;
    apply(x, y);
    return y;
  }

 private:
  RowMajorSparse a_;
};

// ---------------------------------------------------------------------------
// Tridiagonal inverse iteration

// LU factorization with partial pivoting of a shifted symmetric tridiagonal matrix.
class TridiagonalLU {
 public:
  TridiagonalLU(const VectorXd& d, const VectorXd& e, double shift, double pivot_floor) {
    const Eigen::Index n = d.size();
    diag_.resize(n);
    sup1_.assign(n, 0.0);
    sup2_.assign(n, 0.0);
    mult_.assign(n, 0.0);
    swap_.assign(n, false);
    double cur_diag = d[0] - shift;
    double cur_sup = n > 1 ? e[0] : 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double sub = e[i];
      const double next_diag = d[i + 1] - shift;
      const double next_sup = i + 2 < n ? e[i + 1] : 0.0;
      if (std::abs(cur_diag) >= std::abs(sub)) {
        if (cur_diag == 0.0) cur_diag = pivot_floor;
        const double m = sub / cur_diag;
        diag_[i] = cur_diag;
        sup1_[i] = cur_sup;
        mult_[i] = m;
        cur_diag = next_diag - m * cur_sup;
        cur_sup = next_sup;
      } else {
        const double m = cur_diag / sub;
        diag_[i] = sub;
        sup1_[i] = next_diag;
        sup2_[i] = next_sup;
        mult_[i] = m;
        swap_[i] = true;
        const double nd = cur_sup - m * next_diag;
        cur_sup = -m * next_sup;
        cur_diag = nd;
      }
    }
    if (std::abs(cur_diag) < pivot_floor) cur_diag = cur_diag < 0 ? -pivot_floor : pivot_floor;
    diag_[n - 1] = cur_diag;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
      if (std::abs(diag_[i]) < pivot_floor) diag_[i] = diag_[i] < 0 ? -pivot_floor : pivot_floor;
  }

  VectorXd solve(VectorXd b) const {
    const Eigen::Index n = b.size();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (swap_[i]) std::swap(b[i], b[i + 1]);
      b[i + 1] -= mult_[i] * b[i];
    }
    VectorXd x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      double s = b[i];
      if (i + 1 < n) s -= sup1_[i] * x[i + 1];
      if (i + 2 < n) s -= sup2_[i] * x[i + 2];
      x[i] = s / diag_[i];
    }
    return x;
  }

 private:
  VectorXd diag_;
  std::vector<double> sup1_, sup2_, mult_;
  std::vector<bool> swap_;
};

// Eigenvectors of the tridiagonal matrix (d, e) for the given ascending eigenvalues.
MatrixXd tridiagonal_vectors(const VectorXd& d, const VectorXd& e, const std::vector<double>& lambdas) {
  const Eigen::Index n = d.size();
  const int k = static_cast<int>(lambdas.size());
  double tnorm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = std::abs(d[i]);
    if (i > 0) row += std::abs(e[i - 1]);
    if (i + 1 < n) row += std::abs(e[i]);
    tnorm = std::max(tnorm, row);
  }
  if (tnorm == 0.0) tnorm = 1.0;
  const double eps = std::numeric_limits<double>::epsilon();
  const double cluster_gap = 1e-3 * tnorm;
  const double pivot_floor = eps * tnorm;

  MatrixXd z(n, k);
  UniformStream rng(0x5eedULL);
  int cluster_start = 0;
  double prev_shift = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    if (j > 0 && lambdas[j] - lambdas[j - 1] > cluster_gap) cluster_start = j;
    double shift = lambdas[j];
    // separate coincident shifts so that each solve lands on a distinct direction
    if (j > cluster_start && shift <= prev_shift + 10.0 * eps * tnorm) shift = prev_shift + 10.0 * eps * tnorm;
    prev_shift = shift;
    const TridiagonalLU lu(d, e, shift, pivot_floor);
    VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.next();
    for (int it = 0; it < 8; ++it) {
      x = lu.solve(x);
      for (int pass = 0; pass < 2; ++pass)
        for (int c = cluster_start; c < j; ++c) x -= z.col(c).dot(x) * z.col(c);
      x.normalize();
      VectorXd r = (d.array() - lambdas[j]).matrix().cwiseProduct(x);
      r.head(n - 1) += e.cwiseProduct(x.tail(n - 1));
      r.tail(n - 1) += e.cwiseProduct(x.head(n - 1));
      if (it >= 1 && r.norm() <= 1e3 * eps * tnorm) break;
    }
    z.col(j) = x;
  }
  return z;
}

// Dense core: returns the full ascending spectrum and vectors for the `want(all)` smallest.
SpectralResult dense_core(const MatrixXd& K, const MatrixXd& M, BoundaryTag bc,
                          const std::function<int(const VectorXd&)>& want, std::vector<double>* all_out) {
  const Eigen::Index n = K.rows();
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SolverError("mass matrix is not positive definite (Cholesky failed)");
  MatrixXd c = llt.matrixL().solve(K);
  MatrixXd ct = c.transpose();
  c = llt.matrixL().solve(ct);
  c = (0.5 * (c + c.transpose())).eval();
  Eigen::Tridiagonalization<MatrixXd> tri(c);
  const VectorXd d = tri.diagonal();
  const VectorXd e = tri.subDiagonal();
  // the implicit QL iteration expects entries of order one, as in SelfAdjointEigenSolver::compute
  double scale = std::max(d.cwiseAbs().maxCoeff(), e.size() > 0 ? e.cwiseAbs().maxCoeff() : 0.0);
  if (scale == 0.0) scale = 1.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  es.computeFromTridiagonal(d / scale, e / scale, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("tridiagonal eigenvalue iteration did not converge");
  const VectorXd all = es.eigenvalues() * scale;
  if (all_out) all_out->assign(all.data(), all.data() + n);
  const int k = want(all);
  if (k < 0 || k > n) throw InputError("requested eigenpair count out of range");
  std::vector<double> lambdas(all.data(), all.data() + k);
  const MatrixXd z = n > 1 ? tridiagonal_vectors(d, e, lambdas) : MatrixXd::Ones(1, 1);
  MatrixXd x = tri.matrixQ() * z;
  x = llt.matrixU().solve(x);

  SpectralResult res;
  res.bc = bc;
  res.method = "dense";
  res.values = lambdas;
  res.vectors = x;
  res.residuals.resize(k);
  for (int j = 0; j < k; ++j) {
    const VectorXd xj = x.col(j);
    const VectorXd mx = M * xj;
    res.residuals[j] = (K * xj - lambdas[j] * mx).norm() / std::sqrt(xj.dot(mx));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Block shift-invert Lanczos

struct PencilAction {
  Eigen::Index n = 0;
  // y = (A + σM)^{-1} b
  std::function<void(const VectorXd&, VectorXd&)> solve_shifted;
  // y = A x
  std::function<void(const VectorXd&, VectorXd&)> apply_a;
  const CsrOperator* mass = nullptr;
  double shift = 0.0;
};

struct LanczosOutput {
  std::vector<double> values;
  MatrixXd vectors;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
};

LanczosOutput block_lanczos(const PencilAction& op, int k, const SolverOptions& opts) {
  const Eigen::Index n = op.n;
  const int b = static_cast<int>(std::min<Eigen::Index>(std::max(1, opts.block_size), n));
  int cap = opts.max_basis > 0 ? opts.max_basis : std::max(40 * k, 400);
  cap = static_cast<int>(std::min<Eigen::Index>(cap, n));
  cap = std::max(cap, std::min<int>(static_cast<int>(n), k + b));

  MatrixXd Q(n, cap), MQ(n, cap), AQ(n, cap);
  MatrixXd H = MatrixXd::Zero(cap, cap);
  int m = 0;
  UniformStream rng(opts.seed);
  const CsrOperator& M = *op.mass;

  // M-orthonormalizes w against the basis (two Gram-Schmidt passes) and appends it.
  auto append = [&](VectorXd w) -> bool {
    if (m >= cap) return false;
    VectorXd mw;
    M.apply(w, mw);
    const double norm0 = std::sqrt(std::max(0.0, kernels::dot(view(w), view(mw))));
    if (norm0 == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < m; ++i) {
        const double c = kernels::dot(view(w), column(MQ, i));
        kernels::axpy(-c, column(Q, i), view(w));
      }
    }
    M.apply(w, mw);
    const double nrm = std::sqrt(std::max(0.0, kernels::dot(view(w), view(mw))));
    if (nrm <= 1e-10 * norm0) return false;
    kernels::scale(1.0 / nrm, view(w));
    kernels::scale(1.0 / nrm, view(mw));
    Q.col(m) = w;
    MQ.col(m) = mw;
    ++m;
    return true;
  };
  auto random_vector = [&]() {
    VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.next();
    return w;
  };

  LanczosOutput out;
  for (int attempts = 0; m < b && attempts < 8 * b; ++attempts) append(random_vector());
  int block_begin = 0;
  VectorXd tmp;
  MatrixXd G;
  while (true) {
    const int block_end = m;
    const int nb = block_end - block_begin;
    for (int j = block_begin; j < block_end; ++j) {
      op.solve_shifted(MQ.col(j), tmp);
      AQ.col(j) = tmp;
    }
    // H = Qᵀ M (A+σM)⁻¹ M Q, extended by the new block's rows and columns
    G.resize(block_end, nb);
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < block_end; ++i) G(i, j) = kernels::dot(column(MQ, i), column(AQ, block_begin + j));
    for (int j = 0; j < nb; ++j) {
      for (int i = 0; i < block_begin; ++i) H(i, block_begin + j) = H(block_begin + j, i) = G(i, j);
      for (int i = 0; i < nb; ++i)
        H(block_begin + i, block_begin + j) = 0.5 * (G(block_begin + i, j) + G(block_begin + j, i));
    }
    ++out.iterations;

    const bool exhausted = m == n || m + 1 > cap;
    if (m >= std::min<Eigen::Index>(n, k + b) || exhausted) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(H.topLeftCorner(m, m));
      if (es.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz eigensolve failed");
      // largest θ = 1/(λ+σ) belong to the smallest λ
      const int kk = std::min(k, m);
      MatrixXd y(m, kk);
      for (int j = 0; j < kk; ++j) y.col(j) = es.eigenvectors().col(m - 1 - j);
      MatrixXd x = Q.leftCols(m) * y;
      std::vector<double> vals(kk), res(kk);
      bool all_ok = kk == k;
      VectorXd ax, mx;
      for (int j = 0; j < kk; ++j) {
        VectorXd xj = x.col(j);
        M.apply(xj, mx);
        const double nrm = std::sqrt(kernels::dot(view(xj), view(mx)));
        xj /= nrm;
        mx /= nrm;
        op.apply_a(xj, ax);
        const double lam = kernels::dot(view(xj), view(ax));
        kernels::axpy(-lam, view(mx), view(ax));
        vals[j] = lam;
        res[j] = std::sqrt(kernels::dot(view(ax), view(ax)));
        x.col(j) = xj;
        if (res[j] > opts.tolerance * std::max(1.0, std::abs(lam))) all_ok = false;
      }
      out.values = std::move(vals);
      out.vectors = std::move(x);
      out.residuals = std::move(res);
      if (all_ok || exhausted) {
        out.converged = all_ok;
        break;
      }
    }

    const int next_begin = m;
    for (int j = block_begin; j < block_end; ++j)
      if (!append(AQ.col(j))) append(random_vector());
    if (m == next_begin) {
      out.converged = false;
      break;
    }
    block_begin = next_begin;
  }
  return out;
}

double default_shift(const SparseMatrix& K, const SparseMatrix& M) {
  const VectorXd kd = K.diagonal();
  const VectorXd md = M.diagonal();
  double s = 0.0;
  for (Eigen::Index i = 0; i < kd.size(); ++i) s += kd[i] / md[i];
  return 1e-3 * s / static_cast<double>(kd.size());
}

bool within_tolerance(const SpectralResult& r, double tol) {
  for (std::size_t j = 0; j < r.values.size(); ++j)
    if (!(r.residuals[j] <= tol * std::max(1.0, std::abs(r.values[j])))) return false;
  return true;
}

std::vector<int> unflagged(int n, const std::vector<int>& flagged) {
  std::vector<bool> mark(n, false);
  for (int i : flagged) mark[i] = true;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!mark[i]) out.push_back(i);
  return out;
}

// Splits the leading near-zero eigenvalues off a one-form result.
void split_zero_modes(SpectralResult& r, double largest, int k) {
  const double threshold = kZeroModeFraction * largest;
  int z = 0;
  while (z < static_cast<int>(r.values.size()) && r.values[z] < threshold) ++z;
  const int keep = std::min<int>(k, static_cast<int>(r.values.size()) - z);
  r.harmonic_dimension = z;
  r.zero_values.assign(r.values.begin(), r.values.begin() + z);
  r.values = std::vector<double>(r.values.begin() + z, r.values.begin() + z + keep);
  r.residuals = std::vector<double>(r.residuals.begin() + z, r.residuals.begin() + z + keep);
  r.vectors = r.vectors.middleCols(z, keep).eval();
}

}  // namespace

const char* to_string(BoundaryTag b) noexcept {
  switch (b) {
    case BoundaryTag::Dirichlet: return "dirichlet";
    case BoundaryTag::Neumann: return "neumann";
    case BoundaryTag::OneForm: return "oneform";
  }
  return "?";
}

SparseMatrix restrict_matrix(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> row_map(a.rows(), -1), col_map(a.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) row_map[rows[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < a.outerSize(); ++c) {
    if (col_map[c] < 0) continue;
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (row_map[it.row()] >= 0) trips.emplace_back(row_map[it.row()], col_map[c], it.value());
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpectralResult solve_dense(const MatrixXd& K, const MatrixXd& M, int k, BoundaryTag bc, std::vector<double>* all_values) {
  if (K.rows() != K.cols() || M.rows() != K.rows()) throw InputError("pencil matrices must be square and of equal size");
  if (k <= 0 || k > K.rows()) throw InputError("eigenpair count must satisfy 0 < k <= dimension");
  return dense_core(K, M, bc, [k](const VectorXd&) { return k; }, all_values);
}

SpectralResult solve_smallest(const SparseSymMatrix& K, const SparseSymMatrix& M, int k, const SolverOptions& opts,
                              BoundaryTag bc) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n || M.rows() != n || M.cols() != n) throw InputError("pencil matrices must be square and of equal size");
  const bool dense = opts.method == SolverMethod::Dense || (opts.method == SolverMethod::Auto && n <= opts.dense_threshold);
  // the dense path computes the whole spectrum, so k = dimension is allowed there
  if (k <= 0 || k > n || (!dense && k == n))
    throw InputError("eigenpair count must satisfy 0 < k < dimension (k = " + std::to_string(k) +
                     ", dimension = " + std::to_string(n) + ")");
  if (dense) {
    SpectralResult r = dense_core(MatrixXd(K), MatrixXd(M), bc, [k](const VectorXd&) { return k; }, nullptr);
    r.converged = within_tolerance(r, opts.tolerance);
    return r;
  }

  const double sigma = std::isnan(opts.shift) ? default_shift(K, M) : opts.shift;
  const SparseMatrix shifted = K + sigma * M;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw SolverError("factorization of K + sigma*M broke down (sigma = " + std::to_string(sigma) + ")");
  const CsrOperator mass(M);
  const CsrOperator stiff(K);
  PencilAction op;
  op.n = n;
  op.mass = &mass;
  op.shift = sigma;
  op.solve_shifted = [&](const VectorXd& rhs, VectorXd& y) { y = ldlt.solve(rhs); };
  op.apply_a = [&](const VectorXd& x, VectorXd& y) { stiff.apply(x, y); };
  LanczosOutput lo = block_lanczos(op, k, opts);

  SpectralResult r;
  r.bc = bc;
  r.method = "shift-invert-lanczos";
  r.shift = sigma;
  r.iterations = lo.iterations;
  r.converged = lo.converged;
  // Ritz values come out ordered by θ; re-sort ascending by λ
  std::vector<int> order(lo.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lo.values[a] < lo.values[b]; });
  r.vectors.resize(n, static_cast<Eigen::Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j) {
    r.values.push_back(lo.values[order[j]]);
    r.residuals.push_back(lo.residuals[order[j]]);
    r.vectors.col(static_cast<Eigen::Index>(j)) = lo.vectors.col(order[j]);
  }
  return r;
}

OneFormDofs oneform_dofs(const OneFormOperators& ops) {
  OneFormDofs d;
  d.edges = unflagged(static_cast<int>(ops.M1.rows()), ops.boundary_edges);
  d.vertices = unflagged(static_cast<int>(ops.M0.rows()), ops.boundary_vertices);
  return d;
}

SpectralResult solve_oneform(const OneFormOperators& ops, int k, const SolverOptions& opts) {
  const OneFormDofs dofs = oneform_dofs(ops);
  const int ne = static_cast<int>(dofs.edges.size());
  const int nv = static_cast<int>(dofs.vertices.size());
  if (ne < 2) throw InputError("one-form problem has fewer than two interior edges");
  if (k <= 0 || k >= ne)
    throw InputError("eigenpair count must satisfy 0 < k < interior edge count (" + std::to_string(ne) + ")");
  std::vector<int> all_faces(ops.M2.rows());
  for (std::size_t i = 0; i < all_faces.size(); ++i) all_faces[i] = static_cast<int>(i);
  const SparseMatrix B = restrict_matrix(ops.d0, dofs.edges, dofs.vertices);
  const SparseMatrix M1 = restrict_matrix(ops.M1, dofs.edges, dofs.edges);
  const SparseMatrix M0 = restrict_matrix(ops.M0, dofs.vertices, dofs.vertices);
  const SparseMatrix D1 = restrict_matrix(ops.d1, all_faces, dofs.edges);
  const SparseMatrix C = SparseMatrix(D1.transpose() * ops.M2 * D1);
  const SparseMatrix M1B = M1 * B;

  const bool dense =
      opts.method == SolverMethod::Dense || (opts.method == SolverMethod::Auto && ne <= opts.dense_threshold);
  if (dense) {
    // L = M₁B M₀⁻¹ BᵀM₁ + d₁ᵀM₂d₁
    MatrixXd L = MatrixXd(C);
    if (nv > 0) {
      Eigen::LLT<MatrixXd> m0{MatrixXd(M0)};
      if (m0.info() != Eigen::Success) throw SolverError("vertex mass is not positive definite");
      const MatrixXd m1b = MatrixXd(M1B);
      L += m1b * m0.solve(m1b.transpose());
    }
    L = (0.5 * (L + L.transpose())).eval();
    std::vector<double> all;
    SpectralResult r = dense_core(
        L, MatrixXd(M1), BoundaryTag::OneForm,
        [&](const VectorXd& ev) {
          const double thr = kZeroModeFraction * ev.maxCoeff();
          int z = 0;
          while (z < ev.size() && ev[z] < thr) ++z;
          return std::min<int>(static_cast<int>(ev.size()), z + k);
        },
        &all);
    split_zero_modes(r, *std::max_element(all.begin(), all.end()), k);
    r.converged = within_tolerance(r, opts.tolerance);
    return r;
  }

  // Shift-invert through the saddle-point system [[-M₀, BᵀM₁], [M₁B, C+σM₁]].
  double sigma = opts.shift;
  if (std::isnan(sigma)) {
    // scale of the gradient block: the scalar stiffness BᵀM₁B against M₀
    sigma = nv > 0 ? default_shift(SparseMatrix(B.transpose() * M1B), M0) : default_shift(C, M1);
  }
  const int n_all = nv + ne;
  std::vector<Eigen::Triplet<double>> trips;
  auto put = [&](const SparseMatrix& a, int r0, int c0, double scale) {
    for (int c = 0; c < a.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(a, c); it; ++it)
        trips.emplace_back(r0 + static_cast<int>(it.row()), c0 + c, scale * it.value());
  };
  put(M0, 0, 0, -1.0);
  put(SparseMatrix(M1B.transpose()), 0, nv, 1.0);
  put(M1B, nv, 0, 1.0);
  put(SparseMatrix(C + sigma * M1), nv, nv, 1.0);
  SparseMatrix block(n_all, n_all);
  block.setFromTriplets(trips.begin(), trips.end());
  block.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(block);
  lu.factorize(block);
  if (lu.info() != Eigen::Success)
    throw SolverError("factorization of the shifted mixed system broke down (sigma = " + std::to_string(sigma) + ")");
  Eigen::SimplicialLDLT<SparseMatrix> m0;
  if (nv > 0) {
    m0.compute(M0);
    if (m0.info() != Eigen::Success) throw SolverError("vertex mass factorization failed");
  }
  const CsrOperator mass(M1);
  const CsrOperator curl(C);
  const CsrOperator grad(M1B);
  const SparseMatrix M1Bt = M1B.transpose();
  const CsrOperator grad_t(M1Bt);
  PencilAction op;
  op.n = ne;
  op.mass = &mass;
  op.shift = sigma;
  op.solve_shifted = [&](const VectorXd& rhs, VectorXd& y) {
    VectorXd full = VectorXd::Zero(n_all);
    full.tail(ne) = rhs;
    y = lu.solve(full).tail(ne);
  };
  op.apply_a = [&](const VectorXd& x, VectorXd& y) {
    curl.apply(x, y);
    if (nv > 0) {
      VectorXd t;
      grad_t.apply(x, t);
      const VectorXd s = m0.solve(t);
      VectorXd g;
      grad.apply(s, g);
      y += g;
    }
  };

  int extra = std::max(4, opts.block_size);
  while (true) {
    const int want = std::min(ne - 1, k + extra);
    LanczosOutput lo = block_lanczos(op, want, opts);
    SpectralResult r;
    r.bc = BoundaryTag::OneForm;
    r.method = "shift-invert-lanczos";
    r.shift = sigma;
    r.iterations = lo.iterations;
    r.converged = lo.converged;
    std::vector<int> order(lo.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lo.values[a] < lo.values[b]; });
    r.vectors.resize(ne, static_cast<Eigen::Index>(order.size()));
    for (std::size_t j = 0; j < order.size(); ++j) {
      r.values.push_back(lo.values[order[j]]);
      r.residuals.push_back(lo.residuals[order[j]]);
      r.vectors.col(static_cast<Eigen::Index>(j)) = lo.vectors.col(order[j]);
    }
    const double largest = r.values.empty() ? 0.0 : r.values.back();
    split_zero_modes(r, largest, k);
    if (static_cast<int>(r.values.size()) >= k || want == ne - 1) return r;
    extra *= 2;
  }
}

std::vector<Cluster> cluster_multiplicities(const std::vector<double>& values, double rel_gap) {
  std::vector<Cluster> out;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (count > 0) {
      const double a = values[i - 1];
      const double b = values[i];
      if (std::abs(b - a) > rel_gap * std::max(std::abs(a), std::abs(b))) {
        out.push_back({sum / count, count});
        sum = 0.0;
        count = 0;
      }
    }
    sum += values[i];
    ++count;
  }
  if (count > 0) out.push_back({sum / count, count});
  return out;
}

}  // namespace dneig
