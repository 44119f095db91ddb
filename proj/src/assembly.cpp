#include "dneig/assembly.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

#include "dneig/error.hpp"

namespace dneig {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Element {
  std::array<ChartPoint, 3> p;
  std::array<int, 3> dof;
  double area;
  // chart gradients of the barycentric coordinates
  std::array<std::array<double, 2>, 3> grad;

  ChartPoint at(const std::array<double, 3>& l) const noexcept {
    return {l[0] * p[0].u + l[1] * p[1].u + l[2] * p[2].u, l[0] * p[0].v + l[1] * p[1].v + l[2] * p[2].v};
  }
};

Element element(const Mesh& mesh, int t) {
  Element el;
  const auto& tri = mesh.triangles()[t];
  for (int i = 0; i < 3; ++i) {
    el.p[i] = mesh.chart_vertices()[tri[i]];
    el.dof[i] = mesh.logical_of()[tri[i]];
  }
  el.area = mesh.chart_area(t);
  if (!(el.area > 0.0)) throw InputError("inverted element: triangle " + std::to_string(t));
  for (int i = 0; i < 3; ++i) {
    const ChartPoint& pj = el.p[(i + 1) % 3];
    const ChartPoint& pk = el.p[(i + 2) % 3];
    el.grad[i] = {(pj.v - pk.v) / (2.0 * el.area), (pk.u - pj.u) / (2.0 * el.area)};
  }
  return el;
}

MetricAt metric_at(const ChartMetric& metric, ChartPoint p, int t) {
  try {
    return metric.at(p);
  } catch (const EvalError& e) {
    throw EvalError("metric evaluation failed in triangle " + std::to_string(t) + ": " + e.what());
  }
}

void require_inside(const Mesh& mesh, const ChartMetric& metric) {
  for (const ChartPoint& p : mesh.chart_vertices()) metric.require_valid(p);
}

int worker_count(int requested, int work) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, work));
}

// Runs emit(t, out) for every triangle. Chunks are contiguous and concatenated in triangle order,
// so the triplet sequence (and hence every summed entry) is independent of the worker count.
template <class Emit>
std::vector<Triplet> element_triplets(int num_triangles, int threads, Emit emit) {
  const int workers = worker_count(threads, num_triangles);
  std::vector<std::vector<Triplet>> chunks(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](int w) {
    const int begin = static_cast<int>(static_cast<long long>(num_triangles) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(num_triangles) * (w + 1) / workers);
    try {
      for (int t = begin; t < end; ++t) emit(t, chunks[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  std::vector<Triplet> all;
  all.reserve(total);
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
  SparseMatrix a(rows, cols);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

// Scatters a symmetric 3x3 element block given by its upper triangle.
void scatter_symmetric(const std::array<int, 3>& dof, const double (&b)[3][3], std::vector<Triplet>& out) {
  for (int i = 0; i < 3; ++i) {
    out.emplace_back(dof[i], dof[i], b[i][i]);
    for (int j = i + 1; j < 3; ++j) {
      out.emplace_back(dof[i], dof[j], b[i][j]);
      out.emplace_back(dof[j], dof[i], b[i][j]);
    }
  }
}

double inner(const MetricAt& g, const std::array<double, 2>& a, const std::array<double, 2>& b) noexcept {
  return g.inv11 * a[0] * b[0] + g.inv12 * (a[0] * b[1] + a[1] * b[0]) + g.inv22 * a[1] * b[1];
}

std::vector<int> flagged(const std::vector<bool>& flags) {
  std::vector<int> out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

const std::vector<TriangleQuadraturePoint>& triangle_rule(int degree) {
  static const std::vector<TriangleQuadraturePoint> midpoints = {
      {{0.0, 0.5, 0.5}, 1.0 / 3.0}, {{0.5, 0.0, 0.5}, 1.0 / 3.0}, {{0.5, 0.5, 0.0}, 1.0 / 3.0}};
  static const std::vector<TriangleQuadraturePoint> seven = [] {
    const double s = std::sqrt(15.0);
    const double a1 = (6.0 - s) / 21.0;
    const double a2 = (6.0 + s) / 21.0;
    const double w1 = (155.0 - s) / 1200.0;
    const double w2 = (155.0 + s) / 1200.0;
    return std::vector<TriangleQuadraturePoint>{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{a1, a1, 1.0 - 2.0 * a1}, w1},
        {{a1, 1.0 - 2.0 * a1, a1}, w1},
        {{1.0 - 2.0 * a1, a1, a1}, w1},
        {{a2, a2, 1.0 - 2.0 * a2}, w2},
        {{a2, 1.0 - 2.0 * a2, a2}, w2},
        {{1.0 - 2.0 * a2, a2, a2}, w2},
    };
  }();
  if (degree == 2) return midpoints;
  if (degree == 5) return seven;
  throw InputError("quadrature degree must be 2 or 5, got " + std::to_string(degree));
}

Eigen::VectorXd ReducedOperators::prolong(const Eigen::VectorXd& interior) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index_of.size()));
  for (std::size_t i = 0; i < vertex_of.size(); ++i) full[vertex_of[i]] = interior[static_cast<Eigen::Index>(i)];
  return full;
}

ScalarOperators assemble_scalar(const Mesh& mesh, const ChartMetric& metric, const AssemblyOptions& opts) {
  require_inside(mesh, metric);
  const auto& rule = triangle_rule(opts.quadrature_degree);
  const int nv = mesh.num_vertices();

  auto mass = element_triplets(mesh.num_faces(), opts.threads, [&](int t, std::vector<Triplet>& out) {
    const Element el = element(mesh, t);
    double b[3][3] = {};
    for (const auto& q : rule) {
      const MetricAt g = metric_at(metric, el.at(q.bary), t);
      const double w = q.weight * el.area * g.sqrt_det;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) b[i][j] += w * q.bary[i] * q.bary[j];
    }
    scatter_symmetric(el.dof, b, out);
  });
  auto stiff = element_triplets(mesh.num_faces(), opts.threads, [&](int t, std::vector<Triplet>& out) {
    const Element el = element(mesh, t);
    double b[3][3] = {};
    for (const auto& q : rule) {
      const MetricAt g = metric_at(metric, el.at(q.bary), t);
      const double w = q.weight * el.area * g.sqrt_det;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) b[i][j] += w * inner(g, el.grad[i], el.grad[j]);
    }
    scatter_symmetric(el.dof, b, out);
  });

  ScalarOperators ops;
  ops.M = from_triplets(nv, nv, mass);
  ops.K = from_triplets(nv, nv, stiff);
  ops.boundary_dofs = flagged(mesh.boundary_vertex());
  ops.mesh = &mesh;
  ops.metric = &metric;
  return ops;
}

ReducedOperators apply_dirichlet(const ScalarOperators& ops) {
  const int n = static_cast<int>(ops.M.rows());
  if (ops.boundary_dofs.empty()) throw InputError("Dirichlet elimination needs a nonempty boundary");
  ReducedOperators red;
  red.index_of.assign(n, -1);
  std::vector<bool> is_boundary(n, false);
  for (int v : ops.boundary_dofs) is_boundary[v] = true;
  for (int v = 0; v < n; ++v) {
    if (is_boundary[v]) continue;
    red.index_of[v] = static_cast<int>(red.vertex_of.size());
    red.vertex_of.push_back(v);
  }
  const int m = static_cast<int>(red.vertex_of.size());
  if (m == 0) throw InputError("every dof lies on the boundary; refine the mesh");

  auto restrict = [&](const SparseMatrix& a) {
    std::vector<Triplet> trips;
    for (int c = 0; c < a.outerSize(); ++c) {
      if (red.index_of[c] < 0) continue;
      for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
        const int r = static_cast<int>(it.row());
        if (red.index_of[r] >= 0) trips.emplace_back(red.index_of[r], red.index_of[c], it.value());
      }
    }
    return from_triplets(m, m, trips);
  };
  red.M = restrict(ops.M);
  red.K = restrict(ops.K);
  return red;
}

OneFormOperators assemble_oneform(const Mesh& mesh, const ChartMetric& metric, const AssemblyOptions& opts) {
  const ScalarOperators scalar = assemble_scalar(mesh, metric, opts);
  const auto& rule = triangle_rule(opts.quadrature_degree);
  const auto& tri_edges = mesh.triangle_edges();
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nf = mesh.num_faces();

  auto whitney = element_triplets(nf, opts.threads, [&](int t, std::vector<Triplet>& out) {
    const Element el = element(mesh, t);
    const auto& te = tri_edges[t];
    double b[3][3] = {};
    for (const auto& q : rule) {
      const MetricAt g = metric_at(metric, el.at(q.bary), t);
      const double w = q.weight * el.area * g.sqrt_det;
      // local edge k runs (k+1) -> (k+2): W = λ_a ∇λ_b - λ_b ∇λ_a, signed to the global orientation
      std::array<std::array<double, 2>, 3> W;
      for (int k = 0; k < 3; ++k) {
        const int a = (k + 1) % 3;
        const int c = (k + 2) % 3;
        const double s = te.sign[k];
        W[k] = {s * (q.bary[a] * el.grad[c][0] - q.bary[c] * el.grad[a][0]),
                s * (q.bary[a] * el.grad[c][1] - q.bary[c] * el.grad[a][1])};
      }
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) b[i][j] += w * inner(g, W[i], W[j]);
    }
    scatter_symmetric(te.edge, b, out);
  });

  auto faces = element_triplets(nf, opts.threads, [&](int t, std::vector<Triplet>& out) {
    const Element el = element(mesh, t);
    // basis 2-form du∧dv/|T|; ⟨du∧dv, du∧dv⟩_g = 1/det g
    double s = 0.0;
    for (const auto& q : rule) {
      const MetricAt g = metric_at(metric, el.at(q.bary), t);
      s += q.weight / (el.area * g.sqrt_det);
    }
    out.emplace_back(t, t, s);
  });

  std::vector<Triplet> d0;
  d0.reserve(2 * static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    d0.emplace_back(e, mesh.edges()[e][0], -1.0);
    d0.emplace_back(e, mesh.edges()[e][1], 1.0);
  }
  std::vector<Triplet> d1;
  d1.reserve(3 * static_cast<std::size_t>(nf));
  for (int t = 0; t < nf; ++t)
    for (int k = 0; k < 3; ++k) d1.emplace_back(t, tri_edges[t].edge[k], static_cast<double>(tri_edges[t].sign[k]));

  OneFormOperators ops;
  ops.M0 = scalar.M;
  ops.M1 = from_triplets(ne, ne, whitney);
  ops.M2 = from_triplets(nf, nf, faces);
  ops.d0 = from_triplets(ne, nv, d0);
  ops.d1 = from_triplets(nf, ne, d1);
  ops.boundary_edges = flagged(mesh.boundary_edge());
  ops.boundary_vertices = scalar.boundary_dofs;
  ops.mesh = &mesh;
  ops.metric = &metric;
  return ops;
}

std::vector<std::array<ChartPoint, 2>> edge_chart_segments(const Mesh& mesh) {
  std::vector<std::array<ChartPoint, 2>> seg(mesh.num_edges());
  std::vector<bool> seen(mesh.num_edges(), false);
  const auto& cv = mesh.chart_vertices();
  for (int t = 0; t < mesh.num_faces(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& te = mesh.triangle_edges()[t];
    for (int k = 0; k < 3; ++k) {
      const int e = te.edge[k];
      if (seen[e]) continue;
      seen[e] = true;
      const ChartPoint a = cv[tri[(k + 1) % 3]];
      const ChartPoint b = cv[tri[(k + 2) % 3]];
      seg[e] = te.sign[k] > 0 ? std::array<ChartPoint, 2>{a, b} : std::array<ChartPoint, 2>{b, a};
    }
  }
  return seg;
}

DirichletFormTerms dirichlet_form_quadrature(const Mesh& mesh, const ChartMetric& metric, const DistanceFunction& f,
                                             const Eigen::VectorXd& phi, double lambda_ref,
                                             const AssemblyOptions& opts) {
  if (phi.size() != mesh.num_vertices())
    throw InputError("phi must have one entry per logical vertex (" + std::to_string(mesh.num_vertices()) + ")");
  require_inside(mesh, metric);
  const auto& rule = triangle_rule(opts.quadrature_degree);

  DirichletFormTerms r;
  r.lambda_ref = lambda_ref;
  double gradient_term = 0.0;
  double potential_term = 0.0;
  for (int t = 0; t < mesh.num_faces(); ++t) {
    const Element el = element(mesh, t);
    std::array<double, 2> dphi{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      dphi[0] += phi[el.dof[i]] * el.grad[i][0];
      dphi[1] += phi[el.dof[i]] * el.grad[i][1];
    }
    for (const auto& q : rule) {
      const ChartPoint p = el.at(q.bary);
      const MetricAt g = metric_at(metric, p, t);
      const double w = q.weight * el.area * g.sqrt_det;
      const double ph = q.bary[0] * phi[el.dof[0]] + q.bary[1] * phi[el.dof[1]] + q.bary[2] * phi[el.dof[2]];
      const std::array<double, 2> nu = f.gradient(metric, p);
      const std::array<double, 2> star_nu = hodge_star_1form(g, nu);
      const double lap = laplacian_of(metric, f, p);
      const double a = inner(g, dphi, nu);
      const double b = inner(g, dphi, star_nu);
      const double dd = inner(g, dphi, dphi);
      r.max_unit_gradient_defect = std::max(r.max_unit_gradient_defect, std::abs(inner(g, nu, nu) - 1.0));
      r.phi_mass += w * ph * ph;
      r.dphi_norm2 += w * dd;
      gradient_term += w * 2.0 * ph * a * lap;
      potential_term += w * ph * ph * lap * lap;
      r.alpha_star_nu += w * ((a - ph * lap) * (a - ph * lap) + b * b);
    }
  }
  if (r.max_unit_gradient_defect > 1e-10)
    throw InputError("distance function is not unit-gradient on the mesh (defect " +
                     std::to_string(r.max_unit_gradient_defect) + ")");
  if (std::abs(r.phi_mass - 1.0) > 1e-8)
    throw InputError("phi is not M-normalized (phi^T M phi = " + std::to_string(r.phi_mass) + ")");
  r.alpha_nu = r.dphi_norm2 - gradient_term + potential_term;

  // Cross term through the discrete complex: Whitney interpolants of φν and φ(*ν).
  const OneFormOperators ops = assemble_oneform(mesh, metric, opts);
  const auto& edges = mesh.edges();
  auto phi_on_edge = [&](double t, int e) { return (1.0 - t) * phi[edges[e][0]] + t * phi[edges[e][1]]; };
  const Eigen::VectorXd c_nu = whitney_interpolate(mesh, [&](ChartPoint p, double t, int e) {
    const auto nu = f.gradient(metric, p);
    const double s = phi_on_edge(t, e);
    return std::array<double, 2>{s * nu[0], s * nu[1]};
  });
  const Eigen::VectorXd c_star = whitney_interpolate(mesh, [&](ChartPoint p, double t, int e) {
    const auto star_nu = hodge_star_1form(metric.at(p), f.gradient(metric, p));
    const double s = phi_on_edge(t, e);
    return std::array<double, 2>{s * star_nu[0], s * star_nu[1]};
  });
  Eigen::SimplicialLDLT<SparseMatrix> m0(ops.M0);
  if (m0.info() != Eigen::Success) throw SolverError("vertex mass factorization failed");
  const Eigen::VectorXd codiff_nu = m0.solve(ops.d0.transpose() * (ops.M1 * c_nu));
  const Eigen::VectorXd codiff_star = m0.solve(ops.d0.transpose() * (ops.M1 * c_star));
  const Eigen::VectorXd curl_nu = ops.d1 * c_nu;
  const Eigen::VectorXd curl_star = ops.d1 * c_star;
  r.cross = curl_nu.dot(ops.M2 * curl_star) + codiff_nu.dot(ops.M0 * codiff_star);
  return r;
}

void write_matrix_market(const SparseMatrix& a, std::ostream& os, MatrixMarketSymmetry sym) {
  const bool lower = sym == MatrixMarketSymmetry::Symmetric;
  long long nnz = 0;
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (!lower || it.row() >= it.col()) ++nnz;
  os << "%%MatrixMarket matrix coordinate real " << (lower ? "symmetric" : "general") << "\n";
  os << a.rows() << ' ' << a.cols() << ' ' << nnz << "\n";
  char buf[64];
  for (int c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (lower && it.row() < it.col()) continue;
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()) + 1,
                    static_cast<long long>(it.col()) + 1, it.value());
      os << buf;
    }
  }
}

}  // namespace dneig
