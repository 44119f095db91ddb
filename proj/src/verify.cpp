#include "dneig/verify.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "dneig/error.hpp"

namespace dneig {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLemmaRelativeBound = 0.05;
constexpr double kShrinkFloor = 1e-10;
constexpr double kUnionTolerance = 1e-8;
constexpr double kOrderMin = 1.8;
constexpr double kOrderMax = 2.2;
constexpr int kUnionEdgeCap = 2000;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

struct ScalarLevel {
  double h = 0.0;
  int beta1 = 0;
  std::vector<double> dirichlet;
  std::vector<double> neumann;
  VectorXd phi1;  // first Dirichlet eigenvector over all logical vertices
};

ScalarLevel solve_level(const Mesh& mesh, const ChartMetric& metric, int k_dirichlet, int k_neumann,
                        const VerifyOptions& opts) {
  ScalarLevel lv;
  lv.h = metric_mesh_size(mesh, metric);
  lv.beta1 = betti1(mesh);
  const ScalarOperators ops = assemble_scalar(mesh, metric, opts.assembly);
  if (k_dirichlet > 0) {
    const ReducedOperators red = apply_dirichlet(ops);
    const SpectralResult d = solve_smallest(red.K, red.M, k_dirichlet, opts.solver, BoundaryTag::Dirichlet);
    if (!d.converged) throw SolverError("Dirichlet eigensolve did not converge");
    lv.dirichlet = d.values;
    VectorXd v = d.vectors.col(0);
    if (v.sum() < 0) v = -v;
    lv.phi1 = red.prolong(v);
  }
  if (k_neumann > 0) {
    const SpectralResult n = solve_smallest(ops.K, ops.M, k_neumann, opts.solver, BoundaryTag::Neumann);
    if (!n.converged) throw SolverError("Neumann eigensolve did not converge");
    lv.neumann = n.values;
  }
  return lv;
}

std::string describe_metric(const ChartMetric& m) { return m.describe(); }

void fill_header(VerificationReport& r, const std::string& check, const DomainSpec& d, const ChartMetric& m) {
  r.check = check;
  r.domain = d.describe();
  r.metric = describe_metric(m);
}

Rect precondition_region(const DomainSpec& d, const ChartMetric& m, double enlarge) {
  return d.bounding_box().enlarged(enlarge).intersected(m.validity());
}

// Runs the curvature condition around the domain; records the outcome in the report.
bool curvature_precondition(VerificationReport& r, const DomainSpec& d, const ChartMetric& m,
                            const DistanceFunction& f, const VerifyOptions& opts) {
  const Rect region = precondition_region(d, m, opts.curvature_enlarge);
  const CurvatureReport cr =
      curvature_condition_check(m, f, GridSpec{region, opts.curvature_grid, opts.curvature_grid}, opts.curvature_tolerance);
  r.quantities.push_back({"curvature_min_margin", cr.min_margin});
  r.tolerances.push_back({"curvature", cr.tolerance});
  r.quantities.push_back({"precondition_passed", cr.pass ? 1.0 : 0.0});
  if (!cr.pass) {
    r.notes.push_back("curvature condition fails near the domain: margin " + std::to_string(cr.min_margin) +
                      " at (" + std::to_string(cr.argmin.u) + ", " + std::to_string(cr.argmin.v) +
                      "); check not run");
  }
  return cr.pass;
}

std::vector<double> positive_part(const std::vector<double>& values, double threshold) {
  std::vector<double> out;
  for (double v : values)
    if (v >= threshold) out.push_back(v);
  return out;
}

std::uint64_t mod_pow(std::uint64_t b, std::uint64_t e, std::uint64_t p) {
  std::uint64_t r = 1;
  b %= p;
  while (e) {
    if (e & 1) r = r * b % p;
    b = b * b % p;
    e >>= 1;
  }
  return r;
}

bool lemma_pass(const VerificationReport& r) {
  const auto& lam = r.series_values("lambda1");
  const auto& a = r.series_values("alpha_nu");
  const auto& s = r.series_values("alpha_star_nu");
  const auto& c = r.series_values("cross");
  const double bound = r.tolerance("relative_bound");
  const double floor = r.tolerance("shrink_floor");
  if (lam.size() < 2) return false;
  std::vector<std::array<double, 3>> defects;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    if (!(a[i] <= lam[i] * (1.0 + bound) && s[i] <= lam[i] * (1.0 + bound) && std::abs(c[i]) <= bound * lam[i]))
      return false;
    defects.push_back({std::abs(a[i] / lam[i] - 1.0), std::abs(s[i] / lam[i] - 1.0), std::abs(c[i]) / lam[i]});
  }
  for (std::size_t i = 1; i < defects.size(); ++i)
    for (int t = 0; t < 3; ++t)
      if (!(defects[i][t] <= defects[i - 1][t] || defects[i][t] <= floor)) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

double VerificationReport::quantity(const std::string& name) const {
  for (const auto& q : quantities)
    if (q.name == name) return q.value;
  throw std::out_of_range("report has no quantity '" + name + "'");
}

const std::vector<double>& VerificationReport::series_values(const std::string& name) const {
  for (const auto& s : series)
    if (s.name == name) return s.values;
  throw std::out_of_range("report has no series '" + name + "'");
}

double VerificationReport::tolerance(const std::string& name) const {
  for (const auto& t : tolerances)
    if (t.name == name) return t.value;
  throw std::out_of_range("report has no tolerance '" + name + "'");
}

bool VerificationReport::has_quantity(const std::string& name) const noexcept {
  for (const auto& q : quantities)
    if (q.name == name) return true;
  return false;
}

bool rederive_pass(const VerificationReport& r) {
  if (r.has_quantity("precondition_passed") && r.quantity("precondition_passed") == 0.0) return false;
  if (r.check == "curvature") return r.quantity("min_margin") >= -r.tolerance("margin");
  if (r.check == "inequality") {
    if (r.quantity("vacuous") == 1.0) return true;
    const auto& m = r.series_values("margin");
    const auto& t = r.series_values("tol_h");
    if (m.empty()) return false;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(m[i] >= -t[i])) return false;
    return true;
  }
  if (r.check == "lemma") return lemma_pass(r);
  if (r.check == "union") {
    const auto& a = r.series_values("oneform_values");
    const auto& b = r.series_values("union_values");
    const auto count = static_cast<std::size_t>(r.quantity("count"));
    if (a.size() < count || b.size() < count) return false;
    for (std::size_t i = 0; i < count; ++i)
      if (!(relative_gap(a[i], b[i]) <= r.tolerance("relative"))) return false;
    return r.quantity("zero_modes") == r.quantity("beta1");
  }
  if (r.check == "hodge") {
    return r.quantity("rank_d0") + r.quantity("rank_d1") + r.quantity("beta1") == r.quantity("edges") &&
           r.quantity("rank_d0_relative") + r.quantity("rank_d1_relative") + r.quantity("beta1") ==
               r.quantity("interior_edges");
  }
  if (r.check == "oracle") {
    const auto& d = r.series_values("dirichlet");
    const auto& n = r.series_values("neumann");
    const auto m_max = static_cast<std::size_t>(r.quantity("checked_m"));
    if (m_max == 0 || d.size() < m_max || n.size() < m_max + 1) return false;
    for (std::size_t m = 1; m <= m_max; ++m)
      if (!(n[m] <= d[m - 1])) return false;
    return true;
  }
  if (r.check == "convergence") {
    if (r.quantity("monotone") != 1.0) return false;
    const double order = r.quantity("order");
    if (!(order >= r.tolerance("order_min") && order <= r.tolerance("order_max"))) return false;
    const double ref = r.quantity("reference");
    if (std::isnan(ref)) return true;
    return std::abs(r.quantity("extrapolated") - ref) <= r.tolerance("limit_relative") * std::abs(ref);
  }
  return false;
}

double metric_mesh_size(const Mesh& mesh, const ChartMetric& metric) {
  double h = 0.0;
  for (const auto& tri : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const ChartPoint a = mesh.chart_vertices()[tri[k]];
      const ChartPoint b = mesh.chart_vertices()[tri[(k + 1) % 3]];
      const MetricAt g = metric.at({0.5 * (a.u + b.u), 0.5 * (a.v + b.v)});
      const double du = b.u - a.u;
      const double dv = b.v - a.v;
      h = std::max(h, std::sqrt(g.g11 * du * du + 2.0 * g.g12 * du * dv + g.g22 * dv * dv));
    }
  }
  return h;
}

std::vector<Mesh> refinement_hierarchy(const DomainSpec& domain, int levels) {
  if (levels < 1) throw InputError("refinement levels must be at least 1");
  std::vector<Mesh> meshes;
  meshes.reserve(levels);
  meshes.push_back(triangulate(domain));
  for (int i = 1; i < levels; ++i) meshes.push_back(refine(meshes.back()));
  return meshes;
}

VerificationReport curvature_check_report(const ChartMetric& metric, const DistanceFunction& f, const Rect& region,
                                          int grid, double tol) {
  Stopwatch sw;
  VerificationReport r;
  r.check = "curvature";
  r.metric = metric.describe();
  r.domain = "grid " + std::to_string(grid) + "x" + std::to_string(grid) + " on [" + std::to_string(region.u0) +
             ", " + std::to_string(region.u1) + "] x [" + std::to_string(region.v0) + ", " +
             std::to_string(region.v1) + "]";
  const CurvatureReport cr = curvature_condition_check(metric, f, GridSpec{region, grid, grid}, tol);
  r.quantities.push_back({"min_margin", cr.min_margin});
  r.quantities.push_back({"argmin_u", cr.argmin.u});
  r.quantities.push_back({"argmin_v", cr.argmin.v});
  r.tolerances.push_back({"margin", tol});
  if (!cr.pass) {
    r.notes.push_back("curvature condition K <= -|Hess f|^2 violated; smallest margin at (" +
                      std::to_string(cr.argmin.u) + ", " + std::to_string(cr.argmin.v) + ")");
  }
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

VerificationReport verify_inequality(const DomainSpec& domain, const ChartMetric& metric, const DistanceFunction& f,
                                     int levels, const VerifyOptions& opts) {
  Stopwatch sw;
  VerificationReport r;
  fill_header(r, "inequality", domain, metric);
  if (!curvature_precondition(r, domain, metric, f, opts)) {
    r.quantities.push_back({"vacuous", 0.0});
    r.pass = false;
    r.wall_time_s = sw.seconds();
    return r;
  }
  const std::vector<Mesh> meshes = refinement_hierarchy(domain, levels);
  std::vector<double> hs, lam1, mu1, mu2, mu3, mu4, margin, tol_h;
  int beta1 = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const ScalarLevel lv = solve_level(meshes[i], metric, 1, 4, opts);
    beta1 = lv.beta1;
    r.levels.push_back(domain.n << i);
    hs.push_back(lv.h);
    lam1.push_back(lv.dirichlet[0]);
    mu1.push_back(lv.neumann[0]);
    mu2.push_back(lv.neumann[1]);
    mu3.push_back(lv.neumann[2]);
    mu4.push_back(lv.neumann[3]);
    const int idx = 3 - beta1;  // μ_{3-β₁}, 1-based
    margin.push_back(idx >= 1 ? lv.dirichlet[0] - lv.neumann[idx - 1] : std::numeric_limits<double>::infinity());
    tol_h.push_back(opts.tol_h_factor * lv.dirichlet[0] * lv.h * lv.h);
  }
  r.quantities.push_back({"beta1", static_cast<double>(beta1)});
  r.quantities.push_back({"neumann_index", static_cast<double>(3 - beta1)});
  r.quantities.push_back({"vacuous", 3 - beta1 < 1 ? 1.0 : 0.0});
  r.quantities.push_back({"lambda1", lam1.back()});
  r.quantities.push_back({"margin", margin.back()});
  if (beta1 == 0) r.quantities.push_back({"strict_margin", lam1.back() - mu3.back()});
  if (margin.size() >= 2 && std::isfinite(margin.back())) {
    const double mc = margin[margin.size() - 2];
    const double mf = margin.back();
    r.quantities.push_back({"extrapolated_margin", (4.0 * mf - mc) / 3.0});
    r.quantities.push_back({"margin_increasing", mf > mc ? 1.0 : 0.0});
  }
  r.series = {{"h", hs},   {"lambda1", lam1}, {"mu1", mu1},       {"mu2", mu2},
              {"mu3", mu3}, {"mu4", mu4},     {"margin", margin}, {"tol_h", tol_h}};
  r.tolerances.push_back({"tol_h_factor", opts.tol_h_factor});
  r.notes.push_back("tol_h = factor * lambda1(h) * h^2 with h the longest edge in the metric");
  if (beta1 == 0)
    r.notes.push_back("a positive strict margin is numerical evidence of strictness, not a proof");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

VerificationReport lemma_check(const DomainSpec& domain, const ChartMetric& metric, const DistanceFunction& f,
                               const VerifyOptions& opts) {
  Stopwatch sw;
  VerificationReport r;
  fill_header(r, "lemma", domain, metric);
  r.tolerances.push_back({"relative_bound", kLemmaRelativeBound});
  r.tolerances.push_back({"shrink_floor", kShrinkFloor});
  if (!curvature_precondition(r, domain, metric, f, opts)) {
    r.pass = false;
    r.wall_time_s = sw.seconds();
    return r;
  }
  const std::vector<Mesh> meshes = refinement_hierarchy(domain, 2);
  std::vector<double> lam, a_nu, a_star, cross, dphi, d_nu, d_star, d_cross;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const ScalarLevel lv = solve_level(meshes[i], metric, 1, 0, opts);
    const DirichletFormTerms t =
        dirichlet_form_quadrature(meshes[i], metric, f, lv.phi1, lv.dirichlet[0], opts.assembly);
    r.levels.push_back(domain.n << i);
    lam.push_back(lv.dirichlet[0]);
    a_nu.push_back(t.alpha_nu);
    a_star.push_back(t.alpha_star_nu);
    cross.push_back(t.cross);
    dphi.push_back(t.dphi_norm2);
    d_nu.push_back(t.alpha_nu / lv.dirichlet[0] - 1.0);
    d_star.push_back(t.alpha_star_nu / lv.dirichlet[0] - 1.0);
    d_cross.push_back(std::abs(t.cross) / lv.dirichlet[0]);
  }
  r.series = {{"lambda1", lam},
              {"alpha_nu", a_nu},
              {"alpha_star_nu", a_star},
              {"cross", cross},
              {"dphi_norm2", dphi},
              {"alpha_nu_relative_gap", d_nu},
              {"alpha_star_nu_relative_gap", d_star},
              {"cross_relative", d_cross}};
  r.quantities.push_back({"lambda1", lam.front()});
  r.quantities.push_back({"alpha_nu", a_nu.front()});
  r.quantities.push_back({"alpha_star_nu", a_star.front()});
  r.quantities.push_back({"cross", cross.front()});
  r.notes.push_back("bounds: alpha <= (1+bound)*lambda1 and |cross| <= bound*lambda1 on every level; margins "
                    "|alpha/lambda1 - 1| and |cross|/lambda1 must not grow under refinement");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

VerificationReport spectrum_union_check(const DomainSpec& domain, const ChartMetric& metric,
                                        const VerifyOptions& opts, int count) {
  Stopwatch sw;
  VerificationReport r;
  fill_header(r, "union", domain, metric);
  r.levels.push_back(domain.n);
  const Mesh mesh = triangulate(domain);
  const OneFormOperators ops = assemble_oneform(mesh, metric, opts.assembly);
  const OneFormDofs dofs = oneform_dofs(ops);
  const int ne = static_cast<int>(dofs.edges.size());
  if (ne > kUnionEdgeCap)
    throw InputError("spectrum union check is limited to " + std::to_string(kUnionEdgeCap) +
                     " interior edges (mesh has " + std::to_string(ne) + ")");

  SolverOptions dense = opts.solver;
  dense.method = SolverMethod::Dense;
  const SpectralResult one = solve_oneform(ops, std::min(count, ne - 1), dense);

  // Gradient side: P1 Dirichlet pencil on interior vertices.
  const SparseMatrix M0 = restrict_matrix(ops.M0, dofs.vertices, dofs.vertices);
  const SparseMatrix B = restrict_matrix(ops.d0, dofs.edges, dofs.vertices);
  const SparseMatrix M1 = restrict_matrix(ops.M1, dofs.edges, dofs.edges);
  const MatrixXd Kd = MatrixXd(SparseMatrix(B.transpose() * M1 * B));
  std::vector<double> dirichlet;
  if (!dofs.vertices.empty()) {
    const int kd = std::min<int>(count, static_cast<int>(dofs.vertices.size()));
    dirichlet = solve_dense(Kd, MatrixXd(M0), kd, BoundaryTag::Dirichlet).values;
  }
  // Curl side: face pencil M₂d₁M₁⁻¹d₁ᵀM₂ p = η M₂ p (piecewise-constant Neumann problem).
  std::vector<int> faces(ops.M2.rows());
  for (std::size_t i = 0; i < faces.size(); ++i) faces[i] = static_cast<int>(i);
  const MatrixXd D1 = MatrixXd(restrict_matrix(ops.d1, faces, dofs.edges));
  const MatrixXd M2 = MatrixXd(ops.M2);
  Eigen::LLT<MatrixXd> m1{MatrixXd(M1)};
  if (m1.info() != Eigen::Success) throw SolverError("edge mass is not positive definite");
  const MatrixXd G = M2 * D1;
  MatrixXd A = G * m1.solve(G.transpose());
  A = (0.5 * (A + A.transpose())).eval();
  std::vector<double> face_all;
  const int kf = std::min<int>(count + 4, static_cast<int>(faces.size()));
  solve_dense(A, M2, kf, BoundaryTag::Neumann, &face_all);
  const double face_thr = 1e-10 * *std::max_element(face_all.begin(), face_all.end());
  std::vector<double> neumann = positive_part(std::vector<double>(face_all.begin(), face_all.begin() + kf), face_thr);

  std::vector<double> merged = dirichlet;
  merged.insert(merged.end(), neumann.begin(), neumann.end());
  std::sort(merged.begin(), merged.end());
  if (static_cast<int>(merged.size()) > count) merged.resize(count);

  // P1 Neumann spectrum on the same mesh, for comparison only.
  const ScalarOperators scalar = assemble_scalar(mesh, metric, opts.assembly);
  const SpectralResult p1n = solve_smallest(scalar.K, scalar.M, std::min(count + 1, mesh.num_vertices() - 1), dense,
                                            BoundaryTag::Neumann);
  std::vector<double> p1_pos(p1n.values.begin() + 1, p1n.values.end());

  double max_rel = 0.0;
  const int cmp = std::min<int>(count, static_cast<int>(std::min(one.values.size(), merged.size())));
  for (int i = 0; i < cmp; ++i) max_rel = std::max(max_rel, relative_gap(one.values[i], merged[i]));

  r.quantities.push_back({"count", static_cast<double>(count)});
  r.quantities.push_back({"zero_modes", static_cast<double>(one.harmonic_dimension)});
  r.quantities.push_back({"beta1", static_cast<double>(betti1(mesh))});
  r.quantities.push_back({"max_relative_difference", max_rel});
  r.quantities.push_back({"interior_edges", static_cast<double>(ne)});
  r.series = {{"oneform_values", one.values},
              {"union_values", merged},
              {"dirichlet_values", dirichlet},
              {"neumann_values", neumann},
              {"p1_neumann_values", p1_pos},
              {"zero_values", one.zero_values}};
  r.tolerances.push_back({"relative", kUnionTolerance});
  r.notes.push_back("the Neumann side of the union is the piecewise-constant mixed Neumann problem on faces; the "
                    "P1 Neumann values are listed for comparison only");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

int modular_rank(const SparseMatrix& a) {
  constexpr std::uint64_t P = 2147483647ULL;
  using Row = std::vector<std::pair<int, std::uint64_t>>;
  std::vector<Row> rows(a.rows());
  for (int c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      const long long v = std::llround(it.value());
      if (static_cast<double>(v) != it.value()) throw InputError("modular rank needs an integer matrix");
      const std::uint64_t m = static_cast<std::uint64_t>(((v % static_cast<long long>(P)) + static_cast<long long>(P)) %
                                                         static_cast<long long>(P));
      if (m != 0) rows[it.row()].emplace_back(c, m);
    }
  }
  std::unordered_map<int, Row> pivots;
  int rank = 0;
  for (Row& row : rows) {
    std::sort(row.begin(), row.end());
    while (!row.empty()) {
      const int lead = row.front().first;
      auto it = pivots.find(lead);
      if (it == pivots.end()) {
        const std::uint64_t inv = mod_pow(row.front().second, P - 2, P);
        for (auto& e : row) e.second = e.second * inv % P;
        pivots.emplace(lead, std::move(row));
        ++rank;
        break;
      }
      // row -= factor * pivot (pivot has a unit leading entry)
      const std::uint64_t factor = row.front().second;
      const Row& piv = it->second;
      Row next;
      next.reserve(row.size() + piv.size());
      std::size_t i = 0, j = 0;
      while (i < row.size() || j < piv.size()) {
        if (j == piv.size() || (i < row.size() && row[i].first < piv[j].first)) {
          next.push_back(row[i++]);
        } else {
          const std::uint64_t sub = factor * piv[j].second % P;
          if (i < row.size() && row[i].first == piv[j].first) {
            const std::uint64_t v = (row[i].second + P - sub) % P;
            if (v != 0) next.emplace_back(row[i].first, v);
            ++i;
          } else {
            next.emplace_back(piv[j].first, (P - sub) % P);
          }
          ++j;
        }
      }
      row = std::move(next);
    }
  }
  return rank;
}

VerificationReport hodge_dimension_check(const Mesh& mesh, const std::string& domain_description) {
  Stopwatch sw;
  VerificationReport r;
  r.check = "hodge";
  r.domain = domain_description;
  r.metric = "topological";
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  const int nf = mesh.num_faces();
  std::vector<Eigen::Triplet<double>> t0, t1;
  for (int e = 0; e < ne; ++e) {
    t0.emplace_back(e, mesh.edges()[e][0], -1.0);
    t0.emplace_back(e, mesh.edges()[e][1], 1.0);
  }
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k)
      t1.emplace_back(f, mesh.triangle_edges()[f].edge[k], static_cast<double>(mesh.triangle_edges()[f].sign[k]));
  SparseMatrix d0(ne, nv), d1(nf, ne);
  d0.setFromTriplets(t0.begin(), t0.end());
  d1.setFromTriplets(t1.begin(), t1.end());

  std::vector<int> in_edges, in_vertices, faces(nf);
  for (int e = 0; e < ne; ++e)
    if (!mesh.boundary_edge()[e]) in_edges.push_back(e);
  for (int v = 0; v < nv; ++v)
    if (!mesh.boundary_vertex()[v]) in_vertices.push_back(v);
  for (int f = 0; f < nf; ++f) faces[f] = f;

  const int beta1 = betti1(mesh);
  r.quantities = {{"vertices", static_cast<double>(nv)},
                  {"edges", static_cast<double>(ne)},
                  {"faces", static_cast<double>(nf)},
                  {"beta1", static_cast<double>(beta1)},
                  {"rank_d0", static_cast<double>(modular_rank(d0))},
                  {"rank_d1", static_cast<double>(modular_rank(d1))},
                  {"interior_edges", static_cast<double>(in_edges.size())},
                  {"interior_vertices", static_cast<double>(in_vertices.size())},
                  {"rank_d0_relative", static_cast<double>(modular_rank(restrict_matrix(d0, in_edges, in_vertices)))},
                  {"rank_d1_relative", static_cast<double>(modular_rank(restrict_matrix(d1, faces, in_edges)))}};
  r.notes.push_back("full complex: rank d0 + rank d1 + beta1 = E; relative complex (boundary dofs removed): the "
                    "same identity over interior edges");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

CylinderSpectra cylinder_oracle(int max_index) {
  if (max_index < 1) throw InputError("cylinder oracle needs max_index >= 1");
  CylinderSpectra s;
  for (int i = -max_index; i <= max_index; ++i) {
    for (int j = 0; j <= max_index; ++j) {
      const double v = static_cast<double>(i * i + j * j);
      s.neumann.push_back(v);
      if (j >= 1) s.dirichlet.push_back(v);
    }
  }
  std::sort(s.dirichlet.begin(), s.dirichlet.end());
  std::sort(s.neumann.begin(), s.neumann.end());
  return s;
}

VerificationReport cylinder_oracle_check(int max_index) {
  Stopwatch sw;
  VerificationReport r;
  r.check = "oracle";
  r.domain = "flat cylinder S^1 x [0, pi]";
  r.metric = "dr^2 + dtheta^2";
  const CylinderSpectra s = cylinder_oracle(max_index);
  // the enumeration is complete for values up to max_index²
  const double complete = static_cast<double>(max_index) * max_index;
  std::size_t m = 0;
  while (m + 2 <= s.neumann.size() && m + 1 <= s.dirichlet.size() && s.dirichlet[m] <= complete &&
         s.neumann[m + 1] <= complete && m < 20)
    ++m;
  r.quantities = {{"max_index", static_cast<double>(max_index)}, {"checked_m", static_cast<double>(m)}};
  r.series = {{"dirichlet", s.dirichlet}, {"neumann", s.neumann}};
  r.notes.push_back("checks mu_{m+1} <= lambda_m for m = 1..checked_m");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

VerificationReport convergence_study(const DomainSpec& domain, const ChartMetric& metric, BoundaryTag bc, int levels,
                                     int index, const VerifyOptions& opts, double reference,
                                     double limit_tolerance) {
  Stopwatch sw;
  if (levels < 3) throw InputError("convergence study needs at least 3 levels");
  if (index < 1) throw InputError("eigenvalue index is 1-based");
  if (bc == BoundaryTag::OneForm) throw InputError("convergence study supports dirichlet and neumann only");
  VerificationReport r;
  fill_header(r, "convergence", domain, metric);
  const std::vector<Mesh> meshes = refinement_hierarchy(domain, levels);
  std::vector<double> hs, values;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const ScalarLevel lv = bc == BoundaryTag::Dirichlet ? solve_level(meshes[i], metric, index, 0, opts)
                                                        : solve_level(meshes[i], metric, 0, index, opts);
    r.levels.push_back(domain.n << i);
    hs.push_back(lv.h);
    values.push_back(bc == BoundaryTag::Dirichlet ? lv.dirichlet[index - 1] : lv.neumann[index - 1]);
  }
  bool decreasing = true, increasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    decreasing = decreasing && values[i] < values[i - 1];
    increasing = increasing && values[i] > values[i - 1];
  }
  const bool monotone = decreasing || increasing;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double extrapolated = nan, order = nan;
  std::vector<double> errors(values.size(), nan);
  if (monotone) {
    const std::size_t L = values.size();
    extrapolated = (4.0 * values[L - 1] - values[L - 2]) / 3.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double npts = static_cast<double>(L - 1);
    for (std::size_t i = 0; i < L; ++i) errors[i] = std::abs(values[i] - extrapolated);
    for (std::size_t i = 0; i + 1 < L; ++i) {
      const double x = std::log(hs[i]);
      const double y = std::log(errors[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    order = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
  } else {
    r.notes.push_back("eigenvalue sequence is not monotone under refinement; no order fitted");
  }
  r.quantities = {{"index", static_cast<double>(index)},
                  {"monotone", monotone ? 1.0 : 0.0},
                  {"extrapolated", extrapolated},
                  {"order", order},
                  {"reference", reference}};
  r.series = {{"h", hs}, {"value", values}, {"error_estimate", errors}};
  r.tolerances = {{"order_min", kOrderMin}, {"order_max", kOrderMax}, {"limit_relative", limit_tolerance}};
  r.notes.push_back(std::string("boundary condition: ") + to_string(bc) +
                    "; Richardson limit from the two finest levels, order fitted over the others");
  r.pass = rederive_pass(r);
  r.wall_time_s = sw.seconds();
  return r;
}

}  // namespace dneig
