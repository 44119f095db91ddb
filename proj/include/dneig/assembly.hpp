#pragma once

// Metric-weighted finite element operators on a chart triangulation.
//
// Lowest-order complex: P1 on vertices, Whitney forms on edges, piecewise constants on faces.
// The metric enters only through quadrature-point evaluation of g, g^{-1} and √det g. All dofs
// are logical (periodic copies merged). Matrices hold both triangles of a symmetric operator,
// and every symmetric matrix is bitwise symmetric: element blocks are computed once per
// unordered pair and scattered to both positions in a fixed element order.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <iosfwd>
#include <vector>

#include "dneig/geometry.hpp"
#include "dneig/mesh.hpp"

namespace dneig {

using SparseMatrix = Eigen::SparseMatrix<double>;
/// Symmetric sparse matrix; both triangles are stored.
using SparseSymMatrix = SparseMatrix;

/// Quadrature node on a triangle: barycentric coordinates and a weight (weights sum to 1).
struct TriangleQuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};

/// Degree 2: three edge midpoints. Degree 5: seven-point rule. Throws InputError otherwise.
const std::vector<TriangleQuadraturePoint>& triangle_rule(int degree);

struct AssemblyOptions {
  int quadrature_degree = 2;
  /// Element-loop worker count; 0 picks the hardware concurrency. Output is identical for any value.
  int threads = 1;
};

struct ScalarOperators {
  SparseSymMatrix M;
  SparseSymMatrix K;
  /// Sorted logical indices of boundary vertices.
  std::vector<int> boundary_dofs;
  const Mesh* mesh = nullptr;
  const ChartMetric* metric = nullptr;
};

/// Operators restricted to interior dofs.
struct ReducedOperators {
  SparseSymMatrix M;
  SparseSymMatrix K;
  /// vertex_of[i]: logical vertex of interior index i.
  std::vector<int> vertex_of;
  /// index_of[v]: interior index of logical vertex v, or -1 on the boundary.
  std::vector<int> index_of;

  /// Extends an interior vector by zero to all logical vertices.
  Eigen::VectorXd prolong(const Eigen::VectorXd& interior) const;
};

struct OneFormOperators {
  SparseSymMatrix M0;  // P1 vertex mass, V x V
  SparseSymMatrix M1;  // Whitney edge mass, E x E
  SparseSymMatrix M2;  // face mass, F x F (diagonal)
  SparseMatrix d0;     // E x V signed incidence
  SparseMatrix d1;     // F x E signed incidence
  std::vector<int> boundary_edges;
  std::vector<int> boundary_vertices;
  const Mesh* mesh = nullptr;
  const ChartMetric* metric = nullptr;
};

/// P1 mass and stiffness over all logical vertices. Throws InputError when a vertex lies
/// outside the metric's validity region, EvalError (naming the triangle) when the metric fails.
ScalarOperators assemble_scalar(const Mesh& mesh, const ChartMetric& metric, const AssemblyOptions& opts = {});

/// Removes boundary rows and columns. Throws InputError if no interior dof remains or no boundary exists.
ReducedOperators apply_dirichlet(const ScalarOperators& ops);

OneFormOperators assemble_oneform(const Mesh& mesh, const ChartMetric& metric, const AssemblyOptions& opts = {});

struct DirichletFormTerms {
  /// ‖dφ‖² - 2∫φ⟨dφ,df⟩Δf + ∫φ²(Δf)², the expanded form of α[φν] with ν = df.
  double alpha_nu = 0.0;
  /// α[φ(*ν)] integrated pointwise as (⟨dφ,ν⟩ - φΔf)² + ⟨dφ,*ν⟩², with *ν from the Hodge star.
  double alpha_star_nu = 0.0;
  /// α[φν, φ(*ν)] from Whitney interpolants: (d₁·,d₁·)_{M₂} + (d*·,d*·)_{M₀}.
  double cross = 0.0;
  double dphi_norm2 = 0.0;
  /// φᵀMφ under the same quadrature.
  double phi_mass = 0.0;
  double lambda_ref = 0.0;
  /// Largest |‖df‖² - 1| over the quadrature points.
  double max_unit_gradient_defect = 0.0;
};

/// phi is a vertex vector over all logical vertices, vanishing on the boundary, M-normalized.
/// Throws InputError when f is not unit-gradient (1e-10) or phi is not M-normalized (1e-8).
DirichletFormTerms dirichlet_form_quadrature(const Mesh& mesh, const ChartMetric& metric, const DistanceFunction& f,
                                             const Eigen::VectorXd& phi, double lambda_ref,
                                             const AssemblyOptions& opts = {});

/// Edge dofs of a 1-form: ∫_e ω along each logical edge (lower to higher index), 4-point Gauss.
/// omega(p, t, e) returns the chart components (ω_u, ω_v) at p, the point at parameter t ∈ [0,1] on edge e.
template <class Fn>
Eigen::VectorXd whitney_interpolate(const Mesh& mesh, Fn&& omega);

enum class MatrixMarketSymmetry { General, Symmetric };

/// MatrixMarket coordinate format, 1-based indices, %.17g values. Symmetric writes the lower triangle.
void write_matrix_market(const SparseMatrix& a, std::ostream& os,
                         MatrixMarketSymmetry sym = MatrixMarketSymmetry::Symmetric);

/// Chart endpoints of each logical edge, oriented along the global edge direction.
std::vector<std::array<ChartPoint, 2>> edge_chart_segments(const Mesh& mesh);

template <class Fn>
Eigen::VectorXd whitney_interpolate(const Mesh& mesh, Fn&& omega) {
  static constexpr double kNodes[4] = {-0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
                                       0.86113631159405257522};
  static constexpr double kWeights[4] = {0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
                                         0.34785484513745385737};
  const auto segments = edge_chart_segments(mesh);
  Eigen::VectorXd c(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const ChartPoint a = segments[e][0];
    const ChartPoint b = segments[e][1];
    const double du = b.u - a.u;
    const double dv = b.v - a.v;
    double s = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double t = 0.5 * (kNodes[q] + 1.0);
      const std::array<double, 2> w = omega(ChartPoint{a.u + t * du, a.v + t * dv}, t, e);
      s += 0.5 * kWeights[q] * (w[0] * du + w[1] * dv);
    }
    c[e] = s;
  }
  return c;
}

}  // namespace dneig
