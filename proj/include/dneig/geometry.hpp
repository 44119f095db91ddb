#pragma once

// Riemannian metrics on 2-D coordinate charts, distance functions and the
// pointwise curvature condition K <= -|Hess f|^2.
//
// Sign convention throughout the library: the Laplacian is the positive
// operator  Δ = d*d = -div grad, so Δf = -(1/√g) ∂_a(√g g^{ab} ∂_b f).

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dneig/expr.hpp"

namespace dneig {

struct ChartPoint {
  double u = 0.0;
  double v = 0.0;
};

struct Rect {
  double u0 = 0.0, u1 = 0.0, v0 = 0.0, v1 = 0.0;

  bool contains(ChartPoint p, double slack = 1e-12) const noexcept {
    return p.u >= u0 - slack && p.u <= u1 + slack && p.v >= v0 - slack && p.v <= v1 + slack;
  }
  Rect enlarged(double fraction) const noexcept;
  Rect intersected(const Rect& other) const noexcept;
};

enum class MetricFamily { Euclidean, HyperbolicHalfPlane, Warped, Twisted, General };

const char* to_string(MetricFamily f) noexcept;
std::optional<MetricFamily> metric_family_from_string(const std::string& s);

/// Metric tensor evaluated at a point, with its inverse.
struct MetricAt {
  double g11, g12, g22;
  double det;
  double sqrt_det;
  double inv11, inv12, inv22;
};

struct MetricParams {
  /// Warp function φ for warped (φ(r)) and twisted (φ(r,theta)) families.
  std::optional<std::string> phi;
  /// Components for the general family, over chart variables (u, v).
  std::optional<std::string> g11, g12, g22;
  /// Named constants substituted into the expressions (c, a, l0, ...).
  std::map<std::string, double> constants;
  std::optional<Rect> validity;
  std::optional<double> theta_period;
};

class ChartMetric {
 public:
  ChartMetric(MetricFamily family, Expr g11, Expr g12, Expr g22, std::array<std::string, 2> vars, Rect validity,
              std::optional<double> theta_period, std::optional<Expr> warp);

  MetricFamily family() const noexcept { return family_; }
  const std::array<std::string, 2>& variables() const noexcept { return vars_; }
  const Rect& validity() const noexcept { return validity_; }
  std::optional<double> theta_period() const noexcept { return theta_period_; }
  const std::optional<Expr>& warp() const noexcept { return warp_; }
  const Expr& component(int a, int b) const noexcept;
  /// √det g as an expression over the chart variables.
  const Expr& sqrt_det_expr() const noexcept { return sqrt_det_; }

  Bindings bind(ChartPoint p) const;
  /// Throws InputError when p lies outside the validity rectangle.
  void require_valid(ChartPoint p) const;

  /// Metric tensor at p. Throws EvalError if the tensor is not positive definite.
  MetricAt at(ChartPoint p) const;

  /// First derivatives ∂_c g_ab at p, indexed [c][a][b].
  std::array<std::array<std::array<double, 2>, 2>, 2> first_derivatives(ChartPoint p) const;

  /// Gaussian curvature by the Brioschi formula from symbolic derivatives (any family).
  double curvature_brioschi(ChartPoint p) const;

  /// Christoffel symbols Γ^c_ab at p, indexed [c][a][b].
  std::array<std::array<std::array<double, 2>, 2>, 2> christoffel(ChartPoint p) const;

  std::string describe() const;

 private:
  MetricFamily family_;
  std::array<std::string, 2> vars_;
  Rect validity_;
  std::optional<double> theta_period_;
  std::optional<Expr> warp_;
  std::array<Expr, 3> g_;  // g11, g12, g22
  Expr sqrt_det_;
  // dg_[c][k]: derivative of component k (0:g11, 1:g12, 2:g22) along variable c
  std::array<std::array<Expr, 3>, 2> dg_;
  Expr g11_vv_, g12_uv_, g22_uu_;
  std::optional<Expr> warp_r_, warp_rr_;
  friend double gaussian_curvature(const ChartMetric&, ChartPoint);
  friend double curvature_margin(const ChartMetric&, const class DistanceFunction&, ChartPoint);
  friend class DistanceFunction;
};

/// Builds one of the model metrics. Validates parameters and samples warp positivity on the
/// validity rectangle (64 x 64 grid).
ChartMetric builtin_metric(MetricFamily family, const MetricParams& params);

/// A function with (expected) unit gradient, with its derivatives and Laplacian prepared symbolically.
class DistanceFunction {
 public:
  DistanceFunction(const ChartMetric& metric, Expr f);

  const Expr& expr() const noexcept { return f_; }
  const Expr& laplacian_expr() const noexcept { return laplacian_; }

  double value(const ChartMetric& m, ChartPoint p) const;
  std::array<double, 2> gradient(const ChartMetric& m, ChartPoint p) const;
  std::array<std::array<double, 2>, 2> second_partials(const ChartMetric& m, ChartPoint p) const;
  /// True when f is the radial coordinate of a warped/twisted chart.
  bool is_radial() const noexcept { return radial_; }

 private:
  Expr f_;
  std::array<Expr, 2> df_;
  std::array<std::array<Expr, 2>, 2> ddf_;
  Expr laplacian_;
  bool radial_ = false;
};

struct GridSpec {
  Rect rect;
  int nu = 64;
  int nv = 64;

  ChartPoint point(int i, int j) const noexcept;
};

struct CurvatureSample {
  ChartPoint point;
  double margin;
};

struct CurvatureReport {
  GridSpec grid;
  std::vector<CurvatureSample> samples;
  double min_margin = 0.0;
  ChartPoint argmin{};
  double tolerance = 1e-9;
  bool pass = false;
};

/// Gaussian curvature. Warped/twisted charts use K = -∂²_r φ / φ; other families use Brioschi.
double gaussian_curvature(const ChartMetric& m, ChartPoint p);

/// Δf with the positive convention, assembled from symbolic derivatives.
double laplacian_of(const ChartMetric& m, const DistanceFunction& f, ChartPoint p);

/// |∇f|²_g - 1 at p.
double unit_gradient_defect(const ChartMetric& m, const DistanceFunction& f, ChartPoint p);
bool check_unit_gradient(const ChartMetric& m, const DistanceFunction& f, const GridSpec& grid,
                         double tol = 1e-10);

/// g^{ac} g^{bd} H_ab H_cd with H_ab = ∂_a∂_b f - Γ^c_ab ∂_c f.
double hessian_norm2(const ChartMetric& m, const DistanceFunction& f, ChartPoint p);

/// m(p) = -(K + |Hess f|²). For warped/twisted charts with f = r this is ∂²_r log φ.
double curvature_margin(const ChartMetric& m, const DistanceFunction& f, ChartPoint p);

CurvatureReport curvature_condition_check(const ChartMetric& m, const DistanceFunction& f, const GridSpec& grid,
                                          double tol = 1e-9);

/// Hodge star of a 1-form ω = w[0] du + w[1] dv: *ω = √g(-ω^2 du + ω^1 dv), ω^a = g^{ab} ω_b.
std::array<double, 2> hodge_star_1form(const MetricAt& g, std::array<double, 2> w) noexcept;
/// ⟨α, β⟩_g = g^{ab} α_a β_b.
double inner_1form(const MetricAt& g, std::array<double, 2> a, std::array<double, 2> b) noexcept;

}  // namespace dneig
