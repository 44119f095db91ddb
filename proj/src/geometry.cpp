#include "dneig/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "dneig/error.hpp"

namespace dneig {

namespace {

double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::string format_point(const std::array<std::string, 2>& vars, ChartPoint p) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << vars[0] << "=" << p.u << ", " << vars[1] << "=" << p.v << ")";
  return os.str();
}

Expr parse_with_constants(const std::string& text, const std::map<std::string, double>& constants,
                          const std::set<std::string>& allowed, const char* what) {
  Expr e = parse(text);
  for (const auto& [name, value] : constants) e = e.substitute(name, value);
  for (const auto& v : e.free_variables()) {
    if (!allowed.count(v))
      throw InputError(std::string(what) + " references unknown symbol '" + v + "' (not a chart variable or constant)");
  }
  return e;
}

int component_index(int a, int b) { return a == b ? (a == 0 ? 0 : 2) : 1; }

}  // namespace

Rect Rect::enlarged(double fraction) const noexcept {
  const double du = (u1 - u0) * fraction;
  const double dv = (v1 - v0) * fraction;
  return {u0 - du, u1 + du, v0 - dv, v1 + dv};
}

Rect Rect::intersected(const Rect& o) const noexcept {
  return {std::max(u0, o.u0), std::min(u1, o.u1), std::max(v0, o.v0), std::min(v1, o.v1)};
}

const char* to_string(MetricFamily f) noexcept {
  switch (f) {
    case MetricFamily::Euclidean: return "euclidean";
    case MetricFamily::HyperbolicHalfPlane: return "hyperbolic_half_plane";
    case MetricFamily::Warped: return "warped";
    case MetricFamily::Twisted: return "twisted";
    case MetricFamily::General: return "general";
  }
  return "?";
}

std::optional<MetricFamily> metric_family_from_string(const std::string& s) {
  for (auto f : {MetricFamily::Euclidean, MetricFamily::HyperbolicHalfPlane, MetricFamily::Warped,
                 MetricFamily::Twisted, MetricFamily::General})
    if (s == to_string(f)) return f;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ChartMetric

ChartMetric::ChartMetric(MetricFamily family, Expr g11, Expr g12, Expr g22, std::array<std::string, 2> vars,
                         Rect validity, std::optional<double> theta_period, std::optional<Expr> warp)
    : family_(family),
      vars_(std::move(vars)),
      validity_(validity),
      theta_period_(theta_period),
      warp_(std::move(warp)),
      g_{std::move(g11), std::move(g12), std::move(g22)} {
  sqrt_det_ = Expr::unary(UnaryOp::Sqrt, g_[0] * g_[2] - g_[1] * g_[1]);
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 3; ++k) dg_[c][k] = g_[k].derivative(vars_[c]);
  g11_vv_ = dg_[1][0].derivative(vars_[1]);
  g12_uv_ = dg_[0][1].derivative(vars_[1]);
  g22_uu_ = dg_[0][2].derivative(vars_[0]);
  if (warp_) {
    warp_r_ = warp_->derivative(vars_[0]);
    warp_rr_ = warp_r_->derivative(vars_[0]);
  }
}

const Expr& ChartMetric::component(int a, int b) const noexcept { return g_[component_index(a, b)]; }

Bindings ChartMetric::bind(ChartPoint p) const {
  Bindings b;
  b.set(vars_[0], p.u).set(vars_[1], p.v);
  return b;
}

void ChartMetric::require_valid(ChartPoint p) const {
  if (!validity_.contains(p, 1e-9)) throw InputError("point " + format_point(vars_, p) + " outside validity region");
}

MetricAt ChartMetric::at(ChartPoint p) const {
  const Bindings b = bind(p);
  MetricAt m{};
  m.g11 = g_[0].eval(b);
  m.g12 = g_[1].eval(b);
  m.g22 = g_[2].eval(b);
  m.det = m.g11 * m.g22 - m.g12 * m.g12;
  if (!(m.g11 > 0.0) || !(m.det > 0.0))
    throw EvalError("metric not positive definite at " + format_point(vars_, p));
  m.sqrt_det = std::sqrt(m.det);
  m.inv11 = m.g22 / m.det;
  m.inv12 = -m.g12 / m.det;
  m.inv22 = m.g11 / m.det;
  return m;
}

std::array<std::array<std::array<double, 2>, 2>, 2> ChartMetric::first_derivatives(ChartPoint p) const {
  const Bindings b = bind(p);
  std::array<std::array<std::array<double, 2>, 2>, 2> d{};
  for (int c = 0; c < 2; ++c) {
    const double d11 = dg_[c][0].eval(b);
    const double d12 = dg_[c][1].eval(b);
    const double d22 = dg_[c][2].eval(b);
    d[c][0][0] = d11;
    d[c][0][1] = d[c][1][0] = d12;
    d[c][1][1] = d22;
  }
  return d;
}

double ChartMetric::curvature_brioschi(ChartPoint p) const {
  const Bindings b = bind(p);
  const double E = g_[0].eval(b), F = g_[1].eval(b), G = g_[2].eval(b);
  const double Eu = dg_[0][0].eval(b), Ev = dg_[1][0].eval(b);
  const double Fu = dg_[0][1].eval(b), Fv = dg_[1][1].eval(b);
  const double Gu = dg_[0][2].eval(b), Gv = dg_[1][2].eval(b);
  const double Evv = g11_vv_.eval(b), Fuv = g12_uv_.eval(b), Guu = g22_uu_.eval(b);
  const std::array<std::array<double, 3>, 3> a{{
      {-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev},
      {Fv - 0.5 * Gu, E, F},
      {0.5 * Gv, F, G},
  }};
  const std::array<std::array<double, 3>, 3> c{{
      {0.0, 0.5 * Ev, 0.5 * Gu},
      {0.5 * Ev, E, F},
      {0.5 * Gu, F, G},
  }};
  const double det = E * G - F * F;
  return (det3(a) - det3(c)) / (det * det);
}

std::array<std::array<std::array<double, 2>, 2>, 2> ChartMetric::christoffel(ChartPoint p) const {
  const MetricAt g = at(p);
  const auto d = first_derivatives(p);
  const double inv[2][2] = {{g.inv11, g.inv12}, {g.inv12, g.inv22}};
  std::array<std::array<std::array<double, 2>, 2>, 2> gamma{};
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double s = 0.0;
        for (int e = 0; e < 2; ++e) s += inv[c][e] * (d[a][b][e] + d[b][a][e] - d[e][a][b]);
        gamma[c][a][b] = 0.5 * s;
      }
  return gamma;
}

std::string ChartMetric::describe() const {
  std::ostringstream os;
  os << to_string(family_) << ": g11=" << g_[0].to_string() << ", g12=" << g_[1].to_string()
     << ", g22=" << g_[2].to_string();
  return os.str();
}

// ---------------------------------------------------------------------------
// Built-in metrics

ChartMetric builtin_metric(MetricFamily family, const MetricParams& params) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::array<std::string, 2> vars;
  Rect validity{};
  std::optional<double> period = params.theta_period;
  std::optional<Expr> warp;
  Expr g11, g12, g22;

  switch (family) {
    case MetricFamily::Euclidean:
      vars = {"x", "y"};
      validity = {-100.0, 100.0, -100.0, 100.0};
      g11 = Expr::constant(1.0);
      g12 = Expr::constant(0.0);
      g22 = Expr::constant(1.0);
      break;
    case MetricFamily::HyperbolicHalfPlane: {
      vars = {"x", "y"};
      validity = {-100.0, 100.0, 1e-3, 100.0};
      if (period) throw InputError("hyperbolic_half_plane does not take a theta period");
      const Expr inv_y2 = Expr::power(Expr::variable("y"), -2.0);
      g11 = inv_y2;
      g12 = Expr::constant(0.0);
      g22 = inv_y2;
      break;
    }
    case MetricFamily::Warped:
    case MetricFamily::Twisted: {
      vars = {"r", "theta"};
      validity = {-5.0, 5.0, 0.0, kTwoPi};
      if (!params.phi) throw InputError("missing parameter 'phi' for " + std::string(to_string(family)) + " metric");
      std::set<std::string> allowed{"r"};
      if (family == MetricFamily::Twisted) allowed.insert("theta");
      warp = parse_with_constants(*params.phi, params.constants, allowed, "phi");
      if (!period) period = kTwoPi;
      g11 = Expr::constant(1.0);
      g12 = Expr::constant(0.0);
      g22 = Expr::power(*warp, 2.0);
      break;
    }
    case MetricFamily::General: {
      vars = {"u", "v"};
      validity = {-100.0, 100.0, -100.0, 100.0};
      if (!params.g11 || !params.g12 || !params.g22)
        throw InputError("missing parameter: general metric needs 'g11', 'g12' and 'g22'");
      const std::set<std::string> allowed{"u", "v"};
      g11 = parse_with_constants(*params.g11, params.constants, allowed, "g11");
      g12 = parse_with_constants(*params.g12, params.constants, allowed, "g12");
      g22 = parse_with_constants(*params.g22, params.constants, allowed, "g22");
      break;
    }
  }
  if (params.validity) validity = *params.validity;
  if (!(validity.u1 > validity.u0) || !(validity.v1 > validity.v0))
    throw InputError("validity rectangle must have positive extents");
  if (period && !(*period > 0.0)) throw InputError("theta period must be positive");

  ChartMetric metric(family, g11, g12, g22, vars, validity, period, warp);

  // Sampled positivity on the validity rectangle.
  const GridSpec grid{validity, 64, 64};
  for (int i = 0; i < grid.nu; ++i) {
    for (int j = 0; j < grid.nv; ++j) {
      const ChartPoint p = grid.point(i, j);
      const Bindings b = metric.bind(p);
      if (warp) {
        double phi = 0.0;
        try {
          phi = warp->eval(b);
        } catch (const EvalError& e) {
          throw InputError("warp expression cannot be evaluated at sample " + format_point(vars, p) + ": " + e.what());
        }
        if (!(phi > 0.0))
          throw InputError("warp expression not strictly positive at sample " + format_point(vars, p));
      } else {
        try {
          (void)metric.at(p);
        } catch (const EvalError& e) {
          throw InputError(std::string("metric invalid at sample: ") + e.what());
        }
      }
    }
  }
  return metric;
}

// ---------------------------------------------------------------------------
// DistanceFunction

DistanceFunction::DistanceFunction(const ChartMetric& m, Expr f) : f_(std::move(f)) {
  const auto& vars = m.variables();
  for (const auto& v : f_.free_variables())
    if (v != vars[0] && v != vars[1])
      throw InputError("distance function references '" + v + "', not a chart variable of the metric");
  for (int a = 0; a < 2; ++a) df_[a] = f_.derivative(vars[a]);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) ddf_[a][b] = df_[a].derivative(vars[b]);

  // Δf = -(1/√g) ∂_a(√g g^{ab} ∂_b f)
  const Expr& E = m.g_[0];
  const Expr& F = m.g_[1];
  const Expr& G = m.g_[2];
  const Expr det = E * G - F * F;
  const Expr inv11 = G / det, inv12 = -F / det, inv22 = E / det;
  const Expr flux_u = m.sqrt_det_ * (inv11 * df_[0] + inv12 * df_[1]);
  const Expr flux_v = m.sqrt_det_ * (inv12 * df_[0] + inv22 * df_[1]);
  laplacian_ = -((flux_u.derivative(vars[0]) + flux_v.derivative(vars[1])) / m.sqrt_det_);

  radial_ = (m.family() == MetricFamily::Warped || m.family() == MetricFamily::Twisted) &&
            f_ == Expr::variable(vars[0]);
}

double DistanceFunction::value(const ChartMetric& m, ChartPoint p) const { return f_.eval(m.bind(p)); }

std::array<double, 2> DistanceFunction::gradient(const ChartMetric& m, ChartPoint p) const {
  const Bindings b = m.bind(p);
  return {df_[0].eval(b), df_[1].eval(b)};
}

std::array<std::array<double, 2>, 2> DistanceFunction::second_partials(const ChartMetric& m, ChartPoint p) const {
  const Bindings b = m.bind(p);
  std::array<std::array<double, 2>, 2> h{};
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) h[a][c] = ddf_[a][c].eval(b);
  return h;
}

// ---------------------------------------------------------------------------
// Pointwise quantities

ChartPoint GridSpec::point(int i, int j) const noexcept {
  const double su = nu > 1 ? static_cast<double>(i) / (nu - 1) : 0.5;
  const double sv = nv > 1 ? static_cast<double>(j) / (nv - 1) : 0.5;
  return {rect.u0 + su * (rect.u1 - rect.u0), rect.v0 + sv * (rect.v1 - rect.v0)};
}

double gaussian_curvature(const ChartMetric& m, ChartPoint p) {
  m.require_valid(p);
  if (m.warp_) {
    const Bindings b = m.bind(p);
    return -m.warp_rr_->eval(b) / m.warp_->eval(b);
  }
  return m.curvature_brioschi(p);
}

double laplacian_of(const ChartMetric& m, const DistanceFunction& f, ChartPoint p) {
  m.require_valid(p);
  return f.laplacian_expr().eval(m.bind(p));
}

double unit_gradient_defect(const ChartMetric& m, const DistanceFunction& f, ChartPoint p) {
  const MetricAt g = m.at(p);
  const auto df = f.gradient(m, p);
  return inner_1form(g, df, df) - 1.0;
}

bool check_unit_gradient(const ChartMetric& m, const DistanceFunction& f, const GridSpec& grid, double tol) {
  for (int i = 0; i < grid.nu; ++i)
    for (int j = 0; j < grid.nv; ++j)
      if (std::abs(unit_gradient_defect(m, f, grid.point(i, j))) > tol) return false;
  return true;
}

double hessian_norm2(const ChartMetric& m, const DistanceFunction& f, ChartPoint p) {
  const MetricAt g = m.at(p);
  const auto gamma = m.christoffel(p);
  const auto df = f.gradient(m, p);
  const auto ddf = f.second_partials(m, p);
  double h[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) h[a][b] = ddf[a][b] - gamma[0][a][b] * df[0] - gamma[1][a][b] * df[1];
  const double inv[2][2] = {{g.inv11, g.inv12}, {g.inv12, g.inv22}};
  double s = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) s += inv[a][c] * inv[b][d] * h[a][b] * h[c][d];
  return s;
}

double curvature_margin(const ChartMetric& m, const DistanceFunction& f, ChartPoint p) {
  m.require_valid(p);
  if (f.is_radial()) {
    // ∂²_r log φ = φ''/φ - (φ'/φ)²
    const Bindings b = m.bind(p);
    const double phi = m.warp_->eval(b);
    const double d1 = m.warp_r_->eval(b) / phi;
    return m.warp_rr_->eval(b) / phi - d1 * d1;
  }
  return -(gaussian_curvature(m, p) + hessian_norm2(m, f, p));
}

CurvatureReport curvature_condition_check(const ChartMetric& m, const DistanceFunction& f, const GridSpec& grid,
                                          double tol) {
  CurvatureReport rep;
  rep.grid = grid;
  rep.tolerance = tol;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.samples.reserve(static_cast<std::size_t>(grid.nu) * grid.nv);
  for (int i = 0; i < grid.nu; ++i) {
    for (int j = 0; j < grid.nv; ++j) {
      const ChartPoint p = grid.point(i, j);
      const double margin = curvature_margin(m, f, p);
      rep.samples.push_back({p, margin});
      if (margin < rep.min_margin) {
        rep.min_margin = margin;
        rep.argmin = p;
      }
    }
  }
  rep.pass = rep.min_margin >= -tol;
  return rep;
}

std::array<double, 2> hodge_star_1form(const MetricAt& g, std::array<double, 2> w) noexcept {
  const double up1 = g.inv11 * w[0] + g.inv12 * w[1];
  const double up2 = g.inv12 * w[0] + g.inv22 * w[1];
  return {-g.sqrt_det * up2, g.sqrt_det * up1};
}

double inner_1form(const MetricAt& g, std::array<double, 2> a, std::array<double, 2> b) noexcept {
  return g.inv11 * a[0] * b[0] + g.inv12 * (a[0] * b[1] + a[1] * b[0]) + g.inv22 * a[1] * b[1];
}

}  // namespace dneig
