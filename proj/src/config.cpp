#include "dneig/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace dneig {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(CheckKind k) noexcept {
  switch (k) {
    case CheckKind::Inequality: return "inequality";
    case CheckKind::Lemma: return "lemma";
    case CheckKind::Union: return "union";
    case CheckKind::HodgeDims: return "hodge-dims";
    case CheckKind::Curvature: return "curvature";
    case CheckKind::Convergence: return "convergence";
    case CheckKind::Oracle: return "oracle";
  }
  return "?";
}

std::optional<CheckKind> check_kind_from_string(const std::string& s) {
  for (auto k : {CheckKind::Inequality, CheckKind::Lemma, CheckKind::Union, CheckKind::HodgeDims,
                 CheckKind::Curvature, CheckKind::Convergence, CheckKind::Oracle})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

std::optional<BoundaryTag> boundary_tag_from_string(const std::string& s) {
  for (auto b : {BoundaryTag::Dirichlet, BoundaryTag::Neumann, BoundaryTag::OneForm})
    if (s == to_string(b)) return b;
  return std::nullopt;
}

std::map<std::string, double> expression_constants(const MetricParams& p) {
  std::map<std::string, double> c{{"pi", std::numbers::pi}, {"e", std::numbers::e}};
  for (const auto& [k, v] : p.constants) c[k] = v;
  return c;
}

namespace {

// Field access with the dotted path carried along for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void require_object() const {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(child_path(it.key()), "unknown field");
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  Node at(const std::string& key) const {
    if (!has(key)) throw ConfigError(child_path(key), "required field is missing");
    return Node(j_.at(key), child_path(key));
  }

  double number() const {
    if (!j_.is_number()) throw ConfigError(path_, "expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path_, "expected a finite number");
    return v;
  }
  long long integer() const {
    if (!j_.is_number_integer()) throw ConfigError(path_, "expected an integer");
    return j_.get<long long>();
  }
  int integer_at_least(long long lo) const {
    const long long v = integer();
    if (v < lo) throw ConfigError(path_, "must be >= " + std::to_string(lo));
    if (v > 1'000'000'000) throw ConfigError(path_, "value too large");
    return static_cast<int>(v);
  }
  std::string string() const {
    if (!j_.is_string()) throw ConfigError(path_, "expected a string");
    return j_.get<std::string>();
  }
  std::vector<double> numbers(std::size_t count) const {
    if (!j_.is_array() || j_.size() != count)
      throw ConfigError(path_, "expected an array of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(Node(j_[i], path_ + "[" + std::to_string(i) + "]").number());
    return out;
  }
  Rect rect() const {
    const auto v = numbers(4);
    if (!(v[1] > v[0]) || !(v[3] > v[2])) throw ConfigError(path_, "rectangle [u0, u1, v0, v1] needs u1 > u0 and v1 > v0");
    return {v[0], v[1], v[2], v[3]};
  }

 private:
  const json& j_;
  std::string path_;
};

void check_expression(const Node& n, const std::set<std::string>& allowed, const std::map<std::string, double>& consts) {
  const std::string text = n.string();
  Expr e;
  try {
    e = parse(text);
  } catch (const ParseError& err) {
    throw ConfigError(n.path(), err.what());
  }
  for (const auto& v : e.free_variables())
    if (!allowed.count(v) && !consts.count(v))
      throw ConfigError(n.path(), "unknown symbol '" + v + "' (not a chart variable or constant)");
}

std::set<std::string> chart_variables(MetricFamily f) {
  switch (f) {
    case MetricFamily::Euclidean:
    case MetricFamily::HyperbolicHalfPlane: return {"x", "y"};
    case MetricFamily::Warped:
    case MetricFamily::Twisted: return {"r", "theta"};
    case MetricFamily::General: return {"u", "v"};
  }
  return {};
}

void parse_metric(const Node& n, RunConfig& c) {
  n.require_object();
  n.allow_only({"family", "phi", "g11", "g12", "g22", "constants", "validity", "theta_period"});
  const Node fam = n.at("family");
  const auto family = metric_family_from_string(fam.string());
  if (!family)
    throw ConfigError(fam.path(), "unknown family '" + fam.string() +
                                      "' (euclidean, hyperbolic_half_plane, warped, twisted, general)");
  c.family = *family;
  MetricParams& p = c.metric;
  if (n.has("constants")) {
    const Node cn = n.at("constants");
    cn.require_object();
    for (auto it = cn.raw().begin(); it != cn.raw().end(); ++it) {
      const Node v(it.value(), cn.child_path(it.key()));
      if (it.key().empty() || !(std::isalpha(static_cast<unsigned char>(it.key()[0])) || it.key()[0] == '_'))
        throw ConfigError(v.path(), "constant names must be identifiers");
      p.constants[it.key()] = v.number();
    }
  }
  const auto consts = expression_constants(p);
  std::set<std::string> vars = chart_variables(*family);
  for (const auto& v : vars)
    if (p.constants.count(v)) throw ConfigError(n.child_path("constants") + "." + v, "shadows a chart variable");

  const bool warped = *family == MetricFamily::Warped || *family == MetricFamily::Twisted;
  if (warped) {
    const Node phi = n.at("phi");
    std::set<std::string> allowed{"r"};
    if (*family == MetricFamily::Twisted) allowed.insert("theta");
    check_expression(phi, allowed, consts);
    p.phi = phi.string();
  } else if (n.has("phi")) {
    throw ConfigError(n.child_path("phi"), "only the warped and twisted families take a warp function");
  }
  for (const char* key : {"g11", "g12", "g22"}) {
    if (*family == MetricFamily::General) {
      const Node g = n.at(key);
      check_expression(g, vars, consts);
      (key == std::string("g11") ? p.g11 : key == std::string("g12") ? p.g12 : p.g22) = g.string();
    } else if (n.has(key)) {
      throw ConfigError(n.child_path(key), "only the general family takes metric components");
    }
  }
  if (n.has("validity")) p.validity = n.at("validity").rect();
  if (n.has("theta_period")) {
    const Node t = n.at("theta_period");
    if (*family == MetricFamily::HyperbolicHalfPlane)
      throw ConfigError(t.path(), "hyperbolic_half_plane does not take a theta period");
    const double v = t.number();
    if (!(v > 0.0)) throw ConfigError(t.path(), "must be positive");
    p.theta_period = v;
  }
}

void parse_domain(const Node& n, RunConfig& c) {
  n.require_object();
  n.allow_only({"shape", "extents", "center", "radius", "r_in", "r_out", "period", "resolution"});
  const Node sh = n.at("shape");
  const auto shape = domain_shape_from_string(sh.string());
  if (!shape) throw ConfigError(sh.path(), "unknown shape '" + sh.string() + "' (rectangle, disk, annulus, periodic_band)");
  DomainSpec d;
  d.shape = *shape;
  d.n = n.at("resolution").integer_at_least(2);
  auto center = [&] {
    const auto v = n.at("center").numbers(2);
    return ChartPoint{v[0], v[1]};
  };
  auto positive = [&](const char* key) {
    const Node v = n.at(key);
    const double x = v.number();
    if (!(x > 0.0)) throw ConfigError(v.path(), "must be positive");
    return x;
  };
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (n.has(k)) throw ConfigError(n.child_path(k), std::string("not used by shape '") + to_string(*shape) + "'");
  };
  switch (*shape) {
    case DomainShape::Rectangle:
      forbid({"center", "radius", "r_in", "r_out", "period"});
      d.extents = n.at("extents").rect();
      break;
    case DomainShape::PeriodicBand: {
      forbid({"center", "radius", "r_in", "r_out"});
      const Node e = n.at("extents");
      const auto v = e.numbers(2);
      if (!(v[1] > v[0])) throw ConfigError(e.path(), "radial range [u0, u1] needs u1 > u0");
      d.extents = {v[0], v[1], 0.0, 0.0};
      if (n.has("period")) d.theta_period = positive("period");
      if (d.n < 3) throw ConfigError(n.child_path("resolution"), "periodic_band needs resolution >= 3");
      break;
    }
    case DomainShape::Disk:
      forbid({"extents", "r_in", "r_out", "period"});
      d.center = center();
      d.radius = positive("radius");
      break;
    case DomainShape::Annulus:
      forbid({"extents", "radius", "period"});
      d.center = center();
      d.r_in = positive("r_in");
      d.r_out = positive("r_out");
      if (!(d.r_out > d.r_in)) throw ConfigError(n.child_path("r_out"), "must exceed r_in");
      break;
  }
  c.domain = d;
}

void parse_solver(const Node& n, RunConfig& c) {
  n.require_object();
  n.allow_only({"tolerance", "seed", "dense_threshold", "quadrature_order", "levels", "threads"});
  SolverConfig& s = c.solver;
  if (n.has("tolerance")) {
    const Node t = n.at("tolerance");
    s.tolerance = t.number();
    if (!(s.tolerance > 0.0 && s.tolerance < 1.0)) throw ConfigError(t.path(), "must lie in (0, 1)");
  }
  if (n.has("seed")) {
    const Node t = n.at("seed");
    if (!t.raw().is_number_unsigned()) throw ConfigError(t.path(), "expected a non-negative integer");
    s.seed = t.raw().get<std::uint64_t>();
  }
  if (n.has("dense_threshold")) s.dense_threshold = n.at("dense_threshold").integer_at_least(1);
  if (n.has("quadrature_order")) {
    const Node q = n.at("quadrature_order");
    s.quadrature_order = q.integer_at_least(2);
    if (s.quadrature_order != 2 && s.quadrature_order != 5) throw ConfigError(q.path(), "supported orders are 2 and 5");
  }
  if (n.has("levels")) s.levels = n.at("levels").integer_at_least(1);
  if (n.has("threads")) s.threads = n.at("threads").integer_at_least(1);
}

CheckConfig parse_check(const Node& n) {
  CheckConfig k;
  auto kind_of = [](const Node& t) {
    const auto kind = check_kind_from_string(t.string());
    if (!kind)
      throw ConfigError(t.path(), "unknown check '" + t.string() +
                                      "' (inequality, lemma, union, hodge-dims, curvature, convergence, oracle)");
    return *kind;
  };
  if (n.raw().is_string()) {
    k.kind = kind_of(n);
    return k;
  }
  n.require_object();
  k.kind = kind_of(n.at("type"));
  switch (k.kind) {
    case CheckKind::Inequality: n.allow_only({"type", "levels"}); break;
    case CheckKind::Lemma:
    case CheckKind::HodgeDims: n.allow_only({"type"}); break;
    case CheckKind::Union: n.allow_only({"type", "count"}); break;
    case CheckKind::Curvature: n.allow_only({"type", "region", "grid"}); break;
    case CheckKind::Convergence:
      n.allow_only({"type", "levels", "bc", "index", "reference", "limit_tolerance"});
      break;
    case CheckKind::Oracle: n.allow_only({"type", "max_index"}); break;
  }
  if (n.has("levels")) k.levels = n.at("levels").integer_at_least(k.kind == CheckKind::Convergence ? 3 : 1);
  if (n.has("count")) k.count = n.at("count").integer_at_least(1);
  if (n.has("region")) k.region = n.at("region").rect();
  if (n.has("grid")) k.grid = n.at("grid").integer_at_least(2);
  if (n.has("bc")) {
    const Node b = n.at("bc");
    const auto bc = boundary_tag_from_string(b.string());
    if (!bc || *bc == BoundaryTag::OneForm) throw ConfigError(b.path(), "expected 'dirichlet' or 'neumann'");
    k.bc = *bc;
  }
  if (n.has("index")) k.index = n.at("index").integer_at_least(1);
  if (n.has("reference")) k.reference = n.at("reference").number();
  if (n.has("limit_tolerance")) {
    const Node t = n.at("limit_tolerance");
    k.limit_tolerance = t.number();
    if (!(k.limit_tolerance > 0.0)) throw ConfigError(t.path(), "must be positive");
  }
  if (n.has("max_index")) k.max_index = n.at("max_index").integer_at_least(1);
  return k;
}

// Index defaults depend on the boundary condition; resolved here so reports carry the actual value.
void resolve_check_defaults(CheckConfig& k, const SolverConfig& s) {
  if (k.kind == CheckKind::Inequality && k.levels == 0) k.levels = s.levels;
  if (k.kind == CheckKind::Convergence) {
    if (k.levels == 0) k.levels = 4;
    if (k.index == 0) k.index = k.bc == BoundaryTag::Neumann ? 2 : 1;
  }
}

}  // namespace

ConfigNeeds needs_of(const std::vector<CheckConfig>& checks) {
  ConfigNeeds n;
  for (const auto& k : checks) {
    switch (k.kind) {
      case CheckKind::Inequality:
      case CheckKind::Lemma:
        n.metric = n.distance_function = n.domain = true;
        break;
      case CheckKind::Curvature:
        n.metric = n.distance_function = true;
        if (!k.region) n.domain = true;
        break;
      case CheckKind::Union:
      case CheckKind::Convergence: n.metric = n.domain = true; break;
      case CheckKind::HodgeDims: n.domain = true; break;
      case CheckKind::Oracle: break;
    }
  }
  return n;
}

RunConfig parse_config(const json& j, const ConfigNeeds& caller_needs) {
  const Node root(j, "");
  root.require_object();
  root.allow_only({"spec_version", "metric", "distance_function", "domain", "solver", "checks", "output"});
  const Node ver = root.at("spec_version");
  if (ver.integer() != 1) throw ConfigError(ver.path(), "unsupported version (expected 1)");

  RunConfig c;
  if (root.has("solver")) parse_solver(root.at("solver"), c);
  if (root.has("checks")) {
    const Node list = root.at("checks");
    if (!list.raw().is_array()) throw ConfigError(list.path(), "expected an array");
    for (std::size_t i = 0; i < list.raw().size(); ++i)
      c.checks.push_back(parse_check(Node(list.raw()[i], "checks[" + std::to_string(i) + "]")));
    if (c.checks.empty()) throw ConfigError("checks", "must list at least one check");
    for (auto& k : c.checks) resolve_check_defaults(k, c.solver);
  }
  ConfigNeeds needs = needs_of(c.checks);
  needs.metric |= caller_needs.metric;
  needs.distance_function |= caller_needs.distance_function;
  needs.domain |= caller_needs.domain;
  needs.checks |= caller_needs.checks;
  if (needs.checks && c.checks.empty()) throw ConfigError("checks", "required field is missing");
  needs.metric |= needs.distance_function;

  if (root.has("metric")) parse_metric(root.at("metric"), c);
  else if (needs.metric) throw ConfigError("metric", "required block is missing");

  if (root.has("distance_function")) {
    const Node f = root.at("distance_function");
    if (!c.family) throw ConfigError(f.path(), "needs a metric block to define its chart variables");
    check_expression(f, chart_variables(*c.family), expression_constants(c.metric));
    c.distance_function = f.string();
  } else if (needs.distance_function) {
    throw ConfigError("distance_function", "required field is missing");
  }

  if (root.has("domain")) parse_domain(root.at("domain"), c);
  else if (needs.domain) throw ConfigError("domain", "required block is missing");

  if (root.has("output")) {
    const Node o = root.at("output");
    o.require_object();
    o.allow_only({"report", "csv_dir"});
    if (o.has("report")) c.output.report = o.at("report").string();
    if (o.has("csv_dir")) c.output.csv_dir = o.at("csv_dir").string();
  }
  return c;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
}

ordered_json resolved_json(const RunConfig& c) {
  auto rect = [](const Rect& r) { return ordered_json::array({r.u0, r.u1, r.v0, r.v1}); };
  ordered_json j;
  j["spec_version"] = 1;
  if (c.family) {
    ordered_json m;
    m["family"] = to_string(*c.family);
    if (c.metric.phi) m["phi"] = *c.metric.phi;
    if (c.metric.g11) m["g11"] = *c.metric.g11;
    if (c.metric.g12) m["g12"] = *c.metric.g12;
    if (c.metric.g22) m["g22"] = *c.metric.g22;
    ordered_json consts = ordered_json::object();
    for (const auto& [k, v] : c.metric.constants) consts[k] = v;
    m["constants"] = consts;
    if (c.metric.validity) m["validity"] = rect(*c.metric.validity);
    if (c.metric.theta_period) m["theta_period"] = *c.metric.theta_period;
    j["metric"] = m;
  }
  if (c.distance_function) j["distance_function"] = *c.distance_function;
  if (c.domain) {
    const DomainSpec& d = *c.domain;
    ordered_json o;
    o["shape"] = to_string(d.shape);
    switch (d.shape) {
      case DomainShape::Rectangle: o["extents"] = rect(d.extents); break;
      case DomainShape::PeriodicBand:
        o["extents"] = ordered_json::array({d.extents.u0, d.extents.u1});
        if (d.theta_period) o["period"] = *d.theta_period;
        break;
      case DomainShape::Disk:
        o["center"] = ordered_json::array({d.center.u, d.center.v});
        o["radius"] = d.radius;
        break;
      case DomainShape::Annulus:
        o["center"] = ordered_json::array({d.center.u, d.center.v});
        o["r_in"] = d.r_in;
        o["r_out"] = d.r_out;
        break;
    }
    o["resolution"] = d.n;
    j["domain"] = o;
  }
  ordered_json s;
  s["tolerance"] = c.solver.tolerance;
  s["seed"] = c.solver.seed;
  s["dense_threshold"] = c.solver.dense_threshold;
  s["quadrature_order"] = c.solver.quadrature_order;
  s["levels"] = c.solver.levels;
  s["threads"] = c.solver.threads;
  j["solver"] = s;
  if (!c.checks.empty()) {
    ordered_json list = ordered_json::array();
    for (const auto& k : c.checks) {
      ordered_json e;
      e["type"] = to_string(k.kind);
      switch (k.kind) {
        case CheckKind::Inequality: e["levels"] = k.levels; break;
        case CheckKind::Lemma:
        case CheckKind::HodgeDims: break;
        case CheckKind::Union: e["count"] = k.count; break;
        case CheckKind::Curvature:
          if (k.region) e["region"] = rect(*k.region);
          e["grid"] = k.grid;
          break;
        case CheckKind::Convergence:
          e["levels"] = k.levels;
          e["bc"] = to_string(k.bc);
          e["index"] = k.index;
          if (std::isfinite(k.reference)) e["reference"] = k.reference;
          e["limit_tolerance"] = k.limit_tolerance;
          break;
        case CheckKind::Oracle: e["max_index"] = k.max_index; break;
      }
      list.push_back(e);
    }
    j["checks"] = list;
  }
  ordered_json o = ordered_json::object();
  if (!c.output.report.empty()) o["report"] = c.output.report;
  if (!c.output.csv_dir.empty()) o["csv_dir"] = c.output.csv_dir;
  j["output"] = o;
  return j;
}

RunContext build_context(RunConfig& c) {
  RunContext ctx;
  if (c.family) {
    MetricParams p = c.metric;
    p.constants = expression_constants(c.metric);
    try {
      ctx.metric.emplace(builtin_metric(*c.family, p));
    } catch (const Error& e) {
      throw ConfigError("metric", e.what());
    }
    c.metric.validity = ctx.metric->validity();
    c.metric.theta_period = ctx.metric->theta_period();
  }
  if (c.domain && c.domain->shape == DomainShape::PeriodicBand) {
    if (!c.domain->theta_period) {
      if (!ctx.metric || !ctx.metric->theta_period())
        throw ConfigError("domain.period", "periodic_band needs a period (or a metric theta_period)");
      c.domain->theta_period = ctx.metric->theta_period();
    }
    const double v0 = ctx.metric ? ctx.metric->validity().v0 : 0.0;
    c.domain->extents.v0 = v0;
    c.domain->extents.v1 = v0 + *c.domain->theta_period;
  }
  if (c.domain) {
    try {
      (void)triangulate(*c.domain);
    } catch (const InputError& e) {
      throw ConfigError("domain", e.what());
    }
    if (ctx.metric) {
      const Rect box = c.domain->bounding_box();
      const Rect& val = ctx.metric->validity();
      if (!val.contains({box.u0, box.v0}) || !val.contains({box.u1, box.v1}))
        throw ConfigError("domain", "domain box leaves the metric validity rectangle");
    }
  }
  if (c.distance_function) {
    Expr f = parse(*c.distance_function);
    for (const auto& [name, value] : expression_constants(c.metric)) f = f.substitute(name, value);
    try {
      ctx.distance.emplace(*ctx.metric, f);
    } catch (const Error& e) {
      throw ConfigError("distance_function", e.what());
    }
    const Rect region =
        c.domain ? c.domain->bounding_box().enlarged(0.05).intersected(ctx.metric->validity()) : ctx.metric->validity();
    const GridSpec grid{region, 16, 16};
    for (int i = 0; i < grid.nu; ++i) {
      for (int jj = 0; jj < grid.nv; ++jj) {
        const ChartPoint p = grid.point(i, jj);
        double defect = 0.0;
        try {
          defect = unit_gradient_defect(*ctx.metric, *ctx.distance, p);
        } catch (const EvalError& e) {
          throw ConfigError("distance_function", e.what());
        }
        if (!(std::abs(defect) <= 1e-10)) {
          std::ostringstream os;
          os.precision(17);
          os << "gradient is not unit length at (" << p.u << ", " << p.v << "): |grad f|^2 - 1 = " << defect;
          throw ConfigError("distance_function", os.str());
        }
      }
    }
  }
  return ctx;
}

}  // namespace dneig
