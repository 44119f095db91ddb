#include <cmath>
#include <numbers>
#include <sstream>

#include "dneig/config.hpp"
#include "dneig/report.hpp"
#include "dneig/runner.hpp"
#include "doctest.h"

using namespace dneig;
using nlohmann::json;

namespace {

json flat_square() {
  return json::parse(R"({
    "spec_version": 1,
    "metric": {"family": "euclidean"},
    "distance_function": "x",
    "domain": {"shape": "rectangle", "extents": [0, 3.141592653589793, 0, 3.141592653589793], "resolution": 8},
    "checks": ["inequality"]
  })");
}

std::string field_of(const json& j, const ConfigNeeds& needs = {}) {
  try {
    parse_config(j, needs);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

std::string build_field_of(json j) {
  try {
    RunConfig c = parse_config(j, needs_of({}));
    build_context(c);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("a minimal configuration parses with defaults") {
  RunConfig c = parse_config(flat_square(), {});
  CHECK(c.family == MetricFamily::Euclidean);
  CHECK(c.solver.tolerance == 1e-9);
  CHECK(c.solver.seed == 42u);
  CHECK(c.solver.quadrature_order == 2);
  REQUIRE(c.checks.size() == 1u);
  CHECK(c.checks[0].kind == CheckKind::Inequality);
  const ConfigNeeds n = needs_of(c.checks);
  CHECK(n.metric);
  CHECK(n.distance_function);
  CHECK(n.domain);
}

TEST_CASE("schema violations name the offending field") {
  json j = flat_square();
  j["spec_version"] = 2;
  CHECK(field_of(j) == "spec_version");

  j = flat_square();
  j["domain"]["resolution"] = 1;
  CHECK(field_of(j) == "domain.resolution");

  j = flat_square();
  j["checks"] = json::array();
  CHECK(field_of(j, {.checks = true}) == "checks");

  j = flat_square();
  j["checks"] = {"nonsense"};
  CHECK(field_of(j).starts_with("checks"));

  j = flat_square();
  j["surprise"] = 1;
  CHECK(field_of(j) == "surprise");

  j = flat_square();
  j["solver"] = {{"quadrature_order", 3}};
  CHECK(field_of(j) == "solver.quadrature_order");

  j = flat_square();
  j.erase("metric");
  CHECK(field_of(j, {.metric = true}) == "metric");

  j = flat_square();
  j["distance_function"] = "x +";
  CHECK(field_of(j) == "distance_function");

  j = flat_square();
  j["metric"] = {{"family", "warped"}, {"phi", "cosh(q)"}};
  CHECK(field_of(j).starts_with("metric"));
}

TEST_CASE("context construction rejects bad metrics and distance functions") {
  json j = flat_square();
  j["distance_function"] = "2*x";
  CHECK(build_field_of(j) == "distance_function");

  j = flat_square();
  j["metric"] = {{"family", "warped"}, {"phi", "r"}, {"validity", {-1, 1, 0, 6.283185307179586}}};
  j["distance_function"] = "r";
  j["domain"] = {{"shape", "periodic_band"}, {"extents", {0.5, 1}}, {"resolution", 4}};
  CHECK(build_field_of(j) == "metric");

  j = flat_square();
  j["domain"]["extents"] = {0, 1, -1, 1};
  j["metric"] = {{"family", "hyperbolic_half_plane"}};
  j["distance_function"] = "-log(y)";
  CHECK(build_field_of(j).starts_with("domain"));

  CHECK(build_field_of(flat_square()) == "<none>");
}

TEST_CASE("constants pi and e are available and overridable") {
  MetricParams p;
  auto c = expression_constants(p);
  CHECK(c.at("pi") == std::numbers::pi);
  CHECK(c.at("e") == std::numbers::e);
  p.constants["e"] = 2.0;
  CHECK(expression_constants(p).at("e") == 2.0);
}

TEST_CASE("resolved configuration reproduces itself") {
  json j = flat_square();
  j["checks"] = {"inequality", {{"type", "convergence"}, {"bc", "neumann"}}, {{"type", "oracle"}, {"max_index", 4}}};
  RunConfig c = parse_config(j, {});
  build_context(c);
  const auto resolved = resolved_json(c);
  RunConfig again = parse_config(json::parse(resolved.dump()), {});
  build_context(again);
  CHECK(resolved_json(again) == resolved);
  CHECK(again.checks[1].index == 2);
  CHECK(again.checks[1].levels == 4);
  CHECK(again.checks[2].max_index == 4);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 1.7976931348623157e308})
    CHECK(parse_double(format_double(v)) == v);
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double("-inf") == -INFINITY);
  CHECK_THROWS_AS(parse_double("1.0x"), InputError);
}

TEST_CASE("report JSON and CSV round trips") {
  RunConfig c = parse_config(flat_square(), {});
  RunContext ctx = build_context(c);
  const VerificationReport r = run_check(c, ctx, c.checks[0]);
  const VerificationReport back = report_from_json(report_to_json(r));
  CHECK(report_to_json(back) == report_to_json(r));
  CHECK(rederive_pass(back) == r.pass);

  std::stringstream csv;
  write_report_csv(r, csv);
  const auto rows = read_report_csv(csv);
  std::size_t expected = r.levels.size() + r.quantities.size() + r.tolerances.size();
  for (const auto& s : r.series) expected += s.values.size();
  CHECK(rows.size() == expected);
  for (const auto& row : rows) {
    if (row.section == "quantity") {
      const double v = r.quantity(row.name);
      CHECK(std::abs(row.value - v) <= 1e-15 * std::abs(v));
    } else if (row.section == "series") {
      const double v = r.series_values(row.name).at(static_cast<std::size_t>(row.index));
      CHECK(std::abs(row.value - v) <= 1e-15 * std::abs(v));
    }
  }
}

TEST_CASE("run_all is deterministic and keeps configuration order in parallel") {
  json j = flat_square();
  j["checks"] = {"oracle", "hodge-dims", "inequality", "lemma"};
  RunConfig c = parse_config(j, {});
  RunContext ctx = build_context(c);
  const RunOutcome a = run_all(c, ctx, false);
  const RunOutcome b = run_all(c, ctx, true);
  REQUIRE(a.reports.size() == 4u);
  CHECK(a.reports[0].check == "oracle");
  CHECK(a.reports[1].check == "hodge");
  CHECK(a.reports[2].check == "inequality");
  CHECK(a.reports[3].check == "lemma");
  CHECK(a.report.at("checks") == b.report.at("checks"));
  CHECK(a.report.at("config") == b.report.at("config"));
  CHECK(exit_code(a) == 0);
  CHECK(a.report.at("metadata").at("parallel") == false);
  CHECK(b.report.at("metadata").at("parallel") == true);
}

TEST_CASE("a failing check yields exit code 1 and an oversized check exit code 2") {
  json j = flat_square();
  j["metric"] = {{"family", "warped"}, {"phi", "sqrt(r^2 + c^2)"}, {"constants", {{"c", 1}}}, {"validity", {-2, 2, 0, 6.283185307179586}}};
  j["distance_function"] = "r";
  j["domain"] = {{"shape", "periodic_band"}, {"extents", {-1.5, 1.5}}, {"resolution", 4}};
  j["checks"] = {"curvature"};
  RunConfig c = parse_config(j, {});
  RunContext ctx = build_context(c);
  CHECK(exit_code(run_all(c, ctx, false)) == 1);

  json big = flat_square();
  big["domain"]["resolution"] = 40;
  big["checks"] = {"union"};
  RunConfig cb = parse_config(big, {});
  RunContext cbx = build_context(cb);
  const RunOutcome o = run_all(cb, cbx, false);
  CHECK(o.input_error);
  CHECK_FALSE(o.reports.at(0).pass);
  CHECK(exit_code(o) == 2);
}
