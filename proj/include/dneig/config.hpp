#pragma once

// Run configuration: JSON file -> validated RunConfig -> resolved JSON echoed into reports.
//
// Layout (every block optional unless a requested check needs it):
//   {
//     "spec_version": 1,
//     "metric": {"family": "warped", "phi": "cosh(r)", "constants": {"c": 1},
//                "validity": [u0, u1, v0, v1], "theta_period": 6.283185307179586},
//     "distance_function": "r",
//     "domain": {"shape": "rectangle", "extents": [u0, u1, v0, v1], "resolution": 32},
//     "solver": {"tolerance": 1e-9, "seed": 42, "dense_threshold": 2000, "quadrature_order": 2,
//                "levels": 1, "threads": 1},
//     "checks": ["inequality", {"type": "convergence", "bc": "neumann", "index": 2, "levels": 4}],
//     "output": {"report": "report.json", "csv_dir": "tables"}
//   }
//
// Expressions may use the constants pi and e plus anything listed under metric.constants.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dneig/error.hpp"
#include "dneig/geometry.hpp"
#include "dneig/mesh.hpp"
#include "dneig/spectral.hpp"
#include "json.hpp"

namespace dneig {

/// Schema violation. The message starts with the dotted path of the offending field.
class ConfigError : public InputError {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : InputError("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class CheckKind { Inequality, Lemma, Union, HodgeDims, Curvature, Convergence, Oracle };

const char* to_string(CheckKind k) noexcept;
std::optional<CheckKind> check_kind_from_string(const std::string& s);
std::optional<BoundaryTag> boundary_tag_from_string(const std::string& s);

struct CheckConfig {
  CheckKind kind = CheckKind::Inequality;
  /// Refinement levels; 0 takes solver.levels (inequality) or 4 (convergence).
  int levels = 0;
  /// union: number of positive 1-form eigenvalues compared.
  int count = 10;
  /// curvature: sample region; unset means the enlarged domain box clipped to the validity rectangle.
  std::optional<Rect> region;
  int grid = 64;
  /// convergence
  BoundaryTag bc = BoundaryTag::Dirichlet;
  int index = 0;
  double reference = std::numeric_limits<double>::quiet_NaN();
  double limit_tolerance = 1e-3;
  /// oracle
  int max_index = 10;
};

struct SolverConfig {
  double tolerance = 1e-9;
  std::uint64_t seed = 42;
  int dense_threshold = 2000;
  int quadrature_order = 2;
  int levels = 1;
  int threads = 1;
};

struct OutputConfig {
  /// Empty: no file.
  std::string report;
  std::string csv_dir;
};

struct RunConfig {
  std::optional<MetricFamily> family;
  MetricParams metric;
  std::optional<std::string> distance_function;
  std::optional<DomainSpec> domain;
  SolverConfig solver;
  std::vector<CheckConfig> checks;
  OutputConfig output;
};

/// Which blocks a caller needs. Missing required blocks raise ConfigError.
struct ConfigNeeds {
  bool metric = false;
  bool distance_function = false;
  bool domain = false;
  bool checks = false;
};

/// Needs implied by the checks list.
ConfigNeeds needs_of(const std::vector<CheckConfig>& checks);

/// Validates structure, ranges, and that every expression parses over the right variables.
RunConfig parse_config(const nlohmann::json& j, const ConfigNeeds& needs);

/// Reads and parses a file. A missing file or malformed JSON raises ConfigError.
nlohmann::json read_config_file(const std::string& path);

/// Resolved configuration with all defaults filled in; parse_config(resolved) reproduces it.
nlohmann::ordered_json resolved_json(const RunConfig& c);

/// Objects built from a validated configuration.
struct RunContext {
  std::optional<ChartMetric> metric;
  std::optional<DistanceFunction> distance;
};

/// Builds the metric (positivity-sampled), the distance function (unit gradient sampled on the
/// domain box) and a trial triangulation of the domain. Errors carry the field path. Fills the
/// metric's default validity rectangle and θ-period into c so that resolved_json is complete.
RunContext build_context(RunConfig& c);

/// Metric constants plus pi and e unless overridden.
std::map<std::string, double> expression_constants(const MetricParams& p);

}  // namespace dneig
