// Command-line front end. Exit codes: 0 all checks pass, 1 a check failed, 2 invalid input.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dneig/config.hpp"
#include "dneig/report.hpp"
#include "dneig/runner.hpp"

namespace {

using namespace dneig;

struct Common {
  std::string config_path;
  std::string report_path;
  std::string csv_dir;
  bool parallel = false;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c, bool with_parallel) {
  app->add_option("config", c.config_path, "JSON run configuration")->required();
  app->add_option("--report", c.report_path, "report file (overrides output.report)");
  app->add_option("--csv-dir", c.csv_dir, "directory for CSV tables (overrides output.csv_dir)");
  app->add_option("--threads", c.threads, "assembly threads (overrides solver.threads)")->check(CLI::PositiveNumber);
  if (with_parallel) app->add_flag("--parallel", c.parallel, "run independent checks concurrently");
}

RunConfig load(const Common& c, const ConfigNeeds& needs) {
  RunConfig cfg = parse_config(read_config_file(c.config_path), needs);
  if (!c.report_path.empty()) cfg.output.report = c.report_path;
  if (!c.csv_dir.empty()) cfg.output.csv_dir = c.csv_dir;
  if (c.threads > 0) cfg.solver.threads = c.threads;
  return cfg;
}

int execute(RunConfig& cfg, bool parallel) {
  const RunContext ctx = build_context(cfg);
  const RunOutcome out = run_all(cfg, ctx, parallel);
  for (const auto& r : out.reports) {
    std::cout << summary_line(r) << '\n';
    for (const auto& n : r.notes)
      if (!r.pass) std::cout << "  note: " << n << '\n';
  }
  write_outputs(cfg, out);
  return exit_code(out);
}

// Subcommands that wrap a single check replace the configured checks list.
int single_check(const Common& c, CheckConfig check, const ConfigNeeds& needs) {
  RunConfig cfg = load(c, needs);
  cfg.checks = {check};
  return execute(cfg, false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-Neumann eigenvalue inequality verifier"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run every check listed in the configuration");
  add_common(run, run_opts, true);

  Common verify_opts;
  int verify_levels = 0;
  auto* verify = app.add_subcommand("verify", "check the eigenvalue inequality on the configured domain");
  add_common(verify, verify_opts, false);
  verify->add_option("--levels", verify_levels, "refinement levels (default solver.levels)")->check(CLI::PositiveNumber);

  Common spec_opts;
  std::string spec_bc = "dirichlet";
  int spec_count = 10;
  std::string spec_csv;
  std::string spec_export;
  double spec_gap = 1e-6;
  auto* spectrum = app.add_subcommand("spectrum", "print the smallest eigenvalues as CSV");
  spectrum->add_option("config", spec_opts.config_path, "JSON run configuration")->required();
  spectrum->add_option("--bc", spec_bc, "dirichlet, neumann or oneform")
      ->check(CLI::IsMember({"dirichlet", "neumann", "oneform"}));
  spectrum->add_option("--count", spec_count, "number of eigenvalues")->check(CLI::PositiveNumber);
  spectrum->add_option("--csv", spec_csv, "write the table to this file instead of stdout");
  spectrum->add_option("--export-matrices", spec_export, "directory for MatrixMarket dumps of the pencil");
  spectrum->add_option("--rel-gap", spec_gap, "relative gap used to group multiplicities");
  spectrum->add_option("--threads", spec_opts.threads, "assembly threads")->check(CLI::PositiveNumber);

  Common curv_opts;
  int curv_grid = 0;
  std::vector<double> curv_region;
  auto* curvature = app.add_subcommand("curvature-check", "sample the curvature condition on a grid");
  add_common(curvature, curv_opts, false);
  curvature->add_option("--grid", curv_grid, "samples per direction")->check(CLI::Range(2, 100000));
  curvature->add_option("--region", curv_region, "u0 u1 v0 v1")->expected(4);

  Common conv_opts;
  std::string conv_bc = "dirichlet";
  int conv_levels = 4;
  int conv_index = 0;
  double conv_reference = std::numeric_limits<double>::quiet_NaN();
  auto* convergence = app.add_subcommand("convergence", "eigenvalue convergence under refinement");
  add_common(convergence, conv_opts, false);
  convergence->add_option("--bc", conv_bc, "dirichlet or neumann")->check(CLI::IsMember({"dirichlet", "neumann"}));
  convergence->add_option("--levels", conv_levels, "refinement levels (>= 3)")->check(CLI::Range(3, 12));
  convergence->add_option("--index", conv_index, "1-based eigenvalue index")->check(CLI::PositiveNumber);
  convergence->add_option("--reference", conv_reference, "known limit to compare against");

  int oracle_max = 3;
  auto* oracle = app.add_subcommand("oracle", "print the flat-cylinder Dirichlet and Neumann lists");
  oracle->add_option("--max-index", oracle_max, "enumeration bound")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      RunConfig cfg = load(run_opts, ConfigNeeds{.checks = true});
      return execute(cfg, run_opts.parallel);
    }
    if (*verify) {
      CheckConfig k;
      k.kind = CheckKind::Inequality;
      RunConfig probe = load(verify_opts, ConfigNeeds{.metric = true, .distance_function = true, .domain = true});
      k.levels = verify_levels > 0 ? verify_levels : probe.solver.levels;
      return single_check(verify_opts, k, {.metric = true, .distance_function = true, .domain = true});
    }
    if (*spectrum) {
      RunConfig cfg = load(spec_opts, ConfigNeeds{.metric = true, .domain = true});
      const RunContext ctx = build_context(cfg);
      const SpectralResult s = compute_spectrum(cfg, ctx, *boundary_tag_from_string(spec_bc), spec_count, spec_export);
      if (spec_csv.empty()) {
        write_spectrum_csv(s, std::cout, spec_gap);
      } else {
        std::ofstream os(spec_csv, std::ios::binary);
        if (!os) throw InputError("cannot write '" + spec_csv + "'");
        write_spectrum_csv(s, os, spec_gap);
      }
      if (!s.converged) {
        std::cerr << "eigensolver did not converge to the requested tolerance\n";
        return 1;
      }
      return 0;
    }
    if (*curvature) {
      CheckConfig k;
      k.kind = CheckKind::Curvature;
      if (curv_grid > 0) k.grid = curv_grid;
      if (!curv_region.empty()) {
        if (!(curv_region[1] > curv_region[0]) || !(curv_region[3] > curv_region[2]))
          throw ConfigError("--region", "needs u1 > u0 and v1 > v0");
        k.region = Rect{curv_region[0], curv_region[1], curv_region[2], curv_region[3]};
      } else {
        // a region configured on a curvature check in the file takes precedence over the domain box
        const RunConfig probe = load(curv_opts, {});
        for (const auto& c : probe.checks)
          if (c.kind == CheckKind::Curvature) {
            k.region = c.region;
            if (curv_grid == 0) k.grid = c.grid;
            break;
          }
      }
      return single_check(curv_opts, k, {.metric = true, .distance_function = true, .domain = !k.region});
    }
    if (*convergence) {
      CheckConfig k;
      k.kind = CheckKind::Convergence;
      k.bc = *boundary_tag_from_string(conv_bc);
      k.levels = conv_levels;
      k.index = conv_index > 0 ? conv_index : (k.bc == BoundaryTag::Neumann ? 2 : 1);
      k.reference = conv_reference;
      return single_check(conv_opts, k, {.metric = true, .domain = true});
    }
    if (*oracle) {
      const CylinderSpectra s = cylinder_oracle(oracle_max);
      std::cout << join_values(s.dirichlet) << '\n' << join_values(s.neumann) << '\n';
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
