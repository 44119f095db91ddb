#include "dneig/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>

#include "dneig/assembly.hpp"
#include "dneig/kernels.hpp"

namespace dneig {

namespace fs = std::filesystem;

VerifyOptions verify_options(const RunConfig& c) {
  VerifyOptions o;
  o.solver.tolerance = c.solver.tolerance;
  o.solver.seed = c.solver.seed;
  o.solver.dense_threshold = c.solver.dense_threshold;
  o.assembly.quadrature_degree = c.solver.quadrature_order;
  o.assembly.threads = c.solver.threads;
  return o;
}

VerificationReport run_check(const RunConfig& c, const RunContext& ctx, const CheckConfig& k) {
  const VerifyOptions opts = verify_options(c);
  switch (k.kind) {
    case CheckKind::Inequality: return verify_inequality(*c.domain, *ctx.metric, *ctx.distance, k.levels, opts);
    case CheckKind::Lemma: return lemma_check(*c.domain, *ctx.metric, *ctx.distance, opts);
    case CheckKind::Union: return spectrum_union_check(*c.domain, *ctx.metric, opts, k.count);
    case CheckKind::HodgeDims: return hodge_dimension_check(triangulate(*c.domain), c.domain->describe());
    case CheckKind::Curvature: {
      const Rect region =
          k.region ? *k.region
                   : c.domain->bounding_box().enlarged(opts.curvature_enlarge).intersected(ctx.metric->validity());
      return curvature_check_report(*ctx.metric, *ctx.distance, region, k.grid, opts.curvature_tolerance);
    }
    case CheckKind::Convergence:
      return convergence_study(*c.domain, *ctx.metric, k.bc, k.levels, k.index, opts, k.reference,
                               k.limit_tolerance);
    case CheckKind::Oracle: return cylinder_oracle_check(k.max_index);
  }
  throw InputError("unknown check");
}

namespace {

struct Attempt {
  VerificationReport report;
  bool input_error = false;
};

Attempt attempt(const RunConfig& c, const RunContext& ctx, const CheckConfig& k) {
  const auto t0 = std::chrono::steady_clock::now();
  Attempt a;
  try {
    a.report = run_check(c, ctx, k);
    return a;
  } catch (const InputError& e) {
    a.input_error = true;
    a.report.notes.push_back(std::string("invalid input: ") + e.what());
  } catch (const std::exception& e) {
    a.report.notes.push_back(std::string("error: ") + e.what());
  }
  a.report.check = to_string(k.kind);
  if (c.domain) a.report.domain = c.domain->describe();
  if (ctx.metric) a.report.metric = ctx.metric->describe();
  a.report.pass = false;
  a.report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return a;
}

}  // namespace

RunOutcome run_all(const RunConfig& c, const RunContext& ctx, bool parallel) {
  RunMetadata meta;
  meta.started_at = utc_timestamp();
  meta.parallel = parallel;
  meta.kernel_backend = kernels::to_string(kernels::active_backend());
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Attempt> attempts;
  if (parallel) {
    std::vector<std::future<Attempt>> futures;
    for (const auto& k : c.checks)
      futures.push_back(std::async(std::launch::async, [&c, &ctx, &k] { return attempt(c, ctx, k); }));
    for (auto& f : futures) attempts.push_back(f.get());
  } else {
    for (const auto& k : c.checks) attempts.push_back(attempt(c, ctx, k));
  }

  RunOutcome out;
  for (auto& a : attempts) {
    out.input_error = out.input_error || a.input_error;
    meta.check_wall_time_s.push_back(a.report.wall_time_s);
    out.reports.push_back(std::move(a.report));
  }
  meta.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  meta.finished_at = utc_timestamp();
  out.report = run_report_json(resolved_json(c), out.reports, meta);
  return out;
}

int exit_code(const RunOutcome& o) {
  if (o.input_error) return 2;
  for (const auto& r : o.reports)
    if (!r.pass) return 1;
  return 0;
}

namespace {

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InputError("cannot write '" + p.string() + "'");
  return os;
}

}  // namespace

void write_outputs(const RunConfig& c, const RunOutcome& o) {
  if (!c.output.report.empty()) open_output(c.output.report) << dump_report(o.report);
  if (!c.output.csv_dir.empty()) {
    for (std::size_t i = 0; i < o.reports.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%02zu_%s.csv", i + 1, o.reports[i].check.c_str());
      std::ofstream os = open_output(fs::path(c.output.csv_dir) / name);
      write_report_csv(o.reports[i], os);
    }
  }
}

SpectralResult compute_spectrum(const RunConfig& c, const RunContext& ctx, BoundaryTag bc, int count,
                                const std::string& export_dir) {
  const VerifyOptions opts = verify_options(c);
  const Mesh mesh = triangulate(*c.domain);
  auto dump = [&](const char* file, const SparseMatrix& a, MatrixMarketSymmetry sym) {
    if (export_dir.empty()) return;
    std::ofstream os = open_output(fs::path(export_dir) / file);
    write_matrix_market(a, os, sym);
  };
  if (bc == BoundaryTag::OneForm) {
    const OneFormOperators ops = assemble_oneform(mesh, *ctx.metric, opts.assembly);
    dump("M0.mtx", ops.M0, MatrixMarketSymmetry::Symmetric);
    dump("M1.mtx", ops.M1, MatrixMarketSymmetry::Symmetric);
    dump("M2.mtx", ops.M2, MatrixMarketSymmetry::Symmetric);
    dump("d0.mtx", ops.d0, MatrixMarketSymmetry::General);
    dump("d1.mtx", ops.d1, MatrixMarketSymmetry::General);
    return solve_oneform(ops, count, opts.solver);
  }
  const ScalarOperators ops = assemble_scalar(mesh, *ctx.metric, opts.assembly);
  if (bc == BoundaryTag::Dirichlet) {
    const ReducedOperators red = apply_dirichlet(ops);
    dump("K.mtx", red.K, MatrixMarketSymmetry::Symmetric);
    dump("M.mtx", red.M, MatrixMarketSymmetry::Symmetric);
    return solve_smallest(red.K, red.M, count, opts.solver, bc);
  }
  dump("K.mtx", ops.K, MatrixMarketSymmetry::Symmetric);
  dump("M.mtx", ops.M, MatrixMarketSymmetry::Symmetric);
  return solve_smallest(ops.K, ops.M, count, opts.solver, bc);
}

}  // namespace dneig
