#pragma once

// Executes the checks of a validated configuration and assembles the run report.

#include <string>
#include <vector>

#include "dneig/config.hpp"
#include "dneig/report.hpp"
#include "dneig/verify.hpp"

namespace dneig {

VerifyOptions verify_options(const RunConfig& c);

/// Runs one check. Exceptions propagate.
VerificationReport run_check(const RunConfig& c, const RunContext& ctx, const CheckConfig& check);

struct RunOutcome {
  /// One per configured check, in configuration order.
  std::vector<VerificationReport> reports;
  /// A check was rejected as invalid input (for example a size cap).
  bool input_error = false;
  nlohmann::ordered_json report;
};

/// Runs every configured check. A check that throws yields a failed report whose notes carry the
/// error. With parallel = true, checks run concurrently; report order stays the configuration order.
RunOutcome run_all(const RunConfig& c, const RunContext& ctx, bool parallel);

/// 0 all pass, 1 some check failed, 2 invalid input.
int exit_code(const RunOutcome& o);

/// Writes the report file and CSV tables named by c.output (skipped when empty).
void write_outputs(const RunConfig& c, const RunOutcome& o);

/// Smallest eigenpairs of the configured domain and metric. With a non-empty export_dir, the
/// stiffness and mass matrices are written there as K.mtx and M.mtx (Dirichlet: reduced;
/// oneform: M1 and the full 1-form operator blocks d0.mtx, d1.mtx, M0.mtx, M2.mtx).
SpectralResult compute_spectrum(const RunConfig& c, const RunContext& ctx, BoundaryTag bc, int count,
                                const std::string& export_dir = {});

}  // namespace dneig
