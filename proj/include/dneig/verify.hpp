#pragma once

// Instance-level checks of the eigenvalue inequality and of the discrete identities behind it.
//
// Every check returns a VerificationReport whose pass flag is a pure function of the recorded
// quantities and tolerances; rederive_pass() recomputes it from the report alone.

#include <string>
#include <vector>

#include "dneig/assembly.hpp"
#include "dneig/geometry.hpp"
#include "dneig/mesh.hpp"
#include "dneig/spectral.hpp"

namespace dneig {

struct NamedValue {
  std::string name;
  double value;
};

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

struct VerificationReport {
  std::string check;
  std::string domain;
  std::string metric;
  /// Mesh resolution n of each refinement level.
  std::vector<int> levels;
  std::vector<NamedValue> quantities;
  std::vector<NamedSeries> series;
  std::vector<NamedValue> tolerances;
  std::vector<std::string> notes;
  bool pass = false;
  /// Excluded from reproducibility comparisons.
  double wall_time_s = 0.0;

  /// Throws std::out_of_range when absent.
  double quantity(const std::string& name) const;
  const std::vector<double>& series_values(const std::string& name) const;
  double tolerance(const std::string& name) const;
  bool has_quantity(const std::string& name) const noexcept;
};

/// Recomputes the pass flag of any report produced by this module from its recorded numbers.
bool rederive_pass(const VerificationReport& r);

struct VerifyOptions {
  SolverOptions solver;
  AssemblyOptions assembly;
  /// tol_h = factor · λ̂₁ · h² on each level.
  double tol_h_factor = 2.0;
  /// Curvature precondition: bounding box enlarged by this fraction, clipped to the validity region.
  double curvature_enlarge = 0.05;
  int curvature_grid = 64;
  double curvature_tolerance = 1e-9;
};

/// Longest mesh edge measured in the metric at its midpoint.
double metric_mesh_size(const Mesh& mesh, const ChartMetric& metric);

/// Mesh of the given refinement level: level 0 is triangulate(domain), each further level one red refinement.
std::vector<Mesh> refinement_hierarchy(const DomainSpec& domain, int levels);

VerificationReport curvature_check_report(const ChartMetric& metric, const DistanceFunction& f, const Rect& region,
                                          int grid, double tol = 1e-9);

/// Per level: β₁, λ₁, μ₁..μ₄ and the margin λ₁ - μ_{3-β₁} against -tol_h. Refuses to run (pass = false,
/// reason in notes) when the curvature condition fails around the domain.
VerificationReport verify_inequality(const DomainSpec& domain, const ChartMetric& metric, const DistanceFunction& f,
                                     int levels, const VerifyOptions& opts = {});

/// Dirichlet-form terms for the first Dirichlet eigenpair on the base mesh and on one refinement.
VerificationReport lemma_check(const DomainSpec& domain, const ChartMetric& metric, const DistanceFunction& f,
                               const VerifyOptions& opts = {});

/// Mixed 1-form spectrum against the merged scalar spectra on one mesh. Throws InputError above
/// 2000 interior edges.
VerificationReport spectrum_union_check(const DomainSpec& domain, const ChartMetric& metric,
                                        const VerifyOptions& opts = {}, int count = 10);

/// Exact ranks (mod 2³¹-1) of the incidence matrices against β₁, for the full and the relative complex.
VerificationReport hodge_dimension_check(const Mesh& mesh, const std::string& domain_description = {});

/// Rank of an integer matrix over the prime field of order 2³¹-1.
int modular_rank(const SparseMatrix& a);

struct CylinderSpectra {
  std::vector<double> dirichlet;
  std::vector<double> neumann;
};

/// Separation-of-variables spectra of S¹ × [0, π]: i² + j² with |i| ≤ N and 1 ≤ j ≤ N (Dirichlet),
/// 0 ≤ j ≤ N (Neumann). Throws InputError for N < 1.
CylinderSpectra cylinder_oracle(int max_index);

/// Checks μ_{m+1} ≤ λ_m on the enumerated lists for m ≤ min(20, complete range).
VerificationReport cylinder_oracle_check(int max_index);

/// Eigenvalue number `index` (1-based) over refinement levels; Richardson limit from the two finest
/// levels with an order-2 ansatz; order = least-squares slope of log|λ(h) - λ_ext| against log h over
/// all levels but the finest. A non-monotone sequence is reported without a fit (pass = false).
/// When reference is finite, the limit must lie within limit_tolerance (relative) of it.
VerificationReport convergence_study(const DomainSpec& domain, const ChartMetric& metric, BoundaryTag bc, int levels,
                                     int index, const VerifyOptions& opts = {},
                                     double reference = std::numeric_limits<double>::quiet_NaN(),
                                     double limit_tolerance = 1e-3);

}  // namespace dneig
