#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "dneig/error.hpp"
#include "dneig/verify.hpp"
#include "doctest.h"

using namespace dneig;

namespace {

constexpr double kPi = std::numbers::pi;

ChartMetric flat() { return builtin_metric(MetricFamily::Euclidean, {}); }
ChartMetric half_plane() { return builtin_metric(MetricFamily::HyperbolicHalfPlane, {}); }
ChartMetric warped(const char* phi, MetricFamily fam = MetricFamily::Warped, std::map<std::string, double> c = {}) {
  MetricParams p;
  p.phi = phi;
  p.constants = std::move(c);
  return builtin_metric(fam, p);
}

DomainSpec square(int n) { return DomainSpec::rectangle({0, kPi, 0, kPi}, n); }
DomainSpec band(int n) { return DomainSpec::periodic_band(0, kPi, 2 * kPi, n); }
DomainSpec hyperbolic_rect(int n) { return DomainSpec::rectangle({0, 1, 1, std::numbers::e}, n); }

void check_rederivable(const VerificationReport& r) {
  INFO(r.check);
  CHECK(rederive_pass(r) == r.pass);
}

VerificationReport with_quantity(VerificationReport r, const std::string& name, double v) {
  for (auto& q : r.quantities)
    if (q.name == name) q.value = v;
  return r;
}

VerificationReport with_series_entry(VerificationReport r, const std::string& name, std::size_t i, double v) {
  for (auto& s : r.series)
    if (s.name == name) s.values.at(i) = v;
  return r;
}

}  // namespace

TEST_CASE("inequality on the flat square") {
  const ChartMetric g = flat();
  const DistanceFunction f(g, parse("x"));
  const VerificationReport r = verify_inequality(square(16), g, f, 2);
  CHECK(r.pass);
  CHECK(r.quantity("beta1") == 0.0);
  CHECK(r.quantity("neumann_index") == 3.0);
  CHECK(r.levels == std::vector<int>{16, 32});
  CHECK(std::abs(r.quantity("margin") - 1.0) <= 0.02);
  CHECK(r.has_quantity("strict_margin"));
  CHECK(r.has_quantity("extrapolated_margin"));
  CHECK(std::abs(r.quantity("extrapolated_margin") - 1.0) <= 1e-3);
  CHECK(r.series_values("lambda1").size() == 2u);
  check_rederivable(r);
  CHECK_FALSE(rederive_pass(with_series_entry(r, "margin", 1, -1.0)));
}

TEST_CASE("inequality on the flat cylinder band is an equality case") {
  const ChartMetric g = warped("1");
  const DistanceFunction f(g, parse("r"));
  const VerificationReport r = verify_inequality(band(16), g, f, 1);
  CHECK(r.pass);
  CHECK(r.quantity("beta1") == 1.0);
  CHECK(r.quantity("neumann_index") == 2.0);
  CHECK(std::abs(r.quantity("lambda1") - 1.0) <= 0.01);
  CHECK(std::abs(r.quantity("margin")) <= r.series_values("tol_h")[0]);
  CHECK_FALSE(r.has_quantity("strict_margin"));
  check_rederivable(r);
}

TEST_CASE("inequality on the hyperbolic rectangle has a positive strict margin") {
  const ChartMetric g = half_plane();
  const DistanceFunction f(g, parse("-log(y)"));
  const VerificationReport r = verify_inequality(hyperbolic_rect(8), g, f, 2);
  CHECK(r.pass);
  CHECK(r.quantity("beta1") == 0.0);
  CHECK(r.quantity("strict_margin") > 0.0);
  CHECK(r.quantity("extrapolated_margin") > 0.0);
  check_rederivable(r);
}

TEST_CASE("inequality refuses to run when the curvature condition fails") {
  const ChartMetric g = warped("sqrt(r^2 + c^2)", MetricFamily::Warped, {{"c", 1.0}});
  const DistanceFunction f(g, parse("r"));
  const VerificationReport r = verify_inequality(DomainSpec::periodic_band(-1.5, 1.5, 2 * kPi, 8), g, f, 1);
  CHECK_FALSE(r.pass);
  CHECK(r.quantity("precondition_passed") == 0.0);
  CHECK(r.quantity("curvature_min_margin") < 0.0);
  CHECK_FALSE(r.notes.empty());
  check_rederivable(r);
}

TEST_CASE("curvature report") {
  const ChartMetric g = warped("sqrt(r^2 + c^2)", MetricFamily::Warped, {{"c", 1.0}});
  const DistanceFunction f(g, parse("r"));
  const VerificationReport ok = curvature_check_report(g, f, {-0.9, 0.9, 0, 2 * kPi}, 32);
  CHECK(ok.pass);
  CHECK(ok.quantity("min_margin") == doctest::Approx(0.19 / (1.81 * 1.81)).epsilon(1e-12));
  const VerificationReport bad = curvature_check_report(g, f, {-1.5, 1.5, 0, 2 * kPi}, 32);
  CHECK_FALSE(bad.pass);
  CHECK(std::abs(bad.quantity("argmin_u")) == doctest::Approx(1.5));
  check_rederivable(ok);
  check_rederivable(bad);
}

TEST_CASE("lemma check on the flat square and the cusp band") {
  const ChartMetric g = flat();
  const VerificationReport r = lemma_check(square(8), g, DistanceFunction(g, parse("x")));
  CHECK(r.pass);
  CHECK(r.levels == std::vector<int>{8, 16});
  CHECK(std::abs(r.quantity("alpha_nu") - r.quantity("lambda1")) <= 1e-9 * r.quantity("lambda1"));
  check_rederivable(r);
  CHECK_FALSE(rederive_pass(with_series_entry(r, "cross", 0, 0.5 * r.quantity("lambda1"))));

  const ChartMetric cusp = warped("exp(r)", MetricFamily::Twisted);
  const VerificationReport c = lemma_check(DomainSpec::periodic_band(-1, 0, 2 * kPi, 8), cusp,
                                           DistanceFunction(cusp, parse("r")));
  CHECK(c.pass);
  check_rederivable(c);
}

TEST_CASE("spectrum union identity") {
  struct Case {
    DomainSpec d;
    ChartMetric g;
    int beta1;
  };
  const std::vector<Case> cases = {{square(4), flat(), 0}, {band(4), warped("1"), 1}, {hyperbolic_rect(4), half_plane(), 0}};
  for (const auto& c : cases) {
    const VerificationReport r = spectrum_union_check(c.d, c.g, {}, 6);
    INFO(r.domain);
    CHECK(r.pass);
    CHECK(r.quantity("zero_modes") == c.beta1);
    CHECK(r.quantity("max_relative_difference") <= 1e-8);
    check_rederivable(r);
    CHECK_FALSE(rederive_pass(with_quantity(r, "zero_modes", c.beta1 + 1.0)));
  }
  CHECK_THROWS_AS(spectrum_union_check(square(40), flat()), InputError);
}

TEST_CASE("hodge dimension identity on every shape") {
  const std::vector<DomainSpec> shapes = {square(4), band(4), DomainSpec::disk({0, 0}, 1, 2),
                                          DomainSpec::disk({0, 0}, 1, 4), DomainSpec::annulus({0, 0}, 0.5, 1, 4)};
  for (const auto& d : shapes) {
    const Mesh m = triangulate(d);
    const VerificationReport r = hodge_dimension_check(m, d.describe());
    INFO(d.describe());
    CHECK(r.pass);
    check_rederivable(r);
  }
  const VerificationReport sq = hodge_dimension_check(triangulate(square(4)));
  CHECK(sq.quantity("rank_d0") == 24.0);
  CHECK(sq.quantity("rank_d1") == 32.0);
  CHECK(sq.quantity("edges") == 56.0);
  const VerificationReport b = hodge_dimension_check(triangulate(band(4)));
  CHECK(b.quantity("rank_d0") == 19.0);
  CHECK(b.quantity("rank_d1") == 32.0);
  CHECK(b.quantity("beta1") == 1.0);
  CHECK(b.quantity("edges") == 52.0);
}

TEST_CASE("modular rank matches rational rank on small integer matrices") {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> v(-2, 2);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 3 + trial % 5, cols = 2 + trial % 7, true_rank = 1 + trial % std::min(rows, cols);
    Eigen::MatrixXd a(rows, true_rank), b(true_rank, cols);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = v(rng);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = v(rng);
    const Eigen::MatrixXd prod = a * b;
    const int expect = static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(prod).rank());
    CHECK(modular_rank(SparseMatrix(prod.sparseView())) == expect);
  }
  CHECK(modular_rank(SparseMatrix(Eigen::MatrixXd::Identity(5, 5).sparseView())) == 5);
  CHECK(modular_rank(SparseMatrix(4, 4)) == 0);
}

TEST_CASE("cylinder oracle") {
  const CylinderSpectra s = cylinder_oracle(10);
  const std::vector<double> d8 = {1, 2, 2, 4, 5, 5, 5, 5};
  const std::vector<double> n9 = {0, 1, 1, 1, 2, 2, 4, 4, 4};
  CHECK(std::vector<double>(s.dirichlet.begin(), s.dirichlet.begin() + 8) == d8);
  CHECK(std::vector<double>(s.neumann.begin(), s.neumann.begin() + 9) == n9);
  for (std::size_t m = 1; m <= 20; ++m) CHECK(s.neumann[m] <= s.dirichlet[m - 1]);
  const VerificationReport r = cylinder_oracle_check(10);
  CHECK(r.pass);
  CHECK(r.quantity("checked_m") == 20.0);
  check_rederivable(r);
  CHECK_FALSE(rederive_pass(with_series_entry(r, "neumann", 1, 100.0)));
  CHECK_THROWS_AS(cylinder_oracle(0), InputError);
  CHECK(cylinder_oracle_check(3).quantity("checked_m") < 20.0);
}

TEST_CASE("convergence studies") {
  const VerificationReport d = convergence_study(square(8), flat(), BoundaryTag::Dirichlet, 3, 1, {}, 2.0);
  CHECK(d.pass);
  CHECK(d.quantity("order") >= 1.8);
  CHECK(d.quantity("order") <= 2.2);
  CHECK(std::abs(d.quantity("extrapolated") - 2.0) <= 2e-3);
  check_rederivable(d);
  CHECK_FALSE(rederive_pass(with_quantity(d, "order", 1.0)));
  CHECK_FALSE(rederive_pass(with_quantity(d, "extrapolated", 2.1)));

  const VerificationReport c = convergence_study(band(8), warped("1"), BoundaryTag::Dirichlet, 3, 1, {}, 1.0, 5e-3);
  CHECK(std::abs(c.quantity("extrapolated") - 1.0) <= 5e-3);
  check_rederivable(c);

  CHECK_THROWS_AS(convergence_study(square(8), flat(), BoundaryTag::Dirichlet, 2, 1), InputError);
  CHECK_THROWS_AS(convergence_study(square(8), flat(), BoundaryTag::OneForm, 3, 1), InputError);
  CHECK_THROWS_AS(convergence_study(square(8), flat(), BoundaryTag::Neumann, 3, 0), InputError);
}

TEST_CASE("mesh size and hierarchy") {
  const Mesh m = triangulate(square(4));
  CHECK(metric_mesh_size(m, flat()) == doctest::Approx(kPi / 4 * std::sqrt(2.0)).epsilon(1e-14));
  const auto h = refinement_hierarchy(square(4), 3);
  REQUIRE(h.size() == 3u);
  CHECK(h[2].num_faces() == 16 * h[0].num_faces());
  CHECK_THROWS_AS(refinement_hierarchy(square(4), 0), InputError);
}
