#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "dneig/error.hpp"
#include "dneig/mesh.hpp"
#include "doctest.h"

using namespace dneig;

namespace {

constexpr double kPi = std::numbers::pi;

DomainSpec square(int n) { return DomainSpec::rectangle({0, kPi, 0, kPi}, n); }
DomainSpec band(int n) { return DomainSpec::periodic_band(0, kPi, 2 * kPi, n); }

std::vector<DomainSpec> all_shapes(int n) {
  return {square(n), band(std::max(n, 3)), DomainSpec::disk({0, 0}, 1.0, n),
          DomainSpec::annulus({0, 0}, 0.5, 1.0, n)};
}

void check_manifold(const Mesh& m) {
  std::vector<int> faces_of(m.num_edges(), 0);
  for (const auto& te : m.triangle_edges())
    for (int e : te.edge) ++faces_of[e];
  for (int e = 0; e < m.num_edges(); ++e) {
    CHECK((faces_of[e] == 1 || faces_of[e] == 2));
    CHECK(m.boundary_edge()[e] == (faces_of[e] == 1));
  }
  for (int t = 0; t < m.num_faces(); ++t) CHECK(m.chart_area(t) > 0.0);
}

using Key = std::pair<long long, long long>;
Key key(ChartPoint p) { return {std::llround(p.u * 1e9), std::llround(p.v * 1e9)}; }

}  // namespace

TEST_CASE("rectangle counts") {
  const Mesh m = triangulate(square(4));
  CHECK(m.num_vertices() == 25);
  CHECK(m.num_edges() == 56);
  CHECK(m.num_faces() == 32);
  CHECK(m.euler_characteristic() == 1);
  CHECK(m.num_boundary_vertices() == 16);
  CHECK(m.num_boundary_edges() == 16);
  CHECK(betti1(m) == 0);
}

TEST_CASE("periodic band counts after seam identification") {
  const Mesh m = triangulate(band(4));
  CHECK(m.num_vertices() == 20);
  CHECK(m.num_edges() == 52);
  CHECK(m.num_faces() == 32);
  CHECK(m.euler_characteristic() == 0);
  CHECK(betti1(m) == 1);
  // boundary: the two circles r = 0 and r = π
  CHECK(m.num_boundary_vertices() == 8);
  CHECK(m.num_boundary_edges() == 8);
  CHECK(m.chart_vertices().size() == 25u);
}

TEST_CASE("disk n=2 is non-degenerate with boundary on the circle") {
  const Mesh m = triangulate(DomainSpec::disk({0.5, -0.25}, 1.0, 2));
  check_manifold(m);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!m.boundary_vertex()[v]) continue;
    const ChartPoint p = m.logical_points()[v];
    CHECK(std::abs(std::hypot(p.u - 0.5, p.v + 0.25) - 1.0) <= 1e-12);
  }
  CHECK(betti1(m) == 0);
}

TEST_CASE("annulus has one hole") {
  const Mesh m = triangulate(DomainSpec::annulus({0, 0}, 0.5, 1.0, 4));
  CHECK(betti1(m) == 1);
  check_manifold(m);
}

TEST_CASE("all shapes are edge-manifold and positively oriented at every level") {
  for (const auto& d : all_shapes(4)) {
    Mesh m = triangulate(d);
    const int chi = m.euler_characteristic();
    CHECK((betti1(m) == 0 || betti1(m) == 1));
    for (int level = 0; level < 3; ++level) {
      check_manifold(m);
      CHECK(m.connected());
      CHECK(m.euler_characteristic() == chi);
      const int faces = m.num_faces();
      m = refine(m);
      CHECK(m.num_faces() == 4 * faces);
    }
  }
}

TEST_CASE("refined rectangle equals the finer triangulation up to ordering") {
  const Mesh a = refine(triangulate(square(4)));
  const Mesh b = triangulate(square(8));
  REQUIRE(a.num_vertices() == b.num_vertices());
  REQUIRE(a.num_edges() == b.num_edges());
  REQUIRE(a.num_faces() == b.num_faces());
  auto canonical = [](const Mesh& m) {
    std::vector<std::array<Key, 3>> tris;
    for (const auto& t : m.triangles()) {
      std::array<Key, 3> k{key(m.chart_vertices()[t[0]]), key(m.chart_vertices()[t[1]]), key(m.chart_vertices()[t[2]])};
      std::sort(k.begin(), k.end());
      tris.push_back(k);
    }
    std::sort(tris.begin(), tris.end());
    return tris;
  };
  CHECK(canonical(a) == canonical(b));
}

TEST_CASE("refined band keeps its topology") {
  const Mesh m = refine(refine(triangulate(band(4))));
  CHECK(betti1(m) == 1);
  CHECK(m.num_boundary_edges() == 2 * 16);
  check_manifold(m);
}

TEST_CASE("degenerate specifications are rejected") {
  CHECK_THROWS_AS(triangulate(square(1)), InputError);
  CHECK_THROWS_AS(triangulate(DomainSpec::rectangle({0, 0, 0, 1}, 4)), InputError);
  CHECK_THROWS_AS(triangulate(band(2)), InputError);
  DomainSpec no_period = band(4);
  no_period.theta_period.reset();
  CHECK_THROWS_AS(triangulate(no_period), InputError);
  CHECK_THROWS_AS(triangulate(DomainSpec::annulus({0, 0}, 1.0, 0.5, 4)), InputError);
  CHECK_THROWS_AS(triangulate(DomainSpec::disk({0, 0}, 0.0, 4)), InputError);
}

TEST_CASE("disconnected meshes have no betti number") {
  const Mesh m({{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}}, {{0, 1, 2}, {3, 4, 5}}, {0, 1, 2, 3, 4, 5},
               std::nullopt);
  CHECK_FALSE(m.connected());
  CHECK_THROWS_AS(betti1(m), InputError);
}

TEST_CASE("OFF export") {
  const Mesh m = triangulate(square(2));
  std::ostringstream os;
  write_off(m, os);
  std::istringstream is(os.str());
  std::string magic;
  std::size_t v = 0, e = 0, f = 0;
  is >> magic >> v >> e >> f;
  CHECK(magic == "OFF");
  CHECK(v == 9);
  CHECK(e == 16);
  CHECK(f == 8);
  std::ostringstream again;
  write_off(m, again);
  CHECK(again.str() == os.str());
  const std::string text = os.str();
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 2 + v + f);
}
