#include "dneig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dneig/error.hpp"

namespace dneig {

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

const char* to_string(DomainShape s) noexcept {
  switch (s) {
    case DomainShape::Rectangle: return "rectangle";
    case DomainShape::Disk: return "disk";
    case DomainShape::Annulus: return "annulus";
    case DomainShape::PeriodicBand: return "periodic_band";
  }
  return "?";
}

std::optional<DomainShape> domain_shape_from_string(const std::string& s) {
  for (auto d : {DomainShape::Rectangle, DomainShape::Disk, DomainShape::Annulus, DomainShape::PeriodicBand})
    if (s == to_string(d)) return d;
  return std::nullopt;
}

DomainSpec DomainSpec::rectangle(Rect r, int n) {
  DomainSpec d;
  d.shape = DomainShape::Rectangle;
  d.extents = r;
  d.n = n;
  return d;
}

DomainSpec DomainSpec::disk(ChartPoint center, double radius, int n) {
  DomainSpec d;
  d.shape = DomainShape::Disk;
  d.center = center;
  d.radius = radius;
  d.n = n;
  return d;
}

DomainSpec DomainSpec::annulus(ChartPoint center, double r_in, double r_out, int n) {
  DomainSpec d;
  d.shape = DomainShape::Annulus;
  d.center = center;
  d.r_in = r_in;
  d.r_out = r_out;
  d.n = n;
  return d;
}

DomainSpec DomainSpec::periodic_band(double u0, double u1, double period, int n, double v0) {
  DomainSpec d;
  d.shape = DomainShape::PeriodicBand;
  d.extents = {u0, u1, v0, v0 + period};
  d.theta_period = period;
  d.n = n;
  return d;
}

Rect DomainSpec::bounding_box() const {
  switch (shape) {
    case DomainShape::Rectangle:
    case DomainShape::PeriodicBand: return extents;
    case DomainShape::Disk: return {center.u - radius, center.u + radius, center.v - radius, center.v + radius};
    case DomainShape::Annulus: return {center.u - r_out, center.u + r_out, center.v - r_out, center.v + r_out};
  }
  return extents;
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(shape) << " n=" << n;
  switch (shape) {
    case DomainShape::Rectangle:
      os << " [" << extents.u0 << "," << extents.u1 << "]x[" << extents.v0 << "," << extents.v1 << "]";
      break;
    case DomainShape::PeriodicBand:
      os << " [" << extents.u0 << "," << extents.u1 << "]xS1(period " << theta_period.value_or(0.0) << ")";
      break;
    case DomainShape::Disk: os << " center (" << center.u << "," << center.v << ") radius " << radius; break;
    case DomainShape::Annulus:
      os << " center (" << center.u << "," << center.v << ") radii " << r_in << ".." << r_out;
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::vector<ChartPoint> chart_vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<int> logical_of, std::optional<double> theta_period)
    : chart_vertices_(std::move(chart_vertices)),
      triangles_(std::move(triangles)),
      logical_of_(std::move(logical_of)),
      theta_period_(theta_period) {
  if (logical_of_.size() != chart_vertices_.size()) throw InputError("logical map size mismatch");
  int nlog = 0;
  for (int l : logical_of_) nlog = std::max(nlog, l + 1);
  logical_points_.assign(nlog, ChartPoint{});
  std::vector<bool> seen(nlog, false);
  for (std::size_t c = 0; c < chart_vertices_.size(); ++c) {
    const int l = logical_of_[c];
    if (!seen[l]) {
      logical_points_[l] = chart_vertices_[c];
      seen[l] = true;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw InputError("logical vertex without chart copy");

  std::unordered_map<std::uint64_t, int> edge_index;
  std::vector<int> edge_faces;
  tri_edges_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    if (chart_area(static_cast<int>(t)) <= 0.0) throw InputError("inverted or degenerate triangle in mesh");
    for (int k = 0; k < 3; ++k) {
      const int a = logical_of_[tri[(k + 1) % 3]];
      const int b = logical_of_[tri[(k + 2) % 3]];
      if (a == b) throw InputError("triangle collapses under periodic identification");
      const auto key = pair_key(a, b);
      auto it = edge_index.find(key);
      int e;
      if (it == edge_index.end()) {
        e = static_cast<int>(edges_.size());
        edge_index.emplace(key, e);
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_faces.push_back(0);
      } else {
        e = it->second;
      }
      ++edge_faces[e];
      tri_edges_[t].edge[k] = e;
      tri_edges_[t].sign[k] = a < b ? 1 : -1;
    }
  }
  boundary_edge_.assign(edges_.size(), false);
  boundary_vertex_.assign(nlog, false);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edge_faces[e] > 2) throw InputError("non-manifold edge: shared by more than two triangles");
    if (edge_faces[e] == 1) {
      boundary_edge_[e] = true;
      boundary_vertex_[edges_[e][0]] = true;
      boundary_vertex_[edges_[e][1]] = true;
    }
  }
}

int Mesh::num_boundary_vertices() const noexcept {
  return static_cast<int>(std::count(boundary_vertex_.begin(), boundary_vertex_.end(), true));
}

int Mesh::num_boundary_edges() const noexcept {
  return static_cast<int>(std::count(boundary_edge_.begin(), boundary_edge_.end(), true));
}

bool Mesh::connected() const {
  const int nv = num_vertices();
  if (nv == 0) return false;
  std::vector<std::vector<int>> adj(nv);
  for (const auto& e : edges_) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  std::vector<bool> seen(nv, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push(w);
      }
    }
  }
  return count == nv;
}

double Mesh::chart_area(int t) const noexcept {
  const auto& tri = triangles_[t];
  const ChartPoint& a = chart_vertices_[tri[0]];
  const ChartPoint& b = chart_vertices_[tri[1]];
  const ChartPoint& c = chart_vertices_[tri[2]];
  return 0.5 * ((b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v));
}

double Mesh::max_chart_edge_length() const noexcept {
  double h = 0.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const ChartPoint& a = chart_vertices_[tri[k]];
      const ChartPoint& b = chart_vertices_[tri[(k + 1) % 3]];
      h = std::max(h, std::hypot(b.u - a.u, b.v - a.v));
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Triangulation

namespace {

Mesh structured_grid(Rect r, int nu, int nv, bool periodic_v, std::optional<double> period) {
  std::vector<ChartPoint> pts;
  std::vector<int> logical;
  pts.reserve(static_cast<std::size_t>(nu + 1) * (nv + 1));
  const double du = (r.u1 - r.u0) / nu;
  const double dv = (r.v1 - r.v0) / nv;
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      // exact endpoints; avoids r.u0 + nu*du drifting off the boundary
      const double u = i == nu ? r.u1 : r.u0 + i * du;
      const double v = j == nv ? r.v1 : r.v0 + j * dv;
      pts.push_back({u, v});
    }
  }
  logical.resize(pts.size());
  int next = 0;
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      const int c = j * (nu + 1) + i;
      if (periodic_v && j == nv) {
        logical[c] = logical[i];
      } else {
        logical[c] = next++;
      }
    }
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(2) * nu * nv);
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const int a = j * (nu + 1) + i;
      const int b = a + 1;
      const int c = a + (nu + 1) + 1;
      const int d = a + (nu + 1);
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }
  return Mesh(std::move(pts), std::move(tris), std::move(logical), period);
}

Mesh polar_grid(ChartPoint center, double r0, double r1, int nr, bool with_center) {
  const int m = 4 * nr;
  std::vector<ChartPoint> pts;
  std::vector<std::array<int, 3>> tris;
  auto ring_point = [&](double rad, int s) {
    const double t = 2.0 * std::numbers::pi * s / m;
    return ChartPoint{center.u + rad * std::cos(t), center.v + rad * std::sin(t)};
  };
  int first_ring = 0;
  if (with_center) {
    pts.push_back(center);
    first_ring = 1;
  }
  // ring k (k = first_ring..nr) sits at radius r0 + (r1 - r0) k / nr
  auto ring_start = [&](int k) { return (with_center ? 1 : 0) + (k - first_ring) * m; };
  for (int k = first_ring; k <= nr; ++k) {
    const double rad = k == nr ? r1 : r0 + (r1 - r0) * k / nr;
    for (int s = 0; s < m; ++s) pts.push_back(ring_point(rad, s));
  }
  if (with_center) {
    const int r1s = ring_start(1);
    for (int s = 0; s < m; ++s) tris.push_back({0, r1s + s, r1s + (s + 1) % m});
  }
  for (int k = first_ring; k < nr; ++k) {
    const int in = ring_start(k);
    const int out = ring_start(k + 1);
    for (int s = 0; s < m; ++s) {
      const int s1 = (s + 1) % m;
      tris.push_back({in + s, out + s, out + s1});
      tris.push_back({in + s, out + s1, in + s1});
    }
  }
  std::vector<int> logical(pts.size());
  for (std::size_t i = 0; i < logical.size(); ++i) logical[i] = static_cast<int>(i);
  return Mesh(std::move(pts), std::move(tris), std::move(logical), std::nullopt);
}

}  // namespace

Mesh triangulate(const DomainSpec& d) {
  if (d.n < 2) throw InputError("degenerate domain: resolution n must be >= 2");
  switch (d.shape) {
    case DomainShape::Rectangle: {
      const Rect& r = d.extents;
      if (!(r.u1 > r.u0) || !(r.v1 > r.v0)) throw InputError("degenerate domain: rectangle needs positive extents");
      return structured_grid(r, d.n, d.n, false, std::nullopt);
    }
    case DomainShape::PeriodicBand: {
      if (!d.theta_period || !(*d.theta_period > 0.0))
        throw InputError("periodic_band requires the metric's theta period");
      if (d.n < 3) throw InputError("degenerate domain: periodic_band needs n >= 3 around the circle");
      Rect r = d.extents;
      if (!(r.u1 > r.u0)) throw InputError("degenerate domain: band needs a positive radial extent");
      r.v1 = r.v0 + *d.theta_period;
      return structured_grid(r, d.n, d.n, true, d.theta_period);
    }
    case DomainShape::Disk:
      if (!(d.radius > 0.0)) throw InputError("degenerate domain: disk radius must be positive");
      return polar_grid(d.center, 0.0, d.radius, d.n, true);
    case DomainShape::Annulus:
      if (!(d.r_in > 0.0) || !(d.r_out > d.r_in)) throw InputError("degenerate domain: annulus needs 0 < r_in < r_out");
      return polar_grid(d.center, d.r_in, d.r_out, d.n, false);
  }
  throw InputError("unknown domain shape");
}

Mesh refine(const Mesh& m) {
  std::vector<ChartPoint> pts = m.chart_vertices();
  std::vector<int> logical = m.logical_of();
  int next_logical = m.num_vertices();
  std::unordered_map<std::uint64_t, int> chart_mid;    // chart edge -> new chart vertex
  std::unordered_map<std::uint64_t, int> logical_mid;  // logical edge -> new logical vertex
  auto midpoint = [&](int a, int b) {
    const auto key = pair_key(a, b);
    if (auto it = chart_mid.find(key); it != chart_mid.end()) return it->second;
    const ChartPoint& pa = pts[a];
    const ChartPoint& pb = pts[b];
    const int c = static_cast<int>(pts.size());
    pts.push_back({0.5 * (pa.u + pb.u), 0.5 * (pa.v + pb.v)});
    const auto lkey = pair_key(logical[a], logical[b]);
    int l;
    if (auto it = logical_mid.find(lkey); it != logical_mid.end()) {
      l = it->second;
    } else {
      l = next_logical++;
      logical_mid.emplace(lkey, l);
    }
    logical.push_back(l);
    chart_mid.emplace(key, c);
    return c;
  };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(m.triangles().size() * 4);
  for (const auto& t : m.triangles()) {
    const int a = t[0], b = t[1], c = t[2];
    const int ab = midpoint(a, b);
    const int bc = midpoint(b, c);
    const int ca = midpoint(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
  }
  return Mesh(std::move(pts), std::move(tris), std::move(logical), m.theta_period());
}

int betti1(const Mesh& m) {
  if (!m.connected()) throw InputError("mesh is disconnected; first Betti number formula requires a connected surface");
  return 1 - m.euler_characteristic();
}

void write_off(const Mesh& m, std::ostream& os) {
  std::set<std::uint64_t> chart_edges;
  for (const auto& t : m.triangles())
    for (int k = 0; k < 3; ++k) chart_edges.insert(pair_key(t[k], t[(k + 1) % 3]));
  os << "OFF\n";
  os << m.chart_vertices().size() << ' ' << chart_edges.size() << ' ' << m.triangles().size() << '\n';
  const auto old = os.precision(17);
  for (const auto& p : m.chart_vertices()) os << p.u << ' ' << p.v << " 0\n";
  os.precision(old);
  for (const auto& t : m.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace dneig
