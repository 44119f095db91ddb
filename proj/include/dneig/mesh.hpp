#pragma once

// Structured triangulations of chart domains.
//
// Triangles reference *chart* vertices (each with its own chart coordinates), and every chart
// vertex maps to a *logical* vertex. On a periodic band the two copies of the theta-seam are
// distinct chart vertices sharing one logical vertex, so geometry stays unwrapped while degrees
// of freedom and topology live on the identified complex. Edges are logical, oriented from the
// lower to the higher logical vertex index.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dneig/geometry.hpp"

namespace dneig {

enum class DomainShape { Rectangle, Disk, Annulus, PeriodicBand };

const char* to_string(DomainShape s) noexcept;
std::optional<DomainShape> domain_shape_from_string(const std::string& s);

struct DomainSpec {
  DomainShape shape = DomainShape::Rectangle;
  /// Rectangle: [u0,u1]x[v0,v1]. Periodic band: radial range [u0,u1], seam at v0.
  Rect extents{};
  ChartPoint center{};
  double radius = 0.0;
  double r_in = 0.0;
  double r_out = 0.0;
  /// Required for periodic bands.
  std::optional<double> theta_period;
  int n = 8;

  static DomainSpec rectangle(Rect r, int n);
  static DomainSpec disk(ChartPoint center, double radius, int n);
  static DomainSpec annulus(ChartPoint center, double r_in, double r_out, int n);
  static DomainSpec periodic_band(double u0, double u1, double period, int n, double v0 = 0.0);

  /// Chart bounding box of the domain.
  Rect bounding_box() const;
  std::string describe() const;
};

class Mesh {
 public:
  struct TriangleEdges {
    std::array<int, 3> edge;  // local edge k joins local vertices (k+1)%3 -> (k+2)%3
    std::array<int, 3> sign;  // +1 when that local direction matches the global edge orientation
  };

  Mesh(std::vector<ChartPoint> chart_vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<int> logical_of, std::optional<double> theta_period);

  const std::vector<ChartPoint>& chart_vertices() const noexcept { return chart_vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  const std::vector<int>& logical_of() const noexcept { return logical_of_; }
  const std::vector<std::array<int, 2>>& edges() const noexcept { return edges_; }
  const std::vector<TriangleEdges>& triangle_edges() const noexcept { return tri_edges_; }
  const std::vector<bool>& boundary_vertex() const noexcept { return boundary_vertex_; }
  const std::vector<bool>& boundary_edge() const noexcept { return boundary_edge_; }
  /// Representative chart coordinates of each logical vertex.
  const std::vector<ChartPoint>& logical_points() const noexcept { return logical_points_; }
  std::optional<double> theta_period() const noexcept { return theta_period_; }

  int num_vertices() const noexcept { return static_cast<int>(logical_points_.size()); }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  int num_faces() const noexcept { return static_cast<int>(triangles_.size()); }
  int num_boundary_vertices() const noexcept;
  int num_boundary_edges() const noexcept;

  int euler_characteristic() const noexcept { return num_vertices() - num_edges() + num_faces(); }
  bool connected() const;

  /// Signed chart area of triangle t (positive for counterclockwise).
  double chart_area(int t) const noexcept;
  double max_chart_edge_length() const noexcept;

 private:
  std::vector<ChartPoint> chart_vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> logical_of_;
  std::optional<double> theta_period_;
  std::vector<ChartPoint> logical_points_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<TriangleEdges> tri_edges_;
  std::vector<bool> boundary_vertex_;
  std::vector<bool> boundary_edge_;
};

Mesh triangulate(const DomainSpec& d);

/// Uniform red refinement: every triangle splits into four. Seam identification is inherited.
Mesh refine(const Mesh& m);

/// 1 - χ for a connected surface with boundary. Throws InputError if the mesh is disconnected.
int betti1(const Mesh& m);

/// OFF-style listing of the chart triangulation: "OFF", a "V E F" count line, vertex lines, face lines.
void write_off(const Mesh& m, std::ostream& os);

}  // namespace dneig
