#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shapeopt/geometry.hpp"

namespace shapeopt {

enum class BoundaryKind { None, Inflow, Outflow, WallTop, WallBottom, Shape };

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::None;
  int shape = -1;
  int segment = -1;

  bool is_outer() const {
    return kind != BoundaryKind::None && kind != BoundaryKind::Shape;
  }
  bool operator==(const BoundaryTag&) const = default;
};

// Physical-tag encoding used in MSH files: 1 Inflow, 2 Outflow, 3 WallTop,
// 4 WallBottom, 100 + shape*1000 + segment for shape boundaries.
int encode_tag(const BoundaryTag& t);
BoundaryTag decode_tag(int code);

struct BoundaryEdge {
  int a = -1;
  int b = -1;
  BoundaryTag tag;
};

// Mesh-node bookkeeping for one shape: the CCW loop of node indices and the
// start offset of each curve-segment factor within it.
struct ShapeLoop {
  std::vector<int> nodes;
  std::vector<int> segment_offsets;
  ShapeKind kind = ShapeKind::GluedOpen;
};

struct TriMesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;  // CCW
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<BoundaryTag> boundary_node_map;  // per node; kind None = interior
  std::vector<ShapeLoop> shape_loops;
  int generation = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int edge_count() const;  // unique edges
  int hole_count() const { return static_cast<int>(shape_loops.size()); }

  double triangle_area(int t) const;
  // V - E + F; equals 1 - #holes for a valid mesh of the flow domain.
  int euler_characteristic() const;
  std::vector<int> outer_boundary_nodes() const;
};

struct MeshQualityReport {
  std::vector<double> quality;  // per triangle, in [0, 1]
  double min_quality = 1.0;
  std::array<int, 20> histogram{};
};

// Normalized radius ratio 2 r_in / r_circ of one triangle.
double triangle_quality(const Point2& a, const Point2& b, const Point2& c);

TriMesh generate_mesh(const DomainSpec& spec, const MultiShape& shapes);

MeshQualityReport mesh_quality(const TriMesh& mesh);

// Moves every node by scale * field (field interleaved x0,y0,x1,y1,...).
// Connectivity, tags, and shape bookkeeping are unchanged. Throws
// "mesh inverted" if any triangle area becomes non-positive.
TriMesh deform_mesh(const TriMesh& mesh, std::span<const double> field, double scale);

// Fresh triangulation from the current boundary polylines; boundary nodes
// are preserved exactly and the generation counter is incremented.
TriMesh remesh(const MultiShape& shapes, const DomainSpec& spec, int previous_generation = 0);
TriMesh remesh(const TriMesh& mesh, const DomainSpec& spec);

// Current boundary polylines of the deformed mesh as a MultiShape; junction
// coordinates are shared node values, so gluing holds exactly.
MultiShape extract_shapes(const TriMesh& mesh);

// Throws with a diagnostic if conformity, orientation, tagging, or the Euler
// relation is violated.
void check_mesh(const TriMesh& mesh);

// Gmsh MSH 2.2 ASCII.
void write_msh(std::ostream& os, const TriMesh& mesh);
void write_msh(const std::string& path, const TriMesh& mesh);
TriMesh read_msh(std::istream& is);
TriMesh read_msh(const std::string& path);

// VTK legacy ASCII 2.0 unstructured-grid export with optional point data.
struct VtkPointData {
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<std::pair<std::string, std::vector<std::array<double, 3>>>> vectors;
};
void write_vtk(std::ostream& os, const TriMesh& mesh, const VtkPointData& data = {});
void write_vtk(const std::string& path, const TriMesh& mesh, const VtkPointData& data = {});

}  // namespace shapeopt
