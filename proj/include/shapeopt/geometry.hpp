#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapeopt {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2() = default;
  Point2(double x_, double y_) : x(x_), y(y_) {}

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const { return x == o.x && y == o.y; }
};

inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
double norm(const Point2& a);
double dist(const Point2& a, const Point2& b);

// 2x2 derivative block: rows are (bx, by), columns are (x, y) of a node.
using Mat2 = std::array<std::array<double, 2>, 2>;

// One smooth open-curve factor, discretized as a polyline.
struct OpenCurveSegment {
  int id = 0;
  std::vector<Point2> nodes;
};

enum class ShapeKind { SingleClosed, GluedOpen };

// A closed shape glued from open segments. For GluedOpen, consecutive
// segments share their junction node coordinate exactly (bitwise), and the
// last segment closes back onto the first. For SingleClosed there is a
// single segment whose first and last node coincide.
struct GluedShape {
  ShapeKind kind = ShapeKind::GluedOpen;
  std::vector<OpenCurveSegment> segments;

  int factor_count() const { return static_cast<int>(segments.size()); }

  // Unique node loop (the shared junction nodes appear once). Throws if the
  // gluing or closure equalities do not hold exactly.
  std::vector<Point2> loop() const;

  // Index into loop() of the first node of each segment.
  std::vector<int> segment_offsets() const;
};

struct MultiShape {
  std::vector<GluedShape> shapes;

  int shape_count() const { return static_cast<int>(shapes.size()); }
  int total_factors() const;
  // Start indices k_j (1-based): k_1 = 1, k_{j+1} = k_j + n_j.
  std::vector<int> factor_starts() const;
};

// Generator description for one shape: a circle of `radius` around `center`.
// kinks > 0 places that many designated kink nodes on the circle and
// subdivides the chords between them with `subdivisions` extra factors in
// total; kinks == 0 approximates the circle by `subdivisions` straight
// factors directly.
struct ShapeGen {
  Point2 center;
  double radius = 0.1;
  int kinks = 0;
  int subdivisions = 0;
};

struct DomainSpec {
  Point2 lo{0.0, 0.0};
  Point2 hi{1.0, 1.0};
  std::vector<ShapeGen> shapes;
  double mesh_size = 0.05;

  // Channel benchmark: a 12-kink shape and a smooth polygon shape inside
  // the unit square. The default target size reproduces the reference
  // resolution of roughly 3500 nodes / 7000 triangles.
  static DomainSpec benchmark(int l1 = 48, int l2 = 60, double h = 0.018);
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Signed area by the shoelace formula; positive for CCW loops.
// Throws "degenerate shape" if the loop is not a simple polygon.
double polygon_area(const GluedShape& shape);

// Area centroid. Throws if the area vanishes.
Point2 polygon_barycenter(const GluedShape& shape);

// dA/d(node) for every unique loop node.
std::vector<Point2> area_gradient(const GluedShape& shape);

// d(barycenter)/d(node) for every unique loop node.
std::vector<Mat2> barycenter_gradient(const GluedShape& shape);

// Reports every violated invariant; empty report iff the multi-shape is
// valid (gluing, closure, simplicity, orientation, disjointness).
ValidationReport validate_multishape(const MultiShape& m);
ValidationReport validate_multishape(const MultiShape& m, const DomainSpec& spec);

// Builds the generator shapes of `spec`, CCW, recentered so the barycenter
// hits the generator target exactly. Throws if shapes overlap each other or
// leave the hold-all.
MultiShape build_benchmark_shapes(const DomainSpec& spec);

// Low-level polygon helpers shared with the mesh module.
bool polygon_is_simple(const std::vector<Point2>& loop);
bool point_in_polygon(const Point2& p, const std::vector<Point2>& loop);
bool polygons_intersect(const std::vector<Point2>& a, const std::vector<Point2>& b);
double shoelace_area(const std::vector<Point2>& loop);

// Boundary polyline CSV (columns: shape_id, segment_id, node_index, x, y).
void write_boundary_csv(std::ostream& os, const MultiShape& m);
void write_boundary_csv(const std::string& path, const MultiShape& m);
MultiShape read_boundary_csv(std::istream& is, bool auto_reverse = false);
MultiShape read_boundary_csv(const std::string& path, bool auto_reverse = false);

}  // namespace shapeopt
