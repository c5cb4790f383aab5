#pragma once

#include <array>
#include <functional>
#include <vector>

#include "shapeopt/geometry.hpp"

namespace shapeopt::cdt {

// Constraint edge between two input vertices. Splittable segments may gain
// midpoints during refinement (outer rectangle); non-splittable ones are
// preserved verbatim (shape polylines).
struct Segment {
  int a = 0;
  int b = 0;
  int tag = 0;
  bool splittable = false;
};

struct Options {
  // Split a triangle when circumradius / shortest edge exceeds this bound
  // (1.0 corresponds to a 30 degree minimum angle).
  double radius_edge_bound = 1.05;
  // Split a triangle when its circumradius exceeds size_factor * size(x).
  double size_factor = 0.75;
  int smoothing_sweeps = 3;
  double smoothing_relaxation = 0.8;
  int max_points = 200000;
};

struct Result {
  std::vector<Point2> points;                 // input vertices first, then Steiner points
  std::vector<std::array<int, 3>> triangles;  // CCW
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<int> boundary_edge_tags;        // parallel to boundary_edges
};

using SizeField = std::function<double(const Point2&)>;

// Conforming constrained Delaunay triangulation of the region enclosed by
// the constraint loops, minus the holes, refined towards the sizing field
// and smoothed. Deterministic for identical inputs.
Result triangulate(const std::vector<Point2>& vertices, const std::vector<Segment>& segments,
                   const std::vector<Point2>& hole_seeds, const SizeField& size,
                   const Options& opts = {});

// Robust geometric predicates (exposed for tests).
// Sign of the signed area of triangle (a, b, c): >0 CCW, <0 CW, 0 collinear.
int orient2d_sign(const Point2& a, const Point2& b, const Point2& c);
// >0 iff d lies strictly inside the circumcircle of CCW triangle (a, b, c).
int incircle_sign(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

}  // namespace shapeopt::cdt
