#include "shapeopt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace shapeopt {

double norm(const Point2& a) { return std::hypot(a.x, a.y); }
double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

int orient_sign(const Point2& a, const Point2& b, const Point2& c) {
  double d = cross(b - a, c - a);
  if (d > 0) return 1;
  if (d < 0) return -1;
  return 0;
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Proper or improper intersection of segments ab and cd.
bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  int o1 = orient_sign(a, b, c);
  int o2 = orient_sign(a, b, d);
  int o3 = orient_sign(c, d, a);
  int o4 = orient_sign(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

std::vector<Point2> GluedShape::loop() const {
  if (segments.empty()) throw std::runtime_error("glued shape has no segments");
  for (const auto& s : segments)
    if (s.nodes.size() < 2) throw std::runtime_error("curve segment has fewer than 2 nodes");

  if (kind == ShapeKind::SingleClosed) {
    if (segments.size() != 1)
      throw std::runtime_error("single closed shape must have exactly one segment");
    const auto& nodes = segments[0].nodes;
    if (!(nodes.front() == nodes.back()))
      throw std::runtime_error("closed segment does not end at its start node");
    return {nodes.begin(), nodes.end() - 1};
  }

  std::vector<Point2> loop;
  for (std::size_t h = 0; h < segments.size(); ++h) {
    const auto& nodes = segments[h].nodes;
    const auto& prev = segments[h == 0 ? segments.size() - 1 : h - 1].nodes;
    if (!(prev.back() == nodes.front()))
      throw std::runtime_error("gluing violated between consecutive segments");
    loop.insert(loop.end(), nodes.begin(), nodes.end() - 1);
  }
  return loop;
}

std::vector<int> GluedShape::segment_offsets() const {
  std::vector<int> offsets;
  if (kind == ShapeKind::SingleClosed) return {0};
  int at = 0;
  for (const auto& s : segments) {
    offsets.push_back(at);
    at += static_cast<int>(s.nodes.size()) - 1;
  }
  return offsets;
}

int MultiShape::total_factors() const {
  int n = 0;
  for (const auto& s : shapes) n += s.factor_count();
  return n;
}

std::vector<int> MultiShape::factor_starts() const {
  std::vector<int> k;
  int at = 1;
  for (const auto& s : shapes) {
    k.push_back(at);
    at += s.factor_count();
  }
  return k;
}

double shoelace_area(const std::vector<Point2>& loop) {
  double a = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = loop[i];
    const Point2& q = loop[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool polygon_is_simple(const std::vector<Point2>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (loop[i] == loop[(i + 1) % n]) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share a node by construction).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

bool point_in_polygon(const Point2& p, const std::vector<Point2>& loop) {
  bool inside = false;
  const std::size_t n = loop.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = loop[i];
    const Point2& b = loop[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

bool polygons_intersect(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (segments_intersect(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()]))
        return true;
  if (point_in_polygon(a[0], b) || point_in_polygon(b[0], a)) return true;
  return false;
}

double polygon_area(const GluedShape& shape) {
  auto lp = shape.loop();
  if (!polygon_is_simple(lp)) throw std::runtime_error("degenerate shape");
  return shoelace_area(lp);
}

Point2 polygon_barycenter(const GluedShape& shape) {
  auto lp = shape.loop();
  if (!polygon_is_simple(lp)) throw std::runtime_error("degenerate shape");
  double a = shoelace_area(lp);
  if (std::abs(a) < 1e-300) throw std::runtime_error("barycenter of zero-area shape");
  double bx = 0.0, by = 0.0;
  const std::size_t n = lp.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = lp[i];
    const Point2& q = lp[(i + 1) % n];
    double cr = p.x * q.y - q.x * p.y;
    bx += (p.x + q.x) * cr;
    by += (p.y + q.y) * cr;
  }
  return {bx / (6.0 * a), by / (6.0 * a)};
}

std::vector<Point2> area_gradient(const GluedShape& shape) {
  auto lp = shape.loop();
  const std::size_t n = lp.size();
  std::vector<Point2> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& prev = lp[(i + n - 1) % n];
    const Point2& next = lp[(i + 1) % n];
    g[i] = {0.5 * (next.y - prev.y), 0.5 * (prev.x - next.x)};
  }
  return g;
}

std::vector<Mat2> barycenter_gradient(const GluedShape& shape) {
  auto lp = shape.loop();
  double a = shoelace_area(lp);
  if (std::abs(a) < 1e-300) throw std::runtime_error("barycenter of zero-area shape");
  const std::size_t n = lp.size();
  Point2 b = polygon_barycenter(shape);
  auto grad_a = area_gradient(shape);

  std::vector<Mat2> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Point2& prev = lp[(k + n - 1) % n];
    const Point2& cur = lp[k];
    const Point2& next = lp[(k + 1) % n];
    double cr_k = cur.x * next.y - next.x * cur.y;
    double cr_km1 = prev.x * cur.y - cur.x * prev.y;

    // S_x = sum (x_i + x_{i+1}) cr_i, S_y analogous; b = S/(6A).
    double dSx_dx = cr_k + (cur.x + next.x) * next.y + cr_km1 - (prev.x + cur.x) * prev.y;
    double dSx_dy = (cur.x + next.x) * (-next.x) + (prev.x + cur.x) * prev.x;
    double dSy_dx = (cur.y + next.y) * next.y + (prev.y + cur.y) * (-prev.y);
    double dSy_dy = cr_k + (cur.y + next.y) * (-next.x) + cr_km1 + (prev.y + cur.y) * prev.x;

    g[k][0][0] = (dSx_dx - 6.0 * b.x * grad_a[k].x) / (6.0 * a);
    g[k][0][1] = (dSx_dy - 6.0 * b.x * grad_a[k].y) / (6.0 * a);
    g[k][1][0] = (dSy_dx - 6.0 * b.y * grad_a[k].x) / (6.0 * a);
    g[k][1][1] = (dSy_dy - 6.0 * b.y * grad_a[k].y) / (6.0 * a);
  }
  return g;
}

namespace {

void validate_shape(const GluedShape& s, int j, ValidationReport& rep) {
  auto fail = [&](const std::string& msg) {
    rep.violations.push_back("shape " + std::to_string(j) + ": " + msg);
  };

  if (s.segments.empty()) {
    fail("no segments");
    return;
  }
  for (std::size_t h = 0; h < s.segments.size(); ++h) {
    const auto& nodes = s.segments[h].nodes;
    if (nodes.size() < 2) {
      fail("segment " + std::to_string(h) + " has fewer than 2 nodes");
      return;
    }
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      if (nodes[i] == nodes[i + 1]) fail("segment " + std::to_string(h) + " repeats a node");
  }

  if (s.kind == ShapeKind::SingleClosed) {
    if (s.segments.size() != 1) fail("single closed shape must have n = 1");
    if (!(s.segments[0].nodes.front() == s.segments[0].nodes.back()))
      fail("closure violated for shape " + std::to_string(j));
  } else {
    const int n = s.factor_count();
    for (int h = 0; h + 1 < n; ++h)
      if (!(s.segments[h].nodes.back() == s.segments[h + 1].nodes.front()))
        fail("gluing violated between segments " + std::to_string(h) + " and " +
             std::to_string(h + 1));
    if (!(s.segments[n - 1].nodes.back() == s.segments[0].nodes.front()))
      fail("closure violated for shape " + std::to_string(j));
  }
  if (!rep.violations.empty()) return;

  auto lp = s.loop();
  if (lp.size() < 3) {
    fail("loop has fewer than 3 nodes");
    return;
  }
  if (!polygon_is_simple(lp)) {
    fail("self-intersecting loop");
    return;
  }
  if (shoelace_area(lp) <= 0) fail("loop is clockwise (area not positive)");
}

}  // namespace

ValidationReport validate_multishape(const MultiShape& m) {
  ValidationReport rep;
  for (int j = 0; j < m.shape_count(); ++j) validate_shape(m.shapes[j], j, rep);
  if (!rep.ok()) return rep;

  std::vector<std::vector<Point2>> loops;
  for (const auto& s : m.shapes) loops.push_back(s.loop());
  for (std::size_t i = 0; i < loops.size(); ++i)
    for (std::size_t j = i + 1; j < loops.size(); ++j)
      if (polygons_intersect(loops[i], loops[j]))
        rep.violations.push_back("shapes " + std::to_string(i) + " and " + std::to_string(j) +
                                 " overlap");
  return rep;
}

ValidationReport validate_multishape(const MultiShape& m, const DomainSpec& spec) {
  ValidationReport rep = validate_multishape(m);
  for (int j = 0; j < m.shape_count(); ++j) {
    if (!rep.ok()) break;
    for (const auto& p : m.shapes[j].loop())
      if (p.x <= spec.lo.x || p.x >= spec.hi.x || p.y <= spec.lo.y || p.y >= spec.hi.y) {
        rep.violations.push_back("shape " + std::to_string(j) + " touches the hold-all boundary");
        break;
      }
  }
  return rep;
}

DomainSpec DomainSpec::benchmark(int l1, int l2, double h) {
  DomainSpec spec;
  spec.shapes = {{{0.3, 0.3}, 0.1, 12, l1}, {{0.45, 0.75}, 0.1, 0, l2}};
  spec.mesh_size = h;
  return spec;
}

namespace {

// Closed polygon around `center`: `kinks` designated nodes on the circle,
// chords between them split into extra pieces so the factor count comes out
// at kinks + subdivisions (kinks == 0: a regular `subdivisions`-gon).
std::vector<Point2> generate_loop(const ShapeGen& g) {
  if (g.radius <= 0) throw std::runtime_error("shape radius must be > 0");
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<Point2> corners;
  int corner_count = g.kinks > 0 ? g.kinks : g.subdivisions;
  if (corner_count < 3) throw std::runtime_error("shape needs at least 3 boundary factors");
  for (int i = 0; i < corner_count; ++i) {
    double t = two_pi * i / corner_count;
    corners.push_back({g.center.x + g.radius * std::cos(t), g.center.y + g.radius * std::sin(t)});
  }
  if (g.kinks == 0) return corners;

  // Distribute `subdivisions` extra factors over the chords; the first
  // (subdivisions mod kinks) chords take one more piece.
  int base = g.subdivisions / g.kinks;
  int extra = g.subdivisions % g.kinks;
  std::vector<Point2> loop;
  for (int i = 0; i < g.kinks; ++i) {
    const Point2& a = corners[i];
    const Point2& b = corners[(i + 1) % g.kinks];
    int pieces = 1 + base + (i < extra ? 1 : 0);
    for (int p = 0; p < pieces; ++p) {
      double t = static_cast<double>(p) / pieces;
      loop.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  return loop;
}

GluedShape shape_from_loop(const std::vector<Point2>& loop) {
  GluedShape s;
  s.kind = ShapeKind::GluedOpen;
  const int n = static_cast<int>(loop.size());
  s.segments.resize(n);
  for (int i = 0; i < n; ++i) {
    s.segments[i].id = i;
    s.segments[i].nodes = {loop[i], loop[(i + 1) % n]};
  }
  return s;
}

}  // namespace

MultiShape build_benchmark_shapes(const DomainSpec& spec) {
  MultiShape m;
  for (const auto& g : spec.shapes) {
    auto loop = generate_loop(g);
    // Recenter exactly onto the requested barycenter.
    GluedShape tmp = shape_from_loop(loop);
    Point2 b = polygon_barycenter(tmp);
    for (auto& p : loop) p = p + (g.center - b);
    m.shapes.push_back(shape_from_loop(loop));
  }
  ValidationReport rep = validate_multishape(m, spec);
  if (!rep.ok()) throw std::runtime_error("invalid generated shapes: " + rep.violations.front());
  return m;
}

void write_boundary_csv(std::ostream& os, const MultiShape& m) {
  os << "shape_id,segment_id,node_index,x,y\n";
  char buf[80];
  for (int j = 0; j < m.shape_count(); ++j) {
    const auto& segs = m.shapes[j].segments;
    for (std::size_t l = 0; l < segs.size(); ++l) {
      for (std::size_t i = 0; i < segs[l].nodes.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%zu,%zu,%.17g,%.17g\n", j, l, i, segs[l].nodes[i].x,
                      segs[l].nodes[i].y);
        os << buf;
      }
    }
  }
}

void write_boundary_csv(const std::string& path, const MultiShape& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_boundary_csv(os, m);
}

MultiShape read_boundary_csv(std::istream& is, bool auto_reverse) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("boundary csv: empty file");

  std::map<int, std::map<int, std::map<int, Point2>>> data;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    int vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("boundary csv: short row");
      vals[c] = std::stoi(tok);
    }
    Point2 p;
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("boundary csv: short row");
    p.x = std::stod(tok);
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("boundary csv: short row");
    p.y = std::stod(tok);
    data[vals[0]][vals[1]][vals[2]] = p;
  }

  MultiShape m;
  for (auto& [sid, segs] : data) {
    GluedShape shape;
    for (auto& [l, nodes] : segs) {
      OpenCurveSegment seg;
      seg.id = l;
      for (auto& [i, p] : nodes) seg.nodes.push_back(p);
      shape.segments.push_back(std::move(seg));
    }
    shape.kind = (shape.segments.size() == 1 &&
                  shape.segments[0].nodes.front() == shape.segments[0].nodes.back())
                     ? ShapeKind::SingleClosed
                     : ShapeKind::GluedOpen;
    if (shoelace_area(shape.loop()) < 0) {
      if (!auto_reverse)
        throw std::runtime_error("shape " + std::to_string(sid) +
                                 " is clockwise; enable auto-reversal to accept it");
      std::reverse(shape.segments.begin(), shape.segments.end());
      for (auto& seg : shape.segments) std::reverse(seg.nodes.begin(), seg.nodes.end());
    }
    m.shapes.push_back(std::move(shape));
  }
  return m;
}

MultiShape read_boundary_csv(const std::string& path, bool auto_reverse) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_boundary_csv(is, auto_reverse);
}

}  // namespace shapeopt
