#include "shapeopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "shapeopt/delaunay.hpp"

namespace shapeopt {

int encode_tag(const BoundaryTag& t) {
  switch (t.kind) {
    case BoundaryKind::Inflow: return 1;
    case BoundaryKind::Outflow: return 2;
    case BoundaryKind::WallTop: return 3;
    case BoundaryKind::WallBottom: return 4;
    case BoundaryKind::Shape: return 100 + t.shape * 1000 + t.segment;
    case BoundaryKind::None: return 0;
  }
  return 0;
}

BoundaryTag decode_tag(int code) {
  switch (code) {
    case 0: return {};
    case 1: return {BoundaryKind::Inflow, -1, -1};
    case 2: return {BoundaryKind::Outflow, -1, -1};
    case 3: return {BoundaryKind::WallTop, -1, -1};
    case 4: return {BoundaryKind::WallBottom, -1, -1};
    default: break;
  }
  if (code < 100) throw std::runtime_error("unknown boundary tag code " + std::to_string(code));
  return {BoundaryKind::Shape, (code - 100) / 1000, (code - 100) % 1000};
}

double TriMesh::triangle_area(int t) const {
  const Point2& a = nodes[triangles[t][0]];
  const Point2& b = nodes[triangles[t][1]];
  const Point2& c = nodes[triangles[t][2]];
  return 0.5 * cross(b - a, c - a);
}

int TriMesh::edge_count() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e)
      edges.insert({std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])});
  return static_cast<int>(edges.size());
}

int TriMesh::euler_characteristic() const {
  return node_count() - edge_count() + triangle_count();
}

std::vector<int> TriMesh::outer_boundary_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (boundary_node_map[i].is_outer()) out.push_back(i);
  return out;
}

double triangle_quality(const Point2& a, const Point2& b, const Point2& c) {
  double la = dist(b, c), lb = dist(c, a), lc = dist(a, b);
  double area = 0.5 * std::abs(cross(b - a, c - a));
  double denom = (la + lb + lc) * la * lb * lc;
  if (denom <= 0) return 0.0;
  // q = 2 r_in / r_circ = 16 A^2 / ((a+b+c) a b c)
  return 16.0 * area * area / denom;
}

MeshQualityReport mesh_quality(const TriMesh& mesh) {
  MeshQualityReport rep;
  rep.quality.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    double q = triangle_quality(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
    rep.quality[t] = q;
    rep.min_quality = std::min(rep.min_quality, q);
    int bin = std::min(19, std::max(0, static_cast<int>(q * 20.0)));
    rep.histogram[bin]++;
  }
  if (mesh.triangle_count() == 0) rep.min_quality = 0.0;
  return rep;
}

namespace {

// A point strictly inside a simple polygon; used to seed hole removal.
Point2 interior_point(const std::vector<Point2>& loop) {
  const std::size_t n = loop.size();
  Point2 centroid{0, 0};
  for (const auto& p : loop) centroid = centroid + p;
  centroid = centroid * (1.0 / n);
  if (point_in_polygon(centroid, loop)) return centroid;
  // Fall back to ear midpoints for non-convex loops.
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& prev = loop[(i + n - 1) % n];
    const Point2& cur = loop[i];
    const Point2& next = loop[(i + 1) % n];
    Point2 cand{(prev.x + cur.x + next.x) / 3.0, (prev.y + cur.y + next.y) / 3.0};
    if (cross(cur - prev, next - cur) > 0 && point_in_polygon(cand, loop)) return cand;
  }
  throw std::runtime_error("mesh generator: no interior seed point found for a shape");
}

double polyline_spacing(const std::vector<Point2>& loop) {
  double total = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) total += dist(loop[i], loop[(i + 1) % loop.size()]);
  return total / loop.size();
}

double dist_to_loop(const Point2& p, const std::vector<Point2>& loop) {
  double best = 1e300;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point2& a = loop[i];
    const Point2& b = loop[(i + 1) % loop.size()];
    Point2 ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    Point2 proj{a.x + t * ab.x, a.y + t * ab.y};
    best = std::min(best, dist(p, proj));
  }
  return best;
}

struct BuildInput {
  std::vector<Point2> vertices;
  std::vector<cdt::Segment> segments;
  std::vector<Point2> hole_seeds;
  std::vector<ShapeLoop> shape_loops;
  std::vector<std::vector<Point2>> loops;
  std::vector<double> spacing;
};

BuildInput collect_build_input(const DomainSpec& spec, const MultiShape& shapes) {
  BuildInput in;
  // Shape polyline nodes first so mesh node ids of shape boundaries are the
  // insertion order.
  for (int j = 0; j < shapes.shape_count(); ++j) {
    const GluedShape& s = shapes.shapes[j];
    auto loop = s.loop();
    auto offsets = s.segment_offsets();
    ShapeLoop ref;
    ref.kind = s.kind;
    ref.segment_offsets = offsets;
    int base = static_cast<int>(in.vertices.size());
    for (std::size_t i = 0; i < loop.size(); ++i) {
      ref.nodes.push_back(base + static_cast<int>(i));
      in.vertices.push_back(loop[i]);
    }
    const int nseg = s.factor_count();
    for (std::size_t i = 0; i < loop.size(); ++i) {
      // Factor that owns edge (i, i+1): the last offset <= i.
      int seg = nseg - 1;
      for (int l = 0; l + 1 < nseg; ++l)
        if (static_cast<int>(i) >= offsets[l] && static_cast<int>(i) < offsets[l + 1]) seg = l;
      cdt::Segment e;
      e.a = base + static_cast<int>(i);
      e.b = base + static_cast<int>((i + 1) % loop.size());
      e.tag = encode_tag({BoundaryKind::Shape, j, seg});
      e.splittable = false;
      in.segments.push_back(e);
    }
    in.hole_seeds.push_back(interior_point(loop));
    in.shape_loops.push_back(std::move(ref));
    in.loops.push_back(loop);
    in.spacing.push_back(polyline_spacing(loop));
  }

  // Outer rectangle, subdivided at the target size, CCW from the low corner.
  const double h = spec.mesh_size;
  auto subdivide = [&](Point2 a, Point2 b) {
    int pieces = std::max(1, static_cast<int>(std::ceil(dist(a, b) / h)));
    int first = static_cast<int>(in.vertices.size());
    for (int i = 0; i < pieces; ++i) {
      double t = static_cast<double>(i) / pieces;
      if (i > 0) in.vertices.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    // Segment list is patched afterwards once all corners exist.
    return std::pair{first, pieces};
  };

  int corner0 = static_cast<int>(in.vertices.size());
  Point2 c00 = spec.lo, c10 = {spec.hi.x, spec.lo.y}, c11 = spec.hi, c01 = {spec.lo.x, spec.hi.y};
  in.vertices.push_back(c00);
  in.vertices.push_back(c10);
  in.vertices.push_back(c11);
  in.vertices.push_back(c01);

  struct Side {
    Point2 a, b;
    int ca, cb;
    BoundaryKind kind;
  };
  const Side sides[4] = {{c00, c10, corner0 + 0, corner0 + 1, BoundaryKind::WallBottom},
                         {c10, c11, corner0 + 1, corner0 + 2, BoundaryKind::Outflow},
                         {c11, c01, corner0 + 2, corner0 + 3, BoundaryKind::WallTop},
                         {c01, c00, corner0 + 3, corner0 + 0, BoundaryKind::Inflow}};
  for (const auto& side : sides) {
    auto [first, pieces] = subdivide(side.a, side.b);
    int prev = side.ca;
    for (int i = 1; i < pieces; ++i) {
      int id = first + i - 1;
      in.segments.push_back({prev, id, encode_tag({side.kind, -1, -1}), true});
      prev = id;
    }
    in.segments.push_back({prev, side.cb, encode_tag({side.kind, -1, -1}), true});
  }
  return in;
}

TriMesh build_mesh(const DomainSpec& spec, const MultiShape& shapes, int generation) {
  ValidationReport rep = validate_multishape(shapes, spec);
  if (!rep.ok())
    throw std::runtime_error("mesh generation rejected invalid shapes: " + rep.violations.front());

  BuildInput in = collect_build_input(spec, shapes);

  const double h = spec.mesh_size;
  auto size_field = [&](const Point2& p) {
    double s = h;
    for (std::size_t j = 0; j < in.loops.size(); ++j) {
      double d = dist_to_loop(p, in.loops[j]);
      s = std::min(s, in.spacing[j] + 0.6 * d);
    }
    return s;
  };

  cdt::Result res;
  try {
    res = cdt::triangulate(in.vertices, in.segments, in.hole_seeds, size_field);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("mesh generation failed: ") + e.what());
  }

  TriMesh mesh;
  mesh.nodes = res.points;
  mesh.triangles = res.triangles;
  mesh.shape_loops = in.shape_loops;
  mesh.generation = generation;
  mesh.boundary_node_map.assign(mesh.nodes.size(), BoundaryTag{});
  for (std::size_t e = 0; e < res.boundary_edges.size(); ++e) {
    BoundaryTag tag = decode_tag(res.boundary_edge_tags[e]);
    mesh.boundary_edges.push_back({res.boundary_edges[e][0], res.boundary_edges[e][1], tag});
  }
  // Node tags: shape nodes get (shape, segment offset rule); outer nodes the
  // side tag. A node starting segment l is mapped to l; corners keep the
  // first side that claims them.
  for (const auto& be : mesh.boundary_edges) {
    for (int v : {be.a, be.b}) {
      BoundaryTag& t = mesh.boundary_node_map[v];
      if (t.kind == BoundaryKind::None) t = be.tag;
    }
  }
  for (const auto& sl : mesh.shape_loops) {
    const int nseg = static_cast<int>(sl.segment_offsets.size());
    for (int l = 0; l < nseg; ++l) {
      int first = sl.nodes[sl.segment_offsets[l]];
      mesh.boundary_node_map[first].segment = l;
    }
  }
  check_mesh(mesh);
  return mesh;
}

}  // namespace

TriMesh generate_mesh(const DomainSpec& spec, const MultiShape& shapes) {
  return build_mesh(spec, shapes, 0);
}

TriMesh remesh(const MultiShape& shapes, const DomainSpec& spec, int previous_generation) {
  return build_mesh(spec, shapes, previous_generation + 1);
}

TriMesh remesh(const TriMesh& mesh, const DomainSpec& spec) {
  return build_mesh(spec, extract_shapes(mesh), mesh.generation + 1);
}

TriMesh deform_mesh(const TriMesh& mesh, std::span<const double> field, double scale) {
  if (field.size() != static_cast<std::size_t>(2 * mesh.node_count()))
    throw std::runtime_error("deformation field size does not match mesh");
  TriMesh out = mesh;
  for (int i = 0; i < mesh.node_count(); ++i) {
    out.nodes[i].x += scale * field[2 * i];
    out.nodes[i].y += scale * field[2 * i + 1];
  }
  for (int t = 0; t < out.triangle_count(); ++t)
    if (out.triangle_area(t) <= 0.0) throw std::runtime_error("mesh inverted");
  return out;
}

MultiShape extract_shapes(const TriMesh& mesh) {
  MultiShape m;
  for (const auto& sl : mesh.shape_loops) {
    GluedShape s;
    s.kind = sl.kind;
    const int nseg = static_cast<int>(sl.segment_offsets.size());
    const int nn = static_cast<int>(sl.nodes.size());
    for (int l = 0; l < nseg; ++l) {
      OpenCurveSegment seg;
      seg.id = l;
      int from = sl.segment_offsets[l];
      int to = (l + 1 < nseg) ? sl.segment_offsets[l + 1] : nn;
      for (int i = from; i <= to; ++i) seg.nodes.push_back(mesh.nodes[sl.nodes[i % nn]]);
      s.segments.push_back(std::move(seg));
    }
    m.shapes.push_back(std::move(s));
  }
  return m;
}

void check_mesh(const TriMesh& mesh) {
  if (mesh.nodes.empty() || mesh.triangles.empty())
    throw std::runtime_error("mesh check: empty mesh");
  for (int t = 0; t < mesh.triangle_count(); ++t)
    if (mesh.triangle_area(t) <= 0)
      throw std::runtime_error("mesh check: non-positive triangle area at " + std::to_string(t));

  // Conformity: interior edges in exactly 2 triangles, boundary edges in 1.
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      edge_use[{std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])}]++;
  for (const auto& [e, n] : edge_use)
    if (n > 2) throw std::runtime_error("mesh check: edge shared by more than 2 triangles");

  std::set<std::pair<int, int>> tagged;
  for (const auto& be : mesh.boundary_edges) {
    auto key = std::make_pair(std::min(be.a, be.b), std::max(be.a, be.b));
    auto it = edge_use.find(key);
    if (it == edge_use.end() || it->second != 1)
      throw std::runtime_error("mesh check: tagged boundary edge not on the boundary");
    tagged.insert(key);
  }
  for (const auto& [e, n] : edge_use)
    if (n == 1 && !tagged.count(e))
      throw std::runtime_error("mesh check: untagged boundary edge");

  int euler = mesh.euler_characteristic();
  if (euler != 1 - mesh.hole_count())
    throw std::runtime_error("mesh check: Euler characteristic " + std::to_string(euler) +
                             " does not match hole count " + std::to_string(mesh.hole_count()));

  // Shape loops must reference boundary nodes verbatim.
  for (const auto& sl : mesh.shape_loops)
    for (int v : sl.nodes)
      if (mesh.boundary_node_map[v].kind != BoundaryKind::Shape)
        throw std::runtime_error("mesh check: shape loop node lost its boundary tag");
}

void write_msh(std::ostream& os, const TriMesh& mesh) {
  os << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  os << "$Nodes\n" << mesh.node_count() << "\n";
  char buf[96];
  for (int i = 0; i < mesh.node_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g 0\n", i + 1, mesh.nodes[i].x,
                  mesh.nodes[i].y);
    os << buf;
  }
  os << "$EndNodes\n$Elements\n";
  os << mesh.boundary_edges.size() + mesh.triangles.size() << "\n";
  int id = 1;
  for (const auto& be : mesh.boundary_edges) {
    int tag = encode_tag(be.tag);
    os << id++ << " 1 2 " << tag << " " << tag << " " << be.a + 1 << " " << be.b + 1 << "\n";
  }
  for (const auto& t : mesh.triangles)
    os << id++ << " 2 2 10 10 " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  os << "$EndElements\n";
}

void write_msh(const std::string& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_msh(os, mesh);
}

namespace {

// Orders tagged shape edges into CCW loops and rebuilds the bookkeeping.
void rebuild_shape_loops(TriMesh& mesh) {
  std::map<int, std::vector<std::pair<int, int>>> by_shape;  // shape -> edges
  std::map<std::pair<int, int>, int> edge_segment;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag.kind != BoundaryKind::Shape) continue;
    by_shape[be.tag.shape].push_back({be.a, be.b});
    edge_segment[{std::min(be.a, be.b), std::max(be.a, be.b)}] = be.tag.segment;
  }
  for (auto& [shape, edges] : by_shape) {
    std::map<int, std::vector<int>> adj;
    for (auto [a, b] : edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (auto& [v, nb] : adj)
      if (nb.size() != 2)
        throw std::runtime_error("msh import: shape boundary is not a closed loop");
    std::vector<int> loop{edges[0].first};
    int prev = -1;
    while (true) {
      int cur = loop.back();
      int next = (adj[cur][0] == prev) ? adj[cur][1] : adj[cur][0];
      if (next == loop.front()) break;
      prev = cur;
      loop.push_back(next);
    }
    std::vector<Point2> pts;
    for (int v : loop) pts.push_back(mesh.nodes[v]);
    if (shoelace_area(pts) < 0) {
      std::reverse(loop.begin(), loop.end());
      std::rotate(loop.begin(), loop.end() - 1, loop.end());
    }
    // Rotate so the loop starts at segment 0's first node.
    auto seg_of_edge = [&](int i) {
      int a = loop[i], b = loop[(i + 1) % loop.size()];
      return edge_segment.at({std::min(a, b), std::max(a, b)});
    };
    int start = 0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      int cur = seg_of_edge(static_cast<int>(i));
      int before = seg_of_edge(static_cast<int>((i + loop.size() - 1) % loop.size()));
      if (cur == 0 && before != 0) start = static_cast<int>(i);
    }
    std::rotate(loop.begin(), loop.begin() + start, loop.end());

    ShapeLoop sl;
    sl.kind = ShapeKind::GluedOpen;
    sl.nodes = loop;
    int last_seg = -1;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      int seg = seg_of_edge(static_cast<int>(i));
      if (seg != last_seg) {
        sl.segment_offsets.push_back(static_cast<int>(i));
        last_seg = seg;
      }
    }
    if (static_cast<int>(mesh.shape_loops.size()) <= shape) mesh.shape_loops.resize(shape + 1);
    mesh.shape_loops[shape] = std::move(sl);
  }
}

}  // namespace

TriMesh read_msh(std::istream& is) {
  TriMesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("$Nodes", 0) == 0) {
      int n;
      is >> n;
      mesh.nodes.resize(n);
      for (int i = 0; i < n; ++i) {
        int id;
        double x, y, z;
        is >> id >> x >> y >> z;
        mesh.nodes[id - 1] = {x, y};
      }
    } else if (line.rfind("$Elements", 0) == 0) {
      int n;
      is >> n;
      for (int i = 0; i < n; ++i) {
        int id, type, ntags;
        is >> id >> type >> ntags;
        std::vector<int> tags(ntags);
        for (int& t : tags) is >> t;
        if (type == 1) {
          int a, b;
          is >> a >> b;
          mesh.boundary_edges.push_back({a - 1, b - 1, decode_tag(tags.empty() ? 0 : tags[0])});
        } else if (type == 2) {
          int a, b, c;
          is >> a >> b >> c;
          mesh.triangles.push_back({a - 1, b - 1, c - 1});
        } else {
          throw std::runtime_error("msh import: unsupported element type " + std::to_string(type));
        }
      }
    }
  }
  if (mesh.nodes.empty()) throw std::runtime_error("msh import: no nodes found");
  for (auto& t : mesh.triangles) {
    const Point2& a = mesh.nodes[t[0]];
    const Point2& b = mesh.nodes[t[1]];
    const Point2& c = mesh.nodes[t[2]];
    if (cross(b - a, c - a) < 0) std::swap(t[1], t[2]);
  }
  mesh.boundary_node_map.assign(mesh.nodes.size(), BoundaryTag{});
  for (const auto& be : mesh.boundary_edges)
    for (int v : {be.a, be.b})
      if (mesh.boundary_node_map[v].kind == BoundaryKind::None)
        mesh.boundary_node_map[v] = be.tag;
  rebuild_shape_loops(mesh);
  for (const auto& sl : mesh.shape_loops) {
    const int nseg = static_cast<int>(sl.segment_offsets.size());
    for (int l = 0; l < nseg; ++l)
      mesh.boundary_node_map[sl.nodes[sl.segment_offsets[l]]].segment = l;
  }
  check_mesh(mesh);
  return mesh;
}

TriMesh read_msh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_msh(is);
}

void write_vtk(std::ostream& os, const TriMesh& mesh, const VtkPointData& data) {
  char buf[128];
  os << "# vtk DataFile Version 2.0\nshapeopt mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g 0\n", p.x, p.y);
    os << buf;
  }
  os << "CELLS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "CELL_TYPES " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) os << "5\n";

  if (data.scalars.empty() && data.vectors.empty()) return;
  os << "POINT_DATA " << mesh.node_count() << "\n";
  for (const auto& [name, values] : data.vectors) {
    os << "VECTORS " << name << " double\n";
    for (const auto& v : values) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v[0], v[1], v[2]);
      os << buf;
    }
  }
  for (const auto& [name, values] : data.scalars) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", v);
      os << buf;
    }
  }
}

void write_vtk(const std::string& path, const TriMesh& mesh, const VtkPointData& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_vtk(os, mesh, data);
}

}  // namespace shapeopt
