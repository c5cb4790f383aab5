#include "shapeopt/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace shapeopt::cdt {

// ---------------------------------------------------------------------------
// Predicates: double evaluation with a static error filter, quad-precision
// fallback for near-degenerate cases.

int orient2d_sign(const Point2& a, const Point2& b, const Point2& c) {
  double detl = (b.x - a.x) * (c.y - a.y);
  double detr = (b.y - a.y) * (c.x - a.x);
  double det = detl - detr;
  double detsum = std::abs(detl) + std::abs(detr);
  if (std::abs(det) > 8.8e-16 * detsum) return det > 0 ? 1 : -1;

  __float128 qdet = (__float128)(b.x - a.x) * (__float128)(c.y - a.y) -
                    (__float128)(b.y - a.y) * (__float128)(c.x - a.x);
  if (qdet > 0) return 1;
  if (qdet < 0) return -1;
  return 0;
}

int incircle_sign(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  double adx = a.x - d.x, ady = a.y - d.y;
  double bdx = b.x - d.x, bdy = b.y - d.y;
  double cdx = c.x - d.x, cdy = c.y - d.y;

  double ad2 = adx * adx + ady * ady;
  double bd2 = bdx * bdx + bdy * bdy;
  double cd2 = cdx * cdx + cdy * cdy;

  double det = ad2 * (bdx * cdy - cdx * bdy) + bd2 * (cdx * ady - adx * cdy) +
               cd2 * (adx * bdy - bdx * ady);
  double perm = ad2 * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                bd2 * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                cd2 * (std::abs(adx * bdy) + std::abs(bdx * ady));
  if (std::abs(det) > 1.2e-14 * perm) return det > 0 ? 1 : -1;

  __float128 qadx = adx, qady = ady, qbdx = bdx, qbdy = bdy, qcdx = cdx, qcdy = cdy;
  __float128 qdet = (qadx * qadx + qady * qady) * (qbdx * qcdy - qcdx * qbdy) +
                    (qbdx * qbdx + qbdy * qbdy) * (qcdx * qady - qadx * qcdy) +
                    (qcdx * qcdx + qcdy * qcdy) * (qadx * qbdy - qbdx * qady);
  // Exact ties are treated as "on the circle".
  if (qdet > (__float128)1e-60) return 1;
  if (qdet < (__float128)-1e-60) return -1;
  return 0;
}

namespace {

struct EdgeKey {
  int a, b;
  EdgeKey(int u, int v) : a(std::min(u, v)), b(std::max(u, v)) {}
  bool operator==(const EdgeKey& o) const { return a == o.a && b == o.b; }
  bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};

struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const {
    return std::hash<std::uint64_t>()((std::uint64_t(k.a) << 32) ^ std::uint64_t(k.b));
  }
};

struct ConstraintInfo {
  int tag = 0;
  bool splittable = false;
};

// Triangle with vertices v and neighbor triangle indices nbr; nbr[e] is the
// triangle across the edge opposite vertex e, or -1.
struct Tri {
  std::array<int, 3> v{-1, -1, -1};
  std::array<int, 3> nbr{-1, -1, -1};
  bool alive = false;
};

class Mesher {
 public:
  Mesher(const std::vector<Point2>& vertices, const std::vector<Segment>& segments,
         const std::vector<Point2>& hole_seeds, const SizeField& size, const Options& opts)
      : opts_(opts), size_(size), hole_seeds_(hole_seeds) {
    pts_ = vertices;
    n_fixed_ = static_cast<int>(pts_.size());
    build_super_triangle();
    for (int i = 0; i < n_fixed_; ++i) {
      int t = insert_point(pts_[i], i, last_tri_);
      if (t < 0) throw std::runtime_error("mesh generator: duplicate boundary vertex");
    }
    for (const auto& s : segments) {
      insert_constraint(s.a, s.b);
      constraints_[EdgeKey(s.a, s.b)] = {s.tag, s.splittable};
    }
  }

  Result run() {
    classify();
    refine();
    smooth();
    return extract();
  }

 private:
  Options opts_;
  SizeField size_;
  std::vector<Point2> hole_seeds_;
  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::unordered_map<EdgeKey, ConstraintInfo, EdgeKeyHash> constraints_;
  std::vector<char> discard_;  // per-triangle: 1 = outside or hole
  int n_fixed_ = 0;
  int super_v0_ = -1;
  int last_tri_ = 0;

  bool is_constrained(int a, int b) const { return constraints_.count(EdgeKey(a, b)) > 0; }

  void build_super_triangle() {
    double lox = 1e300, loy = 1e300, hix = -1e300, hiy = -1e300;
    for (const auto& p : pts_) {
      lox = std::min(lox, p.x);
      hix = std::max(hix, p.x);
      loy = std::min(loy, p.y);
      hiy = std::max(hiy, p.y);
    }
    double cx = 0.5 * (lox + hix), cy = 0.5 * (loy + hiy);
    double r = 24.0 * std::max({hix - lox, hiy - loy, 1e-6});
    super_v0_ = static_cast<int>(pts_.size());
    pts_.push_back({cx - 2.0 * r, cy - r});
    pts_.push_back({cx + 2.0 * r, cy - r});
    pts_.push_back({cx, cy + 2.0 * r});
    Tri t;
    t.v = {super_v0_, super_v0_ + 1, super_v0_ + 2};
    t.alive = true;
    tris_.push_back(t);
  }

  static int edge_of(const Tri& t, int u, int v) {
    for (int e = 0; e < 3; ++e)
      if ((t.v[(e + 1) % 3] == u && t.v[(e + 2) % 3] == v) ||
          (t.v[(e + 1) % 3] == v && t.v[(e + 2) % 3] == u))
        return e;
    return -1;
  }

  void link(int ta, int ea, int tb) {
    if (ta >= 0) tris_[ta].nbr[ea] = tb;
  }

  // Walks from triangle `start` to the triangle containing p. Returns the
  // triangle index, or -1 with *blocked set when `stop_at_constraints` and a
  // constrained edge lies on the way.
  int locate(const Point2& p, int start, bool stop_at_constraints = false,
             EdgeKey* blocked = nullptr) {
    int cur = start;
    if (cur < 0 || !tris_[cur].alive) {
      cur = -1;
      for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
        if (tris_[i].alive) {
          cur = i;
          break;
        }
    }
    std::size_t guard = 4 * tris_.size() + 64;
    int prev = -1;
    while (guard-- > 0) {
      const Tri& t = tris_[cur];
      int exit_edge = -1;
      for (int e = 0; e < 3; ++e) {
        int u = t.v[(e + 1) % 3], v = t.v[(e + 2) % 3];
        if (t.nbr[e] == prev && prev != -1) continue;
        if (orient2d_sign(pts_[u], pts_[v], p) < 0) {
          exit_edge = e;
          break;
        }
      }
      if (exit_edge < 0) {
        last_tri_ = cur;
        return cur;
      }
      int u = t.v[(exit_edge + 1) % 3], v = t.v[(exit_edge + 2) % 3];
      if (stop_at_constraints && is_constrained(u, v)) {
        if (blocked) *blocked = EdgeKey(u, v);
        return -1;
      }
      int next = t.nbr[exit_edge];
      if (next < 0 || !tris_[next].alive) return -1;  // outside the hull
      prev = cur;
      cur = next;
    }
    // Deterministic fallback: linear scan.
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive) continue;
      const Tri& t = tris_[i];
      if (orient2d_sign(pts_[t.v[0]], pts_[t.v[1]], p) >= 0 &&
          orient2d_sign(pts_[t.v[1]], pts_[t.v[2]], p) >= 0 &&
          orient2d_sign(pts_[t.v[2]], pts_[t.v[0]], p) >= 0)
        return static_cast<int>(i);
    }
    return -1;
  }

  // Bowyer-Watson insertion. `vid` < 0 appends p as a new vertex. Returns the
  // new vertex id, or -1 if p coincides with an existing vertex.
  int insert_point(const Point2& p, int vid, int hint) {
    int t0 = locate(p, hint);
    if (t0 < 0) throw std::runtime_error("mesh generator: point outside triangulation");
    for (int vv : tris_[t0].v)
      if (pts_[vv] == p && vv != vid) return -1;

    // Grow the cavity of triangles whose circumdisk strictly contains p,
    // never expanding across constrained edges.
    std::vector<int> cavity{t0};
    std::vector<char> in_cavity(tris_.size(), 0);
    in_cavity[t0] = 1;
    std::deque<int> work{t0};
    while (!work.empty()) {
      int ti = work.front();
      work.pop_front();
      const Tri t = tris_[ti];
      for (int e = 0; e < 3; ++e) {
        int nb = t.nbr[e];
        if (nb < 0 || in_cavity[nb] || !tris_[nb].alive) continue;
        int u = t.v[(e + 1) % 3], v = t.v[(e + 2) % 3];
        if (is_constrained(u, v)) continue;
        const Tri& n = tris_[nb];
        if (incircle_sign(pts_[n.v[0]], pts_[n.v[1]], pts_[n.v[2]], p) > 0) {
          in_cavity[nb] = 1;
          cavity.push_back(nb);
          work.push_back(nb);
        }
      }
    }

    // Boundary edges of the cavity, oriented CCW as seen from inside.
    struct BEdge {
      int u, v, outer;
    };
    auto collect_boundary = [&]() {
      std::vector<BEdge> edges;
      for (int ti : cavity) {
        const Tri& t = tris_[ti];
        for (int e = 0; e < 3; ++e) {
          int nb = t.nbr[e];
          if (nb >= 0 && tris_[nb].alive && in_cavity[nb]) continue;
          edges.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nb});
        }
      }
      return edges;
    };

    // Drop cavity triangles whose boundary edge would produce a degenerate
    // fan triangle; keeps the cavity star-shaped under numerical ties.
    std::vector<BEdge> boundary = collect_boundary();
    for (int pass = 0; pass < 64; ++pass) {
      bool changed = false;
      for (const auto& be : boundary) {
        if (orient2d_sign(pts_[be.u], pts_[be.v], p) <= 0) {
          int bad = -1;
          for (int ti : cavity)
            if (ti != t0 && edge_of(tris_[ti], be.u, be.v) >= 0 && in_cavity[ti]) bad = ti;
          if (bad >= 0) {
            in_cavity[bad] = 0;
            cavity.erase(std::find(cavity.begin(), cavity.end(), bad));
            changed = true;
          }
        }
      }
      if (!changed) break;
      boundary = collect_boundary();
    }

    if (vid < 0) {
      vid = static_cast<int>(pts_.size());
      pts_.push_back(p);
    }

    // The cavity never crosses constraints, so all its triangles share one
    // classification; new triangles inherit it.
    char inherit = discard_.empty() ? 0 : discard_[t0];
    for (int ti : cavity) tris_[ti].alive = false;

    // Fan from p to the cavity boundary.
    std::unordered_map<std::uint64_t, std::pair<int, int>> open_edges;
    auto dir_key = [](int u, int v) { return (std::uint64_t(u) << 32) | std::uint64_t(v); };
    std::vector<int> new_tris;
    for (const auto& be : boundary) {
      Tri nt;
      nt.v = {vid, be.u, be.v};
      nt.alive = true;
      int ti = static_cast<int>(tris_.size());
      tris_.push_back(nt);
      new_tris.push_back(ti);
      // Outer neighbor across (u, v).
      tris_[ti].nbr[0] = be.outer;
      if (be.outer >= 0 && tris_[be.outer].alive) {
        int oe = edge_of(tris_[be.outer], be.u, be.v);
        if (oe >= 0) tris_[be.outer].nbr[oe] = ti;
      }
      // Fan-internal adjacency via directed edges p->u and v->p.
      if (auto it = open_edges.find(dir_key(be.v, vid)); it != open_edges.end()) {
        tris_[ti].nbr[1] = it->second.first;        // edge (v, p), opposite u
        tris_[it->second.first].nbr[it->second.second] = ti;
        open_edges.erase(it);
      } else {
        open_edges[dir_key(vid, be.v)] = {ti, 1};
      }
      if (auto it = open_edges.find(dir_key(vid, be.u)); it != open_edges.end()) {
        tris_[ti].nbr[2] = it->second.first;        // edge (p, u), opposite v
        tris_[it->second.first].nbr[it->second.second] = ti;
        open_edges.erase(it);
      } else {
        open_edges[dir_key(be.u, vid)] = {ti, 2};
      }
    }
    if (!new_tris.empty()) last_tri_ = new_tris.back();
    if (!discard_.empty()) discard_.resize(tris_.size(), inherit);
    return vid;
  }

  // Sloan-style constraint recovery: flip the edges crossing (a, b).
  void insert_constraint(int a, int b) {
    if (a == b) throw std::runtime_error("mesh generator: zero-length constraint");
    for (int guard = 0; guard < 10000; ++guard) {
      int crossing_tri = -1, crossing_edge = -1;
      if (find_crossing(a, b, crossing_tri, crossing_edge)) return;  // edge present
      if (crossing_tri < 0)
        throw std::runtime_error("mesh generator: constraint recovery failed (vertex on segment?)");
      if (!flip(crossing_tri, crossing_edge)) {
        // Not flippable yet; flip the next crossing edge first by retrying.
        if (!flip_any_crossing(a, b))
          throw std::runtime_error("mesh generator: constraint recovery stalled");
      }
    }
    throw std::runtime_error("mesh generator: constraint recovery did not terminate");
  }

  // Returns true when edge (a, b) already exists. Otherwise reports the first
  // triangle/edge properly crossed by segment a->b.
  bool find_crossing(int a, int b, int& tri_out, int& edge_out) {
    tri_out = -1;
    edge_out = -1;
    // Find a triangle incident to a.
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive) continue;
      int la = -1;
      for (int e = 0; e < 3; ++e)
        if (t.v[e] == a) la = e;
      if (la < 0) continue;
      if (t.v[0] == b || t.v[1] == b || t.v[2] == b) return true;
      int u = t.v[(la + 1) % 3], v = t.v[(la + 2) % 3];
      // Does segment a->b leave through edge (u, v)?
      if (orient2d_sign(pts_[a], pts_[b], pts_[u]) <= 0 &&
          orient2d_sign(pts_[a], pts_[b], pts_[v]) >= 0 &&
          orient2d_sign(pts_[u], pts_[v], pts_[a]) > 0 &&
          orient2d_sign(pts_[u], pts_[v], pts_[b]) < 0) {
        tri_out = static_cast<int>(i);
        edge_out = la;
        return false;
      }
    }
    return false;
  }

  bool flip_any_crossing(int a, int b) {
    // Walk the corridor of triangles crossed by a->b and flip the first
    // flippable crossing edge.
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive) continue;
      for (int e = 0; e < 3; ++e) {
        int u = t.v[(e + 1) % 3], v = t.v[(e + 2) % 3];
        if (u == a || u == b || v == a || v == b) continue;
        if (is_constrained(u, v)) continue;
        // Proper crossing of segments (a,b) and (u,v)?
        if (orient2d_sign(pts_[a], pts_[b], pts_[u]) * orient2d_sign(pts_[a], pts_[b], pts_[v]) <
                0 &&
            orient2d_sign(pts_[u], pts_[v], pts_[a]) * orient2d_sign(pts_[u], pts_[v], pts_[b]) <
                0) {
          if (flip(static_cast<int>(i), e)) return true;
        }
      }
    }
    return false;
  }

  // Flips the edge opposite vertex `e` of triangle `ti`. Returns false when
  // the surrounding quad is not strictly convex.
  bool flip(int ti, int e) {
    Tri& t = tris_[ti];
    int tj = t.nbr[e];
    if (tj < 0 || !tris_[tj].alive) return false;
    Tri& s = tris_[tj];
    int p = t.v[e];
    int u = t.v[(e + 1) % 3], v = t.v[(e + 2) % 3];
    int se = edge_of(s, u, v);
    int q = s.v[se];
    if (is_constrained(u, v)) return false;
    // Quad p-u-q-v must be strictly convex.
    if (orient2d_sign(pts_[p], pts_[u], pts_[q]) <= 0) return false;
    if (orient2d_sign(pts_[q], pts_[v], pts_[p]) <= 0) return false;

    int t_nbr_u = t.nbr[(e + 2) % 3];  // across edge (p, u)
    int t_nbr_v = t.nbr[(e + 1) % 3];  // across edge (v, p)
    int s_nbr_qu = -1, s_nbr_vq = -1;
    for (int k = 0; k < 3; ++k) {
      int eu = s.v[(k + 1) % 3], ev = s.v[(k + 2) % 3];
      if ((eu == q && ev == u) || (eu == u && ev == q)) s_nbr_qu = s.nbr[k];
      if ((eu == v && ev == q) || (eu == q && ev == v)) s_nbr_vq = s.nbr[k];
    }

    // New triangles: (p, u, q) replaces t, (p, q, v) replaces s.
    t.v = {p, u, q};
    s.v = {p, q, v};
    t.nbr = {s_nbr_qu, tj, t_nbr_u};
    s.nbr = {s_nbr_vq, t_nbr_v, ti};
    relink(s_nbr_qu, u, q, ti);
    relink(t_nbr_u, p, u, ti);
    relink(s_nbr_vq, q, v, tj);
    relink(t_nbr_v, v, p, tj);
    return true;
  }

  void relink(int ti, int u, int v, int to) {
    if (ti < 0 || !tris_[ti].alive) return;
    int e = edge_of(tris_[ti], u, v);
    if (e >= 0) tris_[ti].nbr[e] = to;
  }

  // Marks outside-of-domain and hole triangles.
  void classify() {
    discard_.assign(tris_.size(), 0);
    std::deque<int> work;
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive) continue;
      for (int vv : tris_[i].v)
        if (vv >= super_v0_ && vv < super_v0_ + 3) {
          if (!discard_[i]) {
            discard_[i] = 1;
            work.push_back(static_cast<int>(i));
          }
        }
    }
    for (const auto& seed : hole_seeds_) {
      int t = locate(seed, last_tri_);
      if (t < 0) throw std::runtime_error("mesh generator: hole seed not found");
      if (!discard_[t]) {
        discard_[t] = 1;
        work.push_back(t);
      }
    }
    while (!work.empty()) {
      int ti = work.front();
      work.pop_front();
      const Tri& t = tris_[ti];
      for (int e = 0; e < 3; ++e) {
        int nb = t.nbr[e];
        if (nb < 0 || !tris_[nb].alive || discard_[nb]) continue;
        if (is_constrained(t.v[(e + 1) % 3], t.v[(e + 2) % 3])) continue;
        discard_[nb] = 1;
        work.push_back(nb);
      }
    }
  }

  bool in_domain(int ti) const { return tris_[ti].alive && !discard_[ti]; }

  static Point2 circumcenter(const Point2& a, const Point2& b, const Point2& c, double& r) {
    double bx = b.x - a.x, by = b.y - a.y;
    double cx = c.x - a.x, cy = c.y - a.y;
    double d = 2.0 * (bx * cy - by * cx);
    if (std::abs(d) < 1e-300) {
      r = 1e300;
      return a;
    }
    double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    double ux = (cy * b2 - by * c2) / d;
    double uy = (bx * c2 - cx * b2) / d;
    r = std::hypot(ux, uy);
    return {a.x + ux, a.y + uy};
  }

  // True if q lies strictly inside the diametral circle of segment (u, v).
  bool encroaches(const Point2& q, int u, int v) const {
    Point2 m{0.5 * (pts_[u].x + pts_[v].x), 0.5 * (pts_[u].y + pts_[v].y)};
    double rr = 0.25 * (dist(pts_[u], pts_[v]) * dist(pts_[u], pts_[v]));
    double dx = q.x - m.x, dy = q.y - m.y;
    return dx * dx + dy * dy < rr * (1.0 - 1e-12);
  }

  void split_segment(int u, int v) {
    auto it = constraints_.find(EdgeKey(u, v));
    if (it == constraints_.end() || !it->second.splittable) return;
    ConstraintInfo info = it->second;
    constraints_.erase(it);
    Point2 m{0.5 * (pts_[u].x + pts_[v].x), 0.5 * (pts_[u].y + pts_[v].y)};
    int mid = insert_point(m, -1, last_tri_);
    if (mid < 0) {
      constraints_[EdgeKey(u, v)] = info;  // midpoint already exists; keep as was
      return;
    }
    constraints_[EdgeKey(u, mid)] = info;
    constraints_[EdgeKey(mid, v)] = info;
    // Classification flags grew with new triangles.
    classify();
  }

  void refine() {
    bool changed = true;
    int rounds = 0;
    while (changed && rounds++ < 40 && static_cast<int>(pts_.size()) < opts_.max_points) {
      changed = false;
      const std::size_t tri_count = tris_.size();
      for (std::size_t ti = 0; ti < tri_count; ++ti) {
        if (!tris_[ti].alive || discard_[ti]) continue;
        if (static_cast<int>(pts_.size()) >= opts_.max_points) break;
        const Tri t = tris_[ti];
        const Point2 &a = pts_[t.v[0]], &b = pts_[t.v[1]], &c = pts_[t.v[2]];
        double r;
        Point2 cc = circumcenter(a, b, c, r);
        double lmin = std::min({dist(a, b), dist(b, c), dist(c, a)});
        Point2 centroid{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
        double target = size_(centroid);
        bool too_big = r > opts_.size_factor * target;
        bool bad_shape = r > opts_.radius_edge_bound * lmin;
        if (!too_big && !bad_shape) continue;

        EdgeKey blocked(0, 0);
        int dest = locate(cc, static_cast<int>(ti), true, &blocked);
        if (dest < 0) {
          // Circumcenter hidden behind a constraint: split it if allowed.
          auto itc = constraints_.find(blocked);
          if (itc != constraints_.end() && itc->second.splittable &&
              dist(pts_[blocked.a], pts_[blocked.b]) > 0.6 * target) {
            split_segment(blocked.a, blocked.b);
            changed = true;
          }
          continue;
        }
        if (!in_domain(dest)) continue;
        // Reject insertions encroaching a non-splittable segment nearby.
        bool rejected = false;
        for (int e = 0; e < 3 && !rejected; ++e) {
          int u = tris_[dest].v[(e + 1) % 3], vv = tris_[dest].v[(e + 2) % 3];
          auto itc = constraints_.find(EdgeKey(u, vv));
          if (itc != constraints_.end() && !itc->second.splittable && encroaches(cc, u, vv))
            rejected = true;
        }
        if (rejected) continue;
        // Reject near-duplicate insertions.
        for (int vv : tris_[dest].v)
          if (dist(pts_[vv], cc) < 1e-3 * target) rejected = true;
        if (rejected) continue;

        int nv = insert_point(cc, -1, dest);
        if (nv >= 0) changed = true;
      }
    }
  }

  void smooth() {
    for (int sweep = 0; sweep < opts_.smoothing_sweeps; ++sweep) {
      // Vertex -> incident domain triangles and neighbor vertices.
      std::vector<std::vector<int>> vnbrs(pts_.size());
      std::vector<char> on_boundary(pts_.size(), 0);
      for (int i = 0; i < n_fixed_; ++i) on_boundary[i] = 1;
      for (const auto& [key, info] : constraints_) {
        on_boundary[key.a] = 1;
        on_boundary[key.b] = 1;
      }
      for (std::size_t ti = 0; ti < tris_.size(); ++ti) {
        if (!in_domain(static_cast<int>(ti))) continue;
        const Tri& t = tris_[ti];
        for (int e = 0; e < 3; ++e) {
          vnbrs[t.v[e]].push_back(t.v[(e + 1) % 3]);
          vnbrs[t.v[e]].push_back(t.v[(e + 2) % 3]);
        }
      }
      std::vector<std::vector<int>> vtris(pts_.size());
      for (std::size_t ti = 0; ti < tris_.size(); ++ti)
        if (in_domain(static_cast<int>(ti)))
          for (int vv : tris_[ti].v) vtris[vv].push_back(static_cast<int>(ti));

      for (std::size_t v = 0; v < pts_.size(); ++v) {
        if (on_boundary[v] || vnbrs[v].empty()) continue;
        Point2 avg{0, 0};
        for (int nb : vnbrs[v]) avg = avg + pts_[nb];
        avg = avg * (1.0 / vnbrs[v].size());
        Point2 old = pts_[v];
        double w = opts_.smoothing_relaxation;
        Point2 cand{old.x + w * (avg.x - old.x), old.y + w * (avg.y - old.y)};
        pts_[v] = cand;
        for (int ti : vtris[v]) {
          const Tri& t = tris_[ti];
          if (orient2d_sign(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]]) <= 0) {
            pts_[v] = old;  // move would invert an element
            break;
          }
        }
      }
      rebuild();
    }
  }

  // Full re-triangulation of the current points; Delaunay-ness is restored
  // after smoothing moved interior vertices.
  void rebuild() {
    std::vector<Point2> points(pts_.begin(), pts_.begin() + (super_v0_)),
        steiner(pts_.begin() + super_v0_ + 3, pts_.end());
    std::map<EdgeKey, ConstraintInfo> constraints(constraints_.begin(), constraints_.end());

    pts_.clear();
    tris_.clear();
    constraints_.clear();
    last_tri_ = 0;

    pts_ = points;
    // Re-number: fixed vertices keep ids; steiner points append after the
    // super-triangle block to preserve constraint vertex ids.
    build_super_triangle();
    for (int i = 0; i < super_v0_; ++i)
      if (insert_point(pts_[i], i, last_tri_) < 0)
        throw std::runtime_error("mesh generator: duplicate vertex during rebuild");
    std::vector<int> remap(steiner.size());
    for (std::size_t i = 0; i < steiner.size(); ++i) {
      remap[i] = insert_point(steiner[i], -1, last_tri_);
      if (remap[i] < 0)
        throw std::runtime_error("mesh generator: duplicate steiner point during rebuild");
    }
    // Steiner vertices (split midpoints) shift ids by the re-inserted order.
    auto remap_id = [&](int v) { return v < super_v0_ ? v : remap[v - super_v0_ - 3]; };
    for (const auto& [key, info] : constraints) {
      int a = remap_id(key.a), b = remap_id(key.b);
      insert_constraint(a, b);
      constraints_[EdgeKey(a, b)] = info;
    }
    classify();
  }

  Result extract() {
    Result res;
    std::vector<int> vmap(pts_.size(), -1);
    for (std::size_t ti = 0; ti < tris_.size(); ++ti) {
      if (!in_domain(static_cast<int>(ti))) continue;
      for (int vv : tris_[ti].v)
        if (vmap[vv] < 0) vmap[vv] = 0;
    }
    int next = 0;
    for (std::size_t v = 0; v < pts_.size(); ++v)
      if (vmap[v] >= 0) {
        vmap[v] = next++;
        res.points.push_back(pts_[v]);
      }
    for (std::size_t ti = 0; ti < tris_.size(); ++ti) {
      if (!in_domain(static_cast<int>(ti))) continue;
      const Tri& t = tris_[ti];
      std::array<int, 3> tri{vmap[t.v[0]], vmap[t.v[1]], vmap[t.v[2]]};
      if (orient2d_sign(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]]) < 0) std::swap(tri[1], tri[2]);
      res.triangles.push_back(tri);
    }
    std::map<EdgeKey, ConstraintInfo> ordered(constraints_.begin(), constraints_.end());
    for (const auto& [key, info] : ordered) {
      if (vmap[key.a] < 0 || vmap[key.b] < 0) continue;
      res.boundary_edges.push_back({vmap[key.a], vmap[key.b]});
      res.boundary_edge_tags.push_back(info.tag);
    }
    return res;
  }
};

}  // namespace

Result triangulate(const std::vector<Point2>& vertices, const std::vector<Segment>& segments,
                   const std::vector<Point2>& hole_seeds, const SizeField& size,
                   const Options& opts) {
  Mesher mesher(vertices, segments, hole_seeds, size, opts);
  return mesher.run();
}

}  // namespace shapeopt::cdt
