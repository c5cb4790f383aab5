#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "shapeopt/geometry.hpp"

using namespace shapeopt;

namespace {

GluedShape closed_shape(const std::vector<Point2>& loop) {
  GluedShape s;
  s.kind = ShapeKind::GluedOpen;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    OpenCurveSegment seg;
    seg.id = static_cast<int>(i);
    seg.nodes = {loop[i], loop[(i + 1) % loop.size()]};
    s.segments.push_back(seg);
  }
  return s;
}

std::vector<Point2> unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

std::vector<Point2> regular_polygon(int n, double r, Point2 c) {
  std::vector<Point2> loop;
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * std::numbers::pi * i / n;
    loop.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
  }
  return loop;
}

// Star-shaped random polygon: simple by construction.
std::vector<Point2> random_polygon(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<Point2> loop;
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * std::numbers::pi * i / n;
    double r = u(rng);
    loop.push_back({0.3 * r * std::cos(t), 0.3 * r * std::sin(t)});
  }
  return loop;
}

double fd_area(const std::vector<Point2>& loop, std::size_t k, int comp, double eps) {
  auto lo = loop, hi = loop;
  (comp == 0 ? lo[k].x : lo[k].y) -= eps;
  (comp == 0 ? hi[k].x : hi[k].y) += eps;
  return (polygon_area(closed_shape(hi)) - polygon_area(closed_shape(lo))) / (2 * eps);
}

Point2 fd_barycenter(const std::vector<Point2>& loop, std::size_t k, int comp, double eps) {
  auto lo = loop, hi = loop;
  (comp == 0 ? lo[k].x : lo[k].y) -= eps;
  (comp == 0 ? hi[k].x : hi[k].y) += eps;
  Point2 bl = polygon_barycenter(closed_shape(lo));
  Point2 bh = polygon_barycenter(closed_shape(hi));
  return {(bh.x - bl.x) / (2 * eps), (bh.y - bl.y) / (2 * eps)};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("polygon area basics") {
  CHECK(polygon_area(closed_shape(unit_square())) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(polygon_area(closed_shape({{0, 0}, {1, 0}, {0, 1}})) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(polygon_area(closed_shape(regular_polygon(12, 0.1, {0.3, 0.3}))) ==
        doctest::Approx(0.03).epsilon(1e-13));
}

TEST_CASE("degenerate polygon is rejected") {
  // Bowtie self-intersection.
  CHECK_THROWS_WITH_AS(polygon_area(closed_shape({{0, 0}, {1, 1}, {1, 0}, {0, 1}})),
                       "degenerate shape", std::runtime_error);
}

TEST_CASE("area is invariant under renumbering and translation, odd under reversal") {
  std::mt19937 rng(7);
  auto loop = random_polygon(rng, 9);
  double a0 = polygon_area(closed_shape(loop));
  auto rotated = loop;
  std::rotate(rotated.begin(), rotated.begin() + 4, rotated.end());
  CHECK(polygon_area(closed_shape(rotated)) == doctest::Approx(a0).epsilon(1e-14));
  auto shifted = loop;
  for (auto& p : shifted) p = p + Point2{1.7, -2.3};
  CHECK(polygon_area(closed_shape(shifted)) == doctest::Approx(a0).epsilon(1e-12));
  auto reversed = loop;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(polygon_area(closed_shape(reversed)) == doctest::Approx(-a0).epsilon(1e-14));
}

TEST_CASE("polygon barycenter basics") {
  Point2 b = polygon_barycenter(closed_shape(unit_square()));
  CHECK(b.x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b.y == doctest::Approx(0.5).epsilon(1e-14));
  b = polygon_barycenter(closed_shape(regular_polygon(10, 0.2, {0.3, 0.3})));
  CHECK(b.x == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(b.y == doctest::Approx(0.3).epsilon(1e-13));
  b = polygon_barycenter(closed_shape({{0, 0}, {1, 0}, {0, 1}}));
  CHECK(b.x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(b.y == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("area gradient: hand-derived square node and translation invariance") {
  auto g = area_gradient(closed_shape(unit_square()));
  CHECK(g[0].x == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g[0].y == doctest::Approx(-0.5).epsilon(1e-15));

  std::mt19937 rng(11);
  auto loop = random_polygon(rng, 8);
  auto grad = area_gradient(closed_shape(loop));
  double along_translation = 0.0;
  for (const auto& gi : grad) along_translation += gi.x * 0.7 + gi.y * (-0.2);
  CHECK(std::abs(along_translation) < 1e-14);
}

TEST_CASE("area gradient matches central finite differences") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto loop = random_polygon(rng, 4 + trial % 9);
    auto grad = area_gradient(closed_shape(loop));
    for (std::size_t k = 0; k < loop.size(); ++k) {
      for (int comp = 0; comp < 2; ++comp) {
        double fd = fd_area(loop, k, comp, 1e-7);
        double an = comp == 0 ? grad[k].x : grad[k].y;
        CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("barycenter gradient: translation, finite differences, rotation") {
  std::mt19937 rng(37);
  auto loop = random_polygon(rng, 10);
  auto g = barycenter_gradient(closed_shape(loop));

  // Constant field c: the barycenter translates with the shape.
  Point2 c{0.4, -1.1};
  double dx = 0, dy = 0;
  for (const auto& gk : g) {
    dx += gk[0][0] * c.x + gk[0][1] * c.y;
    dy += gk[1][0] * c.x + gk[1][1] * c.y;
  }
  CHECK(dx == doctest::Approx(c.x).epsilon(1e-10));
  CHECK(dy == doctest::Approx(c.y).epsilon(1e-10));

  for (std::size_t k = 0; k < loop.size(); ++k) {
    for (int comp = 0; comp < 2; ++comp) {
      Point2 fd = fd_barycenter(loop, k, comp, 1e-7);
      CHECK(std::abs(g[k][0][comp] - fd.x) <= 1e-6 * std::max(1.0, std::abs(fd.x)));
      CHECK(std::abs(g[k][1][comp] - fd.y) <= 1e-6 * std::max(1.0, std::abs(fd.y)));
    }
  }

  // Rotation about the barycenter of a regular polygon keeps it fixed.
  auto reg = regular_polygon(12, 0.3, {0.2, 0.9});
  auto greg = barycenter_gradient(closed_shape(reg));
  Point2 b = polygon_barycenter(closed_shape(reg));
  double rx = 0, ry = 0;
  for (std::size_t k = 0; k < reg.size(); ++k) {
    double wx = -(reg[k].y - b.y), wy = reg[k].x - b.x;
    rx += greg[k][0][0] * wx + greg[k][0][1] * wy;
    ry += greg[k][1][0] * wx + greg[k][1][1] * wy;
  }
  CHECK(std::abs(rx) < 1e-12);
  CHECK(std::abs(ry) < 1e-12);
}

TEST_CASE("validate_multishape") {
  MultiShape ok;
  ok.shapes = {closed_shape(regular_polygon(8, 0.1, {0.3, 0.3})),
               closed_shape(regular_polygon(8, 0.1, {0.7, 0.7}))};
  CHECK(validate_multishape(ok).ok());

  // Chain of 3 segments that does not close.
  GluedShape open_chain;
  open_chain.kind = ShapeKind::GluedOpen;
  open_chain.segments = {{0, {{0, 0}, {1, 0}}}, {1, {{1, 0}, {1, 1}}}, {2, {{1, 1}, {0.5, 0.5}}}};
  MultiShape bad;
  bad.shapes = {open_chain};
  auto rep = validate_multishape(bad);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations.front().find("closure violated") != std::string::npos);

  GluedShape closed_single;
  closed_single.kind = ShapeKind::SingleClosed;
  closed_single.segments = {{0, regular_polygon(16, 0.2, {0.5, 0.5})}};
  closed_single.segments[0].nodes.push_back(closed_single.segments[0].nodes.front());
  MultiShape single;
  single.shapes = {closed_single};
  CHECK(validate_multishape(single).ok());

  // Overlap detection.
  MultiShape overlap;
  overlap.shapes = {closed_shape(regular_polygon(8, 0.2, {0.4, 0.4})),
                    closed_shape(regular_polygon(8, 0.2, {0.5, 0.5}))};
  rep = validate_multishape(overlap);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations.front().find("overlap") != std::string::npos);
}

TEST_CASE("benchmark shape generator") {
  auto spec = DomainSpec::benchmark();
  auto m = build_benchmark_shapes(spec);
  CHECK(m.shape_count() == 2);
  CHECK(m.total_factors() == 12 + 48 + 60);
  CHECK(m.factor_starts() == std::vector<int>{1, 61});
  Point2 b1 = polygon_barycenter(m.shapes[0]);
  Point2 b2 = polygon_barycenter(m.shapes[1]);
  CHECK(std::abs(b1.x - 0.3) < 1e-12);
  CHECK(std::abs(b1.y - 0.3) < 1e-12);
  CHECK(std::abs(b2.x - 0.45) < 1e-12);
  CHECK(std::abs(b2.y - 0.75) < 1e-12);
  CHECK(validate_multishape(m, spec).ok());

  // Gluing holds exactly after generation.
  for (const auto& s : m.shapes)
    for (std::size_t h = 0; h < s.segments.size(); ++h)
      CHECK(s.segments[h].nodes.back() ==
            s.segments[(h + 1) % s.segments.size()].nodes.front());

  auto bad = spec;
  bad.shapes[0].radius = 0.0;
  CHECK_THROWS(build_benchmark_shapes(bad));

  // l1 = 0: plain regular dodecagon.
  auto dodeca = DomainSpec::benchmark(0, 60);
  auto md = build_benchmark_shapes(dodeca);
  CHECK(md.shapes[0].factor_count() == 12);
  CHECK(polygon_area(md.shapes[0]) == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("subdivided chords preserve the kink polygon area") {
  auto m0 = build_benchmark_shapes(DomainSpec::benchmark(0, 60));
  auto m1 = build_benchmark_shapes(DomainSpec::benchmark(48, 60));
  CHECK(polygon_area(m1.shapes[0]) == doctest::Approx(polygon_area(m0.shapes[0])).epsilon(1e-12));
}

TEST_CASE("boundary csv round trip") {
  auto m = build_benchmark_shapes(DomainSpec::benchmark(5, 13));
  std::stringstream ss;
  write_boundary_csv(ss, m);
  auto back = read_boundary_csv(ss);
  REQUIRE(back.shape_count() == m.shape_count());
  for (int j = 0; j < m.shape_count(); ++j) {
    auto a = m.shapes[j].loop();
    auto b = back.shapes[j].loop();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  // Clockwise input is rejected unless auto-reversal is requested.
  MultiShape cw;
  auto loop = unit_square();
  std::reverse(loop.begin(), loop.end());
  cw.shapes = {closed_shape(loop)};
  std::stringstream s2;
  write_boundary_csv(s2, cw);
  CHECK_THROWS(read_boundary_csv(s2));
  std::stringstream s3;
  write_boundary_csv(s3, cw);
  auto fixed = read_boundary_csv(s3, true);
  CHECK(polygon_area(fixed.shapes[0]) == doctest::Approx(1.0));
}

}  // TEST_SUITE
