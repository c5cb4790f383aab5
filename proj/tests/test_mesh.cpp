#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "shapeopt/mesh.hpp"

using namespace shapeopt;

namespace {

DomainSpec empty_square(double h) {
  DomainSpec spec;
  spec.mesh_size = h;
  return spec;
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("triangle quality reference values") {
  CHECK(triangle_quality({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(triangle_quality({0, 0}, {1, 0}, {0, 1}) ==
        doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-12));
  CHECK(triangle_quality({0, 0}, {1, 0}, {0.5, 1e-4}) < 0.01);
}

TEST_CASE("empty unit square: euler relation and quality") {
  auto mesh = generate_mesh(empty_square(0.05), {});
  CHECK(mesh.euler_characteristic() == 1);
  CHECK(mesh.hole_count() == 0);
  auto rep = mesh_quality(mesh);
  CHECK(rep.min_quality > 0.4);
  CHECK_NOTHROW(check_mesh(mesh));
}

TEST_CASE("benchmark mesh: node count near the reference resolution") {
  auto spec = DomainSpec::benchmark();
  auto shapes = build_benchmark_shapes(spec);
  auto mesh = generate_mesh(spec, shapes);
  CHECK(mesh.euler_characteristic() == 1 - 2);
  CHECK(mesh.node_count() > 3512 * 3 / 4);
  CHECK(mesh.node_count() < 3512 * 5 / 4);
  // Every shape polyline node appears verbatim as a mesh boundary node.
  for (int j = 0; j < shapes.shape_count(); ++j) {
    auto loop = shapes.shapes[j].loop();
    const auto& sl = mesh.shape_loops[j];
    REQUIRE(sl.nodes.size() == loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) CHECK(mesh.nodes[sl.nodes[i]] == loop[i]);
  }
}

TEST_CASE("overlapping shapes are rejected") {
  auto spec = DomainSpec::benchmark();
  spec.shapes[1].center = {0.35, 0.35};
  CHECK_THROWS(build_benchmark_shapes(spec));
  MultiShape touching;
  touching.shapes = {build_benchmark_shapes(DomainSpec::benchmark()).shapes[0],
                     build_benchmark_shapes(DomainSpec::benchmark()).shapes[0]};
  CHECK_THROWS(generate_mesh(spec, touching));
}

TEST_CASE("deform_mesh basics") {
  auto spec = DomainSpec::benchmark(12, 24, 0.08);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  std::vector<double> zero(2 * mesh.node_count(), 0.0);
  auto same = deform_mesh(mesh, zero, 1.0);
  for (int i = 0; i < mesh.node_count(); ++i) CHECK(same.nodes[i] == mesh.nodes[i]);

  // Interior-only displacement leaves boundary polylines unchanged.
  std::vector<double> interior(2 * mesh.node_count(), 0.0);
  for (int i = 0; i < mesh.node_count(); ++i)
    if (mesh.boundary_node_map[i].kind == BoundaryKind::None) {
      interior[2 * i] = 1.0;
      interior[2 * i + 1] = -0.5;
    }
  auto moved = deform_mesh(mesh, interior, 1e-4);
  auto before = extract_shapes(mesh);
  auto after = extract_shapes(moved);
  for (int j = 0; j < before.shape_count(); ++j) {
    auto a = before.shapes[j].loop(), b = after.shapes[j].loop();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  // A displacement collapsing an element must raise "mesh inverted".
  std::vector<double> crush(2 * mesh.node_count(), 0.0);
  int v = mesh.triangles[0][0];
  Point2 far{mesh.nodes[v].x - 10.0, mesh.nodes[v].y};
  crush[2 * v] = far.x - mesh.nodes[v].x;
  CHECK_THROWS_WITH_AS(deform_mesh(mesh, crush, 1.0), "mesh inverted", std::runtime_error);
}

TEST_CASE("deformation preserves gluing and tags for random fields") {
  auto spec = DomainSpec::benchmark(12, 24, 0.08);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> field(2 * mesh.node_count());
    for (auto& x : field) x = u(rng);
    for (int i : mesh.outer_boundary_nodes()) field[2 * i] = field[2 * i + 1] = 0.0;
    TriMesh moved;
    try {
      moved = deform_mesh(mesh, field, 1e-3);
    } catch (const std::runtime_error&) {
      continue;  // inverted at this draw; rejection is the contract
    }
    CHECK(validate_multishape(extract_shapes(moved)).ok());
    for (int i = 0; i < mesh.node_count(); ++i)
      CHECK(moved.boundary_node_map[i] == mesh.boundary_node_map[i]);
    mesh = moved;
  }
}

TEST_CASE("remesh reproduces boundary nodes and restores quality") {
  auto spec = DomainSpec::benchmark(12, 24, 0.08);
  auto shapes = build_benchmark_shapes(spec);
  auto mesh = generate_mesh(spec, shapes);
  auto re = remesh(shapes, spec, mesh.generation);
  CHECK(re.generation == mesh.generation + 1);
  REQUIRE(re.shape_loops.size() == mesh.shape_loops.size());
  for (std::size_t j = 0; j < re.shape_loops.size(); ++j) {
    const auto& a = mesh.shape_loops[j];
    const auto& b = re.shape_loops[j];
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      CHECK(std::abs(mesh.nodes[a.nodes[i]].x - re.nodes[b.nodes[i]].x) < 1e-15);
      CHECK(std::abs(mesh.nodes[a.nodes[i]].y - re.nodes[b.nodes[i]].y) < 1e-15);
    }
  }

  // Heavy deformation then remesh: quality restored above the floor.
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TriMesh cur = mesh;
  for (int step = 0; step < 40; ++step) {
    std::vector<double> field(2 * cur.node_count());
    for (auto& x : field) x = u(rng);
    for (int i : cur.outer_boundary_nodes()) field[2 * i] = field[2 * i + 1] = 0.0;
    try {
      cur = deform_mesh(cur, field, 2e-3);
    } catch (const std::runtime_error&) {
      break;
    }
  }
  auto fresh = remesh(cur, spec);
  CHECK(mesh_quality(fresh).min_quality >= 0.2);
  CHECK(fresh.euler_characteristic() == 1 - fresh.hole_count());

  // Self-intersecting boundary is refused.
  auto bad = cur;
  const auto& sl = bad.shape_loops[0];
  bad.nodes[sl.nodes[0]] = bad.nodes[sl.nodes[2]];  // fold the loop onto itself
  CHECK_THROWS(remesh(bad, spec));
}

TEST_CASE("msh round trip") {
  auto spec = DomainSpec::benchmark(6, 16, 0.1);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  std::stringstream ss;
  write_msh(ss, mesh);
  auto back = read_msh(ss);
  REQUIRE(back.node_count() == mesh.node_count());
  REQUIRE(back.triangle_count() == mesh.triangle_count());
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK(back.nodes[i].x == mesh.nodes[i].x);
    CHECK(back.nodes[i].y == mesh.nodes[i].y);
  }
  REQUIRE(back.shape_loops.size() == mesh.shape_loops.size());
  for (std::size_t j = 0; j < mesh.shape_loops.size(); ++j)
    CHECK(back.shape_loops[j].segment_offsets == mesh.shape_loops[j].segment_offsets);
  auto shapes_a = extract_shapes(mesh);
  auto shapes_b = extract_shapes(back);
  for (int j = 0; j < shapes_a.shape_count(); ++j)
    CHECK(polygon_area(shapes_a.shapes[j]) ==
          doctest::Approx(polygon_area(shapes_b.shapes[j])).epsilon(1e-15));
}

TEST_CASE("vtk export writes a parseable header") {
  auto spec = empty_square(0.2);
  auto mesh = generate_mesh(spec, {});
  std::stringstream ss;
  VtkPointData data;
  data.scalars.push_back({"pressure", std::vector<double>(mesh.node_count(), 1.0)});
  data.vectors.push_back(
      {"velocity", std::vector<std::array<double, 3>>(mesh.node_count(), {1, 2, 0})});
  write_vtk(ss, mesh, data);
  auto text = ss.str();
  CHECK(text.find("# vtk DataFile Version 2.0") == 0);
  CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(text.find("VECTORS velocity double") != std::string::npos);
  CHECK(text.find("SCALARS pressure double 1") != std::string::npos);
}

}  // TEST_SUITE
