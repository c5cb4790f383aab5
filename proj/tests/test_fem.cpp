#include <cmath>
#include <random>

#include "doctest.h"
#include "shapeopt/fem.hpp"

using namespace shapeopt;
using fem::Space;

namespace {

// Two right triangles covering the unit square: 4 nodes, 5 edges.
TriMesh two_triangle_square() {
  TriMesh mesh;
  mesh.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  mesh.boundary_edges = {{0, 1, {BoundaryKind::WallBottom, -1, -1}},
                         {1, 2, {BoundaryKind::Outflow, -1, -1}},
                         {2, 3, {BoundaryKind::WallTop, -1, -1}},
                         {3, 0, {BoundaryKind::Inflow, -1, -1}}};
  mesh.boundary_node_map = {{BoundaryKind::WallBottom, -1, -1},
                            {BoundaryKind::WallBottom, -1, -1},
                            {BoundaryKind::Outflow, -1, -1},
                            {BoundaryKind::WallTop, -1, -1}};
  return mesh;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of x^a y^b over the reference triangle.
double monomial_integral(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("dof counts on the 2-triangle square") {
  auto mesh = two_triangle_square();
  auto dm = fem::build_dofmap(mesh);
  CHECK(dm.n_nodes == 4);
  CHECK(dm.n_edges == 5);
  CHECK(dm.dof_count(Space::P2Vector) == 18);
  CHECK(dm.dof_count(Space::P1Scalar) == 4);
  CHECK(dm.dof_count(Space::P1Vector) == 8);

  TriMesh empty;
  CHECK_THROWS(fem::build_dofmap(empty));
}

TEST_CASE("benchmark dofmap: pressure dofs equal node count") {
  auto spec = DomainSpec::benchmark(12, 24, 0.08);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  auto dm = fem::build_dofmap(mesh);
  CHECK(dm.dof_count(Space::P1Scalar) == mesh.node_count());
  CHECK(dm.dof_count(Space::P2Vector) == 2 * (dm.n_nodes + dm.n_edges));
}

TEST_CASE("quadrature integrates monomials of degree <= 5 exactly") {
  for (int degree : {1, 2, 4, 5}) {
    for (int a = 0; a + 0 <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double acc = 0.0;
        for (const auto& qp : fem::quadrature(degree))
          acc += qp.w * std::pow(qp.x, a) * std::pow(qp.y, b);
        CHECK(std::abs(acc - monomial_integral(a, b)) < 1e-14);
      }
    }
  }
}

TEST_CASE("mass matrix entries sum to the domain area") {
  auto mesh = two_triangle_square();
  auto dm = fem::build_dofmap(mesh);
  for (Space s : {Space::P1Scalar, Space::P2Vector}) {
    auto m = fem::mass_matrix(dm, s);
    double total = Eigen::VectorXd::Ones(m.rows()).dot(m.apply(Eigen::VectorXd::Ones(m.cols())));
    // Vector spaces integrate both components.
    double expect = s == Space::P2Vector ? 2.0 : 1.0;
    CHECK(total == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("stiffness annihilates constants") {
  auto spec = DomainSpec::benchmark(6, 12, 0.15);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  auto dm = fem::build_dofmap(mesh);
  auto k = fem::stiffness_matrix(dm, Space::P2Vector);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.cols());
  CHECK(k.apply(ones).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("divergence of (x, y) acts like twice the P1 mass on 1") {
  auto mesh = two_triangle_square();
  auto dm = fem::build_dofmap(mesh);
  auto div_op = fem::divergence_matrix(dm);
  auto w = fem::interpolate_p2_vector(dm, [](const Point2& p) { return p; });
  Eigen::VectorXd lhs = div_op.apply(w);
  auto m = fem::mass_matrix(dm, Space::P1Scalar);
  Eigen::VectorXd rhs = 2.0 * m.apply(Eigen::VectorXd::Ones(dm.n_nodes));
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("P2 interpolation reproduces quadratics") {
  auto spec = DomainSpec::benchmark(6, 12, 0.15);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  auto dm = fem::build_dofmap(mesh);
  auto vals = fem::interpolate_p2_vector(
      dm, [](const Point2& p) { return Point2{p.x * p.x, p.x * p.y}; });

  // Evaluate at random reference points of random elements.
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  for (int trial = 0; trial < 100; ++trial) {
    int t = static_cast<int>(rng() % mesh.triangles.size());
    double xi = u(rng), eta = u(rng);
    auto g = fem::element_geometry(mesh, t);
    Point2 x{g.p0.x + g.jac[0][0] * xi + g.jac[0][1] * eta,
             g.p0.y + g.jac[1][0] * xi + g.jac[1][1] * eta};
    double val[6], grad[6][2];
    fem::p2_basis(xi, eta, val, grad);
    const auto& tri = mesh.triangles[t];
    int sdofs[6] = {tri[0], tri[1], tri[2], dm.n_nodes + dm.tri_edges[t][0],
                    dm.n_nodes + dm.tri_edges[t][1], dm.n_nodes + dm.tri_edges[t][2]};
    double ux = 0, uy = 0;
    for (int i = 0; i < 6; ++i) {
      ux += vals[2 * sdofs[i]] * val[i];
      uy += vals[2 * sdofs[i] + 1] * val[i];
    }
    CHECK(std::abs(ux - x.x * x.x) < 1e-12);
    CHECK(std::abs(uy - x.x * x.y) < 1e-12);
  }
}

TEST_CASE("solve_linear: identity, SPD system, and singular rejection") {
  auto mesh = two_triangle_square();
  auto dm = fem::build_dofmap(mesh);

  Eigen::SparseMatrix<double> eye(5, 5);
  eye.setIdentity();
  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  CHECK((fem::solve_linear(fem::SparseOperator(eye), rhs) - rhs).norm() == 0.0);

  // Stiffness with a Dirichlet row is solvable; without, it is singular.
  auto k = fem::stiffness_matrix(dm, Space::P1Scalar);
  CHECK_THROWS(fem::solve_linear(k, Eigen::VectorXd::Ones(4)));
}

TEST_CASE("symmetric Dirichlet constraints keep the operator symmetric") {
  auto spec = DomainSpec::benchmark(6, 12, 0.15);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  auto dm = fem::build_dofmap(mesh);

  fem::DirichletConstraints bc;
  bc.dofs = fem::p1v_outer_boundary_dofs(dm);
  bc.values = Eigen::VectorXd::Zero(bc.dofs.size());
  bc.symmetric = true;

  const int n = dm.dof_count(Space::P1Vector);
  auto kernel = [&](int t, fem::ElementContribution& out) {
    auto g = fem::element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    out.rows.resize(6);
    for (int i = 0; i < 3; ++i) {
      out.rows[2 * i] = 2 * tri[i];
      out.rows[2 * i + 1] = 2 * tri[i] + 1;
    }
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(6, 6);
    for (const auto& qp : fem::quadrature(2)) {
      double val[3], grad[3][2];
      fem::p1_basis(qp.x, qp.y, val, grad);
      double w = qp.w * g.det;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double gx_i = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
          double gy_i = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
          double gx_j = g.inv_jac_t[0][0] * grad[j][0] + g.inv_jac_t[0][1] * grad[j][1];
          double gy_j = g.inv_jac_t[1][0] * grad[j][0] + g.inv_jac_t[1][1] * grad[j][1];
          double kk = w * (gx_i * gx_j + gy_i * gy_j);
          out.mat(2 * i, 2 * j) += kk;
          out.mat(2 * i + 1, 2 * j + 1) += kk;
        }
    }
  };
  auto res = fem::assemble(dm, n, n, kernel, Exec::Serial, &bc);
  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(res.op.matrix().transpose()) -
                                     res.op.matrix();
  CHECK(Eigen::Map<const Eigen::VectorXd>(diff.valuePtr(), diff.nonZeros())
            .lpNorm<Eigen::Infinity>() < 1e-13);

  // Constrained rows are identity rows with matching rhs entries.
  double min_pivot = 0.0;
  Eigen::VectorXd sol = fem::solve_spd(res.op, res.rhs, &min_pivot);
  CHECK(min_pivot > 0.0);
  for (int d : bc.dofs) CHECK(sol[d] == 0.0);
}

TEST_CASE("h1 and l2 norms") {
  auto mesh = two_triangle_square();
  auto dm = fem::build_dofmap(mesh);

  fem::Field zero{Space::P2Vector, Eigen::VectorXd::Zero(dm.dof_count(Space::P2Vector))};
  CHECK(fem::h1_norm(dm, zero) == 0.0);

  auto cfield = fem::interpolate_p2_vector(dm, [](const Point2&) { return Point2{-2.5, 0}; });
  CHECK(fem::h1_norm(dm, {Space::P2Vector, cfield}) == doctest::Approx(2.5).epsilon(1e-13));

  auto xfield = fem::interpolate_p2_vector(dm, [](const Point2& p) { return Point2{p.x, 0}; });
  CHECK(fem::h1_norm(dm, {Space::P2Vector, xfield}) ==
        doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-13));
}

TEST_CASE("parallel assembly bit-matches the serial reference") {
  auto spec = DomainSpec::benchmark(12, 24, 0.06);
  auto mesh = generate_mesh(spec, build_benchmark_shapes(spec));
  auto dm = fem::build_dofmap(mesh);
  for (Space s : {Space::P1Scalar, Space::P2Vector}) {
    auto serial = fem::mass_matrix(dm, s, Exec::Serial);
    auto parallel = fem::mass_matrix(dm, s, Exec::Parallel);
    REQUIRE(serial.matrix().nonZeros() == parallel.matrix().nonZeros());
    for (Eigen::Index k = 0; k < serial.matrix().nonZeros(); ++k)
      CHECK(serial.matrix().valuePtr()[k] == parallel.matrix().valuePtr()[k]);
  }
  auto ks = fem::stiffness_matrix(dm, Space::P2Vector, Exec::Serial);
  auto kp = fem::stiffness_matrix(dm, Space::P2Vector, Exec::Parallel);
  Eigen::VectorXd probe = Eigen::VectorXd::Random(ks.cols());
  CHECK((ks.apply(probe) - kp.apply(probe)).norm() == 0.0);

  fem::Field f{Space::P2Vector,
               fem::interpolate_p2_vector(dm, [](const Point2& p) {
                 return Point2{std::sin(3 * p.x), p.y * p.x};
               })};
  CHECK(fem::h1_norm(dm, f, Exec::Serial) == fem::h1_norm(dm, f, Exec::Parallel));
}

}  // TEST_SUITE
