// Compares the serial reference kernels against their OpenMP versions on a
// benchmark-sized problem and reports timings plus a bitwise equality check.
#include <chrono>
#include <cstdio>

#include "shapeopt/flow.hpp"
#include "shapeopt/optimize.hpp"

using namespace shapeopt;
using h_clock = std::chrono::high_resolution_clock;

namespace {

template <class F>
double time_ms(F&& f, int reps) {
  auto t0 = h_clock::now();
  for (int r = 0; r < reps; ++r) f();
  auto t1 = h_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  double h = argc > 1 ? std::atof(argv[1]) : 0.018;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  auto spec = DomainSpec::benchmark(48, 60, h);
  auto shapes = build_benchmark_shapes(spec);
  auto mesh = generate_mesh(spec, shapes);
  auto dm = fem::build_dofmap(mesh);
  std::printf("mesh: %d nodes, %d triangles, %d threads available\n", mesh.node_count(),
              mesh.triangle_count(), hardware_threads());

  flow::FluidParams fluid;
  flow::BoundaryConditions bcs;
  auto state = flow::solve_state(dm, fluid, bcs, nullptr, {}, Exec::Parallel);
  auto adj = flow::solve_adjoint(dm, state, fluid, bcs, Exec::Parallel);
  std::printf("state solved: %d Newton iterations, residual %.2e\n", state.newton_iters,
              state.residual);

  struct Row {
    const char* name;
    double serial_ms;
    double parallel_ms;
    bool identical;
  };
  std::vector<Row> rows;

  {
    Eigen::VectorXd a, b;
    double t_s = time_ms([&] { a = flow::shape_derivative(dm, state, adj, fluid, Exec::Serial); },
                         reps);
    double t_p = time_ms(
        [&] { b = flow::shape_derivative(dm, state, adj, fluid, Exec::Parallel); }, reps);
    rows.push_back({"shape derivative assembly", t_s, t_p, (a - b).norm() == 0.0});
  }
  {
    fem::SparseOperator a, b;
    double t_s = time_ms([&] { a = fem::stiffness_matrix(dm, fem::Space::P2Vector, Exec::Serial); },
                         reps);
    double t_p = time_ms(
        [&] { b = fem::stiffness_matrix(dm, fem::Space::P2Vector, Exec::Parallel); }, reps);
    Eigen::VectorXd probe = Eigen::VectorXd::Random(a.cols());
    rows.push_back({"P2 stiffness assembly", t_s, t_p, (a.apply(probe) - b.apply(probe)).norm() == 0.0});
  }
  {
    double a = 0, b = 0;
    double t_s = time_ms([&] { a = flow::objective(dm, state, fluid, Exec::Serial); }, reps);
    double t_p = time_ms([&] { b = flow::objective(dm, state, fluid, Exec::Parallel); }, reps);
    rows.push_back({"dissipation functional", t_s, t_p, a == b});
  }
  {
    fem::Field f{fem::Space::P2Vector, state.velocity};
    double a = 0, b = 0;
    double t_s = time_ms([&] { a = fem::h1_norm(dm, f, Exec::Serial); }, reps);
    double t_p = time_ms([&] { b = fem::h1_norm(dm, f, Exec::Parallel); }, reps);
    rows.push_back({"H1 norm", t_s, t_p, a == b});
  }

  std::printf("%-28s %12s %12s %9s %s\n", "kernel", "serial [ms]", "openmp [ms]", "speedup",
              "bit-identical");
  for (const auto& r : rows)
    std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", r.name, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms, r.identical ? "yes" : "NO");
  for (const auto& r : rows)
    if (!r.identical) return 1;
  return 0;
}
