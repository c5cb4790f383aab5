#include "shapeopt/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace shapeopt::cli {

namespace {

namespace fs = std::filesystem;

std::string format_row(const opt::HistoryRecord& rec) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", rec.iter, rec.j,
                rec.j_al, rec.h1_norm, rec.alpha, rec.infeasibility, rec.event.c_str());
  return buf;
}

void write_snapshot(const std::string& dir, int iter, const TriMesh& mesh,
                    const fem::DofMap& dofmap, const flow::FlowState& state,
                    const opt::DeformationField& v) {
  VtkPointData data;
  data.vectors.push_back(
      {"velocity", fem::nodal_vectors(dofmap, {fem::Space::P2Vector, state.velocity})});
  std::vector<double> pressure(state.pressure.data(), state.pressure.data() + dofmap.n_nodes);
  data.scalars.push_back({"pressure", pressure});
  data.vectors.push_back(
      {"deformation", fem::nodal_vectors(dofmap, {fem::Space::P1Vector, v.values})});
  char name[64];
  std::snprintf(name, sizeof(name), "fields_%05d.vtk", iter);
  write_vtk(dir + "/" + name, mesh, data);
  std::snprintf(name, sizeof(name), "boundary_%05d.csv", iter);
  write_boundary_csv(dir + "/" + name, extract_shapes(mesh));
}

void print_summary(std::ostream& os, const opt::OptimizationResult& result, bool failed,
                   const std::string& error) {
  double reduction = result.initial_objective > 0
                         ? 100.0 * (1.0 - result.final_objective / result.initial_objective)
                         : 0.0;
  os << "initial objective: " << result.initial_objective << "\n";
  os << "final objective:   " << result.final_objective << "\n";
  os << "reduction:         " << reduction << " %\n";
  os << "AL iterations:     " << result.al_iterations << "\n";
  os << "remeshes:          " << result.remesh_count << "\n";
  os << "iterations:        " << result.history.size() << "\n";
  os << "final infeasibility: " << result.final_infeasibility << "\n";
  os << "converged:         " << (result.converged ? "yes" : "no") << "\n";
  if (failed) os << "error: " << error << "\n";
}

}  // namespace

int run(const RunConfig& cfg) {
  set_num_threads(cfg.threads);
  opt::OptimizerConfig optimizer = cfg.optimizer;
  optimizer.exec = cfg.threads > 1 ? Exec::Parallel : Exec::Serial;

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  std::ofstream history(cfg.output_dir + "/history.csv");
  if (ec || !history) {
    std::cerr << "cannot write to output directory '" << cfg.output_dir << "'\n";
    return 2;
  }
  history << "iter,j,j_al,h1_norm,alpha,infeasibility,event\n";
  history.flush();

  int last_snapshot = -1;
  auto callback = [&](const opt::HistoryRecord& rec, const TriMesh& mesh,
                      const fem::DofMap& dofmap, const flow::FlowState& state,
                      const opt::DeformationField& v) {
    history << format_row(rec);
    history.flush();
    if (rec.iter == 1 || rec.iter % cfg.snapshot_interval == 0) {
      write_snapshot(cfg.output_dir, rec.iter, mesh, dofmap, state, v);
      last_snapshot = rec.iter;
    }
  };

  opt::OptimizationResult result;
  bool failed = false;
  std::string error;
  try {
    result = opt::optimize(cfg.domain, optimizer, cfg.fluid, cfg.bcs, cfg.armijo, cfg.al,
                           cfg.newton, cfg.elasticity, callback);
  } catch (opt::OptimizeError& e) {
    result = std::move(e.partial);
    failed = true;
    error = e.what();
  } catch (const std::exception& e) {
    std::cerr << "run failed before the first iteration: " << e.what() << "\n";
    return 2;
  }

  // Final snapshot (the deformation of the last iterate is not retained).
  if (!result.history.empty() && result.history.back().iter != last_snapshot) {
    auto dofmap = fem::build_dofmap(result.mesh);
    opt::DeformationField zero{Eigen::VectorXd::Zero(dofmap.dof_count(fem::Space::P1Vector))};
    write_snapshot(cfg.output_dir, result.history.back().iter, result.mesh, dofmap, result.state,
                   zero);
  }

  print_summary(std::cout, result, failed, error);
  std::ofstream summary(cfg.output_dir + "/summary.txt");
  print_summary(summary, result, failed, error);
  if (failed) return 3;
  return result.converged ? 0 : 1;
}

int validate(const RunConfig& cfg) {
  set_num_threads(cfg.threads);
  Exec exec = cfg.threads > 1 ? Exec::Parallel : Exec::Serial;
  try {
    MultiShape shapes = build_benchmark_shapes(cfg.domain);
    auto report = validate_multishape(shapes, cfg.domain);
    if (!report.ok()) {
      for (const auto& v : report.violations) std::cerr << "invalid: " << v << "\n";
      return 1;
    }
    TriMesh mesh = generate_mesh(cfg.domain, shapes);
    check_mesh(mesh);
    auto quality = mesh_quality(mesh);
    auto dofmap = fem::build_dofmap(mesh);
    flow::FlowState state = flow::solve_state(dofmap, cfg.fluid, cfg.bcs, nullptr, cfg.newton,
                                              exec);
    double j = flow::objective(dofmap, state, cfg.fluid, exec);
    std::cout << "shapes:        " << shapes.shape_count() << " (N = " << shapes.total_factors()
              << " factors)\n";
    std::cout << "mesh:          " << mesh.node_count() << " nodes, " << mesh.triangle_count()
              << " triangles, min quality " << quality.min_quality << "\n";
    std::cout << "state solve:   " << state.newton_iters << " Newton iterations over "
              << state.continuation_levels << " continuation levels, residual "
              << state.residual << "\n";
    std::cout << "objective:     " << j << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "validate failed: " << e.what() << "\n";
    return 1;
  }
}

int export_mesh(const RunConfig& cfg) {
  try {
    MultiShape shapes = build_benchmark_shapes(cfg.domain);
    TriMesh mesh = generate_mesh(cfg.domain, shapes);
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    write_msh(cfg.output_dir + "/mesh.msh", mesh);
    write_vtk(cfg.output_dir + "/mesh.vtk", mesh);
    write_boundary_csv(cfg.output_dir + "/boundary.csv", shapes);
    std::cout << "wrote " << cfg.output_dir << "/mesh.msh (" << mesh.node_count() << " nodes, "
              << mesh.triangle_count() << " triangles)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mesh export failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace shapeopt::cli
