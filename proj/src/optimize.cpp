#include "shapeopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace shapeopt::opt {

std::vector<BaryBounds> ALConfig::benchmark_bounds() {
  return {{{-0.03, -0.05}, {0.04, 0.03}}, {{-0.075, -0.02}, {0.02, 0.05}}};
}

ALState init_al_state(const MultiShape& shapes, const ALConfig& cfg) {
  ALState al;
  const int s = shapes.shape_count();
  al.lambda_area.assign(s, 0.0);
  al.lambda_bary.assign(s, {0.0, 0.0, 0.0, 0.0});
  al.c = cfg.c0;
  al.bounds = cfg.bary_bounds;
  if (al.bounds.empty()) {
    al.bounds = ALConfig::benchmark_bounds();
    al.bounds.resize(s, BaryBounds{});
  }
  if (static_cast<int>(al.bounds.size()) != s)
    throw std::runtime_error("barycenter bounds count does not match shape count");
  for (const auto& shape : shapes.shapes) {
    al.area0.push_back(polygon_area(shape));
    al.bary0.push_back(polygon_barycenter(shape));
  }
  return al;
}

ConstraintValues eval_constraints(const MultiShape& shapes, const ALState& al) {
  ConstraintValues cv;
  for (int j = 0; j < shapes.shape_count(); ++j) {
    cv.area_misfit.push_back(polygon_area(shapes.shapes[j]) - al.area0[j]);
    Point2 b = polygon_barycenter(shapes.shapes[j]);
    double dx = b.x - al.bary0[j].x;
    double dy = b.y - al.bary0[j].y;
    cv.bary_gap.push_back({al.bounds[j].lo.x - dx, dx - al.bounds[j].hi.x,
                           al.bounds[j].lo.y - dy, dy - al.bounds[j].hi.y});
  }
  return cv;
}

double infeasibility(const ConstraintValues& cv) {
  double inf = 0.0;
  for (double h : cv.area_misfit) inf = std::max(inf, std::abs(h));
  for (const auto& g : cv.bary_gap)
    for (double gi : g) inf = std::max(inf, std::max(0.0, gi));
  return inf;
}

double al_objective(double j, const ConstraintValues& cv, const ALState& al) {
  double out = j;
  for (std::size_t i = 0; i < cv.area_misfit.size(); ++i) {
    double h = cv.area_misfit[i];
    out += al.lambda_area[i] * h + 0.5 * al.c * h * h;
  }
  for (std::size_t i = 0; i < cv.bary_gap.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      double lam = al.lambda_bary[i][k];
      double active = std::max(0.0, lam + al.c * cv.bary_gap[i][k]);
      out += (active * active - lam * lam) / (2.0 * al.c);
    }
  }
  return out;
}

Eigen::VectorXd al_shape_derivative_rhs(const Eigen::VectorXd& base, const TriMesh& mesh,
                                        const MultiShape& shapes, const ALState& al) {
  Eigen::VectorXd rhs = base;
  ConstraintValues cv = eval_constraints(shapes, al);
  for (int j = 0; j < shapes.shape_count(); ++j) {
    const auto& loop_nodes = mesh.shape_loops[j].nodes;
    auto grad_area = area_gradient(shapes.shapes[j]);
    auto grad_bary = barycenter_gradient(shapes.shapes[j]);
    if (grad_area.size() != loop_nodes.size())
      throw std::runtime_error("shape/mesh bookkeeping mismatch in constraint derivatives");

    const double ca = al.lambda_area[j] + al.c * cv.area_misfit[j];
    // Active inequality coefficients; lo constraints enter with d(-b)/dx.
    const double mx =
        std::max(0.0, al.lambda_bary[j][1] + al.c * cv.bary_gap[j][1]) -
        std::max(0.0, al.lambda_bary[j][0] + al.c * cv.bary_gap[j][0]);
    const double my =
        std::max(0.0, al.lambda_bary[j][3] + al.c * cv.bary_gap[j][3]) -
        std::max(0.0, al.lambda_bary[j][2] + al.c * cv.bary_gap[j][2]);

    for (std::size_t k = 0; k < loop_nodes.size(); ++k) {
      const int node = loop_nodes[k];
      for (int comp = 0; comp < 2; ++comp) {
        double g = ca * (comp == 0 ? grad_area[k].x : grad_area[k].y);
        g += mx * grad_bary[k][0][comp];
        g += my * grad_bary[k][1][comp];
        rhs[2 * node + comp] += g;
      }
    }
  }
  return rhs;
}

void al_update(ALState& al, const ConstraintValues& cv, const ALConfig& cfg) {
  for (std::size_t i = 0; i < cv.area_misfit.size(); ++i)
    al.lambda_area[i] += al.c * cv.area_misfit[i];
  for (std::size_t i = 0; i < cv.bary_gap.size(); ++i)
    for (int k = 0; k < 4; ++k)
      al.lambda_bary[i][k] = std::max(0.0, al.lambda_bary[i][k] + al.c * cv.bary_gap[i][k]);

  double inf = infeasibility(cv);
  if (inf > cfg.tau * al.last_infeasibility && inf > cfg.feasibility_tol) al.c *= cfg.growth;
  al.last_infeasibility = inf;
}

DeformationField steklov_poincare_gradient(const fem::DofMap& dm, const Eigen::VectorXd& rhs,
                                           const ElasticityParams& ep, Exec exec,
                                           double* spd_min_pivot,
                                           fem::SparseOperator* out_operator) {
  const int n = dm.dof_count(fem::Space::P1Vector);
  if (rhs.size() != n) throw std::runtime_error("elasticity rhs does not match the dof layout");

  auto kernel = [&dm, &ep](int t, fem::ElementContribution& out) {
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    const auto& tri = dm.mesh->triangles[t];
    out.rows.resize(6);
    for (int i = 0; i < 3; ++i) {
      out.rows[2 * i] = 2 * tri[i];
      out.rows[2 * i + 1] = 2 * tri[i] + 1;
    }
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(6, 6);
    for (const auto& q : fem::quadrature(2)) {
      double val[3], grad[3][2], phys[3][2];
      fem::p1_basis(q.x, q.y, val, grad);
      for (int i = 0; i < 3; ++i) {
        phys[i][0] = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
        phys[i][1] = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
      }
      const double w = q.w * g.det;
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c)
          for (int m = 0; m < 3; ++m)
            for (int d = 0; d < 2; ++d) {
              // int 2 mu eps(phi_i e_c) : eps(phi_m e_d) + lambda div div
              double v = ep.mu_e * (phys[i][d] * phys[m][c] +
                                    (c == d ? phys[i][0] * phys[m][0] + phys[i][1] * phys[m][1]
                                            : 0.0));
              v += ep.lambda_e * phys[i][c] * phys[m][d];
              out.mat(2 * i + c, 2 * m + d) += w * v;
            }
    }
  };

  fem::DirichletConstraints bc;
  bc.dofs = fem::p1v_outer_boundary_dofs(dm);
  bc.values = Eigen::VectorXd::Zero(bc.dofs.size());
  bc.symmetric = true;

  fem::AssemblyResult sys = fem::assemble(dm, n, n, kernel, exec, &bc);
  // The assembled rhs is empty (matrix-only kernel); constrain the given one.
  Eigen::VectorXd b = rhs;
  for (int d : bc.dofs) b[d] = 0.0;

  DeformationField field;
  field.values = fem::solve_spd(sys.op, b, spd_min_pivot);
  for (int d : bc.dofs) field.values[d] = 0.0;
  if (out_operator) *out_operator = std::move(sys.op);
  return field;
}

ArmijoResult armijo_search(const std::function<std::optional<double>(double)>& evaluate,
                           double j_al0, double metric_norm_sq, const ArmijoParams& params) {
  for (double alpha = params.initial_step; alpha >= params.min_step; alpha *= params.shrink) {
    std::optional<double> j = evaluate(alpha);
    if (j && *j <= j_al0 - params.sufficient_decrease * alpha * metric_norm_sq)
      return {alpha, *j};
  }
  throw std::runtime_error("line search failed");
}

// ---------------------------------------------------------------------------

namespace {

struct Iterate {
  TriMesh mesh;
  fem::DofMap dofmap;  // rebuilt whenever mesh connectivity changes
  MultiShape shapes;
  flow::FlowState state;
  double j = 0.0;
};

void rebuild_dofmap(Iterate& it) { it.dofmap = fem::build_dofmap(it.mesh); }

}  // namespace

OptimizationResult optimize(const DomainSpec& spec, const OptimizerConfig& config,
                            const flow::FluidParams& fluid, const flow::BoundaryConditions& bcs,
                            const ArmijoParams& armijo, const ALConfig& al_config,
                            const flow::NewtonOptions& newton, const ElasticityParams& elasticity,
                            const IterationCallback& callback) {
  OptimizationResult result;
  Iterate cur;
  cur.shapes = build_benchmark_shapes(spec);
  cur.mesh = generate_mesh(spec, cur.shapes);
  rebuild_dofmap(cur);
  cur.state = flow::solve_state(cur.dofmap, fluid, bcs, nullptr, newton, config.exec);
  cur.j = flow::objective(cur.dofmap, cur.state, fluid, config.exec);
  result.initial_objective = cur.j;

  ALState al = init_al_state(cur.shapes, al_config);
  std::mt19937 rng(config.seed);

  flow::NewtonOptions warm = newton;
  warm.rho_start_cap = std::numeric_limits<double>::infinity();
  warm.max_bisections = 0;

  auto solve_on = [&](const fem::DofMap& dm, const flow::FlowState* guess) {
    if (guess) {
      try {
        return flow::solve_state(dm, fluid, bcs, guess, warm, config.exec);
      } catch (const std::exception&) {
        // fall through to full continuation
      }
    }
    return flow::solve_state(dm, fluid, bcs, nullptr, newton, config.exec);
  };

  int iter = 0;
  std::string pending_event;
  bool remeshed_after_failure = false;
  bool done = false;

  auto do_remesh = [&]() {
    cur.mesh = remesh(cur.shapes, spec, cur.mesh.generation);
    rebuild_dofmap(cur);
    cur.state = solve_on(cur.dofmap, nullptr);
    cur.j = flow::objective(cur.dofmap, cur.state, fluid, config.exec);
    result.remesh_count++;
    pending_event = pending_event.empty() ? "remesh" : pending_event + ";remesh";
  };

  auto log_row = [&](double nv, double alpha, double m2, double j_al_before, double j_al_now,
                     double infeas, const DeformationField& v) {
    HistoryRecord rec;
    rec.iter = ++iter;
    rec.j = cur.j;
    rec.j_al = j_al_now;
    rec.h1_norm = nv;
    rec.alpha = alpha;
    rec.infeasibility = infeas;
    rec.event = pending_event.empty() ? "none" : pending_event;
    pending_event.clear();
    rec.metric_norm_sq = m2;
    rec.j_al_before = j_al_before;
    result.history.push_back(rec);
    if (callback) callback(rec, cur.mesh, cur.dofmap, cur.state, v);
  };

  try {
    for (int al_iter = 0; al_iter < config.max_al && !done; ++al_iter) {
      result.al_iterations = al_iter + 1;
      bool inner_converged = false;
      int inner = 0;

      while (inner < config.max_inner) {
        ++inner;
        if (mesh_quality(cur.mesh).min_quality < config.quality_threshold) do_remesh();

        flow::AdjointState adj =
            flow::solve_adjoint(cur.dofmap, cur.state, fluid, bcs, config.exec);
        Eigen::VectorXd base =
            flow::shape_derivative(cur.dofmap, cur.state, adj, fluid, config.exec);
        Eigen::VectorXd rhs = al_shape_derivative_rhs(base, cur.mesh, cur.shapes, al);

        fem::SparseOperator elastic_op;
        DeformationField v = steklov_poincare_gradient(cur.dofmap, rhs, elasticity, config.exec,
                                                       nullptr, &elastic_op);
        const double nv = fem::h1_norm(cur.dofmap, {fem::Space::P1Vector, v.values}, config.exec);
        ConstraintValues cv = eval_constraints(cur.shapes, al);
        const double j_al0 = al_objective(cur.j, cv, al);

        if (config.debug_checks) {
          auto report = validate_multishape(cur.shapes);
          if (!report.ok())
            throw std::runtime_error("gluing invariant violated: " + report.violations.front());
          std::normal_distribution<double> gauss;
          Eigen::VectorXd w(v.values.size());
          for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = gauss(rng);
          for (int d : fem::p1v_outer_boundary_dofs(cur.dofmap)) w[d] = 0.0;
          double lhs = w.dot(elastic_op.apply(v.values));
          double galerkin_gap = std::abs(lhs - rhs.dot(w));
          if (galerkin_gap > 1e-9 * (1.0 + std::abs(lhs)))
            throw std::runtime_error("Galerkin identity violated by " +
                                     std::to_string(galerkin_gap));
        }

        if (nv <= config.eps) {
          log_row(nv, 0.0, 0.0, j_al0, j_al0, infeasibility(cv), v);
          result.history.back().subproblem_end = true;
          inner_converged = true;
          break;
        }

        const double m2 = std::max(0.0, rhs.dot(v.values));
        Iterate trial;
        auto evaluate = [&](double alpha) -> std::optional<double> {
          try {
            trial.mesh = deform_mesh(cur.mesh, std::span<const double>(v.values.data(),
                                                                       v.values.size()),
                                     -alpha);
            trial.shapes = extract_shapes(trial.mesh);
            auto rep = validate_multishape(trial.shapes, spec);
            if (!rep.ok()) return std::nullopt;
            trial.dofmap = fem::build_dofmap(trial.mesh);
            trial.state = solve_on(trial.dofmap, &cur.state);
            trial.j = flow::objective(trial.dofmap, trial.state, fluid, config.exec);
            return al_objective(trial.j, eval_constraints(trial.shapes, al), al);
          } catch (const std::exception&) {
            return std::nullopt;
          }
        };

        ArmijoResult step;
        try {
          step = armijo_search(evaluate, j_al0, m2, armijo);
        } catch (const std::exception&) {
          if (remeshed_after_failure) throw;
          remeshed_after_failure = true;
          do_remesh();
          continue;
        }
        remeshed_after_failure = false;

        cur.mesh = std::move(trial.mesh);
        cur.shapes = std::move(trial.shapes);
        cur.dofmap = std::move(trial.dofmap);
        cur.dofmap.mesh = &cur.mesh;
        cur.state = std::move(trial.state);
        cur.j = trial.j;
        log_row(nv, step.step, m2, j_al0, step.j_al,
                infeasibility(eval_constraints(cur.shapes, al)), v);
      }

      ConstraintValues cv = eval_constraints(cur.shapes, al);
      al_update(al, cv, al_config);
      if (!result.history.empty()) {
        auto& ev = result.history.back().event;
        ev = (ev == "none") ? "al_update" : ev + ";al_update";
        result.history.back().subproblem_end = true;
      }
      if (inner_converged && infeasibility(cv) <= al_config.feasibility_tol) {
        result.converged = true;
        done = true;
      }
    }
  } catch (const std::exception& e) {
    result.shapes = cur.shapes;
    result.mesh = cur.mesh;
    result.state = cur.state;
    result.final_objective = cur.j;
    throw OptimizeError(e.what(), std::move(result));
  }

  result.shapes = cur.shapes;
  result.mesh = cur.mesh;
  result.state = cur.state;
  result.final_objective = cur.j;
  result.final_infeasibility = infeasibility(eval_constraints(cur.shapes, al));
  return result;
}

}  // namespace shapeopt::opt
