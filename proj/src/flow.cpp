#include "shapeopt/flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace shapeopt::flow {

namespace {

struct Mat2 {
  double m[2][2] = {{0, 0}, {0, 0}};
  double trace() const { return m[0][0] + m[1][1]; }
};

inline Mat2 matmul(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
  return r;
}

inline double frob(const Mat2& a, const Mat2& b) {
  return a.m[0][0] * b.m[0][0] + a.m[0][1] * b.m[0][1] + a.m[1][0] * b.m[1][0] +
         a.m[1][1] * b.m[1][1];
}

// Per-quadrature-point evaluation context for the Taylor-Hood pair.
struct QpData {
  double phi[6];
  double dphi[6][2];  // physical gradients
  double psi[3];
  double dpsi[3][2];
  double weight;
};

void eval_basis(const fem::ElementGeometry& g, double x, double y, double w, QpData& qp) {
  double grad[6][2], pgrad[3][2];
  fem::p2_basis(x, y, qp.phi, grad);
  fem::p1_basis(x, y, qp.psi, pgrad);
  for (int i = 0; i < 6; ++i) {
    qp.dphi[i][0] = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
    qp.dphi[i][1] = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
  }
  for (int i = 0; i < 3; ++i) {
    qp.dpsi[i][0] = g.inv_jac_t[0][0] * pgrad[i][0] + g.inv_jac_t[0][1] * pgrad[i][1];
    qp.dpsi[i][1] = g.inv_jac_t[1][0] * pgrad[i][0] + g.inv_jac_t[1][1] * pgrad[i][1];
  }
  qp.weight = w * g.det;
}

void p2_scalar_dofs(const fem::DofMap& dm, int t, int sdofs[6]) {
  const auto& tri = dm.mesh->triangles[t];
  for (int i = 0; i < 3; ++i) sdofs[i] = tri[i];
  for (int e = 0; e < 3; ++e) sdofs[3 + e] = dm.n_nodes + dm.tri_edges[t][e];
}

// Velocity value and gradient of a P2 vector coefficient vector at one qp.
void velocity_at(const Eigen::VectorXd& v, const int sdofs[6], const QpData& qp, double val[2],
                 Mat2& grad) {
  val[0] = val[1] = 0.0;
  grad = Mat2{};
  for (int i = 0; i < 6; ++i) {
    for (int c = 0; c < 2; ++c) {
      double coef = v[2 * sdofs[i] + c];
      val[c] += coef * qp.phi[i];
      grad.m[c][0] += coef * qp.dphi[i][0];
      grad.m[c][1] += coef * qp.dphi[i][1];
    }
  }
}

}  // namespace

fem::DirichletConstraints velocity_dirichlet(const fem::DofMap& dm,
                                             const BoundaryConditions& bcs) {
  std::map<std::pair<int, int>, int> edge_ids;
  for (int e = 0; e < dm.n_edges; ++e)
    edge_ids[{dm.edge_nodes[e][0], dm.edge_nodes[e][1]}] = e;

  auto profile = [&](const Point2& p, const BoundaryTag& tag) -> Point2 {
    if (tag.kind == BoundaryKind::Inflow) return {bcs.inflow_a * p.y * (p.y - 1.0), 0.0};
    return {0.0, 0.0};
  };

  std::map<int, double> values;  // dof -> value, deterministic order
  for (const auto& be : dm.mesh->boundary_edges) {
    if (be.tag.kind == BoundaryKind::Outflow) continue;
    int e = edge_ids.at({std::min(be.a, be.b), std::max(be.a, be.b)});
    const std::pair<int, Point2> entries[3] = {
        {be.a, dm.mesh->nodes[be.a]},
        {be.b, dm.mesh->nodes[be.b]},
        {dm.n_nodes + e, dm.edge_midpoint(e)}};
    for (const auto& [sdof, point] : entries) {
      Point2 value = profile(point, be.tag);
      values[2 * sdof] = value.x;
      values[2 * sdof + 1] = value.y;
    }
  }
  fem::DirichletConstraints bc;
  bc.values.resize(values.size());
  int k = 0;
  for (const auto& [dof, val] : values) {
    bc.dofs.push_back(dof);
    bc.values[k++] = val;
  }
  return bc;
}

namespace {

// Residual and Jacobian of the steady Navier-Stokes weak form at iterate
// (v, p), monolithic ordering: velocity dofs then pressure dofs. With
// with_reaction = false the Jacobian degenerates to the Oseen (Picard)
// operator, which has a much larger attraction basin.
fem::AssemblyResult assemble_ns_system(const fem::DofMap& dm, const Eigen::VectorXd& x,
                                       double mu, double rho,
                                       const fem::DirichletConstraints& newton_bc, Exec exec,
                                       bool with_reaction = true, double mass_shift = 0.0,
                                       const Eigen::VectorXd* x_prev = nullptr) {
  const int nv = dm.dof_count(fem::Space::P2Vector);
  const int np = dm.n_nodes;
  auto kernel = [&dm, &x, mu, rho, nv, with_reaction, mass_shift,
                 x_prev](int t, fem::ElementContribution& out) {
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    int sdofs[6];
    p2_scalar_dofs(dm, t, sdofs);
    const auto& tri = dm.mesh->triangles[t];

    out.rows.resize(15);
    for (int i = 0; i < 6; ++i) {
      out.rows[2 * i] = 2 * sdofs[i];
      out.rows[2 * i + 1] = 2 * sdofs[i] + 1;
    }
    for (int k = 0; k < 3; ++k) out.rows[12 + k] = nv + tri[k];
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(15, 15);
    out.vec = Eigen::VectorXd::Zero(15);

    QpData qp;
    for (const auto& q : fem::quadrature(5)) {
      eval_basis(g, q.x, q.y, q.w, qp);
      double v[2];
      Mat2 gv;
      velocity_at(x, sdofs, qp, v, gv);
      double p = 0.0;
      for (int k = 0; k < 3; ++k) p += x[nv + tri[k]] * qp.psi[k];
      double v_shift[2] = {0.0, 0.0};
      if (mass_shift > 0 && x_prev) {
        Mat2 unused;
        double vp[2];
        velocity_at(*x_prev, sdofs, qp, vp, unused);
        v_shift[0] = v[0] - vp[0];
        v_shift[1] = v[1] - vp[1];
      }
      const double w = qp.weight;
      const double divv = gv.trace();
      const double conv[2] = {gv.m[0][0] * v[0] + gv.m[0][1] * v[1],
                              gv.m[1][0] * v[0] + gv.m[1][1] * v[1]};

      for (int i = 0; i < 6; ++i) {
        for (int c = 0; c < 2; ++c) {
          const int I = 2 * i + c;
          out.vec[I] += w * (mu * (qp.dphi[i][0] * gv.m[c][0] + qp.dphi[i][1] * gv.m[c][1]) +
                             rho * qp.phi[i] * conv[c] - p * qp.dphi[i][c] +
                             mass_shift * qp.phi[i] * v_shift[c]);
          for (int m = 0; m < 6; ++m) {
            const double lap = mu * (qp.dphi[i][0] * qp.dphi[m][0] +
                                     qp.dphi[i][1] * qp.dphi[m][1]);
            const double conv_same =
                rho * qp.phi[i] * (v[0] * qp.dphi[m][0] + v[1] * qp.dphi[m][1]);
            for (int d = 0; d < 2; ++d) {
              double jac = (c == d) ? lap + conv_same + mass_shift * qp.phi[i] * qp.phi[m] : 0.0;
              if (with_reaction) jac += rho * qp.phi[i] * qp.phi[m] * gv.m[c][d];
              out.mat(I, 2 * m + d) += w * jac;
            }
          }
          for (int l = 0; l < 3; ++l) out.mat(I, 12 + l) += -w * qp.psi[l] * qp.dphi[i][c];
        }
      }
      for (int k = 0; k < 3; ++k) {
        out.vec[12 + k] += w * qp.psi[k] * divv;
        for (int m = 0; m < 6; ++m)
          for (int d = 0; d < 2; ++d)
            out.mat(12 + k, 2 * m + d) += w * qp.psi[k] * qp.dphi[m][d];
      }
    }
  };
  return fem::assemble(dm, nv + np, nv + np, kernel, exec, &newton_bc);
}

// Residual only; cheaper than the full system during step-length control.
Eigen::VectorXd assemble_ns_residual(const fem::DofMap& dm, const Eigen::VectorXd& x, double mu,
                                     double rho, const fem::DirichletConstraints& newton_bc,
                                     Exec exec) {
  const int nv = dm.dof_count(fem::Space::P2Vector);
  const int np = dm.n_nodes;
  auto kernel = [&dm, &x, mu, rho, nv](int t, fem::ElementContribution& out) {
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    int sdofs[6];
    p2_scalar_dofs(dm, t, sdofs);
    const auto& tri = dm.mesh->triangles[t];
    out.rows.resize(15);
    for (int i = 0; i < 6; ++i) {
      out.rows[2 * i] = 2 * sdofs[i];
      out.rows[2 * i + 1] = 2 * sdofs[i] + 1;
    }
    for (int k = 0; k < 3; ++k) out.rows[12 + k] = nv + tri[k];
    out.vec = Eigen::VectorXd::Zero(15);
    QpData qp;
    for (const auto& q : fem::quadrature(5)) {
      eval_basis(g, q.x, q.y, q.w, qp);
      double v[2];
      Mat2 gv;
      velocity_at(x, sdofs, qp, v, gv);
      double p = 0.0;
      for (int k = 0; k < 3; ++k) p += x[nv + tri[k]] * qp.psi[k];
      const double w = qp.weight;
      const double conv[2] = {gv.m[0][0] * v[0] + gv.m[0][1] * v[1],
                              gv.m[1][0] * v[0] + gv.m[1][1] * v[1]};
      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 2; ++c)
          out.vec[2 * i + c] +=
              w * (mu * (qp.dphi[i][0] * gv.m[c][0] + qp.dphi[i][1] * gv.m[c][1]) +
                   rho * qp.phi[i] * conv[c] - p * qp.dphi[i][c]);
      for (int k = 0; k < 3; ++k) out.vec[12 + k] += w * qp.psi[k] * gv.trace();
    }
  };
  Eigen::VectorXd res = fem::assemble(dm, nv + np, nv + np, kernel, exec).rhs;
  for (int d : newton_bc.dofs) res[d] = 0.0;
  return res;
}

}  // namespace

FlowState solve_state(const fem::DofMap& dm, const FluidParams& params,
                      const BoundaryConditions& bcs, const FlowState* initial_guess,
                      const NewtonOptions& opts, Exec exec) {
  if (params.mu <= 0) throw std::runtime_error("fluid.mu must be > 0");
  if (params.rho < 0) throw std::runtime_error("fluid.rho must be >= 0");
  bool has_outflow = false;
  for (const auto& be : dm.mesh->boundary_edges)
    if (be.tag.kind == BoundaryKind::Outflow) has_outflow = true;
  if (!has_outflow)
    throw std::runtime_error(
        "flow solve: no natural (outflow) boundary; pressure would only be defined up to a "
        "constant");

  const int nv = dm.dof_count(fem::Space::P2Vector);
  const int np = dm.n_nodes;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nv + np);
  if (initial_guess) {
    if (initial_guess->velocity.size() != nv || initial_guess->pressure.size() != np)
      throw std::runtime_error("flow solve: initial guess does not match the dof layout");
    x.head(nv) = initial_guess->velocity;
    x.tail(np) = initial_guess->pressure;
  }

  fem::DirichletConstraints dirichlet = velocity_dirichlet(dm, bcs);
  for (std::size_t i = 0; i < dirichlet.dofs.size(); ++i)
    x[dirichlet.dofs[i]] = dirichlet.values[i];
  fem::DirichletConstraints newton_bc = dirichlet;
  newton_bc.values.setZero();

  // Continuation levels in rho, geometric ramp from a solvable start.
  std::vector<double> levels;
  if (params.rho <= opts.rho_start_cap) {
    levels.push_back(params.rho);
  } else {
    for (double r = opts.rho_start_cap; r < params.rho; r *= opts.ramp) levels.push_back(r);
    levels.push_back(params.rho);
  }

  FlowState out;
  Eigen::VectorXd x_good = x;
  Eigen::VectorXd x_prev_good;
  double rho_good = -1.0;
  double rho_prev_good = -1.0;
  int bisections = 0;
  double last_residual = 0.0;

  // Secant predictor along the continuation path.
  auto predict = [&](double rho) {
    x = x_good;
    if (x_prev_good.size() && rho_good > rho_prev_good && rho > rho_good) {
      double s = (rho - rho_good) / (rho_good - rho_prev_good);
      x += std::min(s, 2.0) * (x_good - x_prev_good);
    }
    for (std::size_t i = 0; i < dirichlet.dofs.size(); ++i)
      x[dirichlet.dofs[i]] = dirichlet.values[i];
  };

  // Newton with residual-decrease damping, optionally preceded by Picard
  // (Oseen) sweeps to enter the attraction basin.
  auto solve_level = [&](double rho, int picard_iters) -> bool {
    predict(rho);

    double initial_res = -1.0;
    for (int it = 0; it <= opts.max_iters + picard_iters; ++it) {
      const bool picard = it < picard_iters;
      fem::AssemblyResult sys =
          assemble_ns_system(dm, x, params.mu, rho, newton_bc, exec, !picard);
      double res = sys.rhs.norm();
      last_residual = res;
      if (initial_res < 0) initial_res = res;
      if (res <= opts.tol * (1.0 + initial_res)) {
        out.residual = res;
        return true;
      }
      if (it == opts.max_iters + picard_iters || !std::isfinite(res)) return false;
      Eigen::VectorXd delta;
      try {
        delta = fem::solve_linear(sys.op, -sys.rhs);
      } catch (const std::exception&) {
        return false;
      }
      // Backtrack the step until the residual norm decreases.
      double step = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 14; ++bt, step *= 0.5) {
        Eigen::VectorXd trial = x + step * delta;
        double trial_res =
            assemble_ns_residual(dm, trial, params.mu, rho, newton_bc, exec).norm();
        if (std::isfinite(trial_res) && trial_res <= (1.0 - 1e-4 * step) * res) {
          x = trial;
          accepted = true;
          break;
        }
      }
      out.newton_iters++;
      if (!accepted) return false;
    }
    return false;
  };

  // Backward-Euler pseudo-transient steps towards the steady state, with
  // the timestep grown by the achieved residual reduction. Finds steady
  // states whose Newton basin is too small for plain continuation.
  auto solve_level_ptc = [&](double rho) -> bool {
    if (rho <= 0 || opts.ptc_max_steps <= 0) return false;
    predict(rho);
    double dt = opts.ptc_dt0;
    double steady_res = assemble_ns_residual(dm, x, params.mu, rho, newton_bc, exec).norm();
    const double target = opts.tol * (1.0 + steady_res);
    for (int step = 0; step < opts.ptc_max_steps; ++step) {
      if (steady_res <= target) {
        out.residual = steady_res;
        last_residual = steady_res;
        return true;
      }
      fem::AssemblyResult sys =
          assemble_ns_system(dm, x, params.mu, rho, newton_bc, exec, true, rho / dt, &x);
      Eigen::VectorXd delta;
      try {
        delta = fem::solve_linear(sys.op, -sys.rhs);
      } catch (const std::exception&) {
        dt *= 0.3;
        if (dt < 1e-12) return false;
        continue;
      }
      Eigen::VectorXd trial = x + delta;
      double trial_res =
          assemble_ns_residual(dm, trial, params.mu, rho, newton_bc, exec).norm();
      out.newton_iters++;
      if (!std::isfinite(trial_res) || trial_res > 5.0 * steady_res) {
        dt *= 0.3;
        if (dt < 1e-12) return false;
        continue;
      }
      x = trial;
      double ratio = steady_res / std::max(trial_res, 1e-300);
      dt = std::min(dt * std::clamp(ratio, 0.3, 3.0), 1e12);
      steady_res = trial_res;
      last_residual = steady_res;
    }
    if (steady_res <= target) {
      out.residual = steady_res;
      return true;
    }
    return false;
  };

  std::size_t li = 0;
  while (li < levels.size()) {
    const double rho = levels[li];
    bool converged = solve_level(rho, 0);
    if (!converged) converged = solve_level(rho, 10);
    if (!converged) converged = solve_level_ptc(rho);

    if (converged) {
      x_prev_good = x_good;
      rho_prev_good = rho_good;
      x_good = x;
      rho_good = rho;
      out.continuation_levels++;
      ++li;
      continue;
    }
    // Stalled ramp step: insert a geometric midpoint level and retry.
    if (bisections >= opts.max_bisections)
      throw std::runtime_error("flow solve: continuation exhausted at rho = " +
                               std::to_string(rho) + ", residual " +
                               std::to_string(last_residual));
    ++bisections;
    double mid = rho_good > 0 ? std::sqrt(rho_good * rho) : rho / opts.ramp;
    if (rho_good > 0 && mid < rho_good * 1.01)
      throw std::runtime_error("flow solve: continuation cannot make progress at rho = " +
                               std::to_string(rho) + ", residual " +
                               std::to_string(last_residual));
    levels.insert(levels.begin() + li, mid);
  }

  out.velocity = x_good.head(nv);
  out.pressure = x_good.tail(np);
  out.rho_reached = params.rho;
  return out;
}

double objective(const fem::DofMap& dm, const FlowState& state, const FluidParams& params,
                 Exec exec) {
  const std::size_t n_tris = dm.mesh->triangles.size();
  std::vector<double> per_elem(n_tris, 0.0);
  for_each_index(exec, n_tris, [&](std::size_t ti) {
    int t = static_cast<int>(ti);
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    int sdofs[6];
    p2_scalar_dofs(dm, t, sdofs);
    QpData qp;
    double acc = 0.0;
    for (const auto& q : fem::quadrature(4)) {
      eval_basis(g, q.x, q.y, q.w, qp);
      double v[2];
      Mat2 gv;
      velocity_at(state.velocity, sdofs, qp, v, gv);
      acc += qp.weight * 0.5 * params.mu * frob(gv, gv);
    }
    per_elem[ti] = acc;
  });
  double total = 0.0;
  for (double v : per_elem) total += v;
  return total;
}

AdjointState solve_adjoint(const fem::DofMap& dm, const FlowState& state,
                           const FluidParams& params, const BoundaryConditions& bcs,
                           Exec exec) {
  const int nv = dm.dof_count(fem::Space::P2Vector);
  const int np = dm.n_nodes;
  const double mu = params.mu, rho = params.rho;

  auto kernel = [&dm, &state, mu, rho, nv](int t, fem::ElementContribution& out) {
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    int sdofs[6];
    p2_scalar_dofs(dm, t, sdofs);
    const auto& tri = dm.mesh->triangles[t];

    out.rows.resize(15);
    for (int i = 0; i < 6; ++i) {
      out.rows[2 * i] = 2 * sdofs[i];
      out.rows[2 * i + 1] = 2 * sdofs[i] + 1;
    }
    for (int k = 0; k < 3; ++k) out.rows[12 + k] = nv + tri[k];
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(15, 15);
    out.vec = Eigen::VectorXd::Zero(15);

    QpData qp;
    for (const auto& q : fem::quadrature(5)) {
      eval_basis(g, q.x, q.y, q.w, qp);
      double v[2];
      Mat2 gv;
      velocity_at(state.velocity, sdofs, qp, v, gv);
      const double w = qp.weight;

      // Rows: test (w, r); columns: trial (lambda, q_adj).
      for (int i = 0; i < 6; ++i) {
        for (int c = 0; c < 2; ++c) {
          const int I = 2 * i + c;
          out.vec[I] += -w * mu * (qp.dphi[i][0] * gv.m[c][0] + qp.dphi[i][1] * gv.m[c][1]);
          for (int m = 0; m < 6; ++m) {
            const double lap = mu * (qp.dphi[i][0] * qp.dphi[m][0] +
                                     qp.dphi[i][1] * qp.dphi[m][1]);
            const double conv_w =
                rho * qp.phi[m] * (v[0] * qp.dphi[i][0] + v[1] * qp.dphi[i][1]);
            for (int d = 0; d < 2; ++d) {
              double a = (c == d) ? lap + conv_w : 0.0;
              a += rho * qp.phi[i] * qp.phi[m] * gv.m[d][c];
              out.mat(I, 2 * m + d) += w * a;
            }
          }
          for (int l = 0; l < 3; ++l) out.mat(I, 12 + l) += -w * qp.psi[l] * qp.dphi[i][c];
        }
      }
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 6; ++m)
          for (int d = 0; d < 2; ++d)
            out.mat(12 + k, 2 * m + d) += w * qp.psi[k] * qp.dphi[m][d];
    }
  };

  fem::DirichletConstraints bc = velocity_dirichlet(dm, bcs);
  bc.values.setZero();
  fem::AssemblyResult sys = fem::assemble(dm, nv + np, nv + np, kernel, exec, &bc);
  Eigen::VectorXd sol = fem::solve_linear(sys.op, sys.rhs);
  AdjointState adj;
  adj.lambda = sol.head(nv);
  adj.q_adj = sol.tail(np);
  return adj;
}

Eigen::VectorXd shape_derivative(const fem::DofMap& dm, const FlowState& state,
                                 const AdjointState& adjoint, const FluidParams& params,
                                 Exec exec) {
  const int n = dm.dof_count(fem::Space::P1Vector);
  const double mu = params.mu, rho = params.rho;

  auto kernel = [&](int t, fem::ElementContribution& out) {
    fem::ElementGeometry g = fem::element_geometry(*dm.mesh, t);
    int sdofs[6];
    p2_scalar_dofs(dm, t, sdofs);
    const auto& tri = dm.mesh->triangles[t];
    out.rows.resize(6);
    for (int i = 0; i < 3; ++i) {
      out.rows[2 * i] = 2 * tri[i];
      out.rows[2 * i + 1] = 2 * tri[i] + 1;
    }
    out.vec = Eigen::VectorXd::Zero(6);

    QpData qp;
    for (const auto& q : fem::quadrature(5)) {
      eval_basis(g, q.x, q.y, q.w, qp);
      double v[2], lam[2];
      Mat2 gv, gl;
      velocity_at(state.velocity, sdofs, qp, v, gv);
      velocity_at(adjoint.lambda, sdofs, qp, lam, gl);
      double p = 0.0, qa = 0.0;
      for (int k = 0; k < 3; ++k) {
        p += state.pressure[tri[k]] * qp.psi[k];
        qa += adjoint.q_adj[tri[k]] * qp.psi[k];
      }
      const double w = qp.weight;
      const double conv[2] = {gv.m[0][0] * v[0] + gv.m[0][1] * v[1],
                              gv.m[1][0] * v[0] + gv.m[1][1] * v[1]};
      const double bracket = 0.5 * mu * frob(gv, gv) + mu * frob(gv, gl) +
                             rho * (lam[0] * conv[0] + lam[1] * conv[1]) - p * gl.trace() -
                             qa * gv.trace();

      for (int nloc = 0; nloc < 3; ++nloc) {
        for (int c = 0; c < 2; ++c) {
          // W = psi_n e_c: grad(W) has row c equal to grad(psi_n).
          Mat2 gw;
          gw.m[c][0] = qp.dpsi[nloc][0];
          gw.m[c][1] = qp.dpsi[nloc][1];
          const double divw = qp.dpsi[nloc][c];
          Mat2 gv_gw = matmul(gv, gw);
          Mat2 gl_gw = matmul(gl, gw);
          double term = divw * bracket;
          term -= mu * (frob(gv_gw, gv) + frob(gv_gw, gl));
          term -= mu * frob(gl_gw, gv);
          term -= rho * (lam[0] * (gv_gw.m[0][0] * v[0] + gv_gw.m[0][1] * v[1]) +
                         lam[1] * (gv_gw.m[1][0] * v[0] + gv_gw.m[1][1] * v[1]));
          term += p * gl_gw.trace();
          term += qa * gv_gw.trace();
          out.vec[2 * nloc + c] += w * term;
        }
      }
    }
  };
  return fem::assemble(dm, n, n, kernel, exec).rhs;
}

}  // namespace shapeopt::flow
