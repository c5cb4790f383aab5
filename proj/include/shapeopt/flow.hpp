#pragma once

#include <optional>

#include "shapeopt/fem.hpp"

namespace shapeopt::flow {

struct FluidParams {
  double mu = 1.81;
  double rho = 1.2e5;
};

// Inflow profile (a * y * (y - 1), 0) on the Inflow boundary; homogeneous
// Dirichlet on walls and shapes; natural (do-nothing) outflow.
struct BoundaryConditions {
  double inflow_a = 0.08421;
};

struct NewtonOptions {
  double tol = 1e-10;        // scaled by (1 + initial residual)
  int max_iters = 50;        // per continuation level
  double rho_start_cap = 1e3;
  double ramp = 10.0;
  int max_bisections = 8;    // extra levels inserted when a ramp step stalls
  // Pseudo-transient rescue phase for levels where Newton and Picard stall:
  // backward-Euler steps with a timestep grown by the residual ratio.
  double ptc_dt0 = 0.05;
  int ptc_max_steps = 500;
};

struct FlowState {
  Eigen::VectorXd velocity;  // P2 vector dofs
  Eigen::VectorXd pressure;  // P1 scalar dofs
  double residual = 0.0;
  int newton_iters = 0;      // total over all continuation levels
  double rho_reached = 0.0;
  int continuation_levels = 0;
};

struct AdjointState {
  Eigen::VectorXd lambda;  // P2 vector dofs
  Eigen::VectorXd q_adj;   // P1 scalar dofs
};

// Velocity Dirichlet dofs (inflow + walls + shapes) and their values.
fem::DirichletConstraints velocity_dirichlet(const fem::DofMap& dofmap,
                                             const BoundaryConditions& bcs);

// Steady Navier-Stokes by Newton with geometric continuation in the density.
// Throws when continuation is exhausted, reporting the last residual.
FlowState solve_state(const fem::DofMap& dofmap, const FluidParams& params,
                      const BoundaryConditions& bcs, const FlowState* initial_guess = nullptr,
                      const NewtonOptions& opts = {}, Exec exec = Exec::Serial);

// Viscous dissipation (mu/2) int grad(v) : grad(v).
double objective(const fem::DofMap& dofmap, const FlowState& state, const FluidParams& params,
                 Exec exec = Exec::Serial);

AdjointState solve_adjoint(const fem::DofMap& dofmap, const FlowState& state,
                           const FluidParams& params, const BoundaryConditions& bcs,
                           Exec exec = Exec::Serial);

// Volume-form shape derivative dj[W] assembled over P1 vector dofs. Pair it
// with test fields vanishing on the outer boundary.
Eigen::VectorXd shape_derivative(const fem::DofMap& dofmap, const FlowState& state,
                                 const AdjointState& adjoint, const FluidParams& params,
                                 Exec exec = Exec::Serial);

}  // namespace shapeopt::flow
