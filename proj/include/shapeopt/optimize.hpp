#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "shapeopt/flow.hpp"

namespace shapeopt::opt {

// P1 vector field over mesh nodes, zero at every outer-boundary dof; acts as
// tangent vector / gradient representative and as retraction displacement.
struct DeformationField {
  Eigen::VectorXd values;
};

struct ElasticityParams {
  double mu_e = 1.0;
  double lambda_e = 0.0;
};

struct ArmijoParams {
  double initial_step = 0.0125;       // alpha~
  double sufficient_decrease = 1e-4;  // sigma
  double shrink = 0.1;                // rho~
  double min_step = 1e-10;
};

struct BaryBounds {
  Point2 lo{-0.05, -0.05};
  Point2 hi{0.05, 0.05};
};

struct ALConfig {
  double c0 = 10.0;
  double growth = 10.0;
  double tau = 0.1;  // required per-update infeasibility decrease ratio
  double feasibility_tol = 1e-6;
  std::vector<BaryBounds> bary_bounds;  // per shape; benchmark defaults if empty

  static std::vector<BaryBounds> benchmark_bounds();
};

// Area equality multipliers per shape plus barycenter box inequality
// multipliers (x_lo, x_hi, y_lo, y_hi) per shape, with the quadratic penalty
// parameter c. Targets are frozen from the initial shapes.
struct ALState {
  std::vector<double> lambda_area;
  std::vector<std::array<double, 4>> lambda_bary;
  double c = 10.0;
  std::vector<double> area0;
  std::vector<Point2> bary0;
  std::vector<BaryBounds> bounds;
  double last_infeasibility = std::numeric_limits<double>::infinity();
};

ALState init_al_state(const MultiShape& shapes, const ALConfig& cfg);

struct ConstraintValues {
  std::vector<double> area_misfit;             // h_i = A_i - A_i0 (equality)
  std::vector<std::array<double, 4>> bary_gap;  // g <= 0 when feasible
};

ConstraintValues eval_constraints(const MultiShape& shapes, const ALState& al);

// max over |h_i| and max(0, g).
double infeasibility(const ConstraintValues& cv);

// j + sum_i [lambda_i h_i + (c/2) h_i^2]
//   + sum_ineq (max(0, lambda + c g)^2 - lambda^2) / (2c)
double al_objective(double j, const ConstraintValues& cv, const ALState& al);

// base + (lambda + c h) dvol[W] + max(0, lambda + c g) dg[W], scattered onto
// the boundary-node dofs of the deformation space.
Eigen::VectorXd al_shape_derivative_rhs(const Eigen::VectorXd& base, const TriMesh& mesh,
                                        const MultiShape& shapes, const ALState& al);

// Multiplier update with max-projection for the inequalities; grows c when
// the infeasibility did not decrease by the factor tau.
void al_update(ALState& al, const ConstraintValues& cv, const ALConfig& cfg);

// Solves int 2 mu_e eps(V):eps(W) + lambda_e div V div W = rhs[W] for all W
// vanishing on the outer boundary. The result is the descent direction
// representative in the deformation space.
DeformationField steklov_poincare_gradient(const fem::DofMap& dofmap, const Eigen::VectorXd& rhs,
                                           const ElasticityParams& eparams,
                                           Exec exec = Exec::Serial,
                                           double* spd_min_pivot = nullptr,
                                           fem::SparseOperator* out_operator = nullptr);

struct ArmijoResult {
  double step = 0.0;
  double j_al = 0.0;
};

// Backtracking from the initial step by the shrink factor until
// J(alpha) <= J(0) - sigma alpha metric_norm_sq. evaluate returns nullopt to
// reject a trial (mesh inversion, solver failure). Throws
// "line search failed" below min_step.
ArmijoResult armijo_search(const std::function<std::optional<double>(double)>& evaluate,
                           double j_al0, double metric_norm_sq, const ArmijoParams& params);

struct OptimizerConfig {
  double eps = 1e-4;  // H1-norm stopping tolerance for each subproblem
  int max_inner = 100000;
  int max_al = 20;
  double quality_threshold = 0.2;
  unsigned seed = 0;
  bool debug_checks = false;
  Exec exec = Exec::Serial;
};

struct HistoryRecord {
  int iter = 0;
  double j = 0.0;
  double j_al = 0.0;
  double h1_norm = 0.0;
  double alpha = 0.0;
  double infeasibility = 0.0;
  std::string event = "none";
  // Not serialized to history.csv; kept so accepted steps can be re-checked
  // against the Armijo inequality.
  double metric_norm_sq = 0.0;
  double j_al_before = 0.0;
  bool subproblem_end = false;
};

struct OptimizationResult {
  MultiShape shapes;
  TriMesh mesh;
  flow::FlowState state;
  std::vector<HistoryRecord> history;
  bool converged = false;
  int al_iterations = 0;
  int remesh_count = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double final_infeasibility = 0.0;
};

struct OptimizeError : std::runtime_error {
  OptimizeError(const std::string& msg, OptimizationResult partial_result)
      : std::runtime_error(msg), partial(std::move(partial_result)) {}
  OptimizationResult partial;
};

using IterationCallback =
    std::function<void(const HistoryRecord&, const TriMesh&, const fem::DofMap&,
                       const flow::FlowState&, const DeformationField&)>;

// Augmented-Lagrange outer loop around gradient descent with retraction:
// state -> adjoint -> shape derivative -> AL rhs -> elasticity gradient ->
// Armijo step -> node displacement, until the H1 norm of the gradient
// representative drops below eps; then multiplier/penalty updates until
// feasible. Remeshes when the minimum element quality falls below the
// threshold and once more if a line search fails.
OptimizationResult optimize(const DomainSpec& spec, const OptimizerConfig& config,
                            const flow::FluidParams& fluid, const flow::BoundaryConditions& bcs,
                            const ArmijoParams& armijo, const ALConfig& al_config,
                            const flow::NewtonOptions& newton = {},
                            const ElasticityParams& elasticity = {},
                            const IterationCallback& callback = {});

}  // namespace shapeopt::opt
