#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <span>
#include <vector>

#include "shapeopt/mesh.hpp"
#include "shapeopt/parallel.hpp"

namespace shapeopt::fem {

// Taylor-Hood dof layout on a triangle mesh. P2 scalar dofs are node dofs
// [0, V) followed by edge-midpoint dofs [V, V+E). Vector dofs interleave the
// two components of scalar dof d as (2d, 2d+1). P1 spaces use node dofs only.
enum class Space { P2Vector, P1Scalar, P1Vector };

struct DofMap {
  const TriMesh* mesh = nullptr;
  std::vector<std::array<int, 3>> tri_edges;  // edge id opposite local vertex
  std::vector<std::array<int, 2>> edge_nodes;
  int n_nodes = 0;
  int n_edges = 0;

  int scalar_p2_count() const { return n_nodes + n_edges; }
  int dof_count(Space s) const {
    switch (s) {
      case Space::P2Vector: return 2 * scalar_p2_count();
      case Space::P1Scalar: return n_nodes;
      case Space::P1Vector: return 2 * n_nodes;
    }
    return 0;
  }
  Point2 edge_midpoint(int e) const;
};

DofMap build_dofmap(const TriMesh& mesh);

// P2 vector dofs (both components) on boundary edges whose tag matches.
std::vector<int> p2v_boundary_dofs(const DofMap& dofmap,
                                   const std::function<bool(const BoundaryTag&)>& pred);
// P1 vector dofs on the outer (non-shape) boundary.
std::vector<int> p1v_outer_boundary_dofs(const DofMap& dofmap);

struct Field {
  Space space = Space::P1Scalar;
  Eigen::VectorXd values;
};

// --------------------------------------------------------------------------
// Quadrature on the reference triangle (0,0)-(1,0)-(0,1); weights sum to 1/2.

struct QuadPoint {
  double x, y, w;
};
std::span<const QuadPoint> quadrature(int degree);

// Geometry of the affine element map for one triangle.
struct ElementGeometry {
  Point2 p0;
  double jac[2][2];      // columns p1-p0, p2-p0
  double inv_jac_t[2][2];
  double det;            // = 2 * area > 0
};
ElementGeometry element_geometry(const TriMesh& mesh, int tri);

// Reference basis evaluation. grad is with respect to reference coordinates.
void p2_basis(double x, double y, double value[6], double grad[6][2]);
void p1_basis(double x, double y, double value[3], double grad[3][2]);

// --------------------------------------------------------------------------
// Assembly

class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(Eigen::SparseMatrix<double> m) : mat_(std::move(m)) {}
  int rows() const { return static_cast<int>(mat_.rows()); }
  int cols() const { return static_cast<int>(mat_.cols()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat_ * x; }
  const Eigen::SparseMatrix<double>& matrix() const { return mat_; }
  Eigen::SparseMatrix<double>& matrix() { return mat_; }

 private:
  Eigen::SparseMatrix<double> mat_;
};

struct ElementContribution {
  std::vector<int> rows, cols;
  Eigen::MatrixXd mat;  // rows x cols; may be empty for rhs-only kernels
  Eigen::VectorXd vec;  // rows;      may be empty for matrix-only kernels
};
using ElementKernel = std::function<void(int tri, ElementContribution&)>;

struct DirichletConstraints {
  std::vector<int> dofs;
  Eigen::VectorXd values;
  bool symmetric = false;
};

struct AssemblyResult {
  SparseOperator op;
  Eigen::VectorXd rhs;
};

// Element-loop assembly. Kernels run per element (in parallel under the
// Parallel policy) into per-element slots; the scatter into the sparse
// matrix is serial and in element order, so results are bit-identical for
// both policies. Dirichlet rows become identity rows with matching rhs
// entries; symmetric constraints also eliminate the columns.
AssemblyResult assemble(const DofMap& dofmap, int n_rows, int n_cols, const ElementKernel& kernel,
                        Exec exec = Exec::Serial, const DirichletConstraints* bc = nullptr);

// Canonical forms used by tests and by the solvers.
SparseOperator mass_matrix(const DofMap& dofmap, Space space, Exec exec = Exec::Serial);
SparseOperator stiffness_matrix(const DofMap& dofmap, Space space, Exec exec = Exec::Serial);
// B(q, w) = \int q div(w) with q in P1 scalar, w in P2 vector.
SparseOperator divergence_matrix(const DofMap& dofmap, Exec exec = Exec::Serial);

// --------------------------------------------------------------------------
// Linear solves (direct sparse factorizations)

// General sparse LU solve; verifies the residual 2-norm <= 1e-10 (1 + |rhs|)
// and throws with a residual report otherwise.
Eigen::VectorXd solve_linear(const SparseOperator& op, const Eigen::VectorXd& rhs);

// SPD solve via LDLT; min_pivot (if given) receives the smallest diagonal
// pivot, which is positive exactly when the operator is SPD.
Eigen::VectorXd solve_spd(const SparseOperator& op, const Eigen::VectorXd& rhs,
                          double* min_pivot = nullptr);

// --------------------------------------------------------------------------
// Functionals and interpolation

double h1_norm(const DofMap& dofmap, const Field& f, Exec exec = Exec::Serial);
double l2_norm(const DofMap& dofmap, const Field& f, Exec exec = Exec::Serial);

Eigen::VectorXd interpolate_p2_vector(const DofMap& dofmap,
                                      const std::function<Point2(const Point2&)>& f);
Eigen::VectorXd interpolate_p1_scalar(const DofMap& dofmap,
                                      const std::function<double(const Point2&)>& f);

// Nodal values of a vector field (P2 or P1 vector) as 3-vectors for export.
std::vector<std::array<double, 3>> nodal_vectors(const DofMap& dofmap, const Field& f);

}  // namespace shapeopt::fem
