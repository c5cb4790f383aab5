#include "shapeopt/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace shapeopt::fem {

Point2 DofMap::edge_midpoint(int e) const {
  const Point2& a = mesh->nodes[edge_nodes[e][0]];
  const Point2& b = mesh->nodes[edge_nodes[e][1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

DofMap build_dofmap(const TriMesh& mesh) {
  if (mesh.nodes.empty() || mesh.triangles.empty())
    throw std::runtime_error("dofmap: empty mesh");
  DofMap dm;
  dm.mesh = &mesh;
  dm.n_nodes = mesh.node_count();
  dm.tri_edges.resize(mesh.triangle_count());
  std::map<std::pair<int, int>, int> edge_ids;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[(e + 1) % 3], b = tri[(e + 2) % 3];
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(dm.edge_nodes.size()));
      if (inserted) dm.edge_nodes.push_back({key.first, key.second});
      dm.tri_edges[t][e] = it->second;
    }
  }
  dm.n_edges = static_cast<int>(dm.edge_nodes.size());
  return dm;
}

std::vector<int> p2v_boundary_dofs(const DofMap& dm,
                                   const std::function<bool(const BoundaryTag&)>& pred) {
  std::map<std::pair<int, int>, int> edge_ids;
  for (int e = 0; e < dm.n_edges; ++e)
    edge_ids[{dm.edge_nodes[e][0], dm.edge_nodes[e][1]}] = e;
  std::vector<int> dofs;
  for (const auto& be : dm.mesh->boundary_edges) {
    if (!pred(be.tag)) continue;
    auto it = edge_ids.find({std::min(be.a, be.b), std::max(be.a, be.b)});
    if (it == edge_ids.end()) throw std::runtime_error("boundary edge missing from dofmap");
    for (int sdof : {be.a, be.b, dm.n_nodes + it->second}) {
      dofs.push_back(2 * sdof);
      dofs.push_back(2 * sdof + 1);
    }
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

std::vector<int> p1v_outer_boundary_dofs(const DofMap& dm) {
  std::vector<int> dofs;
  for (const auto& be : dm.mesh->boundary_edges) {
    if (!be.tag.is_outer()) continue;
    for (int v : {be.a, be.b}) {
      dofs.push_back(2 * v);
      dofs.push_back(2 * v + 1);
    }
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

// --------------------------------------------------------------------------

namespace {

// Degree-exact Gauss rules on the reference triangle; weights sum to 1/2.
const QuadPoint kDeg1[] = {{1.0 / 3.0, 1.0 / 3.0, 0.5}};

const QuadPoint kDeg2[] = {{1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
                           {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                           {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}};

constexpr double kD4a = 0.445948490915965, kD4b = 0.091576213509771;
constexpr double kD4wa = 0.223381589678011 / 2.0, kD4wb = 0.109951743655322 / 2.0;
const QuadPoint kDeg4[] = {
    {kD4a, kD4a, kD4wa},         {1.0 - 2.0 * kD4a, kD4a, kD4wa}, {kD4a, 1.0 - 2.0 * kD4a, kD4wa},
    {kD4b, kD4b, kD4wb},         {1.0 - 2.0 * kD4b, kD4b, kD4wb}, {kD4b, 1.0 - 2.0 * kD4b, kD4wb}};

constexpr double kD5a = 0.470142064105115, kD5b = 0.101286507323456;
constexpr double kD5wa = 0.132394152788506 / 2.0, kD5wb = 0.125939180544827 / 2.0;
const QuadPoint kDeg5[] = {{1.0 / 3.0, 1.0 / 3.0, 0.225 / 2.0},
                           {kD5a, kD5a, kD5wa},
                           {1.0 - 2.0 * kD5a, kD5a, kD5wa},
                           {kD5a, 1.0 - 2.0 * kD5a, kD5wa},
                           {kD5b, kD5b, kD5wb},
                           {1.0 - 2.0 * kD5b, kD5b, kD5wb},
                           {kD5b, 1.0 - 2.0 * kD5b, kD5wb}};

}  // namespace

std::span<const QuadPoint> quadrature(int degree) {
  if (degree <= 1) return kDeg1;
  if (degree <= 2) return kDeg2;
  if (degree <= 4) return kDeg4;
  if (degree <= 5) return kDeg5;
  throw std::runtime_error("quadrature: unsupported degree " + std::to_string(degree));
}

ElementGeometry element_geometry(const TriMesh& mesh, int tri) {
  const auto& t = mesh.triangles[tri];
  const Point2& p0 = mesh.nodes[t[0]];
  const Point2& p1 = mesh.nodes[t[1]];
  const Point2& p2 = mesh.nodes[t[2]];
  ElementGeometry g;
  g.p0 = p0;
  g.jac[0][0] = p1.x - p0.x;
  g.jac[1][0] = p1.y - p0.y;
  g.jac[0][1] = p2.x - p0.x;
  g.jac[1][1] = p2.y - p0.y;
  g.det = g.jac[0][0] * g.jac[1][1] - g.jac[0][1] * g.jac[1][0];
  if (g.det <= 0) throw std::runtime_error("element geometry: inverted triangle");
  g.inv_jac_t[0][0] = g.jac[1][1] / g.det;
  g.inv_jac_t[0][1] = -g.jac[1][0] / g.det;
  g.inv_jac_t[1][0] = -g.jac[0][1] / g.det;
  g.inv_jac_t[1][1] = g.jac[0][0] / g.det;
  return g;
}

void p2_basis(double x, double y, double value[6], double grad[6][2]) {
  const double l[3] = {1.0 - x - y, x, y};
  const double dl[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  for (int i = 0; i < 3; ++i) {
    value[i] = l[i] * (2.0 * l[i] - 1.0);
    grad[i][0] = (4.0 * l[i] - 1.0) * dl[i][0];
    grad[i][1] = (4.0 * l[i] - 1.0) * dl[i][1];
  }
  for (int e = 0; e < 3; ++e) {
    int i = (e + 1) % 3, j = (e + 2) % 3;
    value[3 + e] = 4.0 * l[i] * l[j];
    grad[3 + e][0] = 4.0 * (l[i] * dl[j][0] + l[j] * dl[i][0]);
    grad[3 + e][1] = 4.0 * (l[i] * dl[j][1] + l[j] * dl[i][1]);
  }
}

void p1_basis(double x, double y, double value[3], double grad[3][2]) {
  value[0] = 1.0 - x - y;
  value[1] = x;
  value[2] = y;
  grad[0][0] = -1.0;
  grad[0][1] = -1.0;
  grad[1][0] = 1.0;
  grad[1][1] = 0.0;
  grad[2][0] = 0.0;
  grad[2][1] = 1.0;
}

// --------------------------------------------------------------------------

AssemblyResult assemble(const DofMap& dofmap, int n_rows, int n_cols, const ElementKernel& kernel,
                        Exec exec, const DirichletConstraints* bc) {
  const std::size_t n_tris = dofmap.mesh->triangles.size();
  std::vector<ElementContribution> elems(n_tris);
  for_each_index(exec, n_tris, [&](std::size_t t) { kernel(static_cast<int>(t), elems[t]); });

  std::vector<char> constrained(n_rows, 0);
  std::vector<double> bcval(n_cols, 0.0);
  if (bc) {
    for (std::size_t i = 0; i < bc->dofs.size(); ++i) {
      constrained[bc->dofs[i]] = 1;
      if (bc->dofs[i] < n_cols) bcval[bc->dofs[i]] = bc->values.size() ? bc->values[i] : 0.0;
    }
  }

  AssemblyResult result;
  result.rhs = Eigen::VectorXd::Zero(n_rows);
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t nnz_guess = 0;
  for (const auto& e : elems) nnz_guess += e.rows.size() * e.cols.size();
  triplets.reserve(nnz_guess + (bc ? bc->dofs.size() : 0));

  for (const auto& e : elems) {
    for (std::size_t i = 0; i < e.rows.size(); ++i) {
      const int r = e.rows[i];
      if (e.vec.size()) result.rhs[r] += e.vec[static_cast<Eigen::Index>(i)];
      if (!e.mat.size()) continue;
      if (bc && constrained[r]) continue;
      for (std::size_t j = 0; j < e.cols.size(); ++j) {
        const int c = e.cols[j];
        const double v = e.mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v == 0.0) continue;
        if (bc && bc->symmetric && c < n_rows && constrained[c]) {
          result.rhs[r] -= v * bcval[c];
          continue;
        }
        triplets.emplace_back(r, c, v);
      }
    }
  }
  if (bc) {
    for (std::size_t i = 0; i < bc->dofs.size(); ++i) {
      const int d = bc->dofs[i];
      triplets.emplace_back(d, d, 1.0);
      result.rhs[d] = bc->values.size() ? bc->values[i] : 0.0;
    }
  }
  Eigen::SparseMatrix<double> mat(n_rows, n_cols);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  result.op = SparseOperator(std::move(mat));
  return result;
}

namespace {

template <int N>
void scalar_dofs_p2(const DofMap& dm, int t, int (&dofs)[N]) {
  static_assert(N == 6);
  const auto& tri = dm.mesh->triangles[t];
  for (int i = 0; i < 3; ++i) dofs[i] = tri[i];
  for (int e = 0; e < 3; ++e) dofs[3 + e] = dm.n_nodes + dm.tri_edges[t][e];
}

}  // namespace

SparseOperator mass_matrix(const DofMap& dm, Space space, Exec exec) {
  const int n = dm.dof_count(space);
  auto kernel = [&dm, space](int t, ElementContribution& out) {
    ElementGeometry g = element_geometry(*dm.mesh, t);
    const int nb = space == Space::P2Vector ? 6 : 3;
    int sdofs[6];
    if (space == Space::P2Vector)
      scalar_dofs_p2(dm, t, sdofs);
    else
      for (int i = 0; i < 3; ++i) sdofs[i] = dm.mesh->triangles[t][i];
    const bool vec = space != Space::P1Scalar;
    const int nd = vec ? 2 * nb : nb;
    out.rows.resize(nd);
    for (int i = 0; i < nb; ++i) {
      if (vec) {
        out.rows[2 * i] = 2 * sdofs[i];
        out.rows[2 * i + 1] = 2 * sdofs[i] + 1;
      } else {
        out.rows[i] = sdofs[i];
      }
    }
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(nd, nd);
    for (const auto& qp : quadrature(4)) {
      double val[6], grad[6][2], pval[3], pgrad[3][2];
      const double* v;
      if (space == Space::P2Vector) {
        p2_basis(qp.x, qp.y, val, grad);
        v = val;
      } else {
        p1_basis(qp.x, qp.y, pval, pgrad);
        v = pval;
      }
      const double w = qp.w * g.det;
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          double m = w * v[i] * v[j];
          if (vec) {
            out.mat(2 * i, 2 * j) += m;
            out.mat(2 * i + 1, 2 * j + 1) += m;
          } else {
            out.mat(i, j) += m;
          }
        }
    }
  };
  return assemble(dm, n, n, kernel, exec).op;
}

SparseOperator stiffness_matrix(const DofMap& dm, Space space, Exec exec) {
  const int n = dm.dof_count(space);
  auto kernel = [&dm, space](int t, ElementContribution& out) {
    ElementGeometry g = element_geometry(*dm.mesh, t);
    const int nb = space == Space::P2Vector ? 6 : 3;
    int sdofs[6];
    if (space == Space::P2Vector)
      scalar_dofs_p2(dm, t, sdofs);
    else
      for (int i = 0; i < 3; ++i) sdofs[i] = dm.mesh->triangles[t][i];
    const bool vec = space != Space::P1Scalar;
    const int nd = vec ? 2 * nb : nb;
    out.rows.resize(nd);
    for (int i = 0; i < nb; ++i) {
      if (vec) {
        out.rows[2 * i] = 2 * sdofs[i];
        out.rows[2 * i + 1] = 2 * sdofs[i] + 1;
      } else {
        out.rows[i] = sdofs[i];
      }
    }
    out.cols = out.rows;
    out.mat = Eigen::MatrixXd::Zero(nd, nd);
    for (const auto& qp : quadrature(4)) {
      double val[6], grad[6][2], pval[3], pgrad[3][2];
      double phys[6][2];
      int nbials = nb;
      if (space == Space::P2Vector) {
        p2_basis(qp.x, qp.y, val, grad);
        for (int i = 0; i < nbials; ++i) {
          phys[i][0] = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
          phys[i][1] = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
        }
      } else {
        p1_basis(qp.x, qp.y, pval, pgrad);
        for (int i = 0; i < nbials; ++i) {
          phys[i][0] = g.inv_jac_t[0][0] * pgrad[i][0] + g.inv_jac_t[0][1] * pgrad[i][1];
          phys[i][1] = g.inv_jac_t[1][0] * pgrad[i][0] + g.inv_jac_t[1][1] * pgrad[i][1];
        }
      }
      const double w = qp.w * g.det;
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          double k = w * (phys[i][0] * phys[j][0] + phys[i][1] * phys[j][1]);
          if (vec) {
            out.mat(2 * i, 2 * j) += k;
            out.mat(2 * i + 1, 2 * j + 1) += k;
          } else {
            out.mat(i, j) += k;
          }
        }
    }
  };
  return assemble(dm, n, n, kernel, exec).op;
}

SparseOperator divergence_matrix(const DofMap& dm, Exec exec) {
  const int nq = dm.dof_count(Space::P1Scalar);
  const int nv = dm.dof_count(Space::P2Vector);
  auto kernel = [&dm](int t, ElementContribution& out) {
    ElementGeometry g = element_geometry(*dm.mesh, t);
    int sdofs[6];
    scalar_dofs_p2(dm, t, sdofs);
    const auto& tri = dm.mesh->triangles[t];
    out.rows = {tri[0], tri[1], tri[2]};
    out.cols.resize(12);
    for (int i = 0; i < 6; ++i) {
      out.cols[2 * i] = 2 * sdofs[i];
      out.cols[2 * i + 1] = 2 * sdofs[i] + 1;
    }
    out.mat = Eigen::MatrixXd::Zero(3, 12);
    for (const auto& qp : quadrature(4)) {
      double val[6], grad[6][2], pval[3], pgrad[3][2];
      p2_basis(qp.x, qp.y, val, grad);
      p1_basis(qp.x, qp.y, pval, pgrad);
      const double w = qp.w * g.det;
      for (int i = 0; i < 6; ++i) {
        double gx = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
        double gy = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
        for (int k = 0; k < 3; ++k) {
          out.mat(k, 2 * i) += w * pval[k] * gx;
          out.mat(k, 2 * i + 1) += w * pval[k] * gy;
        }
      }
    }
  };
  return assemble(dm, nq, nv, kernel, exec).op;
}

// --------------------------------------------------------------------------

Eigen::VectorXd solve_linear(const SparseOperator& op, const Eigen::VectorXd& rhs) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> mat = op.matrix();
  mat.makeCompressed();
  lu.analyzePattern(mat);
  lu.factorize(mat);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("linear solve: factorization failed (singular operator?)");
  Eigen::VectorXd x = lu.solve(rhs);
  double res = (op.matrix() * x - rhs).norm();
  if (!(res <= 1e-10 * (1.0 + rhs.norm())))
    throw std::runtime_error("linear solve: residual " + std::to_string(res) +
                             " exceeds tolerance");
  return x;
}

Eigen::VectorXd solve_spd(const SparseOperator& op, const Eigen::VectorXd& rhs,
                          double* min_pivot) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> mat = op.matrix();
  mat.makeCompressed();
  ldlt.compute(mat);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("spd solve: factorization failed");
  if (min_pivot) *min_pivot = ldlt.vectorD().minCoeff();
  Eigen::VectorXd x = ldlt.solve(rhs);
  double res = (op.matrix() * x - rhs).norm();
  if (!(res <= 1e-10 * (1.0 + rhs.norm())))
    throw std::runtime_error("spd solve: residual " + std::to_string(res) + " exceeds tolerance");
  return x;
}

// --------------------------------------------------------------------------

namespace {

double integrate_h1(const DofMap& dm, const Field& f, bool with_value, bool with_grad,
                    Exec exec) {
  const std::size_t n_tris = dm.mesh->triangles.size();
  std::vector<double> per_elem(n_tris, 0.0);
  for_each_index(exec, n_tris, [&](std::size_t ti) {
    int t = static_cast<int>(ti);
    ElementGeometry g = element_geometry(*dm.mesh, t);
    const auto& tri = dm.mesh->triangles[t];
    double acc = 0.0;
    for (const auto& qp : quadrature(4)) {
      double vv = 0.0, gg = 0.0;
      if (f.space == Space::P2Vector) {
        double val[6], grad[6][2];
        p2_basis(qp.x, qp.y, val, grad);
        int sdofs[6];
        scalar_dofs_p2(dm, t, sdofs);
        double u[2] = {0, 0}, du[2][2] = {{0, 0}, {0, 0}};
        for (int i = 0; i < 6; ++i) {
          double gx = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
          double gy = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
          for (int c = 0; c < 2; ++c) {
            double coef = f.values[2 * sdofs[i] + c];
            u[c] += coef * val[i];
            du[c][0] += coef * gx;
            du[c][1] += coef * gy;
          }
        }
        vv = u[0] * u[0] + u[1] * u[1];
        gg = du[0][0] * du[0][0] + du[0][1] * du[0][1] + du[1][0] * du[1][0] +
             du[1][1] * du[1][1];
      } else {
        double val[3], grad[3][2];
        p1_basis(qp.x, qp.y, val, grad);
        const int ncomp = f.space == Space::P1Vector ? 2 : 1;
        double u[2] = {0, 0}, du[2][2] = {{0, 0}, {0, 0}};
        for (int i = 0; i < 3; ++i) {
          double gx = g.inv_jac_t[0][0] * grad[i][0] + g.inv_jac_t[0][1] * grad[i][1];
          double gy = g.inv_jac_t[1][0] * grad[i][0] + g.inv_jac_t[1][1] * grad[i][1];
          for (int c = 0; c < ncomp; ++c) {
            double coef =
                f.space == Space::P1Vector ? f.values[2 * tri[i] + c] : f.values[tri[i]];
            u[c] += coef * val[i];
            du[c][0] += coef * gx;
            du[c][1] += coef * gy;
          }
        }
        vv = u[0] * u[0] + u[1] * u[1];
        gg = du[0][0] * du[0][0] + du[0][1] * du[0][1] + du[1][0] * du[1][0] +
             du[1][1] * du[1][1];
      }
      acc += qp.w * g.det * ((with_value ? vv : 0.0) + (with_grad ? gg : 0.0));
    }
    per_elem[ti] = acc;
  });
  double total = 0.0;
  for (double v : per_elem) total += v;  // fixed order for determinism
  return total;
}

}  // namespace

double h1_norm(const DofMap& dm, const Field& f, Exec exec) {
  return std::sqrt(integrate_h1(dm, f, true, true, exec));
}

double l2_norm(const DofMap& dm, const Field& f, Exec exec) {
  return std::sqrt(integrate_h1(dm, f, true, false, exec));
}

Eigen::VectorXd interpolate_p2_vector(const DofMap& dm,
                                      const std::function<Point2(const Point2&)>& f) {
  Eigen::VectorXd out(dm.dof_count(Space::P2Vector));
  for (int i = 0; i < dm.n_nodes; ++i) {
    Point2 v = f(dm.mesh->nodes[i]);
    out[2 * i] = v.x;
    out[2 * i + 1] = v.y;
  }
  for (int e = 0; e < dm.n_edges; ++e) {
    Point2 v = f(dm.edge_midpoint(e));
    out[2 * (dm.n_nodes + e)] = v.x;
    out[2 * (dm.n_nodes + e) + 1] = v.y;
  }
  return out;
}

Eigen::VectorXd interpolate_p1_scalar(const DofMap& dm,
                                      const std::function<double(const Point2&)>& f) {
  Eigen::VectorXd out(dm.n_nodes);
  for (int i = 0; i < dm.n_nodes; ++i) out[i] = f(dm.mesh->nodes[i]);
  return out;
}

std::vector<std::array<double, 3>> nodal_vectors(const DofMap& dm, const Field& f) {
  std::vector<std::array<double, 3>> out(dm.n_nodes);
  for (int i = 0; i < dm.n_nodes; ++i) out[i] = {f.values[2 * i], f.values[2 * i + 1], 0.0};
  return out;
}

}  // namespace shapeopt::fem
