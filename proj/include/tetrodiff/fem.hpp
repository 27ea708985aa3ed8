#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tetrodiff/mesh.hpp"

namespace tetrodiff::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix4 = Eigen::Matrix4d;

/// Integrals of one linear tetrahedron.
struct ElementMatrices {
  /// K~[b][a] = int grad L_b . grad L_a = (b_b b_a + c_b c_a + d_b d_a) / (36 V)
  Matrix4 stiffness;
  /// int L_a L_b: V/10 on the diagonal, V/20 off it.
  Matrix4 mass;
  /// K^b_{ac} = int grad L_b . (L_a grad L_c) = (V/4) grad L_b . grad L_c for every a.
  /// Stored without the redundant a index.
  Matrix4 convection;
  std::array<Eigen::Vector3d, 4> gradients;
  double volume = 0.0;

  double convection_term(int a, int b, int c) const {
    (void)a;
    return convection(b, c);
  }
};

/// Throws GeometryError for a degenerate element.
ElementMatrices element_matrices(const TetPoints& p, double degenerate_tol);
ElementMatrices element_matrices(const Mesh& mesh, ElemId e);

/// Scatter-add of per-element 4x4 blocks into an M x M matrix (M = node count).
SparseMatrix assemble(const Mesh& mesh, const std::function<Matrix4(ElemId)>& element_block);

SparseMatrix assemble_stiffness(const Mesh& mesh);
SparseMatrix assemble_mass(const Mesh& mesh);

/// Forced (Dirichlet) values: node -> value.
using ForcedValues = std::map<NodeId, double>;

struct SparseSystem {
  SparseMatrix matrix;
  Vector rhs;
  ForcedValues constrained;
};

/// Symmetric elimination: constrained rows and columns are zeroed, the diagonal set to 1,
/// the rhs set to the forced value, and the removed column terms moved to the rhs of the
/// free rows. Values in `bc` that conflict with already-constrained nodes throw ConfigError.
SparseSystem apply_forced_bc(SparseSystem system, const ForcedValues& bc);

enum class FieldRole { Generic, Phi, NPlus, NMinus };

struct FieldVector {
  Vector values;
  FieldRole role = FieldRole::Generic;
};

struct SolveOptions {
  /// Required relative residual ||Ax - b|| / ||b||.
  double tolerance = 1e-10;
  /// Symmetric matrices use an LDL^T factorization, others sparse LU.
  bool symmetric = true;
  int refinement_steps = 3;
};

/// Factorizes once, solves many right-hand sides, and checks every residual.
class LinearSolver {
 public:
  LinearSolver();
  explicit LinearSolver(const SparseMatrix& matrix, SolveOptions opts = {});
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  void factorize(const SparseMatrix& matrix, SolveOptions opts = {});
  /// Throws SolverError when the residual stays above tolerance.
  Vector solve(const Vector& rhs) const;
  double last_residual() const { return last_residual_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  mutable double last_residual_ = 0.0;
};

FieldVector linear_solve(const SparseSystem& system, SolveOptions opts = {});

/// Relative residual ||Ax - b|| / ||b|| (absolute when b = 0).
double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b);

/// "row col value" lines, 0-based, one per stored nonzero in column-major order.
void write_matrix_coo(std::ostream& out, const SparseMatrix& m);

}  // namespace tetrodiff::fem
