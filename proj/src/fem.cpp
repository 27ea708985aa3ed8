#include "tetrodiff/fem.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "tetrodiff/error.hpp"

namespace tetrodiff::fem {

ElementMatrices element_matrices(const TetPoints& p, double degenerate_tol) {
  const double v = tet_volume(p);
  if (!(v > degenerate_tol))
    throw GeometryError("element_matrices: degenerate element (volume " + std::to_string(v) + ")");
  ElementMatrices m;
  m.volume = v;
  m.gradients = shape_gradients(p);
  for (int b = 0; b < 4; ++b) {
    for (int a = 0; a < 4; ++a) {
      const double g = m.gradients[b].dot(m.gradients[a]);
      m.stiffness(b, a) = v * g;
      m.convection(b, a) = 0.25 * v * g;
      m.mass(b, a) = (a == b ? 2.0 : 1.0) * v / 20.0;
    }
  }
  return m;
}

ElementMatrices element_matrices(const Mesh& mesh, ElemId e) {
  return element_matrices(mesh.points(e), mesh.degenerate_tolerance());
}

SparseMatrix assemble(const Mesh& mesh, const std::function<Matrix4(ElemId)>& element_block) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(16 * mesh.element_count());
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const Matrix4 block = element_block(e);
    const auto& nd = mesh.element(e).nodes;
    for (int b = 0; b < 4; ++b)
      for (int a = 0; a < 4; ++a) triplets.emplace_back(nd[b], nd[a], block(b, a));
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble(mesh, [&](ElemId e) { return element_matrices(mesh, e).stiffness; });
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  return assemble(mesh, [&](ElemId e) { return element_matrices(mesh, e).mass; });
}

SparseSystem apply_forced_bc(SparseSystem system, const ForcedValues& bc) {
  const auto n = system.matrix.rows();
  for (const auto& [node, value] : bc) {
    if (static_cast<Eigen::Index>(node) >= n)
      throw ConfigError("forced value on node " + std::to_string(node) + " outside the system");
    auto it = system.constrained.find(node);
    if (it != system.constrained.end() && it->second != value)
      throw ConfigError("conflicting forced values on node " + std::to_string(node));
    system.constrained[node] = value;
  }
  if (bc.empty()) return system;

  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Vector g = Vector::Zero(n);
  for (const auto& [node, value] : system.constrained) {
    fixed[node] = 1;
    g[node] = value;
  }
  SparseMatrix& a = system.matrix;
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const auto row = it.row();
      if (fixed[static_cast<std::size_t>(col)] && !fixed[static_cast<std::size_t>(row)])
        system.rhs[row] -= it.value() * g[col];
      if (fixed[static_cast<std::size_t>(col)] || fixed[static_cast<std::size_t>(row)])
        it.valueRef() = 0.0;
    }
  }
  for (const auto& [node, value] : system.constrained) {
    a.coeffRef(node, node) = 1.0;
    system.rhs[node] = value;
  }
  a.prune(0.0);
  a.makeCompressed();
  return system;
}

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double r = (a * x - b).norm();
  const double nb = b.norm();
  return nb > 0.0 ? r / nb : r;
}

struct LinearSolver::Impl {
  SparseMatrix matrix;
  SolveOptions opts;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::SparseLU<SparseMatrix> lu;
  bool use_lu = false;

  Vector raw_solve(const Vector& b) const { return use_lu ? Vector(lu.solve(b)) : Vector(ldlt.solve(b)); }
};

LinearSolver::LinearSolver(const SparseMatrix& matrix, SolveOptions opts) { factorize(matrix, opts); }
LinearSolver::LinearSolver() = default;
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

void LinearSolver::factorize(const SparseMatrix& matrix, SolveOptions opts) {
  impl_ = std::make_unique<Impl>();
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
  impl_->opts = opts;
  if (opts.symmetric) {
    impl_->ldlt.compute(impl_->matrix);
    if (impl_->ldlt.info() == Eigen::Success) return;
  }
  impl_->use_lu = true;
  impl_->lu.analyzePattern(impl_->matrix);
  impl_->lu.factorize(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("sparse factorization failed: " + impl_->lu.lastErrorMessage(),
                      std::numeric_limits<double>::infinity());
}

Vector LinearSolver::solve(const Vector& rhs) const {
  if (!impl_) throw SolverError("solve called before factorize", std::numeric_limits<double>::infinity());
  Vector x = impl_->raw_solve(rhs);
  double res = relative_residual(impl_->matrix, x, rhs);
  for (int k = 0; k < impl_->opts.refinement_steps && !(res <= impl_->opts.tolerance); ++k) {
    x += impl_->raw_solve(rhs - impl_->matrix * x);
    res = relative_residual(impl_->matrix, x, rhs);
  }
  last_residual_ = res;
  if (!(res <= impl_->opts.tolerance)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "linear solve residual %.3e above tolerance %.3e", res,
                  impl_->opts.tolerance);
    throw SolverError(buf, res);
  }
  return x;
}

FieldVector linear_solve(const SparseSystem& system, SolveOptions opts) {
  LinearSolver solver(system.matrix, opts);
  return {solver.solve(system.rhs), FieldRole::Generic};
}

void write_matrix_coo(std::ostream& out, const SparseMatrix& m) {
  char buf[96];
  for (Eigen::Index col = 0; col < m.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                    static_cast<long>(it.col()), it.value());
      out << buf;
    }
  }
}

}  // namespace tetrodiff::fem
