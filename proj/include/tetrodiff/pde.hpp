#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tetrodiff/fem.hpp"
#include "tetrodiff/mesh.hpp"

namespace tetrodiff::pde {

using fem::ForcedValues;
using fem::SparseMatrix;
using fem::Vector;

struct PhysicalParams {
  double D_plus = 1.0, D_minus = 1.0;
  /// Drift multipliers k_i = D_i z_i e / (k_B T).
  double k_plus = 0.0, k_minus = 0.0;
  /// Valence magnitude |z|.
  double z = 1.0;
  double e_charge = 1.0;
  /// Permittivity product eps_0 eps.
  double eps = 1.0;

  /// Source scale |z| e / eps of the Poisson equation.
  double poisson_scale() const { return z * e_charge / eps; }
  /// Throws ConfigError unless D_i > 0 and eps > 0.
  void validate() const;
};

struct TimeScheme {
  double dt = 0.01;
  /// 1 is backward Euler, 0 the explicit (consistent mass) update.
  double beta = 1.0;
  int n_steps = 1;

  void validate() const;
};

struct FieldState {
  Vector n_plus, n_minus, phi;
  int step_index = 0;
  double time = 0.0;
};

enum class Species { Plus, Minus };

/// One constant flux vector per element.
struct FluxField {
  std::vector<Eigen::Vector3d> j;
};

/// Outer nodes in ascending order.
std::vector<NodeId> boundary_nodes(const Mesh& mesh);

/// Throws ConfigError listing (up to 10) outer nodes without a forced value.
void require_boundary_coverage(const Mesh& mesh, const ForcedValues& bc, const std::string& field);

/// Outer nodes with |p[axis] - coordinate| within the mesh surface tolerance, set to `value`.
/// Without `include_edges`, nodes that also lie on another surface are skipped.
ForcedValues plane_values(const Mesh& mesh, int axis, double coordinate, double value,
                          bool include_edges = true);

/// Every outer node set to f(position).
ForcedValues boundary_values(const Mesh& mesh, const std::function<double(const Point3&)>& f);

/// Outer nodes missing from `bc` are set to `value`.
void fill_boundary(ForcedValues& bc, const Mesh& mesh, double value);

/// Stiffness system with forced values; bc must cover every boundary node.
Vector solve_laplace(const Mesh& mesh, const ForcedValues& bc);

/// Factorizes (M/dt + beta D K) once with the forced values eliminated and then
/// advances any number of steps of
///   (M/dt + beta D K) u_n = (M/dt - (1 - beta) D K) u_{n-1}.
class DiffusionStepper {
 public:
  DiffusionStepper(const Mesh& mesh, double D, const TimeScheme& scheme, ForcedValues bc);

  Vector step(const Vector& u) const;

 private:
  SparseMatrix explicit_part_;
  Vector correction_;
  ForcedValues bc_;
  fem::LinearSolver solver_;
};

Vector step_diffusion(const Vector& u, const Mesh& mesh, double D, const TimeScheme& scheme,
                      const ForcedValues& bc);

struct Snapshot {
  int step = 0;
  double time = 0.0;
  Vector values;
};

/// Runs scheme.n_steps steps from g. Step 0 is always recorded; `snapshot_steps`
/// lists further steps to keep (empty keeps every step).
std::vector<Snapshot> solve_diffusion(const Vector& g, const Mesh& mesh, double D,
                                      const TimeScheme& scheme, const ForcedValues& bc,
                                      const std::vector<int>& snapshot_steps = {});

struct PnpBoundary {
  ForcedValues n_plus, n_minus, phi;
};

struct NewtonOptions {
  double tol = 1e-9;
  int max_iters = 25;
  /// Use the hand-derived Jacobian (doubled drift chain term, own species only) in
  /// place of the exact one.
  bool literal_jacobian = false;
  /// Halve the update until the residual norm decreases.
  bool backtracking = false;
};

struct NewtonReport {
  /// ||F||_inf before each update and at convergence.
  std::vector<double> residual_trace;
  int iterations = 0;
};

/// Discrete Poisson-Nernst-Planck system on one mesh. Species residual rows:
///   F_i = M (n_i - n_i_prev)/dt + beta A_i(n_i, phi) + (1 - beta) A_i(n_i_prev, phi_prev)
///   A_i(n, phi) = D_i K n + k_i C(phi) n
/// with C(phi)[b][a] = sum_e (V/4) grad L_b . grad phi_h, and forced rows n_i - g_i.
/// The potential always solves eps K phi = |z| e M (n_+ - n_-) with its forced values.
class PnpProblem {
 public:
  PnpProblem(const Mesh& mesh, PhysicalParams params, TimeScheme scheme, PnpBoundary bc);

  std::size_t node_count() const { return node_count_; }
  const PhysicalParams& params() const { return params_; }
  const TimeScheme& scheme() const { return scheme_; }
  const PnpBoundary& boundary() const { return bc_; }

  Vector phi_solve(const Vector& n_plus, const Vector& n_minus) const;

  /// Stacked [F_+; F_-] with phi solved from the given densities.
  Vector residual(const Vector& n_plus, const Vector& n_minus, const FieldState& prev) const;
  /// Same, with an explicit potential.
  Vector residual_with_phi(const Vector& n_plus, const Vector& n_minus, const Vector& phi,
                           const FieldState& prev) const;

  /// d[F_+; F_-] / d[n_+; n_-] including the dependence of phi on the densities. Dense;
  /// intended for small meshes.
  Eigen::MatrixXd dense_jacobian(const Vector& n_plus, const Vector& n_minus,
                                 const FieldState& prev, bool literal = false) const;

  /// Newton iteration from `guess` for the step after `prev`. Throws ConvergenceError
  /// with the residual trace when tol is not reached within max_iters updates.
  FieldState newton_step(const FieldState& guess, const FieldState& prev,
                         const NewtonOptions& opts = {}, NewtonReport* report = nullptr) const;

  /// Densities from `n_plus_init`/`n_minus_init` with forced values imposed, phi solved.
  FieldState initial_state(const Vector& n_plus_init, const Vector& n_minus_init) const;

  FluxField flux(const FieldState& state, Species species) const;

 private:
  /// G(n) phi: sum_e V nbar_e grad L_b . grad phi_h.
  Vector drift(const Vector& n, const Vector& phi) const;
  Vector species_operator(const Vector& n, const Vector& phi, double D, double k) const;
  Vector newton_update(const Vector& n_plus, const Vector& n_minus, const Vector& phi,
                       const Vector& f, bool literal) const;
  Eigen::MatrixXd phi_sensitivity() const;

  std::size_t node_count_ = 0;
  PhysicalParams params_;
  TimeScheme scheme_;
  PnpBoundary bc_;
  std::vector<std::array<NodeId, 4>> elem_nodes_;
  std::vector<std::array<Eigen::Vector3d, 4>> grads_;
  std::vector<double> volumes_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  /// Poisson operator with the phi forced values eliminated.
  SparseMatrix poisson_;
  Vector poisson_correction_;
  fem::LinearSolver poisson_solver_;
  std::vector<char> fixed_n_plus_, fixed_n_minus_, fixed_phi_;
};

Vector pnp_phi_solve(const Vector& n_plus, const Vector& n_minus, const Mesh& mesh,
                     const PhysicalParams& params, const ForcedValues& bc_phi);

/// [F_+; F_-] for the given state and previous step.
Vector pnp_residual(const FieldState& state, const FieldState& prev, const Mesh& mesh,
                    const PhysicalParams& params, const TimeScheme& scheme,
                    const PnpBoundary& bc);

FieldState newton_pnp_step(const FieldState& guess, const FieldState& prev, const Mesh& mesh,
                           const PhysicalParams& params, const TimeScheme& scheme,
                           const PnpBoundary& bc, const NewtonOptions& opts = {});

struct PnpTrajectory {
  std::vector<FieldState> states;
  std::vector<NewtonReport> newton;
};

/// scheme.n_steps Newton steps, each warm-started from the previous state.
/// `states` holds the initial state followed by one state per step; the observer sees
/// each of them in order.
PnpTrajectory solve_electrodiffusion(const FieldState& initial, const PnpProblem& problem,
                                     const NewtonOptions& opts = {},
                                     const std::function<void(const FieldState&)>& observer = {});

/// J = -D grad n_h - k nbar grad phi_h per element.
FluxField compute_flux(const FieldState& state, const Mesh& mesh, const PhysicalParams& params,
                       Species species);

}  // namespace tetrodiff::pde
