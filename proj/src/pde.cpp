#include "tetrodiff/pde.hpp"

#include <algorithm>
#include <cmath>

#include "tetrodiff/error.hpp"

namespace tetrodiff::pde {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::vector<char> fixed_mask(std::size_t n, const ForcedValues& bc) {
  std::vector<char> m(n, 0);
  for (const auto& [node, value] : bc) {
    if (node >= n) throw ConfigError("forced value on node " + std::to_string(node) + " outside the mesh");
    m[node] = 1;
  }
  return m;
}

void impose(Vector& v, const ForcedValues& bc) {
  for (const auto& [node, value] : bc) v[node] = value;
}

void check_length(const Vector& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                      std::to_string(v.size()));
}

/// Eliminated matrix and the right-hand side it produces for a zero source.
fem::SparseSystem eliminate(const SparseMatrix& a, const ForcedValues& bc) {
  fem::SparseSystem sys{a, Vector::Zero(a.rows()), {}};
  return fem::apply_forced_bc(std::move(sys), bc);
}

void append_sparse(Triplets& t, const SparseMatrix& m, double scale, Eigen::Index row_offset,
                   Eigen::Index col_offset, const std::vector<char>& skip_rows) {
  for (Eigen::Index col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it)
      if (!skip_rows[static_cast<std::size_t>(it.row())])
        t.emplace_back(it.row() + row_offset, it.col() + col_offset, scale * it.value());
}

}  // namespace

void PhysicalParams::validate() const {
  if (!(D_plus > 0.0) || !(D_minus > 0.0)) throw ConfigError("diffusion coefficients must be positive");
  if (!(eps > 0.0)) throw ConfigError("permittivity must be positive");
  if (!std::isfinite(k_plus) || !std::isfinite(k_minus) || !std::isfinite(z) || !std::isfinite(e_charge))
    throw ConfigError("physical parameters must be finite");
}

void TimeScheme::validate() const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (n_steps < 0) throw ConfigError("step count must be >= 0");
}

std::vector<NodeId> boundary_nodes(const Mesh& mesh) {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < mesh.node_count(); ++n)
    if (mesh.node(n).is_outer()) out.push_back(n);
  return out;
}

void require_boundary_coverage(const Mesh& mesh, const ForcedValues& bc, const std::string& field) {
  std::vector<NodeId> missing;
  for (NodeId n : boundary_nodes(mesh))
    if (!bc.count(n)) missing.push_back(n);
  if (missing.empty()) return;
  std::string msg = field + ": " + std::to_string(missing.size()) + " boundary node(s) without a value:";
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + std::to_string(missing[i]);
  if (missing.size() > 10) msg += " ...";
  throw ConfigError(msg);
}

ForcedValues plane_values(const Mesh& mesh, int axis, double coordinate, double value,
                          bool include_edges) {
  if (axis < 0 || axis > 2) throw ConfigError("plane axis must be 0, 1 or 2");
  const double tol = mesh.surface_tolerance();
  ForcedValues out;
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    const Node& node = mesh.node(n);
    if (!node.is_outer() || std::abs(node.position[axis] - coordinate) > tol) continue;
    if (include_edges || surface_count(node.surfaces) == 1) out[n] = value;
  }
  return out;
}

ForcedValues boundary_values(const Mesh& mesh, const std::function<double(const Point3&)>& f) {
  ForcedValues out;
  for (NodeId n : boundary_nodes(mesh)) out[n] = f(mesh.node(n).position);
  return out;
}

void fill_boundary(ForcedValues& bc, const Mesh& mesh, double value) {
  for (NodeId n : boundary_nodes(mesh)) bc.emplace(n, value);
}

Vector solve_laplace(const Mesh& mesh, const ForcedValues& bc) {
  require_boundary_coverage(mesh, bc, "laplace bc");
  const auto sys = eliminate(fem::assemble_stiffness(mesh), bc);
  return fem::linear_solve(sys).values;
}

DiffusionStepper::DiffusionStepper(const Mesh& mesh, double D, const TimeScheme& scheme,
                                   ForcedValues bc)
    : bc_(std::move(bc)) {
  scheme.validate();
  if (!(D >= 0.0)) throw ConfigError("diffusion coefficient must be >= 0");
  const SparseMatrix k = fem::assemble_stiffness(mesh);
  const SparseMatrix m = fem::assemble_mass(mesh);
  const SparseMatrix lhs = m / scheme.dt + (scheme.beta * D) * k;
  explicit_part_ = m / scheme.dt - ((1.0 - scheme.beta) * D) * k;
  auto sys = eliminate(lhs, bc_);
  correction_ = sys.rhs;
  solver_.factorize(sys.matrix);
}

Vector DiffusionStepper::step(const Vector& u) const {
  check_length(u, static_cast<std::size_t>(correction_.size()), "diffusion state");
  Vector rhs = explicit_part_ * u;
  for (const auto& [node, value] : bc_) rhs[node] = 0.0;
  rhs += correction_;
  return solver_.solve(rhs);
}

Vector step_diffusion(const Vector& u, const Mesh& mesh, double D, const TimeScheme& scheme,
                      const ForcedValues& bc) {
  return DiffusionStepper(mesh, D, scheme, bc).step(u);
}

std::vector<Snapshot> solve_diffusion(const Vector& g, const Mesh& mesh, double D,
                                      const TimeScheme& scheme, const ForcedValues& bc,
                                      const std::vector<int>& snapshot_steps) {
  check_length(g, mesh.node_count(), "initial condition");
  if (!g.allFinite()) throw ConfigError("initial condition has non-finite values");
  DiffusionStepper stepper(mesh, D, scheme, bc);
  std::vector<Snapshot> out;
  out.push_back({0, 0.0, g});
  Vector u = g;
  for (int s = 1; s <= scheme.n_steps; ++s) {
    u = stepper.step(u);
    const bool keep = snapshot_steps.empty() ||
                      std::find(snapshot_steps.begin(), snapshot_steps.end(), s) != snapshot_steps.end();
    if (keep) out.push_back({s, s * scheme.dt, u});
  }
  return out;
}

PnpProblem::PnpProblem(const Mesh& mesh, PhysicalParams params, TimeScheme scheme, PnpBoundary bc)
    : node_count_(mesh.node_count()), params_(params), scheme_(scheme), bc_(std::move(bc)) {
  params_.validate();
  scheme_.validate();
  require_boundary_coverage(mesh, bc_.n_plus, "n+ bc");
  require_boundary_coverage(mesh, bc_.n_minus, "n- bc");
  require_boundary_coverage(mesh, bc_.phi, "phi bc");
  fixed_n_plus_ = fixed_mask(node_count_, bc_.n_plus);
  fixed_n_minus_ = fixed_mask(node_count_, bc_.n_minus);
  fixed_phi_ = fixed_mask(node_count_, bc_.phi);

  const std::size_t ne = mesh.element_count();
  elem_nodes_.resize(ne);
  grads_.resize(ne);
  volumes_.resize(ne);
  for (ElemId e = 0; e < ne; ++e) {
    const auto em = fem::element_matrices(mesh, e);
    elem_nodes_[e] = mesh.element(e).nodes;
    grads_[e] = em.gradients;
    volumes_[e] = em.volume;
  }
  stiffness_ = fem::assemble_stiffness(mesh);
  mass_ = fem::assemble_mass(mesh);
  auto sys = eliminate(stiffness_, bc_.phi);
  poisson_ = sys.matrix;
  poisson_correction_ = sys.rhs;
  poisson_solver_.factorize(poisson_);
}

Vector PnpProblem::phi_solve(const Vector& n_plus, const Vector& n_minus) const {
  check_length(n_plus, node_count_, "n+");
  check_length(n_minus, node_count_, "n-");
  Vector rhs = params_.poisson_scale() * (mass_ * (n_plus - n_minus));
  for (std::size_t b = 0; b < node_count_; ++b)
    if (fixed_phi_[b]) rhs[static_cast<Eigen::Index>(b)] = 0.0;
  rhs += poisson_correction_;
  return poisson_solver_.solve(rhs);
}

Vector PnpProblem::drift(const Vector& n, const Vector& phi) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(node_count_));
  for (std::size_t e = 0; e < elem_nodes_.size(); ++e) {
    const auto& nd = elem_nodes_[e];
    const auto& g = grads_[e];
    Eigen::Vector3d grad_phi = Eigen::Vector3d::Zero();
    double nbar = 0.0;
    for (int c = 0; c < 4; ++c) {
      grad_phi += phi[nd[c]] * g[c];
      nbar += 0.25 * n[nd[c]];
    }
    const double w = volumes_[e] * nbar;
    for (int b = 0; b < 4; ++b) out[nd[b]] += w * g[b].dot(grad_phi);
  }
  return out;
}

Vector PnpProblem::species_operator(const Vector& n, const Vector& phi, double D, double k) const {
  Vector out = D * (stiffness_ * n);
  if (k != 0.0) out += k * drift(n, phi);
  return out;
}

Vector PnpProblem::residual_with_phi(const Vector& n_plus, const Vector& n_minus, const Vector& phi,
                                     const FieldState& prev) const {
  check_length(n_plus, node_count_, "n+");
  check_length(n_minus, node_count_, "n-");
  check_length(phi, node_count_, "phi");
  check_length(prev.n_plus, node_count_, "previous n+");
  check_length(prev.n_minus, node_count_, "previous n-");
  const double beta = scheme_.beta;
  const double dt = scheme_.dt;
  if (beta < 1.0) check_length(prev.phi, node_count_, "previous phi");

  const auto species = [&](const Vector& n, const Vector& n_prev, double D, double k,
                           const ForcedValues& bc, const std::vector<char>& fixed) {
    Vector f = mass_ * (n - n_prev) / dt + beta * species_operator(n, phi, D, k);
    if (beta < 1.0) f += (1.0 - beta) * species_operator(n_prev, prev.phi, D, k);
    for (std::size_t b = 0; b < node_count_; ++b)
      if (fixed[b]) f[static_cast<Eigen::Index>(b)] = 0.0;
    for (const auto& [node, value] : bc) f[node] = n[node] - value;
    return f;
  };
  const auto m = static_cast<Eigen::Index>(node_count_);
  Vector out(2 * m);
  out.head(m) = species(n_plus, prev.n_plus, params_.D_plus, params_.k_plus, bc_.n_plus, fixed_n_plus_);
  out.tail(m) = species(n_minus, prev.n_minus, params_.D_minus, params_.k_minus, bc_.n_minus, fixed_n_minus_);
  return out;
}

Vector PnpProblem::residual(const Vector& n_plus, const Vector& n_minus, const FieldState& prev) const {
  return residual_with_phi(n_plus, n_minus, phi_solve(n_plus, n_minus), prev);
}

Eigen::MatrixXd PnpProblem::phi_sensitivity() const {
  const auto m = static_cast<Eigen::Index>(node_count_);
  const Eigen::MatrixXd mass = Eigen::MatrixXd(mass_) * params_.poisson_scale();
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    Vector rhs = mass.col(a);
    for (std::size_t b = 0; b < node_count_; ++b)
      if (fixed_phi_[b]) rhs[static_cast<Eigen::Index>(b)] = 0.0;
    out.col(a) = poisson_solver_.solve(rhs);
  }
  return out;
}

Eigen::MatrixXd PnpProblem::dense_jacobian(const Vector& n_plus, const Vector& n_minus,
                                           const FieldState& prev, bool literal) const {
  (void)prev;
  const auto m = static_cast<Eigen::Index>(node_count_);
  const Vector phi = phi_solve(n_plus, n_minus);
  const double beta = scheme_.beta;
  const Eigen::MatrixXd dphi = phi_sensitivity();
  const Eigen::MatrixXd kd = Eigen::MatrixXd(stiffness_);
  const Eigen::MatrixXd md = Eigen::MatrixXd(mass_);

  const auto blocks = [&](const Vector& n, double D, double k, const std::vector<char>& fixed,
                          Eigen::MatrixXd& direct, Eigen::MatrixXd& chain) {
    Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t e = 0; e < elem_nodes_.size(); ++e) {
      const auto& nd = elem_nodes_[e];
      const auto& gr = grads_[e];
      Eigen::Vector3d grad_phi = Eigen::Vector3d::Zero();
      double nbar = 0.0;
      for (int c = 0; c < 4; ++c) {
        grad_phi += phi[nd[c]] * gr[c];
        nbar += 0.25 * n[nd[c]];
      }
      for (int b = 0; b < 4; ++b) {
        const double w = 0.25 * volumes_[e] * gr[b].dot(grad_phi);
        for (int a = 0; a < 4; ++a) {
          conv(nd[b], nd[a]) += w;
          g(nd[b], nd[a]) += volumes_[e] * nbar * gr[b].dot(gr[a]);
        }
      }
    }
    direct = md / scheme_.dt + beta * (D * kd + k * conv);
    chain = beta * k * g * dphi;
    for (Eigen::Index b = 0; b < m; ++b) {
      if (!fixed[static_cast<std::size_t>(b)]) continue;
      direct.row(b).setZero();
      direct(b, b) = 1.0;
      chain.row(b).setZero();
    }
  };

  Eigen::MatrixXd dp, cp, dm, cm;
  blocks(n_plus, params_.D_plus, params_.k_plus, fixed_n_plus_, dp, cp);
  blocks(n_minus, params_.D_minus, params_.k_minus, fixed_n_minus_, dm, cm);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  if (literal) {
    j.topLeftCorner(m, m) = dp + 2.0 * cp;
    j.bottomRightCorner(m, m) = dm - 2.0 * cm;
  } else {
    j.topLeftCorner(m, m) = dp + cp;
    j.topRightCorner(m, m) = -cp;
    j.bottomLeftCorner(m, m) = cm;
    j.bottomRightCorner(m, m) = dm - cm;
  }
  return j;
}

Vector PnpProblem::newton_update(const Vector& n_plus, const Vector& n_minus, const Vector& phi,
                                 const Vector& f, bool literal) const {
  const auto m = static_cast<Eigen::Index>(node_count_);
  const double beta = scheme_.beta;
  const double s = params_.poisson_scale();

  // Species block rows [row0, row0 + m), potential columns at phi_col.
  const auto species_block = [&](Triplets& t, const Vector& n, double D, double k,
                                 const std::vector<char>& fixed, Eigen::Index row0,
                                 Eigen::Index phi_col, double chain_factor) {
    append_sparse(t, mass_, 1.0 / scheme_.dt, row0, row0, fixed);
    append_sparse(t, stiffness_, beta * D, row0, row0, fixed);
    for (std::size_t e = 0; e < elem_nodes_.size(); ++e) {
      const auto& nd = elem_nodes_[e];
      const auto& gr = grads_[e];
      Eigen::Vector3d grad_phi = Eigen::Vector3d::Zero();
      double nbar = 0.0;
      for (int c = 0; c < 4; ++c) {
        grad_phi += phi[nd[c]] * gr[c];
        nbar += 0.25 * n[nd[c]];
      }
      for (int b = 0; b < 4; ++b) {
        if (fixed[nd[b]]) continue;
        const double w = beta * k * 0.25 * volumes_[e] * gr[b].dot(grad_phi);
        for (int a = 0; a < 4; ++a) {
          t.emplace_back(row0 + nd[b], row0 + nd[a], w);
          t.emplace_back(row0 + nd[b], phi_col + nd[a],
                         chain_factor * beta * k * volumes_[e] * nbar * gr[b].dot(gr[a]));
        }
      }
    }
    for (Eigen::Index b = 0; b < m; ++b)
      if (fixed[static_cast<std::size_t>(b)]) t.emplace_back(row0 + b, row0 + b, 1.0);
  };
  // Potential rows: S psi - s P M (sign_p dn_+ + sign_m dn_-) = 0.
  const auto poisson_block = [&](Triplets& t, Eigen::Index row0, Eigen::Index col_p, double sign_p,
                                 Eigen::Index col_m, double sign_m) {
    append_sparse(t, poisson_, 1.0, row0, row0, std::vector<char>(node_count_, 0));
    if (col_p >= 0) append_sparse(t, mass_, -sign_p * s, row0, col_p, fixed_phi_);
    if (col_m >= 0) append_sparse(t, mass_, -sign_m * s, row0, col_m, fixed_phi_);
  };
  const fem::SolveOptions opts{1e-10, false, 3};

  if (!literal) {
    Triplets t;
    species_block(t, n_plus, params_.D_plus, params_.k_plus, fixed_n_plus_, 0, 2 * m, 1.0);
    species_block(t, n_minus, params_.D_minus, params_.k_minus, fixed_n_minus_, m, 2 * m, 1.0);
    poisson_block(t, 2 * m, 0, 1.0, m, -1.0);
    SparseMatrix a(3 * m, 3 * m);
    a.setFromTriplets(t.begin(), t.end());
    Vector rhs = Vector::Zero(3 * m);
    rhs.head(2 * m) = -f;
    return fem::LinearSolver(a, opts).solve(rhs).head(2 * m);
  }

  Vector out(2 * m);
  const auto one_species = [&](const Vector& n, double D, double k, const std::vector<char>& fixed,
                               double sign, const Vector& fi) {
    Triplets t;
    species_block(t, n, D, k, fixed, 0, m, 2.0);
    poisson_block(t, m, 0, sign, -1, 0.0);
    SparseMatrix a(2 * m, 2 * m);
    a.setFromTriplets(t.begin(), t.end());
    Vector rhs = Vector::Zero(2 * m);
    rhs.head(m) = -fi;
    return Vector(fem::LinearSolver(a, opts).solve(rhs).head(m));
  };
  out.head(m) = one_species(n_plus, params_.D_plus, params_.k_plus, fixed_n_plus_, 1.0, f.head(m));
  out.tail(m) = one_species(n_minus, params_.D_minus, params_.k_minus, fixed_n_minus_, -1.0, f.tail(m));
  return out;
}

FieldState PnpProblem::initial_state(const Vector& n_plus_init, const Vector& n_minus_init) const {
  FieldState s;
  s.n_plus = n_plus_init;
  s.n_minus = n_minus_init;
  check_length(s.n_plus, node_count_, "initial n+");
  check_length(s.n_minus, node_count_, "initial n-");
  impose(s.n_plus, bc_.n_plus);
  impose(s.n_minus, bc_.n_minus);
  s.phi = phi_solve(s.n_plus, s.n_minus);
  return s;
}

FieldState PnpProblem::newton_step(const FieldState& guess, const FieldState& prev,
                                   const NewtonOptions& opts, NewtonReport* report) const {
  if (!(opts.tol > 0.0) || opts.max_iters < 0) throw ConfigError("invalid Newton options");
  const auto m = static_cast<Eigen::Index>(node_count_);
  Vector np = guess.n_plus;
  Vector nm = guess.n_minus;
  check_length(np, node_count_, "guess n+");
  check_length(nm, node_count_, "guess n-");
  impose(np, bc_.n_plus);
  impose(nm, bc_.n_minus);

  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = {};
  for (int it = 0;; ++it) {
    const Vector phi = phi_solve(np, nm);
    const Vector f = residual_with_phi(np, nm, phi, prev);
    const double norm = f.lpNorm<Eigen::Infinity>();
    rep.residual_trace.push_back(norm);
    if (!std::isfinite(norm)) break;
    if (norm <= opts.tol) {
      FieldState out;
      out.n_plus = std::move(np);
      out.n_minus = std::move(nm);
      out.phi = phi;
      out.step_index = prev.step_index + 1;
      out.time = out.step_index * scheme_.dt;
      return out;
    }
    if (it == opts.max_iters) break;
    const Vector delta = newton_update(np, nm, phi, f, opts.literal_jacobian);
    double lambda = 1.0;
    if (opts.backtracking) {
      for (int k = 0; k < 10; ++k) {
        const Vector tp = np + lambda * delta.head(m);
        const Vector tm = nm + lambda * delta.tail(m);
        if (residual(tp, tm, prev).lpNorm<Eigen::Infinity>() < norm) break;
        lambda *= 0.5;
      }
    }
    np += lambda * delta.head(m);
    nm += lambda * delta.tail(m);
    ++rep.iterations;
  }
  throw ConvergenceError("Newton iteration did not reach tolerance", rep.residual_trace);
}

FluxField PnpProblem::flux(const FieldState& state, Species species) const {
  check_length(state.phi, node_count_, "phi");
  const bool plus = species == Species::Plus;
  const Vector& n = plus ? state.n_plus : state.n_minus;
  check_length(n, node_count_, "density");
  const double D = plus ? params_.D_plus : params_.D_minus;
  const double k = plus ? params_.k_plus : params_.k_minus;
  FluxField out;
  out.j.resize(elem_nodes_.size());
  for (std::size_t e = 0; e < elem_nodes_.size(); ++e) {
    const auto& nd = elem_nodes_[e];
    Eigen::Vector3d gn = Eigen::Vector3d::Zero(), gp = Eigen::Vector3d::Zero();
    double nbar = 0.0;
    for (int c = 0; c < 4; ++c) {
      gn += n[nd[c]] * grads_[e][c];
      gp += state.phi[nd[c]] * grads_[e][c];
      nbar += 0.25 * n[nd[c]];
    }
    out.j[e] = -D * gn - k * nbar * gp;
  }
  return out;
}

Vector pnp_phi_solve(const Vector& n_plus, const Vector& n_minus, const Mesh& mesh,
                     const PhysicalParams& params, const ForcedValues& bc_phi) {
  params.validate();
  require_boundary_coverage(mesh, bc_phi, "phi bc");
  check_length(n_plus, mesh.node_count(), "n+");
  check_length(n_minus, mesh.node_count(), "n-");
  fem::SparseSystem sys{fem::assemble_stiffness(mesh),
                        params.poisson_scale() * (fem::assemble_mass(mesh) * (n_plus - n_minus)),
                        {}};
  return fem::linear_solve(fem::apply_forced_bc(std::move(sys), bc_phi)).values;
}

Vector pnp_residual(const FieldState& state, const FieldState& prev, const Mesh& mesh,
                    const PhysicalParams& params, const TimeScheme& scheme, const PnpBoundary& bc) {
  const PnpProblem p(mesh, params, scheme, bc);
  return p.residual_with_phi(state.n_plus, state.n_minus, state.phi, prev);
}

FieldState newton_pnp_step(const FieldState& guess, const FieldState& prev, const Mesh& mesh,
                           const PhysicalParams& params, const TimeScheme& scheme,
                           const PnpBoundary& bc, const NewtonOptions& opts) {
  return PnpProblem(mesh, params, scheme, bc).newton_step(guess, prev, opts);
}

PnpTrajectory solve_electrodiffusion(const FieldState& initial, const PnpProblem& problem,
                                     const NewtonOptions& opts,
                                     const std::function<void(const FieldState&)>& observer) {
  PnpTrajectory traj;
  traj.states.push_back(initial);
  if (observer) observer(initial);
  for (int s = 0; s < problem.scheme().n_steps; ++s) {
    NewtonReport rep;
    const FieldState& prev = traj.states.back();
    FieldState next = problem.newton_step(prev, prev, opts, &rep);
    traj.newton.push_back(std::move(rep));
    traj.states.push_back(std::move(next));
    if (observer) observer(traj.states.back());
  }
  return traj;
}

FluxField compute_flux(const FieldState& state, const Mesh& mesh, const PhysicalParams& params,
                       Species species) {
  FluxField out;
  out.j.resize(mesh.element_count());
  const bool plus = species == Species::Plus;
  const Vector& n = plus ? state.n_plus : state.n_minus;
  check_length(n, mesh.node_count(), "density");
  check_length(state.phi, mesh.node_count(), "phi");
  const double D = plus ? params.D_plus : params.D_minus;
  const double k = plus ? params.k_plus : params.k_minus;
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const auto g = shape_gradients(mesh.points(e));
    const auto& nd = mesh.element(e).nodes;
    Eigen::Vector3d gn = Eigen::Vector3d::Zero(), gp = Eigen::Vector3d::Zero();
    double nbar = 0.0;
    for (int c = 0; c < 4; ++c) {
      gn += n[nd[c]] * g[c];
      gp += state.phi[nd[c]] * g[c];
      nbar += 0.25 * n[nd[c]];
    }
    out.j[e] = -D * gn - k * nbar * gp;
  }
  return out;
}

}  // namespace tetrodiff::pde
