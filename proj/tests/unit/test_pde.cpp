#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tetrodiff/error.hpp"
#include "tetrodiff/mesh_builder.hpp"
#include "tetrodiff/oracles.hpp"
#include "tetrodiff/pde.hpp"

using namespace tetrodiff;
using namespace tetrodiff::pde;
using tetrodiff::testing::kPi;
using tetrodiff::testing::kuhn_block;

namespace {

Vector nodal(const Mesh& m, const std::function<double(const Point3&)>& f) {
  Vector v(static_cast<Eigen::Index>(m.node_count()));
  for (NodeId n = 0; n < m.node_count(); ++n) v[n] = f(m.node(n).position);
  return v;
}

PnpBoundary uniform_pnp_bc(const Mesh& m, double top) {
  PnpBoundary bc;
  bc.n_plus = plane_values(m, 2, m.node(static_cast<NodeId>(m.node_count() - 1)).position.z(), top);
  fill_boundary(bc.n_plus, m, 1.0);
  bc.n_minus = bc.phi = bc.n_plus;
  return bc;
}

}  // namespace

TEST(Pde, ParameterValidation) {
  PhysicalParams p;
  EXPECT_NO_THROW(p.validate());
  p.D_minus = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  TimeScheme s;
  s.dt = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = TimeScheme{};
  s.beta = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Pde, BoundaryCoverageIsRequired) {
  const Mesh m = kuhn_block(2, 2, 2);
  ForcedValues bc{{0, 1.0}};
  EXPECT_THROW(solve_laplace(m, bc), ConfigError);
  try {
    require_boundary_coverage(m, bc, "phi");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("phi"), std::string::npos);
  }
  fill_boundary(bc, m, 0.0);
  EXPECT_EQ(bc.size(), 26u);
  EXPECT_EQ(bc.at(0), 1.0);
  EXPECT_EQ(boundary_nodes(m).size(), 26u);
}

TEST(Pde, PlaneAndFaceSelections) {
  const Mesh m = kuhn_block(2, 2, 2);
  EXPECT_EQ(plane_values(m, 0, 2.0, 1.0).size(), 9u);
  EXPECT_EQ(plane_values(m, 0, 2.0, 1.0, false).size(), 1u);
  EXPECT_THROW(plane_values(m, 3, 0.0, 1.0), ConfigError);
}

TEST(Pde, LinearSteadyStateIsStationary) {
  Rng rng(31);
  const Mesh m = kuhn_block(3, 3, 3, 1.0 / 3.0, 0.2, &rng);
  const auto f = [](const Point3& p) { return 2.0 * p.x() + p.z(); };
  const Vector u0 = nodal(m, f);
  for (double beta : {0.0, 0.5, 1.0}) {
    const auto traj = solve_diffusion(u0, m, 0.7, {0.01, beta, 5}, boundary_values(m, f));
    ASSERT_EQ(traj.size(), 6u);
    EXPECT_LT((traj.back().values - u0).lpNorm<Eigen::Infinity>(), 1e-11) << beta;
  }
}

TEST(Pde, InsulatedDiffusionConservesMass) {
  Rng rng(32);
  const Mesh m = kuhn_block(3, 3, 3, 1.0 / 3.0, 0.2, &rng);
  const Vector u0 = nodal(m, [](const Point3& p) { return std::exp(-p.squaredNorm()); });
  const auto mass = fem::assemble_mass(m);
  const Vector ones = Vector::Ones(u0.size());
  const double before = ones.dot(mass * u0);
  DiffusionStepper stepper(m, 1.0, {0.05, 1.0, 1}, {});
  Vector u = u0;
  for (int i = 0; i < 10; ++i) u = stepper.step(u);
  EXPECT_NEAR(ones.dot(mass * u), before, 1e-12 * before);
  EXPECT_LT(u.maxCoeff() - u.minCoeff(), u0.maxCoeff() - u0.minCoeff());
}

TEST(Pde, SnapshotSelection) {
  const Mesh m = kuhn_block(2, 2, 2);
  ForcedValues bc;
  fill_boundary(bc, m, 0.0);
  const auto traj = solve_diffusion(Vector::Ones(27), m, 1.0, {0.1, 1.0, 10}, bc, {4, 10});
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_EQ(traj[0].step, 0);
  EXPECT_EQ(traj[1].step, 4);
  EXPECT_NEAR(traj[2].time, 1.0, 1e-12);
}

TEST(Pde, CubeDiffusionTracksSeriesOracle) {
  const Domain d({CubeShape{Point3::Zero(), Point3::Constant(kPi)}, 3, 4});
  Mesh m = build_initial_mesh(d);
  refine_to_target(m, RefineConfig::from_edge(0.3), d);
  const Vector g = nodal(m, [](const Point3& p) {
    return p.x() * (kPi - p.x()) * p.y() * (kPi - p.y()) * p.z() * (kPi - p.z());
  });
  ForcedValues bc;
  fill_boundary(bc, m, 0.0);
  const auto traj = solve_diffusion(g, m, 1.0, {0.01, 1.0, 19}, bc, {19});
  std::vector<double> num, ana;
  for (NodeId n = 0; n < m.node_count(); ++n) {
    num.push_back(traj.back().values[n]);
    ana.push_back(oracles::diffusion_cube_polynomial_oracle(m.node(n).position, 0.19, 1.0));
  }
  const auto s = oracles::relative_difference(num, ana);
  EXPECT_LT(std::abs(s.mean), 0.02);
  EXPECT_LT(s.std, 0.03);
}

TEST(Pde, PnpUniformStateIsStationary) {
  const Mesh m = kuhn_block(2, 2, 2, 0.5);
  PnpBoundary bc;
  fill_boundary(bc.n_plus, m, 1.0);
  bc.n_minus = bc.phi = bc.n_plus;
  const PnpProblem p(m, {0.05, 0.05, 0.05, 0.05, 1, 1, 1}, {0.01, 1.0, 3}, bc);
  const Vector ones = Vector::Ones(27);
  const auto traj = solve_electrodiffusion(p.initial_state(ones, ones), p);
  ASSERT_EQ(traj.states.size(), 4u);
  for (const auto& s : traj.states) {
    EXPECT_LT((s.n_plus - ones).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LT((s.phi - ones).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Pde, SymmetricPnpKeepsElectroneutrality) {
  const Mesh m = kuhn_block(3, 3, 3, kPi / 3);
  const PnpProblem p(m, {0.05, 0.05, 0.05, 0.05, 1, 1, 1}, {0.01, 1.0, 5}, uniform_pnp_bc(m, 2.0));
  const Vector zero = Vector::Zero(64);
  int calls = 0;
  const auto traj = solve_electrodiffusion(p.initial_state(zero, zero), p, {},
                                           [&](const FieldState&) { ++calls; });
  EXPECT_EQ(calls, 6);
  for (const auto& s : traj.states) EXPECT_LT((s.n_plus - s.n_minus).lpNorm<Eigen::Infinity>(), 1e-12);
  for (const auto& r : traj.newton) EXPECT_LE(r.residual_trace.back(), 1e-9);
  EXPECT_NEAR(traj.states.back().time, 0.05, 1e-15);
}

TEST(Pde, PoissonSourceSeesChargeImbalance) {
  const Mesh m = kuhn_block(2, 2, 2);
  PnpBoundary bc;
  fill_boundary(bc.phi, m, 0.0);
  bc.n_plus = bc.n_minus = bc.phi;
  const PnpProblem p(m, {1, 1, 0, 0, 1, 1, 2.0}, {}, bc);
  Vector np = Vector::Zero(27), nm = Vector::Zero(27);
  np[13] = 1.0;
  const Vector phi = p.phi_solve(np, nm);
  EXPECT_GT(phi[13], 0.0);
  EXPECT_LT(p.phi_solve(nm, np)[13], 0.0);
  EXPECT_NEAR(pnp_phi_solve(np, nm, m, p.params(), bc.phi)[13], phi[13], 1e-15);
}

TEST(Pde, DenseJacobianMatchesFiniteDifferences) {
  Rng rng(33);
  Mesh m = kuhn_block(2, 2, 1, 1.0, 0.3, &rng);
  // Only three nodes keep forced values; the rest are free unknowns.
  for (NodeId n = 0; n < m.node_count(); ++n) m.set_node_surfaces(n, n == 0 || n == 4 || n == 17 ? 1u : 0u);
  PnpBoundary bc;
  for (NodeId n : {NodeId{0}, NodeId{4}, NodeId{17}}) {
    bc.n_plus[n] = 1.5;
    bc.n_minus[n] = 0.5;
    bc.phi[n] = 0.2 * n;
  }
  const PnpProblem p(m, {0.8, 1.3, 0.4, -0.7, 1, 1, 1}, {0.1, 0.6, 1}, bc);
  const auto n = static_cast<Eigen::Index>(m.node_count());
  Vector np = Vector::Constant(n, 1.0) + 0.3 * Vector::Random(n);
  Vector nm = Vector::Constant(n, 1.0) + 0.3 * Vector::Random(n);
  const auto prev = p.initial_state(nm, np);
  const Eigen::MatrixXd j = p.dense_jacobian(np, nm, prev);
  for (Eigen::Index c = 0; c < 2 * n; ++c) {
    Vector ap = np, am = nm, bp = np, bm = nm;
    const double h = 1e-6;
    (c < n ? ap[c] : am[c - n]) += h;
    (c < n ? bp[c] : bm[c - n]) -= h;
    const Vector fd = (p.residual(ap, am, prev) - p.residual(bp, bm, prev)) / (2 * h);
    EXPECT_LE((j.col(c) - fd).norm(), 1e-7 * std::max(1.0, fd.norm())) << c;
  }
  const Eigen::MatrixXd lit = p.dense_jacobian(np, nm, prev, true);
  EXPECT_GT((lit - j).norm(), 1e-6);
}

TEST(Pde, NewtonReachesToleranceAndReportsTrace) {
  const Mesh m = kuhn_block(3, 3, 3, kPi / 3);
  const PnpProblem p(m, {0.05, 0.05, 0.05, -0.05, 1, 1, 1}, {0.01, 1.0, 1}, uniform_pnp_bc(m, 2.0));
  const Vector zero = Vector::Zero(64);
  const auto s0 = p.initial_state(zero, zero);
  NewtonReport rep;
  const auto s1 = p.newton_step(s0, s0, {}, &rep);
  ASSERT_GE(rep.residual_trace.size(), 2u);
  EXPECT_LE(rep.residual_trace.back(), 1e-9);
  EXPECT_EQ(rep.iterations + 1, static_cast<int>(rep.residual_trace.size()));
  EXPECT_LE(p.residual(s1.n_plus, s1.n_minus, s0).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LE(pnp_residual(s1, s0, m, p.params(), p.scheme(), p.boundary()).lpNorm<Eigen::Infinity>(), 1e-9);
  NewtonOptions one;
  one.max_iters = 1;
  one.tol = 1e-30;
  EXPECT_THROW(p.newton_step(s0, s0, one), ConvergenceError);
}

TEST(Pde, LinearDensityGivesConstantFlux) {
  const Mesh m = kuhn_block(2, 2, 2, 0.5);
  const PhysicalParams params{0.3, 0.3, 0.0, 0.0, 1, 1, 1};
  FieldState s;
  s.n_plus = nodal(m, [](const Point3& p) { return p.z(); });
  s.n_minus = s.n_plus;
  s.phi = Vector::Zero(27);
  const auto f = compute_flux(s, m, params, Species::Plus);
  ASSERT_EQ(f.j.size(), m.element_count());
  for (const auto& j : f.j) EXPECT_LT((j - Eigen::Vector3d(0, 0, -0.3)).norm(), 1e-14);
}
