// tetrodiff: mesh generation and PDE solves from the command line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tetrodiff/error.hpp"
#include "tetrodiff/io.hpp"
#include "tetrodiff/mesh_builder.hpp"
#include "tetrodiff/oracles.hpp"
#include "tetrodiff/pde.hpp"
#include "tetrodiff/pipeline.hpp"
#include "tetrodiff/quality.hpp"

using namespace tetrodiff;

namespace {

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Plain number, or a multiple of pi: "pi", "2pi", "2*pi", "-pi/2", "0.5*pi/3".
double parse_scalar(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  const auto bad = [&] { return ConfigError(field + ": cannot parse '" + text + "' as a number"); };
  const auto number = [&](const std::string& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != t.size()) throw bad();
    return v;
  };
  const auto at = s.find("pi");
  if (at == std::string::npos) return number(s);
  std::string coef = s.substr(0, at);
  std::string rest = s.substr(at + 2);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  double v = kPi;
  if (coef == "-") v = -kPi;
  else if (!coef.empty() && coef != "+") v *= number(coef);
  if (!rest.empty()) {
    if (rest[0] != '/') throw bad();
    v /= number(rest.substr(1));
  }
  return v;
}

Point3 parse_point(const std::string& text, const std::string& field) {
  std::vector<double> v;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) v.push_back(parse_scalar(part, field));
  if (v.size() != 3) throw ConfigError(field + ": expected x,y,z");
  return {v[0], v[1], v[2]};
}

struct PlaneBc {
  int axis = 0;
  double coordinate = 0.0;
  double value = 0.0;
};

/// "x=pi:1"
PlaneBc parse_plane(const std::string& text) {
  const auto eq = text.find('=');
  const auto colon = text.rfind(':');
  if (eq == std::string::npos || colon == std::string::npos || colon < eq)
    throw ConfigError("--bc-plane: expected <axis>=<coordinate>:<value>, got '" + text + "'");
  const std::string axis = trim(text.substr(0, eq));
  PlaneBc p;
  if (axis == "x") p.axis = 0;
  else if (axis == "y") p.axis = 1;
  else if (axis == "z") p.axis = 2;
  else throw ConfigError("--bc-plane: axis must be x, y or z, got '" + axis + "'");
  p.coordinate = parse_scalar(text.substr(eq + 1, colon - eq - 1), "--bc-plane");
  p.value = parse_scalar(text.substr(colon + 1), "--bc-plane");
  return p;
}

std::vector<std::string> header_comments(const std::string& command, std::uint64_t seed) {
  return {"tetrodiff " + command, "seed " + std::to_string(seed)};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  return f;
}

// Domain and pipeline options shared by `mesh` and `solve`.
struct MeshOptions {
  std::string shape = "cube";
  std::string extent = "pi";
  std::string radius = "1";
  std::string height = "pi";
  std::string apex;
  std::string center = "0,0,0";
  int layers = 0;
  int ring_nodes = 0;
  std::string h0 = "0.44";
  double vcrit_factor = 0.25;
  std::optional<double> split_factor;
  bool optimize = false;
  bool random_shift = false;
  double ks = 0.25;
  std::optional<double> tmax;
  double cooling = 0.9;
  int sweeps = 2;
  int steps = 30;
  bool random_order = false;
  std::uint64_t seed = 1;
  int starts = 1;
  bool delaunay = false;
  int max_passes = 20;
  std::string mesh_in;

  void add_to(CLI::App* app, bool with_input) {
    app->add_option("--shape", shape, "cube, cylinder, sphere or cone")
        ->check(CLI::IsMember({"cube", "cylinder", "sphere", "cone"}));
    app->add_option("--extent", extent, "cube side length, cube is [0,L]^3");
    app->add_option("--radius", radius, "cylinder, sphere or cone base radius");
    app->add_option("--height", height, "cylinder or cone height, base at z=0");
    app->add_option("--apex", apex, "cone apex height (default: height, a full cone)");
    app->add_option("--center", center, "sphere centre x,y,z");
    app->add_option("--layers", layers, "initial layer count (default per shape)");
    app->add_option("--ring-nodes", ring_nodes, "outer nodes per layer edge (default per shape)");
    app->add_option("--h0", h0, "target edge length; V0 = h0^3 sqrt(2)/12");
    app->add_option("--vcrit-factor", vcrit_factor, "V_crit / V0");
    app->add_option("--split-factor", split_factor, "split threshold / V0 (default sqrt 2)");
    app->add_flag("--optimize", optimize, "run Metropolis annealing");
    app->add_flag("--random-shift", random_shift, "draw k_s ~ U(0,1) per proposal");
    app->add_option("--ks", ks, "shift strength k_s");
    app->add_option("--tmax", tmax, "initial temperature (default: estimated)");
    app->add_option("--cooling", cooling, "cooling factor eta");
    app->add_option("--sweeps", sweeps, "local sweeps per global step");
    app->add_option("--steps", steps, "global annealing steps");
    app->add_flag("--random-order", random_order, "visit nodes in a seeded random order");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--starts", starts, "independent annealing runs, best kept");
    app->add_flag("--delaunay", delaunay, "run edge flips and sliver removal");
    app->add_option("--max-passes", max_passes, "flip passes");
    if (with_input) app->add_option("--mesh", mesh_in, "read a TETMESH file instead of meshing");
  }

  DomainSpec domain_spec() const {
    DomainSpec spec;
    if (shape == "cube") {
      const double l = parse_scalar(extent, "--extent");
      spec.shape = CubeShape{Point3::Zero(), Point3::Constant(l)};
      spec.layer_count = 3;
      spec.nodes_per_layer_edge = 4;
    } else if (shape == "cylinder") {
      spec.shape = CylinderShape{0, 0, parse_scalar(radius, "--radius"), 0,
                                 parse_scalar(height, "--height")};
      spec.layer_count = 3;
      spec.nodes_per_layer_edge = 8;
    } else if (shape == "sphere") {
      spec.shape = SphereShape{parse_point(center, "--center"), parse_scalar(radius, "--radius")};
      spec.layer_count = 5;
      spec.nodes_per_layer_edge = 8;
    } else {
      const double h = parse_scalar(height, "--height");
      spec.shape = ConeShape{0, 0, parse_scalar(radius, "--radius"), 0, h,
                             apex.empty() ? h : parse_scalar(apex, "--apex")};
      spec.layer_count = 4;
      spec.nodes_per_layer_edge = 8;
    }
    if (layers > 0) spec.layer_count = layers;
    if (ring_nodes > 0) spec.nodes_per_layer_edge = ring_nodes;
    return spec;
  }

  PipelineConfig pipeline() const {
    auto cfg = PipelineConfig::from_edge(parse_scalar(h0, "--h0"));
    cfg.refine.critical_volume = vcrit_factor * cfg.refine.target_volume;
    if (split_factor) cfg.refine.split_volume = *split_factor * cfg.refine.target_volume;
    cfg.flips.min_volume = cfg.refine.critical_volume;
    cfg.flips.max_passes = max_passes;
    cfg.optimize = optimize;
    cfg.improve = delaunay;
    cfg.seed = seed;
    cfg.starts = starts;
    auto& m = cfg.metropolis;
    m.random_shift = random_shift;
    m.shift_strength = ks;
    m.initial_temperature = tmax;
    m.cooling = cooling;
    m.local_sweeps = sweeps;
    m.global_steps = steps;
    m.random_order = random_order;
    m.seed = seed;
    if (optimize) m.validate();
    return cfg;
  }
};

struct MeshOutputs {
  std::string out;
  std::string vtk;
  std::string hist_volume;
  std::string hist_edge;
  std::string trace;
  int bins = 50;
  double hist_max = 3.0;
};

void print_quality(const Mesh& m, double v0, double h0) {
  const auto vr = volume_ratios(m, v0);
  const auto er = edge_length_ratios(m, h0);
  std::printf("nodes: %zu\nelements: %zu\nvolume: %.10g\n", m.node_count(), m.element_count(),
              m.total_volume());
  std::printf("fraction V/V0 in [0.5,1.5]: %.4f\n", fraction_within(vr, 0.5, 1.5));
  std::printf("fraction L/h0 in [0.5,1.5]: %.4f\n", fraction_within(er, 0.5, 1.5));
}

int run_mesh(const MeshOptions& o, const MeshOutputs& out) {
  const Domain domain(o.domain_spec());
  const auto cfg = o.pipeline();
  PipelineReport rep;
  const Mesh mesh = run_pipeline(domain, cfg, &rep);
  const auto comments = header_comments("mesh", o.seed);
  std::printf("# tetrodiff mesh seed=%llu\n", static_cast<unsigned long long>(o.seed));
  std::printf("shape: %s\nh0: %.6g\nV0: %.6g\nV_crit: %.6g\n", domain.shape_name().c_str(),
              cfg.refine.target_edge, cfg.refine.target_volume, cfg.refine.critical_volume);
  std::printf("divisions: %zu\n", rep.refine.divisions);
  std::printf("energy after refinement: %.10g\n", rep.energy_refined);
  if (rep.anneal) {
    std::printf("energy after annealing: %.10g (seed %llu, %zu accepted, %zu rejected)\n",
                rep.anneal->total_energy, static_cast<unsigned long long>(rep.anneal_seed),
                rep.anneal->accepted, rep.anneal->rejected);
  }
  if (rep.flips) std::printf("flips: %s\n", rep.flips->csv_line().c_str());
  std::printf("energy final: %.10g\n", rep.energy_final);
  print_quality(mesh, cfg.refine.target_volume, cfg.refine.target_edge);
  const auto valid = mesh.check_validity(&domain);
  std::printf("valid: %s\n", valid.ok() ? "yes" : valid.first_problem.c_str());

  if (!out.out.empty()) io::write_mesh_file(out.out, mesh, comments);
  if (!out.vtk.empty()) io::write_vtk_file(out.vtk, mesh, "tetrodiff mesh seed " + std::to_string(o.seed));
  if (!out.hist_volume.empty()) {
    auto f = open_out(out.hist_volume);
    const auto vr = volume_ratios(mesh, cfg.refine.target_volume);
    io::write_histogram_csv(f, make_histogram(vr, 0.0, out.hist_max, static_cast<std::size_t>(out.bins)),
                            {comments[0], comments[1], "V/V0, V0 " + io::format_double(cfg.refine.target_volume)});
  }
  if (!out.hist_edge.empty()) {
    auto f = open_out(out.hist_edge);
    const auto er = edge_length_ratios(mesh, cfg.refine.target_edge);
    io::write_histogram_csv(f, make_histogram(er, 0.0, out.hist_max, static_cast<std::size_t>(out.bins)),
                            {comments[0], comments[1], "L/h0, h0 " + io::format_double(cfg.refine.target_edge)});
  }
  if (!out.trace.empty()) {
    auto f = open_out(out.trace);
    for (const auto& c : comments) f << "# " << c << '\n';
    f << "step,temperature,energy,accept_rate\n";
    if (rep.anneal)
      for (const auto& t : rep.anneal->trace)
        f << t.step << ',' << io::format_double(t.temperature) << ',' << io::format_double(t.energy)
          << ',' << io::format_double(t.accept_rate) << '\n';
  }
  return valid.ok() ? 0 : 3;
}

struct SolveOptions {
  std::vector<std::string> bc_planes;
  std::optional<std::string> bc_rest;
  std::string plane_edges = "rest";
  std::string oracle = "none";
  std::string charge = "0,0,2pi";
  std::string out;
  std::string vtk;
  // diffusion
  std::string init = "polynomial";
  double D = 1.0;
  double beta = 1.0;
  double dt = 0.01;
  std::string t_end = "0.19";
  // pnp
  double D_plus = 0.05, D_minus = 0.05;
  std::optional<double> k_plus, k_minus;
  double z = 1.0, e_charge = 1.0, eps = 1.0;
  std::string init_density = "0";
  bool literal = false;
};

Mesh load_or_build(const MeshOptions& m, std::optional<Domain>& domain) {
  if (!m.mesh_in.empty()) return io::read_mesh_file(m.mesh_in);
  domain.emplace(m.domain_spec());
  return run_pipeline(*domain, m.pipeline());
}

pde::ForcedValues bc_from_options(const Mesh& mesh, const SolveOptions& s) {
  pde::ForcedValues bc;
  const bool edges = s.plane_edges == "plane";
  for (const auto& text : s.bc_planes) {
    const auto p = parse_plane(text);
    for (const auto& [n, v] : pde::plane_values(mesh, p.axis, p.coordinate, p.value, edges)) {
      const auto it = bc.find(n);
      if (it != bc.end() && it->second != v)
        throw ConfigError("--bc-plane: node " + std::to_string(n) + " lies on two planes with different values");
      bc[n] = v;
    }
  }
  if (s.bc_rest) pde::fill_boundary(bc, mesh, parse_scalar(*s.bc_rest, "--bc-rest"));
  return bc;
}

std::vector<std::string> solve_comments(const std::string& problem, const MeshOptions& m) {
  auto c = header_comments("solve " + problem, m.seed);
  if (!m.mesh_in.empty()) c.push_back("mesh " + m.mesh_in);
  return c;
}

void report_difference(const oracles::DifferenceSummary& s, std::size_t count) {
  std::printf("oracle nodes: %zu\nrelative difference mean: %.6g\nrelative difference std: %.6g\n",
              count, s.mean, s.std);
}

int run_laplace(const MeshOptions& mo, const SolveOptions& so) {
  std::optional<Domain> domain;
  const Mesh mesh = load_or_build(mo, domain);
  pde::ForcedValues bc;
  Point3 charge = Point3::Zero();
  if (so.oracle == "point-charge") {
    charge = parse_point(so.charge, "--charge");
    Point3 lo = Point3::Constant(1e300), hi = Point3::Constant(-1e300);
    for (const auto& n : mesh.nodes()) {
      lo = lo.cwiseMin(n.position);
      hi = hi.cwiseMax(n.position);
    }
    if ((charge.array() >= lo.array()).all() && (charge.array() <= hi.array()).all())
      throw ConfigError("--charge must lie outside the mesh bounding box");
    bc = pde::boundary_values(mesh, [&](const Point3& p) { return oracles::point_charge_oracle(p, charge); });
  } else {
    bc = bc_from_options(mesh, so);
  }
  const auto phi = pde::solve_laplace(mesh, bc);
  std::printf("# tetrodiff solve laplace seed=%llu\n", static_cast<unsigned long long>(mo.seed));
  std::printf("nodes: %zu\nelements: %zu\nforced nodes: %zu\n", mesh.node_count(), mesh.element_count(), bc.size());
  std::printf("phi min: %.10g\nphi max: %.10g\n", phi.minCoeff(), phi.maxCoeff());

  std::vector<io::PointField> fields{{"phi", {phi.data(), phi.data() + phi.size()}}};
  if (so.oracle != "none") {
    std::vector<double> ana(mesh.node_count());
    double phi0 = 0.0;
    if (so.oracle == "cube-series")
      for (const auto& text : so.bc_planes) phi0 = std::max(phi0, parse_plane(text).value);
    for (NodeId n = 0; n < mesh.node_count(); ++n) {
      const Point3& p = mesh.node(n).position;
      ana[n] = so.oracle == "cube-series" ? oracles::laplace_cube_oracle(p, phi0)
                                          : oracles::point_charge_oracle(p, charge);
    }
    std::vector<double> num(fields[0].values);
    const auto s = oracles::relative_difference(num, ana);
    report_difference(s, num.size());
    if (so.oracle == "point-charge") {
      std::size_t inner = 0, within = 0;
      for (NodeId n = 0; n < mesh.node_count(); ++n) {
        if (mesh.node(n).is_outer()) continue;
        ++inner;
        if (std::abs(num[n] - ana[n]) <= 0.05 * std::abs(ana[n])) ++within;
      }
      std::printf("interior nodes within 5%%: %zu of %zu\n", within, inner);
    }
    fields.push_back({"oracle", ana});
    fields.push_back({"relative_difference", s.values});
  }
  if (!so.out.empty()) {
    auto f = open_out(so.out);
    io::write_nodal_csv(f, mesh, fields, solve_comments("laplace", mo));
  }
  if (!so.vtk.empty()) io::write_vtk_file(so.vtk, mesh, "tetrodiff laplace", fields);
  return 0;
}

int run_diffusion(const MeshOptions& mo, const SolveOptions& so) {
  std::optional<Domain> domain;
  const Mesh mesh = load_or_build(mo, domain);
  const double t_end = parse_scalar(so.t_end, "--t");
  const int steps = static_cast<int>(std::lround(t_end / so.dt));
  if (steps < 1 || std::abs(steps * so.dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw ConfigError("--t must be a positive multiple of --dt");
  const pde::TimeScheme scheme{so.dt, so.beta, steps};
  scheme.validate();

  pde::Vector g(static_cast<Eigen::Index>(mesh.node_count()));
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    const Point3& p = mesh.node(n).position;
    if (so.init == "polynomial")
      g[n] = p.x() * (kPi - p.x()) * p.y() * (kPi - p.y()) * p.z() * (kPi - p.z());
    else if (so.init == "fundamental")
      g[n] = std::sin(p.x()) * std::sin(p.y()) * std::sin(p.z());
    else if (so.init == "constant")
      g[n] = 1.0;
    else
      g[n] = std::abs((std::hypot(p.x(), p.y()) - parse_scalar(mo.radius, "--radius")) * p.z() * (p.z() - kPi));
  }
  pde::ForcedValues bc = bc_from_options(mesh, so);
  if (!so.bc_rest && so.bc_planes.empty()) pde::fill_boundary(bc, mesh, 0.0);
  const auto traj = pde::solve_diffusion(g, mesh, so.D, scheme, bc, {steps});
  const pde::Vector& u = traj.back().values;
  std::printf("# tetrodiff solve diffusion seed=%llu\n", static_cast<unsigned long long>(mo.seed));
  std::printf("nodes: %zu\nsteps: %d\ntime: %.10g\nu max: %.10g\n", mesh.node_count(), steps,
              traj.back().time, u.maxCoeff());

  std::vector<io::PointField> fields{{"u", {u.data(), u.data() + u.size()}}};
  if (so.oracle != "none") {
    std::vector<double> ana(mesh.node_count());
    for (NodeId n = 0; n < mesh.node_count(); ++n) {
      const Point3& p = mesh.node(n).position;
      if (so.oracle == "cube-polynomial")
        ana[n] = oracles::diffusion_cube_polynomial_oracle(p, t_end, so.D);
      else if (so.oracle == "cube-constant")
        ana[n] = oracles::diffusion_cube_oracle(p, t_end, 1.0, so.D);
      else
        ana[n] = g[n] * std::pow(1.0 + 3.0 * so.D * so.dt, -steps);
    }
    const auto s = oracles::relative_difference(fields[0].values, ana);
    report_difference(s, ana.size());
    fields.push_back({"oracle", ana});
    fields.push_back({"relative_difference", s.values});
  }
  if (!so.out.empty()) {
    auto f = open_out(so.out);
    io::write_nodal_csv(f, mesh, fields, solve_comments("diffusion", mo));
    // Mid-plane profile: nodes on z = (zmin + zmax) / 2.
    double zmin = 1e300, zmax = -1e300;
    for (const auto& n : mesh.nodes()) {
      zmin = std::min(zmin, n.position.z());
      zmax = std::max(zmax, n.position.z());
    }
    const double zmid = 0.5 * (zmin + zmax);
    Mesh plane;
    std::vector<io::PointField> pf(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) pf[i].name = fields[i].name;
    for (NodeId n = 0; n < mesh.node_count(); ++n) {
      if (std::abs(mesh.node(n).position.z() - zmid) > mesh.surface_tolerance()) continue;
      plane.add_node(mesh.node(n));
      for (std::size_t i = 0; i < fields.size(); ++i) pf[i].values.push_back(fields[i].values[n]);
    }
    auto mid = open_out(so.out + ".midplane.csv");
    auto c = solve_comments("diffusion", mo);
    c.push_back("nodes on z = " + io::format_double(zmid));
    io::write_nodal_csv(mid, plane, pf, c);
  }
  if (!so.vtk.empty()) io::write_vtk_file(so.vtk, mesh, "tetrodiff diffusion", fields);
  return 0;
}

int run_pnp(const MeshOptions& mo, const SolveOptions& so) {
  std::optional<Domain> domain;
  const Mesh mesh = load_or_build(mo, domain);
  const double t_end = parse_scalar(so.t_end, "--tend");
  const int steps = static_cast<int>(std::lround(t_end / so.dt));
  if (steps < 1 || std::abs(steps * so.dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw ConfigError("--tend must be a positive multiple of --dt");
  const pde::PhysicalParams params{so.D_plus, so.D_minus, so.k_plus.value_or(so.D_plus),
                                   so.k_minus.value_or(so.D_minus), so.z, so.e_charge, so.eps};
  pde::PnpBoundary bc;
  bc.n_plus = bc_from_options(mesh, so);
  bc.n_minus = bc.phi = bc.n_plus;
  const pde::PnpProblem problem(mesh, params, {so.dt, so.beta, steps}, bc);
  const pde::Vector init = pde::Vector::Constant(static_cast<Eigen::Index>(mesh.node_count()),
                                                 parse_scalar(so.init_density, "--init-density"));
  pde::NewtonOptions nopts;
  nopts.literal_jacobian = so.literal;
  const auto traj = pde::solve_electrodiffusion(problem.initial_state(init, init), problem, nopts);

  std::printf("# tetrodiff solve pnp seed=%llu\n", static_cast<unsigned long long>(mo.seed));
  std::printf("nodes: %zu\nsteps: %d\n", mesh.node_count(), steps);
  std::ostringstream steps_csv;
  steps_csv << "step,time,newton_iterations,residual,max_abs_dn_plus,max_abs_n_plus_minus_n_minus\n";
  double neutral = 0.0;
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const auto& s = traj.states[i];
    const double dn = (s.n_plus - traj.states[i - 1].n_plus).lpNorm<Eigen::Infinity>();
    const double nn = (s.n_plus - s.n_minus).lpNorm<Eigen::Infinity>();
    neutral = std::max(neutral, nn);
    steps_csv << s.step_index << ',' << io::format_double(s.time) << ',' << traj.newton[i - 1].iterations
              << ',' << io::format_double(traj.newton[i - 1].residual_trace.back()) << ','
              << io::format_double(dn) << ',' << io::format_double(nn) << '\n';
  }
  std::printf("max |n+ - n-|: %.6g\n", neutral);
  const auto& last = traj.states.back();
  const auto flux = problem.flux(last, pde::Species::Plus);
  double jz = 0.0, jxy = 0.0;
  double zmin = 1e300, zmax = -1e300;
  for (const auto& n : mesh.nodes()) {
    zmin = std::min(zmin, n.position.z());
    zmax = std::max(zmax, n.position.z());
  }
  const double zmid = 0.5 * (zmin + zmax);
  const double h0 = parse_scalar(mo.h0, "--h0");
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const auto p = mesh.points(e);
    const Point3 c = 0.25 * (p[0] + p[1] + p[2] + p[3]);
    if (std::abs(c.z() - zmid) > h0 / 2) continue;
    jz = std::max(jz, std::abs(flux.j[e].z()));
    jxy = std::max({jxy, std::abs(flux.j[e].x()), std::abs(flux.j[e].y())});
  }
  std::printf("mid-plane max |jz|: %.6g\nmid-plane max |jx|,|jy|: %.6g\n", jz, jxy);

  if (!so.out.empty()) {
    const auto comments = solve_comments("pnp", mo);
    auto f = open_out(so.out);
    io::write_nodal_csv(f, mesh,
                        {{"n_plus", {last.n_plus.data(), last.n_plus.data() + last.n_plus.size()}},
                         {"n_minus", {last.n_minus.data(), last.n_minus.data() + last.n_minus.size()}},
                         {"phi", {last.phi.data(), last.phi.data() + last.phi.size()}}},
                        comments);
    auto st = open_out(so.out + ".steps.csv");
    for (const auto& c : comments) st << "# " << c << '\n';
    st << steps_csv.str();
    auto fl = open_out(so.out + ".flux.csv");
    io::write_flux_csv(fl, mesh, flux.j, comments);
  }
  if (!so.vtk.empty())
    io::write_vtk_file(so.vtk, mesh, "tetrodiff pnp",
                       {{"n_plus", {last.n_plus.data(), last.n_plus.data() + last.n_plus.size()}},
                        {"phi", {last.phi.data(), last.phi.data() + last.phi.size()}}},
                       {{"flux_plus", flux.j}});
  return 0;
}

/// Turns "key = value" lines of a config file into "--key=value" arguments after checking
/// every key against the options of `app`.
std::vector<std::string> config_arguments(const std::string& path, CLI::App* app) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::vector<std::string> args;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "config" || !app->get_option_no_throw("--" + key))
      throw ConfigError(where + "unknown key '" + key + "'");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tetrahedral meshing and finite element electrodiffusion"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  MeshOptions mesh_opts;
  MeshOutputs mesh_out;
  std::string config;
  auto* mesh_cmd = app.add_subcommand("mesh", "build, refine and optionally optimize a mesh");
  mesh_opts.add_to(mesh_cmd, false);
  mesh_cmd->add_option("--out", mesh_out.out, "TETMESH output path");
  mesh_cmd->add_option("--vtk", mesh_out.vtk, "VTK legacy output path");
  mesh_cmd->add_option("--hist-volume", mesh_out.hist_volume, "V/V0 histogram CSV");
  mesh_cmd->add_option("--hist-edge", mesh_out.hist_edge, "L/h0 histogram CSV");
  mesh_cmd->add_option("--trace", mesh_out.trace, "annealing trace CSV");
  mesh_cmd->add_option("--bins", mesh_out.bins, "histogram bins")->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--hist-max", mesh_out.hist_max, "histogram upper end");
  mesh_cmd->add_option("--config", config, "key = value file; command-line flags win");

  SolveOptions solve_opts;
  MeshOptions solve_mesh;
  auto* solve_cmd = app.add_subcommand("solve", "solve a PDE on a mesh");
  solve_cmd->require_subcommand(1);
  std::vector<CLI::App*> problems;
  for (const char* name : {"laplace", "diffusion", "pnp"}) {
    auto* p = solve_cmd->add_subcommand(name);
    problems.push_back(p);
    solve_mesh.add_to(p, true);
    p->add_option("--bc-plane", solve_opts.bc_planes, "forced value on a plane: x=pi:1")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    p->add_option("--bc-rest", solve_opts.bc_rest, "forced value on every other boundary node");
    p->add_option("--plane-edges", solve_opts.plane_edges,
                  "nodes on a plane's edges take the plane value (plane) or the rest value (rest)")
        ->check(CLI::IsMember({"plane", "rest"}));
    p->add_option("--out", solve_opts.out, "nodal CSV output path");
    p->add_option("--vtk", solve_opts.vtk, "VTK legacy output path");
    p->add_option("--config", config, "key = value file; command-line flags win");
  }
  problems[0]->add_option("--oracle", solve_opts.oracle, "none, cube-series or point-charge")
      ->check(CLI::IsMember({"none", "cube-series", "point-charge"}));
  problems[0]->add_option("--charge", solve_opts.charge, "point charge location x,y,z");
  problems[1]->add_option("--oracle", solve_opts.oracle, "none, cube-polynomial, cube-constant or eigenmode")
      ->check(CLI::IsMember({"none", "cube-polynomial", "cube-constant", "eigenmode"}));
  problems[1]->add_option("--init", solve_opts.init, "polynomial, fundamental, constant or cylinder-abs")
      ->check(CLI::IsMember({"polynomial", "fundamental", "constant", "cylinder-abs"}));
  problems[1]->add_option("--D", solve_opts.D, "diffusion coefficient");
  problems[1]->add_option("--beta", solve_opts.beta, "time weighting, 1 = backward Euler");
  problems[1]->add_option("--dt", solve_opts.dt, "time step");
  problems[1]->add_option("--t", solve_opts.t_end, "final time");
  problems[2]->add_option("--D", solve_opts.D_plus, "diffusion coefficient of both species")
      ->each([&](const std::string& v) { solve_opts.D_minus = std::stod(v); });
  problems[2]->add_option("--k", solve_opts.k_plus, "drift multiplier of both species")
      ->each([&](const std::string& v) { solve_opts.k_minus = std::stod(v); });
  problems[2]->add_option("--D-minus", solve_opts.D_minus, "anion diffusion coefficient");
  problems[2]->add_option("--k-minus", solve_opts.k_minus, "anion drift multiplier");
  problems[2]->add_option("--z", solve_opts.z, "valence magnitude");
  problems[2]->add_option("--e", solve_opts.e_charge, "elementary charge");
  problems[2]->add_option("--eps", solve_opts.eps, "permittivity");
  problems[2]->add_option("--beta", solve_opts.beta, "time weighting, 1 = backward Euler");
  problems[2]->add_option("--dt", solve_opts.dt, "time step");
  problems[2]->add_option("--tend", solve_opts.t_end, "final time");
  problems[2]->add_option("--init-density", solve_opts.init_density, "initial interior density guess");
  problems[2]->add_flag("--literal-jacobian", solve_opts.literal, "use the per-species Jacobian");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // Expand --config before parsing so later command-line flags override file values.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t consumed = 0;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        consumed = 2;
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        consumed = 1;
      }
      if (!consumed) continue;
      CLI::App* target = nullptr;
      for (const auto& a : args) {
        if (a == "mesh") target = mesh_cmd;
        for (auto* p : problems)
          if (a == p->get_name() && target != mesh_cmd) target = p;
      }
      if (!target) throw ConfigError("--config needs a subcommand");
      auto extra = config_arguments(path, target);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), extra.begin(), extra.end());
      break;
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (*mesh_cmd) return run_mesh(mesh_opts, mesh_out);
    if (*problems[0]) return run_laplace(solve_mesh, solve_opts);
    if (*problems[1]) return run_diffusion(solve_mesh, solve_opts);
    return run_pnp(solve_mesh, solve_opts);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
