#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tetrodiff/error.hpp"
#include "tetrodiff/io.hpp"
#include "tetrodiff/oracles.hpp"
#include "tetrodiff/pde.hpp"
#include "tetrodiff/pipeline.hpp"
#include "tetrodiff/quality.hpp"

namespace py = pybind11;
using namespace tetrodiff;

namespace {

using RowMatrix3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowIndex4 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 4, Eigen::RowMajor>;

RowMatrix3 positions(const Mesh& m) {
  RowMatrix3 out(static_cast<Eigen::Index>(m.node_count()), 3);
  for (NodeId n = 0; n < m.node_count(); ++n) out.row(n) = m.node(n).position.transpose();
  return out;
}

RowIndex4 elements(const Mesh& m) {
  RowIndex4 out(static_cast<Eigen::Index>(m.element_count()), 4);
  for (ElemId e = 0; e < m.element_count(); ++e)
    for (int k = 0; k < 4; ++k) out(e, k) = m.element(e).nodes[static_cast<std::size_t>(k)];
  return out;
}

py::dict validity(const Mesh& m, const Domain* d) {
  const auto r = m.check_validity(d);
  py::dict out;
  out["ok"] = r.ok();
  out["inverted"] = r.inverted;
  out["bad_cached_volume"] = r.bad_cached_volume;
  out["adjacency_errors"] = r.adjacency_errors;
  out["off_surface_nodes"] = r.off_surface_nodes;
  out["first_problem"] = r.first_problem;
  return out;
}

Domain make_domain(Shape shape, int layers, int ring) {
  return Domain(DomainSpec{std::move(shape), layers, ring});
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

py::dict state_dict(const pde::FieldState& s) {
  py::dict d;
  d["step"] = s.step_index;
  d["time"] = s.time;
  d["n_plus"] = s.n_plus;
  d["n_minus"] = s.n_minus;
  d["phi"] = s.phi;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tetrahedral meshing and finite element electrodiffusion";

  auto base = py::register_exception<Error>(m, "TetrodiffError", PyExc_RuntimeError);
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  py::register_exception<BuildError>(m, "BuildError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<OracleError>(m, "OracleError", base.ptr());

  py::class_<Domain>(m, "Domain")
      .def_property_readonly("shape", &Domain::shape_name)
      .def_property_readonly("exact_volume", &Domain::exact_volume);

  m.def("cube", [](double lo, double hi, int layers, int ring) {
        return make_domain(CubeShape{Point3::Constant(lo), Point3::Constant(hi)}, layers, ring);
      }, py::arg("lo") = 0.0, py::arg("hi") = M_PI, py::arg("layers") = 3, py::arg("ring_nodes") = 4);
  m.def("cylinder", [](double radius, double z_lo, double z_hi, int layers, int ring) {
        return make_domain(CylinderShape{0, 0, radius, z_lo, z_hi}, layers, ring);
      }, py::arg("radius") = 1.0, py::arg("z_lo") = 0.0, py::arg("z_hi") = M_PI,
      py::arg("layers") = 3, py::arg("ring_nodes") = 8);
  m.def("sphere", [](const Point3& c, double radius, int layers, int ring) {
        return make_domain(SphereShape{c, radius}, layers, ring);
      }, py::arg("center") = Point3::Zero(), py::arg("radius") = 1.0, py::arg("layers") = 5,
      py::arg("ring_nodes") = 8);
  m.def("cone", [](double radius, double z_lo, double z_hi, double z_apex, int layers, int ring) {
        return make_domain(ConeShape{0, 0, radius, z_lo, z_hi, z_apex}, layers, ring);
      }, py::arg("radius") = 1.0, py::arg("z_lo") = 0.0, py::arg("z_hi") = 1.0,
      py::arg("z_apex") = 1.0, py::arg("layers") = 4, py::arg("ring_nodes") = 8);

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("node_count", &Mesh::node_count)
      .def_property_readonly("element_count", &Mesh::element_count)
      .def_property_readonly("positions", &positions)
      .def_property_readonly("elements", &elements)
      .def_property_readonly("surfaces", [](const Mesh& mesh) {
        std::vector<SurfaceMask> s;
        for (const auto& n : mesh.nodes()) s.push_back(n.surfaces);
        return s;
      })
      .def_property_readonly("volumes", [](const Mesh& mesh) {
        std::vector<double> v;
        for (const auto& e : mesh.elements()) v.push_back(e.volume);
        return v;
      })
      .def_property_readonly("total_volume", &Mesh::total_volume)
      .def("edges", [](const Mesh& mesh) {
        std::vector<std::pair<NodeId, NodeId>> out;
        for (const auto& e : mesh.edges()) out.emplace_back(e.lo, e.hi);
        return out;
      })
      .def("check_validity", [](const Mesh& mesh, const Domain* d) { return validity(mesh, d); },
           py::arg("domain") = nullptr);

  m.def("build_mesh",
        [](const Domain& domain, double h0, bool optimize, bool delaunay, std::uint64_t seed, int starts,
           int steps, int sweeps, double cooling, double ks, bool random_shift,
           std::optional<double> tmax, double vcrit_factor, std::optional<double> split_factor) {
          auto cfg = PipelineConfig::from_edge(h0);
          cfg.refine.critical_volume = vcrit_factor * cfg.refine.target_volume;
          if (split_factor) cfg.refine.split_volume = *split_factor * cfg.refine.target_volume;
          cfg.flips.min_volume = cfg.refine.critical_volume;
          cfg.optimize = optimize;
          cfg.improve = delaunay;
          cfg.seed = seed;
          cfg.starts = starts;
          auto& mc = cfg.metropolis;
          mc.global_steps = steps;
          mc.local_sweeps = sweeps;
          mc.cooling = cooling;
          mc.shift_strength = ks;
          mc.random_shift = random_shift;
          mc.initial_temperature = tmax;
          mc.seed = seed;
          if (optimize) mc.validate();
          PipelineReport rep;
          Mesh mesh;
          {
            py::gil_scoped_release release;
            mesh = run_pipeline(domain, cfg, &rep);
          }
          py::dict r;
          r["divisions"] = rep.refine.divisions;
          r["energy_refined"] = rep.energy_refined;
          r["energy_final"] = rep.energy_final;
          r["target_volume"] = cfg.refine.target_volume;
          if (rep.anneal) {
            r["anneal_seed"] = rep.anneal_seed;
            r["accepted"] = rep.anneal->accepted;
            r["rejected"] = rep.anneal->rejected;
            std::vector<std::tuple<int, double, double, double>> trace;
            for (const auto& t : rep.anneal->trace)
              trace.emplace_back(t.step, t.temperature, t.energy, t.accept_rate);
            r["trace"] = trace;
          }
          if (rep.flips) {
            r["flips_3to2"] = rep.flips->flips_3to2;
            r["flips_4to4"] = rep.flips->flips_4to4;
            r["slivers_removed"] = rep.flips->slivers_removed;
          }
          return py::make_tuple(std::move(mesh), r);
        },
        py::arg("domain"), py::arg("h0"), py::arg("optimize") = false, py::arg("delaunay") = false,
        py::arg("seed") = 1, py::arg("starts") = 1, py::arg("steps") = 30, py::arg("sweeps") = 2,
        py::arg("cooling") = 0.9, py::arg("ks") = 0.25, py::arg("random_shift") = false,
        py::arg("tmax") = py::none(), py::arg("vcrit_factor") = 0.25,
        py::arg("split_factor") = py::none());

  m.def("target_volume_for_edge", &target_volume_for_edge);
  m.def("read_mesh", &io::read_mesh_file);
  m.def("write_mesh", &io::write_mesh_file, py::arg("path"), py::arg("mesh"),
        py::arg("comments") = std::vector<std::string>{});
  m.def("write_vtk",
        [](const std::string& path, const Mesh& mesh, const std::string& title,
           const std::map<std::string, std::vector<double>>& fields) {
          std::vector<io::PointField> pf;
          for (const auto& [k, v] : fields) pf.push_back({k, v});
          io::write_vtk_file(path, mesh, title, pf);
        },
        py::arg("path"), py::arg("mesh"), py::arg("title") = "tetrodiff",
        py::arg("fields") = std::map<std::string, std::vector<double>>{});

  m.def("volume_ratios", &volume_ratios);
  m.def("edge_length_ratios", &edge_length_ratios);
  m.def("histogram", [](const std::vector<double>& v, double lo, double hi, std::size_t bins) {
    return make_histogram(v, lo, hi, bins).counts;
  });
  m.def("fraction_within", [](const std::vector<double>& v, double lo, double hi) {
    return fraction_within(v, lo, hi);
  });

  m.def("plane_values", &pde::plane_values, py::arg("mesh"), py::arg("axis"), py::arg("coordinate"),
        py::arg("value"), py::arg("include_edges") = true);
  m.def("boundary_values", &pde::boundary_values);
  m.def("fill_boundary", [](pde::ForcedValues bc, const Mesh& mesh, double value) {
    pde::fill_boundary(bc, mesh, value);
    return bc;
  });
  m.def("solve_laplace", &pde::solve_laplace);
  m.def("solve_diffusion",
        [](const Mesh& mesh, const Eigen::VectorXd& g, double D, double dt, double beta, int steps,
           const pde::ForcedValues& bc) {
          const pde::TimeScheme scheme{dt, beta, steps};
          scheme.validate();
          std::vector<std::tuple<int, double, Eigen::VectorXd>> out;
          for (auto& s : pde::solve_diffusion(g, mesh, D, scheme, bc))
            out.emplace_back(s.step, s.time, std::move(s.values));
          return out;
        },
        py::arg("mesh"), py::arg("g"), py::arg("D"), py::arg("dt"), py::arg("beta") = 1.0,
        py::arg("steps") = 1, py::arg("bc") = pde::ForcedValues{});
  m.def("solve_pnp",
        [](const Mesh& mesh, const pde::ForcedValues& bc_n, std::optional<pde::ForcedValues> bc_phi,
           double D_plus, double D_minus, double k_plus, double k_minus, double z, double e_charge,
           double eps, double dt, double beta, int steps, const Eigen::VectorXd& n_plus_init,
           const Eigen::VectorXd& n_minus_init, double tol) {
          const pde::PhysicalParams params{D_plus, D_minus, k_plus, k_minus, z, e_charge, eps};
          const pde::PnpProblem problem(mesh, params, {dt, beta, steps},
                                        {bc_n, bc_n, bc_phi.value_or(bc_n)});
          pde::NewtonOptions opts;
          opts.tol = tol;
          const auto traj = pde::solve_electrodiffusion(
              problem.initial_state(n_plus_init, n_minus_init), problem, opts);
          py::list states;
          for (const auto& s : traj.states) states.append(state_dict(s));
          py::list newton;
          for (const auto& r : traj.newton) newton.append(r.residual_trace);
          const auto flux = problem.flux(traj.states.back(), pde::Species::Plus);
          RowMatrix3 j(static_cast<Eigen::Index>(flux.j.size()), 3);
          for (std::size_t e = 0; e < flux.j.size(); ++e)
            j.row(static_cast<Eigen::Index>(e)) = flux.j[e].transpose();
          py::dict out;
          out["states"] = states;
          out["newton"] = newton;
          out["flux_plus"] = j;
          return out;
        },
        py::arg("mesh"), py::arg("bc_n"), py::arg("bc_phi") = py::none(), py::arg("D_plus") = 1.0,
        py::arg("D_minus") = 1.0, py::arg("k_plus") = 0.0, py::arg("k_minus") = 0.0,
        py::arg("z") = 1.0, py::arg("e_charge") = 1.0, py::arg("eps") = 1.0, py::arg("dt") = 0.01,
        py::arg("beta") = 1.0, py::arg("steps") = 1, py::arg("n_plus_init"),
        py::arg("n_minus_init"), py::arg("tol") = 1e-9);

  m.def("laplace_cube_oracle",
        [](const Point3& p, double phi0) { return oracles::laplace_cube_oracle(p, phi0); });
  m.def("point_charge_oracle", &oracles::point_charge_oracle);
  m.def("diffusion_cube_oracle", [](const Point3& p, double t, double g0, double D) {
    return oracles::diffusion_cube_oracle(p, t, g0, D);
  });
  m.def("diffusion_cube_polynomial_oracle", [](const Point3& p, double t, double D) {
    return oracles::diffusion_cube_polynomial_oracle(p, t, D);
  });
  m.def("bessel_j", &oracles::bessel_j);
  m.def("bessel_zeros", &oracles::bessel_zeros);
  m.def("relative_difference", [](const std::vector<double>& num, const std::vector<double>& ana) {
    const auto s = oracles::relative_difference(num, ana);
    return py::make_tuple(s.values, s.mean, s.std);
  });
}
