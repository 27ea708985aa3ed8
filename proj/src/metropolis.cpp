#include "tetrodiff/metropolis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tetrodiff/error.hpp"
#include "tetrodiff/mesh_builder.hpp"

namespace tetrodiff::metropolis {

MetropolisConfig MetropolisConfig::from_edge(double h0) {
  MetropolisConfig c;
  c.target_edge = h0;
  c.target_volume = target_volume_for_edge(h0);
  return c;
}

void MetropolisConfig::validate() const {
  if (!random_shift && !(shift_strength > 0.0 && shift_strength <= 1.0))
    throw ConfigError("shift strength k_s must lie in (0, 1]");
  if (!(cooling > 0.0 && cooling < 1.0)) throw ConfigError("cooling factor eta must lie in (0, 1)");
  if (!(target_edge > 0.0) || !(target_volume > 0.0))
    throw ConfigError("target edge and volume must be positive");
  if (initial_temperature && !(*initial_temperature > 0.0))
    throw ConfigError("initial temperature must be positive");
  if (local_sweeps < 0 || global_steps < 0) throw ConfigError("sweep counts must be >= 0");
}

double total_energy(const Mesh& mesh, double target_volume) {
  double e = 0.0;
  for (const auto& el : mesh.elements()) {
    const double d = el.volume - target_volume;
    e += d * d;
  }
  return e;
}

double local_energy(const Mesh& mesh, NodeId node, double target_volume) {
  double e = 0.0;
  for (ElemId id : mesh.elements_of_node(node)) {
    const double d = mesh.element(id).volume - target_volume;
    e += d * d;
  }
  return e;
}

Point3 propose_shift(const Mesh& mesh, NodeId node, const MetropolisConfig& cfg, Rng& rng) {
  const Point3& p = mesh.node(node).position;
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
  for (NodeId j : mesh.neighbors(node)) {
    const Eigen::Vector3d d = p - mesh.node(j).position;
    const double len = d.norm();
    if (len == 0.0) continue;
    residual += (len - cfg.target_edge) * d / len;
  }
  const double ks = cfg.random_shift ? rng.uniform() : cfg.shift_strength;
  return p - ks * residual;
}

bool accept(double delta_energy, double temperature, Rng& rng) {
  if (delta_energy <= 0.0) return true;
  const double p = std::exp(-delta_energy / temperature);
  return p > rng.uniform();
}

namespace {

enum class Move { Skip, Inverts, Valid };

/// Proposal for node `n` and its energy change; trial volumes land in `trial`.
Move evaluate_move(const Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg, NodeId n,
                   Rng& rng, Point3& p_new, double& delta) {
  const SurfaceMask mask = mesh.node(n).surfaces;
  if (domain.is_frozen(mask)) return Move::Skip;
  p_new = propose_shift(mesh, n, cfg, rng);
  if (mask) p_new = domain.project(p_new, mask);
  if (!p_new.allFinite() || p_new == mesh.node(n).position) return Move::Skip;
  const double v0 = cfg.target_volume;
  const double floor = mesh.degenerate_tolerance();
  delta = 0.0;
  for (ElemId e : mesh.elements_of_node(n)) {
    const double v = tet_volume(mesh.points_with(e, n, p_new));
    if (!(v > floor)) return Move::Inverts;
    const double old_d = mesh.element(e).volume - v0;
    const double new_d = v - v0;
    delta += new_d * new_d - old_d * old_d;
  }
  return Move::Valid;
}

}  // namespace

double estimate_temperature(const Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                            Rng& rng) {
  std::vector<double> changes;
  Point3 p;
  double delta = 0.0;
  for (NodeId n = 0; n < mesh.node_count(); ++n)
    if (evaluate_move(mesh, domain, cfg, n, rng, p, delta) == Move::Valid && delta != 0.0)
      changes.push_back(std::abs(delta));
  if (changes.empty()) return 0.0;
  const auto mid = changes.begin() + static_cast<std::ptrdiff_t>(changes.size() / 2);
  std::nth_element(changes.begin(), mid, changes.end());
  return *mid;
}

EnergyReport local_sweep(Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                         double temperature, Rng& rng) {
  EnergyReport report;
  std::vector<NodeId> order(mesh.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  if (cfg.random_order) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next() % i)]);
  }
  Point3 p_new;
  double delta = 0.0;
  for (NodeId n : order) {
    switch (evaluate_move(mesh, domain, cfg, n, rng, p_new, delta)) {
      case Move::Skip:
        break;
      case Move::Inverts:
        ++report.inversions_blocked;
        ++report.rejected;
        break;
      case Move::Valid:
        if (accept(delta, temperature, rng)) {
          mesh.move_node(n, p_new);
          ++report.accepted;
        } else {
          ++report.rejected;
        }
        break;
    }
  }
  report.total_energy = total_energy(mesh, cfg.target_volume);
  report.sweep_energies.push_back(report.total_energy);
  return report;
}

EnergyReport global_anneal(Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                           Rng& rng,
                           const std::function<void(const Mesh&, const TracePoint&)>& observer) {
  cfg.validate();
  const double v0 = cfg.target_volume;
  EnergyReport report;
  report.initial_energy = total_energy(mesh, v0);
  report.total_energy = report.initial_energy;
  if (cfg.global_steps == 0) return report;

  double temperature = cfg.initial_temperature ? *cfg.initial_temperature
                                               : estimate_temperature(mesh, domain, cfg, rng);
  if (!(temperature > 0.0)) temperature = std::numeric_limits<double>::min();

  std::vector<Point3> current = mesh.positions();
  std::vector<Point3> best = current;
  double e_current = report.initial_energy;
  double e_best = e_current;

  for (int step = 0; step < cfg.global_steps; ++step) {
    std::size_t acc = 0, rej = 0;
    for (int s = 0; s < cfg.local_sweeps; ++s) {
      const auto sweep = local_sweep(mesh, domain, cfg, temperature, rng);
      acc += sweep.accepted;
      rej += sweep.rejected;
      report.inversions_blocked += sweep.inversions_blocked;
      report.sweep_energies.push_back(sweep.total_energy);
    }
    report.accepted += acc;
    report.rejected += rej;
    const double e_new = total_energy(mesh, v0);
    if (accept(e_new - e_current, temperature, rng)) {
      current = mesh.positions();
      e_current = e_new;
    } else {
      mesh.set_positions(current);
    }
    if (e_current < e_best) {
      best = current;
      e_best = e_current;
    }
    const double rate = acc + rej ? static_cast<double>(acc) / static_cast<double>(acc + rej) : 0.0;
    report.trace.push_back({step, temperature, e_current, rate});
    if (observer) observer(mesh, report.trace.back());
    temperature *= cfg.cooling;
  }
  mesh.set_positions(best);
  report.total_energy = e_best;
  return report;
}

}  // namespace tetrodiff::metropolis
