#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tetrodiff/domain.hpp"
#include "tetrodiff/mesh.hpp"
#include "tetrodiff/rng.hpp"

namespace tetrodiff::metropolis {

struct MetropolisConfig {
  /// k_s in (0, 1]; ignored when random_shift is set (k_s ~ U(0,1) per proposal).
  double shift_strength = 0.25;
  bool random_shift = false;
  double target_edge = 0.0;    ///< h0
  double target_volume = 0.0;  ///< V0
  /// T_max. Estimated from the proposal energy changes when unset.
  std::optional<double> initial_temperature;
  double cooling = 0.9;  ///< eta, T <- eta T after each global step
  int local_sweeps = 2;
  int global_steps = 30;
  std::uint64_t seed = 1;
  /// Visit nodes in a seeded random permutation instead of ascending index order.
  bool random_order = false;

  /// h0 given; V0 = h0^3 sqrt(2)/12.
  static MetropolisConfig from_edge(double h0);
  /// Throws ConfigError on out-of-range parameters.
  void validate() const;
};

struct TracePoint {
  int step = 0;
  double temperature = 0.0;
  double energy = 0.0;
  double accept_rate = 0.0;
};

struct EnergyReport {
  double initial_energy = 0.0;
  /// Energy of the returned configuration.
  double total_energy = 0.0;
  std::vector<double> sweep_energies;
  std::vector<TracePoint> trace;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// Proposals rejected because an adjacent element would invert.
  std::size_t inversions_blocked = 0;
};

/// E = sum_e (V^e - V0)^2.
double total_energy(const Mesh& mesh, double target_volume);

/// The same sum restricted to elements containing `node`.
double local_energy(const Mesh& mesh, NodeId node, double target_volume);

/// p_new = p_i - k_s sum_j (|p_i - p_j| - h0) (p_i - p_j) / |p_i - p_j| over the edge
/// neighbors j of node i. Coincident neighbors are skipped.
Point3 propose_shift(const Mesh& mesh, NodeId node, const MetropolisConfig& cfg, Rng& rng);

/// Metropolis rule: accepted iff exp(-dE / T) > u, u ~ U(0,1). dE <= 0 always accepts.
bool accept(double delta_energy, double temperature, Rng& rng);

/// Median |dE| of one proposal per movable node, evaluated without moving anything.
/// Consumes random numbers in random-shift mode.
double estimate_temperature(const Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                            Rng& rng);

/// One pass over all movable nodes. Surface nodes are projected back onto their
/// surface; nodes on curves, corners and point features stay fixed. Moves that would
/// make any adjacent element's volume non-positive are rejected outright.
EnergyReport local_sweep(Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                         double temperature, Rng& rng);

/// Global annealing: each step runs local sweeps at the current temperature, then
/// accepts or rejects the whole round with the Metropolis rule on the total energy
/// change, then cools. The mesh is left in the lowest-energy configuration seen. The
/// observer sees the mesh after each round's accept/revert decision.
EnergyReport global_anneal(Mesh& mesh, const Domain& domain, const MetropolisConfig& cfg,
                           Rng& rng,
                           const std::function<void(const Mesh&, const TracePoint&)>& observer = {});

}  // namespace tetrodiff::metropolis
