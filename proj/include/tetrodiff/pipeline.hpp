#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "tetrodiff/delaunay.hpp"
#include "tetrodiff/domain.hpp"
#include "tetrodiff/mesh.hpp"
#include "tetrodiff/mesh_builder.hpp"
#include "tetrodiff/metropolis.hpp"

namespace tetrodiff {

struct PipelineConfig {
  RefineConfig refine;
  bool optimize = false;
  metropolis::MetropolisConfig metropolis;
  bool improve = false;
  delaunay::ImproveConfig flips;
  std::uint64_t seed = 1;
  /// Independent annealing runs with seeds seed, seed + 1, ...; the lowest final energy
  /// wins (ties: lowest seed).
  int starts = 1;

  /// Refinement and annealing targets from h0; sliver threshold V_crit.
  static PipelineConfig from_edge(double h0);
};

struct PipelineReport {
  RefineStats refine;
  /// Total energy after refinement, before any node movement.
  double energy_refined = 0.0;
  std::optional<metropolis::EnergyReport> anneal;
  /// Seed of the kept annealing run.
  std::uint64_t anneal_seed = 0;
  std::optional<delaunay::FlipReport> flips;
  double energy_final = 0.0;
};

struct PipelineObserver {
  std::function<void(const Mesh&)> built;
  std::function<void(const Mesh&, const RefineStep&)> refined;
  std::function<void(const Mesh&, const metropolis::TracePoint&)> annealed;
  std::function<void(const Mesh&, int)> flipped;
};

/// Worker threads: TETRODIFF_THREADS if set to a positive integer, else the hardware
/// concurrency (at least 1).
int thread_count();

/// build -> refine -> (optional) anneal -> (optional) flips and sliver removal.
Mesh run_pipeline(const Domain& domain, const PipelineConfig& cfg, PipelineReport* report = nullptr,
                  const PipelineObserver& observer = {});

}  // namespace tetrodiff
