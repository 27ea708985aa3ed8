#include "tetrodiff/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "tetrodiff/error.hpp"

namespace tetrodiff {

int thread_count() {
  if (const char* env = std::getenv("TETRODIFF_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min(n, 1024L));
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

namespace {

struct AnnealRun {
  Mesh mesh;
  metropolis::EnergyReport report;
};

AnnealRun anneal_from(const Mesh& start, const Domain& domain, metropolis::MetropolisConfig mc,
                      std::uint64_t seed,
                      const std::function<void(const Mesh&, const metropolis::TracePoint&)>& observer) {
  AnnealRun run{start, {}};
  mc.seed = seed;
  Rng rng(seed);
  run.report = metropolis::global_anneal(run.mesh, domain, mc, rng, observer);
  return run;
}

}  // namespace

PipelineConfig PipelineConfig::from_edge(double h0) {
  PipelineConfig c;
  c.refine = RefineConfig::from_edge(h0);
  c.metropolis = metropolis::MetropolisConfig::from_edge(h0);
  c.flips.min_volume = c.refine.critical_volume;
  return c;
}

Mesh run_pipeline(const Domain& domain, const PipelineConfig& cfg, PipelineReport* report,
                  const PipelineObserver& observer) {
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  rep = {};
  Mesh mesh = build_initial_mesh(domain);
  if (observer.built) observer.built(mesh);
  rep.refine = refine_to_target(mesh, cfg.refine, domain, observer.refined);
  rep.energy_refined = metropolis::total_energy(mesh, cfg.refine.target_volume);
  if (cfg.optimize) {
    if (cfg.starts < 1) throw ConfigError("starts must be >= 1");
    const auto n = static_cast<std::size_t>(cfg.starts);
    std::vector<AnnealRun> runs(n);
    if (n == 1) {
      runs[0] = anneal_from(mesh, domain, cfg.metropolis, cfg.seed, observer.annealed);
    } else {
      // Observers are not thread safe; they only see single-start runs.
      std::atomic<std::size_t> next{0};
      const auto work = [&] {
        for (std::size_t i; (i = next++) < n;)
          runs[i] = anneal_from(mesh, domain, cfg.metropolis, cfg.seed + i, {});
      };
      const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(thread_count()));
      std::vector<std::thread> pool;
      for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
      work();
      for (auto& t : pool) t.join();
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (runs[i].report.total_energy < runs[best].report.total_energy) best = i;
    mesh = std::move(runs[best].mesh);
    rep.anneal = std::move(runs[best].report);
    rep.anneal_seed = cfg.seed + best;
  }
  if (cfg.improve) rep.flips = delaunay::improve_pass(mesh, domain, cfg.flips, observer.flipped);
  rep.energy_final = metropolis::total_energy(mesh, cfg.refine.target_volume);
  return mesh;
}

}  // namespace tetrodiff
