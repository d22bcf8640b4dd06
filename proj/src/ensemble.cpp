#include "qtrack/ensemble.hpp"

#include <memory>

#include <omp.h>

namespace qtrack {
namespace {

void check(const EnsembleOptions& o) {
  if (o.n_trajectories < 0) throw Error("ensemble: n_trajectories must be non-negative");
  if (o.n_steps < 0) throw Error("ensemble: n_steps must be non-negative");
}

}  // namespace

int parallel_threads() { return omp_get_max_threads(); }

std::vector<TrajectorySample> simulate_ensemble(const Process& process,
                                                const InitialStateSpec& init,
                                                const EnsembleOptions& options) {
  check(options);
  std::vector<TrajectorySample> out(options.n_trajectories);
  for_each_index(options.n_trajectories, options.backend, [&](int i) {
    Rng rng = stream_rng(options.seed, static_cast<std::uint64_t>(i));
    out[i] = simulate(process, init, options.n_steps, rng);
    out[i].record.seed = options.seed;
    out[i].record.traj_id = i;
  });
  return out;
}

std::vector<OracleTrajectory> oracle_ensemble(const GridState& init, const ModelSpec& model,
                                              const EnsembleOptions& options,
                                              const OracleOptions& oracle) {
  check(options);
  const int n = options.n_trajectories;
  std::vector<OracleTrajectory> out(n);
  auto run_one = [&](const GridPropagator& prop, int i) {
    Rng rng = stream_rng(options.seed, static_cast<std::uint64_t>(i));
    out[i] = run_oracle_trajectory(init, model, prop, options.n_steps, rng, oracle);
    out[i].record.seed = options.seed;
    out[i].record.traj_id = i;
  };

  if (options.backend == Backend::Serial) {
    const GridPropagator prop(init.spec(), model.S);
    for_each_index(n, Backend::Serial, [&](int i) { run_one(prop, i); });
    return out;
  }

  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel
  {
    std::unique_ptr<GridPropagator> prop;
    try {
      prop = std::make_unique<GridPropagator>(init.spec(), model.S);
    } catch (...) {
#pragma omp critical
      if (n > 0 && !errors[0]) errors[0] = std::current_exception();
    }
#pragma omp for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      if (!prop) continue;
      try {
        run_one(*prop, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace qtrack
