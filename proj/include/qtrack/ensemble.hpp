#pragma once

/// @file ensemble.hpp
/// Ensembles of independent trajectories. Every trajectory draws from its own
/// stream stream_rng(seed, index), so the serial reference loop and the
/// OpenMP kernel produce identical results, stored by index.

#include <exception>
#include <vector>

#include "qtrack/grid_oracle.hpp"
#include "qtrack/trajectory.hpp"

namespace qtrack {

enum class Backend { Serial, Parallel };

struct EnsembleOptions {
  int n_trajectories = 1000;
  int n_steps = 10;
  std::uint64_t seed = 1;
  Backend backend = Backend::Parallel;
};

/// Calls fn(i) for i in [0, n). The first exception (lowest index) is
/// rethrown after the loop.
template <class Fn>
void for_each_index(int n, Backend backend, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n > 0 ? n : 0);
  if (backend == Backend::Serial) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<TrajectorySample> simulate_ensemble(const Process& process,
                                                const InitialStateSpec& init,
                                                const EnsembleOptions& options);

/// Oracle trajectories from the same grid state. Each thread builds its own
/// GridPropagator.
std::vector<OracleTrajectory> oracle_ensemble(const GridState& init, const ModelSpec& model,
                                              const EnsembleOptions& options,
                                              const OracleOptions& oracle = {});

/// Number of threads the parallel backend will use.
int parallel_threads();

}  // namespace qtrack
