#pragma once

/// @file record.hpp
/// Measurement records and per-trajectory random streams.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qtrack/phase_space.hpp"

namespace qtrack {

struct MeasurementRecord {
  std::vector<Vec> outcomes;
  std::uint64_t seed = 0;
  std::uint64_t traj_id = 0;
  std::string model_id;

  int size() const { return static_cast<int>(outcomes.size()); }
  bool empty() const { return outcomes.empty(); }
};

using Rng = std::mt19937_64;

/// Independent, reproducible stream for trajectory @p stream under @p seed:
/// splitmix64 of (seed, stream) seeds a Mersenne twister.
Rng stream_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace qtrack
