#pragma once

/// @file examples.hpp
/// The three quasi-free examples (free particle, quarter-period harmonic
/// oscillator, charged particle in a magnetic field) and their end-to-end
/// pipeline: solve → check → simulate → estimate, plus the grid-oracle
/// comparison for the one-dimensional cases.

#include <string>

#include "qtrack/ensemble.hpp"
#include "qtrack/io.hpp"
#include "qtrack/stats.hpp"

namespace qtrack {

enum class Example { Free, HarmonicOscillator, Magnetic };

/// "free", "ho" or "magnetic".
Example parse_example(const std::string& name);
std::string example_name(Example e);

/// Free particle M = 1, λ = 1; oscillator ω = π/2, λ⁻² = 2; magnetic field
/// β = 0.7, Mβ = 1, λ = 1.
ModelSpec example_model(Example e);
/// Coherent initial state used by the pipeline (not aligned with Ŵ).
CoherentState example_initial_state(Example e);
/// Ready-to-run scenario (same content as the bundled JSON files).
json example_scenario_json(Example e);

struct ExampleOptions {
  int n_trajectories = 4000;
  int n_steps = 5;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  /// Record length for the estimator stage (magnetic uses twice this).
  int estimate_steps = 60;
  int estimate_trajectories = 300;
  Backend backend = Backend::Parallel;
  bool oracle = true;
};

ComparisonReport run_example(Example e, const ExampleOptions& options = {});

/// Individual pipeline stages, shared with the CLI.
ComparisonReport solve_checks(Example e, const ModelSpec& model, const StableSqueezing& w);
ComparisonReport structure_checks(Example e, const ModelSpec& model, const StableSqueezing& w,
                                  const FilterMatrices& fm);
/// E[Q_k] = position part of S^k ρ-mean, and η covariance.
ComparisonReport simulation_checks(const Process& process, const InitialStateSpec& init,
                                   const std::vector<TrajectorySample>& samples);
/// ‖ζ̂ − ζ_0‖ ≤ tail bound on every record, residual mean and covariance.
ComparisonReport estimator_checks(const Process& process,
                                  const std::vector<TrajectorySample>& samples, double tol,
                                  int shifts);
/// Joint law of (q_0, …, q_{n−1}) from two sets of records.
ComparisonReport record_law_checks(const std::vector<MeasurementRecord>& a,
                                   const std::vector<MeasurementRecord>& b,
                                   const std::string& label);

/// Stack records as rows (q_0, …, q_{n−1}) flattened; all must share a length.
Mat stack_records(const std::vector<MeasurementRecord>& records);

}  // namespace qtrack
