#pragma once

/// @file io.hpp
/// JSON scenarios and models, CSV records.
///
/// Scenario layout (schema_version 1):
///   {"schema_version": 1, "name": str,
///    "model": {"d": int, "S": [[...]] or flat row-major, "Sigma": [[...]] or flat},
///    "init": {"type": "coherent", "W": "hat" | {"re": [[...]], "im": [[...]]},
///             "xi": [...], "pi": [...]}
///          | {"type": "mixture", "components": [{"weight": w, "W": ..., "xi", "pi"}]}
///          | {"type": "superposition", "components": [{"amplitude": [re, im], ...}]},
///    "n_steps": int, "n_trajectories": int, "seed": int,
///    "grid": {"x_min", "x_max", "n_points"}   (optional; oracle only),
///    "outputs": {"dir": str}}

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtrack/estimator.hpp"
#include "qtrack/grid_oracle.hpp"
#include "qtrack/trajectory.hpp"

namespace qtrack {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed input. path() is the JSON field path (e.g. "init.components[1].xi")
/// or the file name.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

ModelSpec model_from_json(const json& j, const std::string& path = "model");
json model_to_json(const ModelSpec& model);

struct InitConfig {
  enum class Kind { Coherent, Mixture, Superposition };
  Kind kind = Kind::Coherent;
  /// Weights (mixture) or |amplitude|² (superposition), and the states.
  std::vector<double> weights;
  std::vector<Complex> amplitudes;
  std::vector<CoherentState> states;

  /// Mixture view (coherent or mixture only).
  InitialStateSpec as_mixture() const;
  /// Pure-state view (coherent or superposition only).
  Superposition as_superposition() const;
};

/// "W": "hat" resolves to @p w_hat.
InitConfig init_from_json(const json& j, const SqueezingMatrix& w_hat, int d,
                          const std::string& path = "init");

struct Scenario {
  std::string name;
  ModelSpec model;
  InitConfig init;
  int n_steps = 0;
  int n_trajectories = 0;
  std::uint64_t seed = 0;
  std::optional<GridSpec> grid;
  std::string out_dir = ".";

  StableSqueezing w_hat;
  FilterMatrices fm;
  AssumptionReport assumptions;
};

/// Parses, validates, solves for Ŵ and checks AW/AS/AM. Schema problems
/// raise ConfigError with the field path; a failed assumption raises
/// AssumptionError whose which() is "AW", "AS" or "AM".
Scenario parse_scenario(const json& j);
Scenario load_scenario(const std::string& path);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

json squeezing_to_json(const StableSqueezing& w, const ModelSpec& model);
json assumptions_to_json(const AssumptionReport& report);
json complex_matrix_to_json(const CMat& m);

/// 17 significant digits.
std::string format_double(double x);

/// traj_id, step, q_1..q_d, xi_1..xi_d, pi_1..pi_d, eta_1..eta_d.
void write_trajectories_csv(std::ostream& os, const std::vector<TrajectorySample>& samples, int d);
/// traj_id, step, q_1..q_d.
void write_records_csv(std::ostream& os, const std::vector<MeasurementRecord>& records, int d);
/// Reads traj_id, step and the q_* columns of either format, grouping rows by
/// traj_id in order of first appearance. Steps must be 0, 1, … per trajectory.
std::vector<MeasurementRecord> read_records_csv(std::istream& is, const std::string& name = "csv");

}  // namespace qtrack
