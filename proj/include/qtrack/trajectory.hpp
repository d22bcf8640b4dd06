#pragma once

/// @file trajectory.hpp
/// The phase-space process ζ_{k+1} = S(ζ_k − K η_k), q_k = ξ_k + η_k with
/// i.i.d. η_k ~ 𝒩(0, Σ − (2 Im Ŵ)⁻¹), Born-rule initial sampling, the
/// forward / explicit / backward recursions and the master density.

#include <optional>
#include <vector>

#include "qtrack/coherent.hpp"
#include "qtrack/filter.hpp"
#include "qtrack/record.hpp"

namespace qtrack {

/// ρ = Σ_k w_k |W_k, ζ_k⟩⟨W_k, ζ_k|.
class InitialStateSpec {
 public:
  struct Component {
    double weight = 1.0;
    CoherentState state;
  };

  InitialStateSpec() = default;
  static InitialStateSpec Coherent(const CoherentState& state);
  /// Throws on negative weights or zero total; weights are renormalized.
  static InitialStateSpec Mixture(std::vector<Component> components);

  const std::vector<Component>& components() const { return components_; }
  int dim() const { return components_.front().state.dim(); }
  bool is_coherent() const { return components_.size() == 1; }

  /// log ρ(|W, ζ⟩⟨W, ζ|), accumulated with log-sum-exp.
  double log_husimi(const SqueezingMatrix& frame, const PhaseSpacePoint& zeta) const;
  /// (ρ(X), ρ(P)).
  Vec mean() const;

 private:
  std::vector<Component> components_;
};

/// Everything the process needs, computed once per model.
struct Process {
  ModelSpec model;
  StableSqueezing w_hat;
  FilterMatrices fm;
  /// Σ − (2 Im Ŵ)⁻¹ and its lower Cholesky factor.
  Mat noise_cov;
  Mat noise_chol;

  static Process Build(const ModelSpec& model);
  int dim() const { return model.d; }
};

struct TrajectorySample {
  /// ζ_0 … ζ_n.
  std::vector<PhaseSpacePoint> zetas;
  /// η_0 … η_{n−1}.
  std::vector<Vec> etas;
  /// q_0 … q_{n−1}.
  MeasurementRecord record;
  /// Mixture component the initial label was drawn from.
  int component = 0;
};

struct InitialDraw {
  PhaseSpacePoint zeta;
  int component = 0;
};

/// ζ ~ ⟨Ŵ, ζ|ρ|Ŵ, ζ⟩ dλ(ζ).
InitialDraw sample_initial(const InitialStateSpec& init, const StableSqueezing& w_hat, Rng& rng);

/// S(ζ − K η).
PhaseSpacePoint step(const PhaseSpacePoint& z, const Vec& eta, const FilterMatrices& fm,
                     const SymplecticMatrix& s);

/// n_steps outcomes from a fresh initial draw.
TrajectorySample simulate(const Process& process, const InitialStateSpec& init, int n_steps,
                          Rng& rng);
/// n_steps outcomes from a given ζ_0.
TrajectorySample simulate_from(const Process& process, const PhaseSpacePoint& zeta0,
                               int n_steps, Rng& rng);

/// ζ_{k+1} = S(ζ_k − K(q_k − ξ_k)); returns ζ_0 … ζ_n for n outcomes.
std::vector<PhaseSpacePoint> forward_recursion(const PhaseSpacePoint& zeta0,
                                               const MeasurementRecord& record,
                                               const FilterMatrices& fm,
                                               const SymplecticMatrix& s);

/// ζ_k = M^{−k} ζ_0 − Σ_{j<k} M^{−k+j} R q_j.
PhaseSpacePoint explicit_zeta(const PhaseSpacePoint& zeta0, const MeasurementRecord& record,
                              const FilterMatrices& fm, int k);

/// ζ_k = M ζ_{k+1} + R q_k, from ζ_n down to ζ_0.
std::vector<PhaseSpacePoint> backward_recursion(const PhaseSpacePoint& zeta_n,
                                                const MeasurementRecord& record,
                                                const FilterMatrices& fm);

enum class DensityMethod { Exact, GaussHermite, MonteCarlo };

struct MasterDensityOptions {
  DensityMethod method = DensityMethod::Exact;
  /// Gauss–Hermite nodes per phase-space coordinate.
  int gh_nodes = 12;
  int mc_draws = 100000;
  std::uint64_t mc_seed = 7;
};

struct MasterDensity {
  double value = 0.0;
  double log_value = 0.0;
  /// Standard error (Monte Carlo only).
  double std_error = 0.0;
  DensityMethod method = DensityMethod::Exact;
};

/// Density of (q_0, …, q_{n−1}) with respect to Lebesgue measure:
/// ∫ Π_k 𝒩(q_k − ξ_k(ζ), Σ − (2 Im Ŵ)⁻¹) ⟨Ŵ, ζ|ρ|Ŵ, ζ⟩ dλ(ζ). ζ_k(ζ) is
/// affine in ζ, so for coherent mixtures the Exact method evaluates the
/// Gaussian integral in closed form. GaussHermite integrates numerically with
/// tensor nodes placed on the Born-law × likelihood Gaussian of each
/// component; MonteCarlo averages the likelihood over Born-law draws.
MasterDensity master_density(const InitialStateSpec& init, const Process& process,
                             const MeasurementRecord& record,
                             const MasterDensityOptions& options = {});

/// ζ_k = A_k ζ_0 + c_k along the forward recursion for the given record.
struct AffineTrack {
  std::vector<Mat> A;
  std::vector<Vec> c;
};
AffineTrack affine_track(const MeasurementRecord& record, const FilterMatrices& fm,
                         const SymplecticMatrix& s);

}  // namespace qtrack
