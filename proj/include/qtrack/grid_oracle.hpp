#pragma once

/// @file grid_oracle.hpp
/// Brute-force d = 1 wavefunction simulation of measure-then-propagate
/// dynamics on a uniform periodic grid. Propagation is exact for any
/// 2×2 symplectic S with S_xp ≠ 0 through
///
///     S = [[1, 0], [a₁, 1]] · [[1, b], [0, 1]] · [[1, 0], [a₂, 1]],
///     b = S_xp, a₂ = (S_xx − 1)/b, a₁ = (S_pp − 1)/b,
///
/// where a lower shear is the chirp exp(i a x²/2) and the upper shear is the
/// momentum-space phase exp(−i b p²/2).

#include <memory>
#include <optional>
#include <vector>

#include "qtrack/coherent.hpp"
#include "qtrack/record.hpp"

namespace qtrack {

struct GridSpec {
  double x_min = -20.0;
  double x_max = 20.0;
  /// Power of two.
  int n_points = 1024;

  double dx() const { return (x_max - x_min) / n_points; }
  double x(int j) const { return x_min + j * dx(); }
  /// Angular wavenumber of FFT bin k (negative for k ≥ n/2).
  double p(int k) const;
  void validate() const;
};

class GridState {
 public:
  GridState() = default;
  GridState(GridSpec spec, CVec amplitudes);

  const GridSpec& spec() const { return spec_; }
  const CVec& amplitudes() const { return psi_; }
  CVec& amplitudes() { return psi_; }
  int size() const { return spec_.n_points; }

  /// Σ |ψ_j|² Δx.
  double norm2() const;
  /// Rescales to unit norm and returns the previous squared norm.
  double normalize();

  /// |ψ|² mass in the outer @p fraction of the box (both ends together).
  double boundary_mass(double fraction = 0.05) const;
  /// Same on the momentum grid.
  double momentum_boundary_mass(double fraction = 0.05) const;

  double position_mean() const;
  double position_variance() const;
  /// Momentum moments from the discrete Fourier transform.
  double momentum_mean() const;
  double momentum_variance() const;

  /// ⟨c|ψ⟩ by the rectangle rule (spectrally accurate for smooth periodic data).
  Complex overlap_with(const CoherentState& c) const;
  double fidelity_with(const CoherentState& c) const;

 private:
  GridSpec spec_;
  CVec psi_;
};

inline constexpr double kBoundaryMassLimit = 1e-8;

/// Samples φ(x|W, ζ) and normalizes. Throws if the box does not cover
/// ±8 position standard deviations around ξ, or if the sampled norm differs
/// from 1 by more than 1e-8 (grid too coarse).
GridState init_coherent_grid(const GridSpec& spec, const CoherentState& state);
GridState init_superposition_grid(const GridSpec& spec, const Superposition& psi);

/// Box and resolution covering ±n_sigmas of the outcome-averaged state over
/// n_steps rounds. Averaging over outcomes leaves the position law unchanged
/// and adds 1/(4Σ) to the momentum variance, so its moments propagate
/// exactly. Superpositions are treated as mixtures of their components.
GridSpec suggest_grid(const ModelSpec& model, const std::vector<double>& weights,
                      const std::vector<CoherentState>& states, int n_steps,
                      double n_sigmas = 10.0);

struct GridMeasurement {
  GridState state;
  /// ‖V_q ψ‖² before renormalization.
  double weight = 0.0;
};

/// V_q(x) = (2πσ²)^{−1/4} exp(−(x − q)²/(4σ²)). Throws when the weight is
/// below 1e-300.
GridMeasurement apply_V_grid(const GridState& gs, double q, double sigma2);

/// FFT-based propagator U_S. Owns its FFTW plans and buffers, so each worker
/// needs its own instance. Not copyable.
/// Owns an FFTW plan and a scratch buffer: not safe to share across threads.
class GridPropagator {
 public:
  GridPropagator(const GridSpec& spec, const SymplecticMatrix& s);
  ~GridPropagator();
  GridPropagator(const GridPropagator&) = delete;
  GridPropagator& operator=(const GridPropagator&) = delete;

  void apply(GridState& gs) const;

  /// Forward DFT of the amplitudes (unnormalized).
  CVec fft(const CVec& in) const;
  CVec ifft(const CVec& in) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper; builds a fresh propagator for model.S.
GridState propagate_grid(const GridState& gs, const ModelSpec& model);

/// Inverse-CDF draw from |ψ|² (cells centred on grid points, uniform within
/// a cell) plus independent 𝒩(0, σ²).
double sample_outcome_grid(const GridState& gs, double sigma2, Rng& rng);

struct OracleOptions {
  /// Closed-form state to track alongside (fidelity after every step).
  std::optional<CoherentState> closed_form;
  /// If set, after every measurement fit |frame, ζ⟩ to the grid state by
  /// maximizing |⟨frame, ζ|ψ⟩|² over ζ.
  std::optional<SqueezingMatrix> fit_frame;
  /// Fit only after the first fit_steps measurements (negative: all).
  int fit_steps = -1;
  bool check_boundary = true;
};

struct OracleTrajectory {
  MeasurementRecord record;
  /// |⟨grid, closed form⟩|² after step k (post propagation).
  std::vector<double> fidelity;
  /// Best |⟨fit_frame, ζ|ψ⟩|² right after measurement k, and the maximizer.
  std::vector<double> fit_fidelity;
  std::vector<PhaseSpacePoint> fit_zeta;
  GridState final_state;
};

/// n_steps rounds of sample → apply_V → propagate. Throws if the boundary
/// mass exceeds kBoundaryMassLimit.
OracleTrajectory run_oracle_trajectory(const GridState& init, const ModelSpec& model,
                                       int n_steps, Rng& rng, const OracleOptions& options = {});
/// Same, reusing a caller-owned propagator.
OracleTrajectory run_oracle_trajectory(const GridState& init, const ModelSpec& model,
                                       const GridPropagator& propagator, int n_steps, Rng& rng,
                                       const OracleOptions& options = {});

struct CoherentFit {
  PhaseSpacePoint zeta;
  double fidelity = 0.0;
};
/// Maximizes |⟨frame, ζ|ψ⟩|² over ζ starting from the grid moments.
CoherentFit fit_coherent(const GridState& gs, const SqueezingMatrix& frame);

}  // namespace qtrack
