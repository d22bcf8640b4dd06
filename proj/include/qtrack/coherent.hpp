#pragma once

/// @file coherent.hpp
/// Gaussian coherent states |W, ζ⟩ with wavefunction
///
///     φ(x | W, ζ) = (2π)^{−d/4} det(2 Im W)^{1/4} exp[(i/2)(x−ξ)ᵗW(x−ξ) + i xᵗπ],
///
/// their exact evolution under U_S and the measurement operators V_q, overlaps
/// and Husimi-type (Born) laws.

#include <optional>
#include <random>
#include <vector>

#include "qtrack/squeezing.hpp"

namespace qtrack {

struct CoherentState {
  SqueezingMatrix W;
  PhaseSpacePoint zeta;

  CoherentState() = default;
  CoherentState(SqueezingMatrix w, PhaseSpacePoint z);
  int dim() const { return W.dim(); }
};

/// Multivariate normal law with a symmetric positive-semidefinite covariance.
class GaussianLaw {
 public:
  GaussianLaw() = default;
  GaussianLaw(Vec mean, Mat covariance);

  const Vec& mean() const { return mean_; }
  const Mat& covariance() const { return cov_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  /// Needs a positive-definite covariance.
  double log_density(const Vec& x) const;
  double density(const Vec& x) const;
  /// Lower Cholesky factor (positive-definite covariance only).
  const Mat& cholesky() const;

  template <class Rng>
  Vec sample(Rng& rng) const {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) z(i) = n(rng);
    return mean_ + cholesky() * z;
  }

 private:
  void factor() const;
  Vec mean_;
  Mat cov_;
  mutable Mat chol_;
  mutable double log_norm_ = 0.0;
  mutable bool factored_ = false;
};

/// log 𝒩(x, C) and 𝒩(x, C), the centred normal density with covariance C.
double log_normal_density(const Vec& x, const Mat& cov);
double normal_density(const Vec& x, const Mat& cov);

Complex wavefunction(const CoherentState& state, const Vec& x);

/// U_{S⁻¹}|W, ζ⟩ ∝ |g(W), S⁻¹ζ⟩.
CoherentState evolve_backward(const ModelSpec& model, const CoherentState& state);
/// U_S|W, ζ⟩ ∝ |g_{S⁻¹}(W), Sζ⟩, the inverse of evolve_backward.
CoherentState evolve_forward(const ModelSpec& model, const CoherentState& state);

struct MeasuredState {
  CoherentState state;
  /// ‖V_q|W, ζ⟩‖² = 𝒩(q − ξ, Σ + (2 Im W)⁻¹).
  double weight = 0.0;
  double log_weight = 0.0;
};

/// V_q|W, ζ⟩ ∝ |W + (i/2)Σ⁻¹, ζ + (1; Re W)(2 Im W)⁻¹ Ξ⁻¹ (q − ξ)⟩.
MeasuredState apply_measurement(const Vec& q, const ModelSpec& model, const CoherentState& state);

/// ⟨a|b⟩ in closed form (Gaussian integral of the two wavefunctions).
Complex overlap(const CoherentState& a, const CoherentState& b);
/// A logarithm of ⟨a|b⟩; finite even when |⟨a|b⟩| underflows.
Complex log_overlap(const CoherentState& a, const CoherentState& b);
/// |⟨a|b⟩|².
double fidelity(const CoherentState& a, const CoherentState& b);

/// Finite superposition Σ c_k |W_k, ζ_k⟩, normalized on construction.
class Superposition {
 public:
  Superposition(std::vector<Complex> amplitudes, std::vector<CoherentState> states);
  static Superposition Single(const CoherentState& s) { return Superposition({1.0}, {s}); }

  const std::vector<Complex>& amplitudes() const { return amps_; }
  const std::vector<CoherentState>& states() const { return states_; }
  int dim() const { return states_.front().dim(); }

  Complex wavefunction(const Vec& x) const;
  /// ⟨c|ψ⟩ for a coherent state c.
  Complex project(const CoherentState& c) const;

 private:
  std::vector<Complex> amps_;
  std::vector<CoherentState> states_;
};

/// Law of ζ under ⟨W_f, ζ|ρ|W_f, ζ⟩ dλ(ζ) for ρ = |state⟩⟨state| and frame
/// squeezing W_f: a 2d-dimensional Gaussian with mean state.zeta.
GaussianLaw husimi_law(const CoherentState& state, const SqueezingMatrix& frame);

/// Spectral laws of X and P in |W, ζ⟩: 𝒩(ξ, (2 Im W)⁻¹) and
/// 𝒩(π, ½(Im W + Re W (Im W)⁻¹ Re W)). These are also the laws of the
/// noise vectors Z_x, Z_p (shifted by ξ, π) of the coherent-state POVM with
/// squeezing W. The momentum factor is fixed by the grid-oracle test.
struct MarginalLaws {
  GaussianLaw position;
  GaussianLaw momentum;
};
MarginalLaws marginal_laws(const CoherentState& state);

/// ζ-box [xi_lo, xi_hi] × [pi_lo, pi_hi] for d = 1 phase-space quadrature.
struct PhaseBox {
  double xi_lo = 0, xi_hi = 0, pi_lo = 0, pi_hi = 0;
};

struct PartitionOptions {
  std::optional<PhaseBox> box;
  double n_sigmas = 8.0;
  int panels = 24;
  int order = 16;
};

struct PartitionResult {
  /// |∫ |⟨W, ζ|ψ⟩|² dλ(ζ) − 1| for each test state.
  std::vector<double> deviations;
  double max_deviation = 0.0;
  std::vector<PhaseBox> boxes;
};

/// d = 1 only. Tensor Gauss–Legendre over a box covering n_sigmas standard
/// deviations of every component's Husimi law (or the supplied box).
PartitionResult partition_of_unity_check(const SqueezingMatrix& w,
                                         const std::vector<Superposition>& test_states,
                                         const PartitionOptions& options = {});

/// Smallest box containing mean ± n_sigmas·sd of each component's Husimi law.
PhaseBox husimi_box(const SqueezingMatrix& w, const Superposition& psi, double n_sigmas);

}  // namespace qtrack
