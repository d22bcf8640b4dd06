#pragma once

/// @file estimator.hpp
/// Maximum-likelihood reconstruction ζ̂ = Σ_j M^j R q_j, its shifts, the
/// Radon–Nikodym weight between two initial states and the martingale
/// M_n = ρ(W_n*W_n)/τ(W_n*W_n).

#include <vector>

#include "qtrack/trajectory.hpp"

namespace qtrack {

struct EstimatorOutput {
  PhaseSpacePoint zeta_hat;
  /// Last index J included in the series.
  int truncation = 0;
  /// Σ_{J<j<N} ‖M^j‖ ‖R q_j‖ plus an extrapolated bound for j ≥ N.
  double tail_bound = 0.0;
};

/// Raised when the record cannot certify the requested tolerance.
class RecordTooShort : public Error {
 public:
  RecordTooShort(const std::string& what, int required) : Error(what), required_(required) {}
  int required_length() const { return required_; }

 private:
  int required_;
};

inline constexpr double kDefaultEstimatorTol = 1e-8;

/// Needs spectral radius of M < 1. The starting J follows the geometric
/// rule ⌈log(tol(1−r)/max‖Rq‖)/log r⌉ and is raised until the tail bound,
/// computed with the actual ‖M^j‖, is below tol. Outcomes beyond the
/// record are bounded by 2·max‖q‖·(j/N)^{2d}.
EstimatorOutput mle(const MeasurementRecord& record, const FilterMatrices& fm,
                    double tol = kDefaultEstimatorTol);

/// mle applied to the suffix q_n, q_{n+1}, ….
EstimatorOutput mle_shifted(const MeasurementRecord& record, int n, const FilterMatrices& fm,
                            double tol = kDefaultEstimatorTol);

/// η̂_k = q_k − ξ̂_k for k < zeta_hats.size().
std::vector<Vec> residuals(const MeasurementRecord& record,
                           const std::vector<PhaseSpacePoint>& zeta_hats);

/// log of ⟨Ŵ, ζ̂|ρ|Ŵ, ζ̂⟩ / ⟨Ŵ, ζ̂|τ|Ŵ, ζ̂⟩. Throws when the denominator
/// underflows (τ not positive enough at ζ̂).
double log_rn_weight(const InitialStateSpec& rho, const InitialStateSpec& tau,
                     const SqueezingMatrix& w_hat, const PhaseSpacePoint& zeta_hat);
double rn_weight(const InitialStateSpec& rho, const InitialStateSpec& tau,
                 const SqueezingMatrix& w_hat, const PhaseSpacePoint& zeta_hat);

/// log ρ(W_n*W_n) for n = 0 … n_max (n_max ≤ record length): the
/// component-wise product of measurement weights along the exact coherent
/// recursion (measure, then propagate), combined by log-sum-exp.
std::vector<double> log_povm_mass(const InitialStateSpec& rho, const MeasurementRecord& record,
                                  const ModelSpec& model, int n_max);

struct PovmRatio {
  /// log M_n, n = 0 … n_max.
  std::vector<double> log_ratio;
  /// log N = log rn_weight at the MLE of the full record.
  double log_limit = 0.0;
};

PovmRatio povm_ratio_sequence(const InitialStateSpec& rho, const InitialStateSpec& tau,
                              const MeasurementRecord& record, const ModelSpec& model,
                              const StableSqueezing& w_hat, const FilterMatrices& fm, int n_max,
                              double tol = kDefaultEstimatorTol);

/// Uniform mixture of |Ŵ, ζ⟩ on a tensor lattice with @p points per
/// phase-space axis spanning center ± half_width. A finite-rank surrogate
/// for a strictly positive reference state.
InitialStateSpec lattice_reference(const SqueezingMatrix& w_hat, const PhaseSpacePoint& center,
                                   const Vec& half_width, int points);

}  // namespace qtrack
