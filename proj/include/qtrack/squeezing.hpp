#pragma once

/// @file squeezing.hpp
/// Complex symmetric squeezing matrices and the measurement-stable fixed point
/// Ŵ of
///
///     W S_xx − S_px = (S_pp − W S_xp)(W − (i/2) Σ⁻¹).
///
/// The fixed point is found by damped iteration of
/// f(W) = g(W) + (i/2)Σ⁻¹ with g(W) = (S_pp − W S_xp)⁻¹ (W S_xx − S_px).

#include "qtrack/phase_space.hpp"

namespace qtrack {

/// W = Wᵗ with Im W = (W − W*)/(2i) positive-definite.
class SqueezingMatrix {
 public:
  SqueezingMatrix() = default;
  /// Validates symmetry (relative @p tol) and Im W > 0, then symmetrizes.
  explicit SqueezingMatrix(CMat w, double tol = 1e-10);
  /// Scalar shortcut for d = 1.
  static SqueezingMatrix Scalar(Complex w) { return SqueezingMatrix(CMat::Constant(1, 1, w)); }

  const CMat& value() const { return w_; }
  int dim() const { return static_cast<int>(w_.rows()); }
  Mat re() const { return w_.real(); }
  Mat im() const { return w_.imag(); }

 private:
  CMat w_;
};

/// g(W) = (S_pp − W S_xp)⁻¹ (W S_xx − S_px); this is the squeezing of
/// U_{S⁻¹}|W, ζ⟩. Throws when S_pp − W S_xp is singular.
CMat backward_map(const CMat& w, const SymplecticMatrix& s);

/// f(W) = g(W) + (i/2) Σ⁻¹.
SqueezingMatrix riccati_map(const SqueezingMatrix& w, const ModelSpec& model);

/// Frobenius norm of W S_xx − S_px − (S_pp − W S_xp)(W − (i/2)Σ⁻¹).
double squeezing_residual(const CMat& w, const ModelSpec& model);

struct StableSqueezing {
  SqueezingMatrix W_hat;
  double residual = 0.0;
  /// κ = 1 − (2 Im Ŵ)⁻¹ Σ⁻¹ (upper-left block of 1 − [R 0]).
  Mat kappa;
  int iterations = 0;

  /// Σ − (2 Im Ŵ)⁻¹, the covariance of the innovations η.
  Mat innovation_covariance(const ModelSpec& model) const;
};

inline constexpr double kDefaultSqueezingTol = 1e-12;
inline constexpr int kDefaultSqueezingMaxIter = 100000;

/// Threshold on σ_min(S_xp) / ‖S‖ for Assumption AW.
inline constexpr double kAwThreshold = 1e-10;

/// Smallest singular value of S_xp.
double sxp_min_singular_value(const SymplecticMatrix& s);
bool assumption_aw(const SymplecticMatrix& s);

/// Damped fixed-point iteration W ← (1−α)W + α f(W) from W₀ = iΣ⁻¹, halving α
/// whenever the residual fails to decrease. Throws AssumptionError("AW") when
/// S_xp is not invertible and ConvergenceError when max_iter is exhausted.
/// The returned Ŵ is certified: residual ≤ tol, Ŵ symmetric and
/// Σ − (2 Im Ŵ)⁻¹ > 0.
StableSqueezing solve_squeezing(const ModelSpec& model, double tol = kDefaultSqueezingTol,
                                int max_iter = kDefaultSqueezingMaxIter);

/// d = 1 closed form: root with positive imaginary part of
/// S_xp w² + (S_xx − S_pp − i S_xp/(2σ)) w + (i S_pp/(2σ) − S_px) = 0,
/// σ the scalar measurement variance.
Complex solve_squeezing_1d(double sxx, double sxp, double spx, double spp, double sigma);

/// Squeezing that the forward-conditioned state settles on right after a
/// measurement: the stable squeezing of the time-reversed step S⁻¹.
StableSqueezing solve_forward_squeezing(const ModelSpec& model,
                                        double tol = kDefaultSqueezingTol,
                                        int max_iter = kDefaultSqueezingMaxIter);

}  // namespace qtrack
