#pragma once

/// @file filter.hpp
/// The gain matrices R, M, K of the phase-space process and the spectral
/// checks of Assumptions AW, AS and AM.

#include <array>
#include <optional>
#include <vector>

#include "qtrack/squeezing.hpp"

namespace qtrack {

struct FilterMatrices {
  /// R = (1; Re Ŵ)(2 Im Ŵ)⁻¹ Σ⁻¹, 2d×d.
  Mat R;
  /// M = (1 − [R 0]) S⁻¹, 2d×2d.
  Mat M;
  /// K = (1; Re Ŵ)(2 Im Ŵ)⁻¹ (Σ − (2 Im Ŵ)⁻¹)⁻¹, 2d×d.
  Mat K;
  /// Upper-left block of 1 − [R 0], i.e. 1 − (2 Im Ŵ)⁻¹ Σ⁻¹.
  Mat kappa;
  /// ‖K − S⁻¹ M⁻¹ R‖_F, the gap between the two routes to K.
  double k_route_gap = 0.0;

  int dim() const { return static_cast<int>(R.cols()); }
};

/// Throws when M is singular or the two K routes disagree by more than 1e-10.
FilterMatrices build_filter(const ModelSpec& model, const StableSqueezing& w_hat);

/// Same construction for an arbitrary squeezing W; used for diagnostics on
/// models where no stable Ŵ exists (e.g. S = 1). Never throws on the K gap.
FilterMatrices build_filter_with(const ModelSpec& model, const SqueezingMatrix& w);

inline constexpr double kAsTolerance = 1e-8;
inline constexpr double kAmMargin = 1e-8;

struct AssumptionReport {
  bool aw_ok = false;
  double sxp_min_singular = 0.0;
  bool as_ok = false;
  std::vector<Complex> s_eigenvalues;
  bool am_ok = false;
  double m_spectral_radius = 0.0;
  std::vector<Complex> m_eigenvalues;

  bool all_ok() const { return aw_ok && as_ok && am_ok; }
};

AssumptionReport check_assumptions(const ModelSpec& model, const FilterMatrices& fm);

std::vector<Complex> eigenvalues(const Mat& m);
double spectral_radius(const Mat& m);

/// Eigenvalues of M for d = 1 from the secular equation
/// μ² − tr(M) μ + det(M) = 0 with det M = κ and tr M = 2 tr(S) κ/(1+κ).
std::array<Complex, 2> secular_eigenvalues_1d(const ModelSpec& model, double kappa);

struct PowerNormProfile {
  /// norms[n-1] = ‖Tⁿ‖₂ for n = 1..n_max.
  std::vector<double> norms;
  double lambda_max = 0.0;
  int exponent = 0;
  /// max_n ‖Tⁿ‖ / (n^exponent |λ_max|ⁿ).
  double constant = 0.0;
  /// Least-squares slope of log(‖Tⁿ‖ / (n^exponent |λ_max|ⁿ)) against log n
  /// over the second half of the range.
  double tail_slope = 0.0;
  /// tail_slope ≤ 0.05: the normalized norms are not growing.
  bool bounded = false;
};

/// Witness for ‖Tⁿ‖ ≤ C n^{p} |λ_max|ⁿ; p defaults to dim(T) − 1.
PowerNormProfile power_norm_profile(const Mat& t, int n_max,
                                    std::optional<int> exponent = std::nullopt);

}  // namespace qtrack
