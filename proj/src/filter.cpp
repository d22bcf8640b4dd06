#include "qtrack/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtrack {
namespace {

FilterMatrices assemble(const ModelSpec& model, const SqueezingMatrix& w) {
  const int d = model.d;
  const Mat two_im_inv = (2.0 * w.im()).inverse();
  const Mat sigma_inv = model.Sigma.inverse();

  Mat top(2 * d, d);
  top << Mat::Identity(d, d), w.re();

  FilterMatrices fm;
  fm.R = top * two_im_inv * sigma_inv;
  Mat r_pad = Mat::Zero(2 * d, 2 * d);
  r_pad.leftCols(d) = fm.R;
  const Mat s_inv = model.S.inverse().matrix();
  fm.M = (Mat::Identity(2 * d, 2 * d) - r_pad) * s_inv;
  fm.kappa = Mat::Identity(d, d) - two_im_inv * sigma_inv;

  const Mat innovation = model.Sigma - two_im_inv;
  fm.K = top * two_im_inv * innovation.inverse();

  Eigen::FullPivLU<Mat> lu(fm.M);
  if (lu.isInvertible()) {
    fm.k_route_gap = (fm.K - s_inv * lu.solve(fm.R)).norm();
  } else {
    fm.k_route_gap = std::numeric_limits<double>::infinity();
  }
  return fm;
}

}  // namespace

FilterMatrices build_filter(const ModelSpec& model, const StableSqueezing& w_hat) {
  FilterMatrices fm = assemble(model, w_hat.W_hat);
  if (!std::isfinite(fm.k_route_gap)) {
    throw AssumptionError("filter", "M is singular: κ has a zero eigenvalue");
  }
  if (fm.k_route_gap > 1e-10 * std::max(1.0, fm.K.norm())) {
    std::ostringstream msg;
    msg << "K closed form and S⁻¹M⁻¹R disagree by " << fm.k_route_gap;
    throw Error(msg.str());
  }
  return fm;
}

FilterMatrices build_filter_with(const ModelSpec& model, const SqueezingMatrix& w) {
  return assemble(model, w);
}

std::vector<Complex> eigenvalues(const Mat& m) {
  Eigen::EigenSolver<Mat> solver(m, false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double spectral_radius(const Mat& m) {
  double r = 0.0;
  for (const auto& ev : eigenvalues(m)) r = std::max(r, std::abs(ev));
  return r;
}

AssumptionReport check_assumptions(const ModelSpec& model, const FilterMatrices& fm) {
  AssumptionReport report;
  report.sxp_min_singular = sxp_min_singular_value(model.S);
  report.aw_ok = report.sxp_min_singular > kAwThreshold * model.S.matrix().norm();

  report.s_eigenvalues = eigenvalues(model.S.matrix());
  report.as_ok = true;
  for (const auto& ev : report.s_eigenvalues) {
    if (std::abs(std::abs(ev) - 1.0) > kAsTolerance) report.as_ok = false;
  }

  report.m_eigenvalues = eigenvalues(fm.M);
  report.m_spectral_radius = 0.0;
  for (const auto& ev : report.m_eigenvalues) {
    report.m_spectral_radius = std::max(report.m_spectral_radius, std::abs(ev));
  }
  report.am_ok = report.m_spectral_radius < 1.0 - kAmMargin;
  return report;
}

std::array<Complex, 2> secular_eigenvalues_1d(const ModelSpec& model, double kappa) {
  if (model.d != 1) throw Error("secular_eigenvalues_1d needs d = 1");
  const double tr_s = model.S.matrix().trace();
  const double tr_m = 2.0 * tr_s * kappa / (1.0 + kappa);
  const Complex disc = std::sqrt(Complex(tr_m * tr_m - 4.0 * kappa, 0.0));
  return {0.5 * (tr_m + disc), 0.5 * (tr_m - disc)};
}

PowerNormProfile power_norm_profile(const Mat& t, int n_max, std::optional<int> exponent) {
  if (t.rows() != t.cols() || t.rows() == 0) throw Error("power_norm_profile needs a square matrix");
  if (n_max < 1) throw Error("power_norm_profile needs n_max ≥ 1");

  PowerNormProfile profile;
  profile.exponent = exponent.value_or(static_cast<int>(t.rows()) - 1);
  profile.lambda_max = spectral_radius(t);
  profile.norms.reserve(n_max);

  Mat power = t;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) power = power * t;
    Eigen::JacobiSVD<Mat> svd(power);
    profile.norms.push_back(svd.singularValues()(0));
  }

  if (profile.lambda_max == 0.0) {
    // Nilpotent: powers vanish from n = dim on.
    profile.constant = *std::max_element(profile.norms.begin(), profile.norms.end());
    profile.bounded = true;
    return profile;
  }

  std::vector<double> log_ratio(n_max);
  for (int n = 1; n <= n_max; ++n) {
    const double log_r = std::log(profile.norms[n - 1]) - profile.exponent * std::log(double(n)) -
                         n * std::log(profile.lambda_max);
    log_ratio[n - 1] = log_r;
    profile.constant = std::max(profile.constant, std::exp(log_r));
  }

  const int first = std::max(1, n_max / 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int n = first; n <= n_max; ++n) {
    const double x = std::log(double(n));
    const double y = log_ratio[n - 1];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  profile.tail_slope = denom > 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
  profile.bounded = profile.tail_slope <= 0.05;
  return profile;
}

}  // namespace qtrack
