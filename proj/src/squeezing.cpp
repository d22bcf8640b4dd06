#include "qtrack/squeezing.hpp"

#include <cmath>
#include <sstream>

namespace qtrack {
namespace {

constexpr Complex kI{0.0, 1.0};

CMat symmetrized(const CMat& w) { return 0.5 * (w + w.transpose()); }

CMat half_i_sigma_inv(const ModelSpec& model) {
  return (0.5 * kI) * model.Sigma.inverse().cast<Complex>();
}

}  // namespace

SqueezingMatrix::SqueezingMatrix(CMat w, double tol) {
  if (w.rows() != w.cols() || w.rows() == 0) throw Error("squeezing matrix must be square");
  if (!w.array().isFinite().all()) throw Error("squeezing matrix has non-finite entries");
  if ((w - w.transpose()).norm() > tol * std::max(1.0, w.norm())) {
    throw AssumptionError("squeezing", "squeezing matrix must satisfy Wᵗ = W");
  }
  w = symmetrized(w);
  Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(w.imag()), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw AssumptionError("squeezing", "squeezing matrix needs a positive-definite imaginary part");
  }
  w_ = std::move(w);
}

CMat backward_map(const CMat& w, const SymplecticMatrix& s) {
  const CMat lhs = s.pp().cast<Complex>() - w * s.xp().cast<Complex>();
  const CMat rhs = w * s.xx().cast<Complex>() - s.px().cast<Complex>();
  Eigen::FullPivLU<CMat> lu(lhs);
  if (!lu.isInvertible()) {
    throw Error("S_pp − W S_xp is singular; W must have a positive-definite imaginary part");
  }
  return lu.solve(rhs);
}

SqueezingMatrix riccati_map(const SqueezingMatrix& w, const ModelSpec& model) {
  return SqueezingMatrix(symmetrized(backward_map(w.value(), model.S) + half_i_sigma_inv(model)));
}

double squeezing_residual(const CMat& w, const ModelSpec& model) {
  const auto& s = model.S;
  const CMat lhs = w * s.xx().cast<Complex>() - s.px().cast<Complex>();
  const CMat rhs = (s.pp().cast<Complex>() - w * s.xp().cast<Complex>()) *
                   (w - half_i_sigma_inv(model));
  return (lhs - rhs).norm();
}

Mat StableSqueezing::innovation_covariance(const ModelSpec& model) const {
  const Mat cov = model.Sigma - (2.0 * W_hat.im()).inverse();
  return 0.5 * (cov + cov.transpose());
}

double sxp_min_singular_value(const SymplecticMatrix& s) {
  Eigen::JacobiSVD<Mat> svd(s.xp());
  return svd.singularValues().minCoeff();
}

bool assumption_aw(const SymplecticMatrix& s) {
  return sxp_min_singular_value(s) > kAwThreshold * s.matrix().norm();
}

StableSqueezing solve_squeezing(const ModelSpec& model, double tol, int max_iter) {
  if (!assumption_aw(model.S)) {
    std::ostringstream msg;
    msg << "Assumption AW fails: S_xp is not invertible (σ_min = "
        << sxp_min_singular_value(model.S) << ")";
    throw AssumptionError("AW", msg.str());
  }

  const CMat shift = half_i_sigma_inv(model);
  CMat w = 2.0 * shift;  // iΣ⁻¹
  double res = squeezing_residual(w, model);
  // f maps the cone strictly into itself, so undamped iteration contracts, but
  // not monotonically in the residual. Damping only kicks in when the best
  // residual stops improving over a window of steps.
  CMat best = w;
  double best_res = res;
  double alpha = 1.0;
  int since_best = 0;
  constexpr int kPatience = 200;
  int it = 0;
  for (; it < max_iter && best_res > tol; ++it) {
    const CMat f = symmetrized(backward_map(w, model.S) + shift);
    w = symmetrized((1.0 - alpha) * w + alpha * f);
    res = squeezing_residual(w, model);
    if (!std::isfinite(res)) throw ConvergenceError("squeezing iteration diverged", best_res);
    if (res < best_res) {
      best = w;
      best_res = res;
      since_best = 0;
    } else if (++since_best > kPatience) {
      alpha *= 0.5;
      w = best;
      since_best = 0;
      if (alpha < 1e-6) {
        std::ostringstream msg;
        msg << "squeezing iteration stalled at residual " << best_res;
        throw ConvergenceError(msg.str(), best_res);
      }
    }
  }
  w = best;
  res = best_res;
  if (res > tol) {
    std::ostringstream msg;
    msg << "squeezing iteration did not converge in " << max_iter << " steps (residual " << res
        << ")";
    throw ConvergenceError(msg.str(), res);
  }

  StableSqueezing out;
  out.W_hat = SqueezingMatrix(w, 1e-12);
  out.residual = res;
  out.iterations = it;
  const Mat two_im_inv = (2.0 * out.W_hat.im()).inverse();
  out.kappa = Mat::Identity(model.d, model.d) - two_im_inv * model.Sigma.inverse();

  Eigen::SelfAdjointEigenSolver<Mat> eig(out.innovation_covariance(model),
                                         Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw AssumptionError("squeezing", "fixed point violates (2 Im Ŵ)⁻¹ < Σ");
  }
  return out;
}

Complex solve_squeezing_1d(double sxx, double sxp, double spx, double spp, double sigma) {
  if (sxp == 0.0) throw AssumptionError("AW", "Assumption AW fails: S_xp = 0");
  if (!(sigma > 0.0)) throw Error("measurement variance must be positive");
  const double c_half = 0.5 / sigma;
  const Complex a = sxp;
  const Complex b = Complex(sxx - spp, 0.0) - kI * (sxp * c_half);
  const Complex c = kI * (spp * c_half) - spx;
  Complex root = std::sqrt(b * b - 4.0 * a * c);
  if (std::real(std::conj(b) * root) < 0.0) root = -root;
  const Complex q = -0.5 * (b + root);
  const Complex r1 = q / a;
  const Complex r2 = c / q;
  const bool ok1 = r1.imag() > 0.0;
  const bool ok2 = r2.imag() > 0.0;
  if (!ok1 && !ok2) {
    throw AssumptionError("squeezing", "no root with positive imaginary part");
  }
  if (ok1 && ok2) return r1.imag() >= r2.imag() ? r1 : r2;
  return ok1 ? r1 : r2;
}

StableSqueezing solve_forward_squeezing(const ModelSpec& model, double tol, int max_iter) {
  return solve_squeezing(ModelSpec::Create(model.S.inverse(), model.Sigma), tol, max_iter);
}

}  // namespace qtrack
