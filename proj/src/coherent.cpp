#include "qtrack/coherent.hpp"

#include <cmath>
#include <numbers>

#include "qtrack/quadrature.hpp"

namespace qtrack {
namespace {

constexpr Complex kI{0.0, 1.0};

double log_det_spd(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw Error("matrix is not positive-definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// log of the principal branch of √det A for complex symmetric A with
// positive-definite real part: every eigenvalue lies in the right half-plane,
// so the branch is the product of principal square roots.
Complex log_sqrt_det(const CMat& a) {
  Eigen::ComplexEigenSolver<CMat> eig(a, false);
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += 0.5 * std::log(eig.eigenvalues()(i));
  return acc;
}

}  // namespace

CoherentState::CoherentState(SqueezingMatrix w, PhaseSpacePoint z)
    : W(std::move(w)), zeta(std::move(z)) {
  if (W.dim() != zeta.dim()) throw Error("coherent state: W and ζ dimensions differ");
}

GaussianLaw::GaussianLaw(Vec mean, Mat covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw Error("Gaussian law: covariance shape does not match mean");
  }
  if ((cov_ - cov_.transpose()).norm() > 1e-10 * std::max(1.0, cov_.norm())) {
    throw Error("Gaussian law: covariance must be symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw Error("Gaussian law: covariance must be positive-semidefinite");
  }
}

void GaussianLaw::factor() const {
  if (factored_) return;
  Eigen::LLT<Mat> llt(cov_);
  if (llt.info() != Eigen::Success) throw Error("Gaussian law: covariance is singular");
  chol_ = llt.matrixL();
  log_norm_ = -0.5 * dim() * std::log(2.0 * std::numbers::pi) -
              chol_.diagonal().array().log().sum();
  factored_ = true;
}

const Mat& GaussianLaw::cholesky() const {
  factor();
  return chol_;
}

double GaussianLaw::log_density(const Vec& x) const {
  factor();
  const Vec z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

double GaussianLaw::density(const Vec& x) const { return std::exp(log_density(x)); }

double log_normal_density(const Vec& x, const Mat& cov) {
  return GaussianLaw(Vec::Zero(x.size()), cov).log_density(x);
}

double normal_density(const Vec& x, const Mat& cov) { return std::exp(log_normal_density(x, cov)); }

Complex wavefunction(const CoherentState& state, const Vec& x) {
  const int d = state.dim();
  if (x.size() != d) throw Error("wavefunction: dimension mismatch");
  const CVec dx = (x - state.zeta.xi()).cast<Complex>();
  const Complex quad = (dx.transpose() * state.W.value() * dx)(0, 0);
  const double log_amp = -0.25 * d * std::log(2.0 * std::numbers::pi) +
                         0.25 * log_det_spd(2.0 * state.W.im());
  return std::exp(log_amp + 0.5 * kI * quad + kI * x.dot(state.zeta.pi()));
}

CoherentState evolve_backward(const ModelSpec& model, const CoherentState& state) {
  const CMat w = backward_map(state.W.value(), model.S);
  return {SqueezingMatrix(0.5 * (w + w.transpose())),
          PhaseSpacePoint(Vec(model.S.inverse().matrix() * state.zeta.flat()))};
}

CoherentState evolve_forward(const ModelSpec& model, const CoherentState& state) {
  const CMat w = backward_map(state.W.value(), model.S.inverse());
  return {SqueezingMatrix(0.5 * (w + w.transpose())),
          PhaseSpacePoint(Vec(model.S.matrix() * state.zeta.flat()))};
}

MeasuredState apply_measurement(const Vec& q, const ModelSpec& model, const CoherentState& state) {
  const int d = state.dim();
  if (q.size() != d || model.d != d) throw Error("apply_measurement: dimension mismatch");
  const Mat two_im_inv = (2.0 * state.W.im()).inverse();
  const Mat xi_cov = model.Sigma + two_im_inv;
  const Vec innovation = q - state.zeta.xi();

  Mat top(2 * d, d);
  top << Mat::Identity(d, d), state.W.re();
  const Vec shift = top * two_im_inv * xi_cov.llt().solve(innovation);

  const CMat w_new = state.W.value() + (0.5 * kI) * model.Sigma.inverse().cast<Complex>();
  MeasuredState out;
  out.state = CoherentState(SqueezingMatrix(w_new), PhaseSpacePoint(Vec(state.zeta.flat() + shift)));
  out.log_weight = log_normal_density(innovation, xi_cov);
  out.weight = std::exp(out.log_weight);
  return out;
}

Complex log_overlap(const CoherentState& a, const CoherentState& b) {
  const int d = a.dim();
  if (b.dim() != d) throw Error("overlap: dimension mismatch");
  const CMat wa_bar = a.W.value().conjugate();
  const CMat& wb = b.W.value();
  const CMat big_a = kI * (wa_bar - wb);
  const CVec xa = a.zeta.xi().cast<Complex>();
  const CVec xb = b.zeta.xi().cast<Complex>();
  const CVec lin = -kI * (wb * xb) + kI * (wa_bar * xa) +
                   kI * (b.zeta.pi() - a.zeta.pi()).cast<Complex>();
  const Complex c = 0.5 * kI * (xb.transpose() * wb * xb)(0, 0) -
                    0.5 * kI * (xa.transpose() * wa_bar * xa)(0, 0);
  const CVec solved = big_a.fullPivLu().solve(lin);
  const double log_pref = 0.25 * log_det_spd(2.0 * a.W.im()) + 0.25 * log_det_spd(2.0 * b.W.im());
  return log_pref - log_sqrt_det(big_a) + 0.5 * (lin.transpose() * solved)(0, 0) + c;
}

Complex overlap(const CoherentState& a, const CoherentState& b) { return std::exp(log_overlap(a, b)); }

double fidelity(const CoherentState& a, const CoherentState& b) {
  return std::exp(2.0 * log_overlap(a, b).real());
}

Superposition::Superposition(std::vector<Complex> amplitudes, std::vector<CoherentState> states)
    : amps_(std::move(amplitudes)), states_(std::move(states)) {
  if (amps_.empty() || amps_.size() != states_.size()) {
    throw Error("superposition needs matching, non-empty amplitude and state lists");
  }
  for (const auto& s : states_) {
    if (s.dim() != states_.front().dim()) throw Error("superposition: mixed dimensions");
  }
  double norm2 = 0.0;
  for (size_t j = 0; j < states_.size(); ++j) {
    for (size_t k = 0; k < states_.size(); ++k) {
      norm2 += (std::conj(amps_[j]) * amps_[k] * overlap(states_[j], states_[k])).real();
    }
  }
  if (!(norm2 > 0.0)) throw Error("superposition has zero norm");
  const double scale = 1.0 / std::sqrt(norm2);
  for (auto& a : amps_) a *= scale;
}

Complex Superposition::wavefunction(const Vec& x) const {
  Complex acc = 0.0;
  for (size_t k = 0; k < states_.size(); ++k) acc += amps_[k] * qtrack::wavefunction(states_[k], x);
  return acc;
}

Complex Superposition::project(const CoherentState& c) const {
  Complex acc = 0.0;
  for (size_t k = 0; k < states_.size(); ++k) acc += amps_[k] * overlap(c, states_[k]);
  return acc;
}

GaussianLaw husimi_law(const CoherentState& state, const SqueezingMatrix& frame) {
  const int d = state.dim();
  if (frame.dim() != d) throw Error("husimi_law: dimension mismatch");
  const CMat wf_bar = frame.value().conjugate();
  const CMat& ws = state.W.value();
  const CMat a = kI * (wf_bar - ws);

  // Exponent of ⟨frame, u|state⟩ as a function of u = (ξ, π):
  // ½ (b0 + B u)ᵗ A⁻¹ (b0 + B u) − (i/2) ξᵗ W̄_f ξ + const.
  CMat b(d, 2 * d);
  b << kI * wf_bar, -kI * CMat::Identity(d, d);
  const CVec b0 = -kI * (ws * state.zeta.xi().cast<Complex>()) + kI * state.zeta.pi().cast<Complex>();

  const auto lu = a.fullPivLu();
  CMat q = b.transpose() * lu.solve(b);
  q.topLeftCorner(d, d) -= kI * wf_bar;
  const CVec lin = b.transpose() * lu.solve(b0);

  Mat precision = -2.0 * q.real();
  precision = 0.5 * (precision + precision.transpose());
  const Vec h = 2.0 * lin.real();
  const Mat cov = precision.inverse();
  return GaussianLaw(cov * h, 0.5 * (cov + cov.transpose()));
}

MarginalLaws marginal_laws(const CoherentState& state) {
  const Mat re = state.W.re();
  const Mat im = state.W.im();
  const Mat pos_cov = (2.0 * im).inverse();
  const Mat mom_cov = 0.5 * (im + re * im.llt().solve(re));
  return {GaussianLaw(state.zeta.xi(), pos_cov),
          GaussianLaw(state.zeta.pi(), 0.5 * (mom_cov + mom_cov.transpose()))};
}

PhaseBox husimi_box(const SqueezingMatrix& w, const Superposition& psi, double n_sigmas) {
  if (w.dim() != 1) throw Error("husimi_box is d = 1 only");
  PhaseBox box{1e300, -1e300, 1e300, -1e300};
  for (const auto& s : psi.states()) {
    const auto law = husimi_law(s, w);
    const double sx = std::sqrt(law.covariance()(0, 0));
    const double sp = std::sqrt(law.covariance()(1, 1));
    box.xi_lo = std::min(box.xi_lo, law.mean()(0) - n_sigmas * sx);
    box.xi_hi = std::max(box.xi_hi, law.mean()(0) + n_sigmas * sx);
    box.pi_lo = std::min(box.pi_lo, law.mean()(1) - n_sigmas * sp);
    box.pi_hi = std::max(box.pi_hi, law.mean()(1) + n_sigmas * sp);
  }
  return box;
}

PartitionResult partition_of_unity_check(const SqueezingMatrix& w,
                                         const std::vector<Superposition>& test_states,
                                         const PartitionOptions& options) {
  if (w.dim() != 1) throw Error("partition_of_unity_check supports d = 1 only");
  PartitionResult result;
  for (const auto& psi : test_states) {
    if (psi.dim() != 1) throw Error("partition_of_unity_check: test state must be d = 1");
    const PhaseBox box = options.box.value_or(husimi_box(w, psi, options.n_sigmas));
    result.boxes.push_back(box);
    double integral = 0.0;
    if (box.xi_hi > box.xi_lo && box.pi_hi > box.pi_lo) {
      const auto rx = composite_gauss_legendre(options.panels, options.order, box.xi_lo, box.xi_hi);
      const auto rp = composite_gauss_legendre(options.panels, options.order, box.pi_lo, box.pi_hi);
      for (size_t i = 0; i < rx.nodes.size(); ++i) {
        for (size_t j = 0; j < rp.nodes.size(); ++j) {
          const CoherentState probe(
              w, PhaseSpacePoint(Vec::Constant(1, rx.nodes[i]), Vec::Constant(1, rp.nodes[j])));
          integral += rx.weights[i] * rp.weights[j] * std::norm(psi.project(probe));
        }
      }
      integral /= 2.0 * std::numbers::pi;
    }
    const double dev = std::abs(integral - 1.0);
    result.deviations.push_back(dev);
    result.max_deviation = std::max(result.max_deviation, dev);
  }
  return result;
}

}  // namespace qtrack
