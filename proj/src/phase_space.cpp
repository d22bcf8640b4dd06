#include "qtrack/phase_space.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qtrack {
namespace {

bool all_finite(const Eigen::Ref<const Mat>& m) { return m.array().isFinite().all(); }

}  // namespace

PhaseSpacePoint::PhaseSpacePoint(Vec flat) : flat_(std::move(flat)) {
  if (flat_.size() == 0 || flat_.size() % 2 != 0) {
    throw Error("phase-space point needs an even, non-zero number of entries");
  }
  if (!flat_.array().isFinite().all()) {
    throw Error("phase-space point has non-finite entries");
  }
}

PhaseSpacePoint::PhaseSpacePoint(const Vec& xi, const Vec& pi) {
  if (xi.size() != pi.size()) throw Error("ξ and π must have equal length");
  Vec flat(xi.size() + pi.size());
  flat << xi, pi;
  *this = PhaseSpacePoint(std::move(flat));
}

Mat symplectic_form(int d) {
  Mat j = Mat::Zero(2 * d, 2 * d);
  j.topRightCorner(d, d).setIdentity();
  j.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return j;
}

SymplecticMatrix SymplecticMatrix::FromMatrix(const Mat& s, double tol) {
  if (s.rows() != s.cols() || s.rows() == 0 || s.rows() % 2 != 0) {
    throw Error("symplectic matrix must be square with even, non-zero size");
  }
  if (!all_finite(s)) throw Error("symplectic matrix has non-finite entries");
  const Mat j = symplectic_form(static_cast<int>(s.rows() / 2));
  const double residual = (s * j * s.transpose() - j).norm();
  const double scale = s.squaredNorm();
  if (residual > tol * scale) {
    std::ostringstream msg;
    msg << "matrix is not symplectic: ‖S J Sᵗ − J‖ = " << residual << " exceeds "
        << tol * scale;
    throw AssumptionError("symplectic", msg.str());
  }
  return SymplecticMatrix(s, residual);
}

SymplecticMatrix SymplecticMatrix::inverse() const {
  const Mat j = symplectic_form(dim());
  Mat inv = -j * s_.transpose() * j;
  const double residual = (inv * j * inv.transpose() - j).norm();
  return SymplecticMatrix(std::move(inv), residual);
}

SymplecticMatrix SymplecticMatrix::operator*(const SymplecticMatrix& other) const {
  if (other.dim() != dim()) throw Error("symplectic product: dimension mismatch");
  return FromMatrix(s_ * other.s_, 1e-10);
}

SymplecticMatrix make_symplectic(const Mat& xx, const Mat& xp, const Mat& px, const Mat& pp,
                                 double tol) {
  const auto d = xx.rows();
  for (const Mat* block : {&xx, &xp, &px, &pp}) {
    if (block->rows() != d || block->cols() != d) {
      throw Error("symplectic blocks must all be d×d");
    }
  }
  Mat s(2 * d, 2 * d);
  s << xx, xp, px, pp;
  return SymplecticMatrix::FromMatrix(s, tol);
}

double generator_residual(const Mat& generator) {
  const Mat j = symplectic_form(static_cast<int>(generator.rows() / 2));
  return (generator * j + j * generator.transpose()).norm();
}

SymplecticMatrix generator_to_group(const Mat& generator, double tau) {
  if (generator.rows() != generator.cols() || generator.rows() % 2 != 0 ||
      generator.rows() == 0) {
    throw Error("generator must be square with even, non-zero size");
  }
  const double residual = generator_residual(generator);
  if (residual > 1e-12 * std::max(1.0, generator.squaredNorm())) {
    std::ostringstream msg;
    msg << "generator violates L J + J Lᵗ = 0 (residual " << residual << ")";
    throw AssumptionError("generator", msg.str());
  }
  const Mat scaled = tau * generator;
  return SymplecticMatrix::FromMatrix(scaled.exp());
}

PhaseSpacePoint apply(const SymplecticMatrix& s, const PhaseSpacePoint& z) {
  if (s.dim() != z.dim()) throw Error("apply: dimension mismatch between S and ζ");
  return PhaseSpacePoint(Vec(s.matrix() * z.flat()));
}

namespace presets {

Mat free_particle_generator(double mass, int d) {
  Mat l = Mat::Zero(2 * d, 2 * d);
  l.topRightCorner(d, d) = Mat::Identity(d, d) / mass;
  return l;
}

SymplecticMatrix free_particle(double mass, int d) {
  const Mat id = Mat::Identity(d, d);
  return make_symplectic(id, id / mass, Mat::Zero(d, d), id);
}

Mat harmonic_oscillator_generator(double omega, int d) {
  Mat l = Mat::Zero(2 * d, 2 * d);
  l.topRightCorner(d, d) = omega * Mat::Identity(d, d);
  l.bottomLeftCorner(d, d) = -omega * Mat::Identity(d, d);
  return l;
}

SymplecticMatrix harmonic_oscillator(double omega, int d) {
  const Mat id = Mat::Identity(d, d);
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  return make_symplectic(c * id, s * id, -s * id, c * id);
}

Mat magnetic_field_generator(double beta, double mass) {
  Mat l(4, 4);
  // clang-format off
  l <<  0.0,                 -beta,               1.0 / mass, 0.0,
        beta,                 0.0,                0.0,        1.0 / mass,
       -beta * beta * mass,   0.0,                0.0,       -beta,
        0.0,                 -beta * beta * mass, beta,       0.0;
  // clang-format on
  return l;
}

SymplecticMatrix magnetic_field(double beta, double mass) {
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const double mb = mass * beta;
  Mat diag(2, 2);
  diag << c * c, -c * s, c * s, c * c;
  Mat shear(2, 2);
  shear << c * s, -s * s, s * s, c * s;
  return make_symplectic(diag, shear / mb, -mb * shear, diag);
}

}  // namespace presets

ModelSpec ModelSpec::Create(SymplecticMatrix s, Mat sigma) {
  const int d = s.dim();
  if (d == 0) throw Error("model needs a non-empty symplectic matrix");
  if (sigma.rows() != d || sigma.cols() != d) {
    throw Error("Σ must be d×d with d matching S");
  }
  if (!all_finite(sigma)) throw Error("Σ has non-finite entries");
  if ((sigma - sigma.transpose()).norm() > 1e-12 * std::max(1.0, sigma.norm())) {
    throw AssumptionError("Sigma", "Σ must be symmetric");
  }
  sigma = 0.5 * (sigma + sigma.transpose());
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw AssumptionError("Sigma", "Σ must be positive-definite");
  }
  ModelSpec model;
  model.d = d;
  model.S = std::move(s);
  model.Sigma = std::move(sigma);
  return model;
}

ModelSpec ModelSpec::Isotropic(SymplecticMatrix s, double lambda) {
  const int d = s.dim();
  return Create(std::move(s), lambda * lambda * Mat::Identity(d, d));
}

}  // namespace qtrack
