#pragma once

/// @file phase_space.hpp
/// Phase-space points, symplectic one-step matrices and the model definition
/// shared by every other part of the library.
///
/// Phase-space vectors are stored flat as (ξ, π) of length 2d; 2d×2d matrices
/// use the matching block layout [[xx, xp], [px, pp]].

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qtrack {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model violates one of the structural assumptions (AW, AS, AM) or a
/// symplecticity / positivity requirement.
class AssumptionError : public Error {
 public:
  AssumptionError(std::string which, const std::string& what)
      : Error(what), which_(std::move(which)) {}
  const std::string& which() const { return which_; }

 private:
  std::string which_;
};

/// An iterative routine stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class PhaseSpacePoint {
 public:
  PhaseSpacePoint() = default;
  /// @p flat holds (ξ, π) and must have even, non-zero length.
  explicit PhaseSpacePoint(Vec flat);
  PhaseSpacePoint(const Vec& xi, const Vec& pi);

  int dim() const { return static_cast<int>(flat_.size() / 2); }
  auto xi() const { return flat_.head(dim()); }
  auto pi() const { return flat_.tail(dim()); }
  const Vec& flat() const { return flat_; }

  /// Projection onto configuration space, [(ξ, π)] = ξ.
  Vec position() const { return xi(); }

 private:
  Vec flat_;
};

/// J = [[0, 1], [-1, 0]] in d×d blocks.
Mat symplectic_form(int d);

/// Relative tolerance used when validating symplecticity.
inline constexpr double kSymplecticTolerance = 1e-12;

class SymplecticMatrix {
 public:
  SymplecticMatrix() = default;
  /// Validates ‖S J Sᵗ − J‖_F ≤ tol · ‖S‖_F². Throws AssumptionError on failure.
  static SymplecticMatrix FromMatrix(const Mat& s, double tol = kSymplecticTolerance);

  const Mat& matrix() const { return s_; }
  int dim() const { return static_cast<int>(s_.rows() / 2); }
  auto xx() const { return s_.topLeftCorner(dim(), dim()); }
  auto xp() const { return s_.topRightCorner(dim(), dim()); }
  auto px() const { return s_.bottomLeftCorner(dim(), dim()); }
  auto pp() const { return s_.bottomRightCorner(dim(), dim()); }

  /// ‖S J Sᵗ − J‖_F recorded at construction.
  double residual() const { return residual_; }

  /// S⁻¹ = −J Sᵗ J, exact for symplectic S.
  SymplecticMatrix inverse() const;
  SymplecticMatrix operator*(const SymplecticMatrix& other) const;

 private:
  SymplecticMatrix(Mat s, double residual) : s_(std::move(s)), residual_(residual) {}
  Mat s_;
  double residual_ = 0.0;
};

SymplecticMatrix make_symplectic(const Mat& xx, const Mat& xp, const Mat& px, const Mat& pp,
                                 double tol = kSymplecticTolerance);

/// Residual ‖L J + J Lᵗ‖_F of the infinitesimal-symplectic condition.
double generator_residual(const Mat& generator);

/// exp(τ L) by scaling-and-squaring Padé. Rejects L with
/// ‖L J + J Lᵗ‖ > 1e-12 · max(1, ‖L‖²).
SymplecticMatrix generator_to_group(const Mat& generator, double tau);

PhaseSpacePoint apply(const SymplecticMatrix& s, const PhaseSpacePoint& z);

/// Closed-form one-step matrices and generators of the three quasi-free
/// examples. The closed forms are cross-checked against generator_to_group.
namespace presets {

Mat free_particle_generator(double mass, int d = 1);
SymplecticMatrix free_particle(double mass, int d = 1);

Mat harmonic_oscillator_generator(double omega, int d = 1);
SymplecticMatrix harmonic_oscillator(double omega, int d = 1);

/// Charged particle in the plane with β = B/2M (d = 2).
Mat magnetic_field_generator(double beta, double mass);
SymplecticMatrix magnetic_field(double beta, double mass);

}  // namespace presets

/// One experiment: the one-step map S and the measurement covariance Σ.
struct ModelSpec {
  int d = 0;
  SymplecticMatrix S;
  Mat Sigma;

  /// Validates dimensions and Σ = Σᵗ > 0.
  static ModelSpec Create(SymplecticMatrix s, Mat sigma);
  /// Σ = λ² 1.
  static ModelSpec Isotropic(SymplecticMatrix s, double lambda);
};

}  // namespace qtrack
