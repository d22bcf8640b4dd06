#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "qtrack/phase_space.hpp"

namespace qtrack::testing {

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Mat random_spd(std::mt19937_64& rng, int d, double floor = 0.2) {
  const Mat a = random_matrix(rng, d, d);
  return a * a.transpose() + floor * Mat::Identity(d, d);
}

/// exp(J H) for random symmetric H: a generic symplectic matrix.
Mat random_symplectic(std::mt19937_64& rng, int d, double scale = 0.5);

/// P R(θ) P⁻¹ with det P = 1: d = 1 symplectic with spectrum e^{±iθ}.
inline Mat random_elliptic_1d(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, std::numbers::pi - 0.2);
  std::normal_distribution<double> n(0.0, 0.6);
  const double theta = u(rng);
  Mat p(2, 2);
  p << std::exp(n(rng)), n(rng), 0.0, 0.0;
  p(1, 1) = 1.0 / p(0, 0);
  const double phi = u(rng);
  Mat rot(2, 2);
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  p = rot * p;
  Mat r(2, 2);
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return p * r * p.inverse();
}

inline CMat random_squeezing(std::mt19937_64& rng, int d) {
  const Mat re = random_matrix(rng, d, d);
  const Mat im = random_spd(rng, d);
  CMat w(d, d);
  w.real() = 0.5 * (re + re.transpose());
  w.imag() = im;
  return w;
}

}  // namespace qtrack::testing
