#pragma once

/// @file quadrature.hpp
/// Gauss–Legendre and Gauss–Hermite rules from the Golub–Welsch eigenproblem.

#include <vector>

namespace qtrack {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// n-point rule for ∫ f(x) exp(−x²/2) dx / √(2π), i.e. expectations under N(0, 1).
QuadratureRule gauss_hermite_normal(int n);

/// Composite Gauss–Legendre: @p panels equal panels of @p order points on [a, b].
QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b);

}  // namespace qtrack
