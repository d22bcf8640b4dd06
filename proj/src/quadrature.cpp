#include "qtrack/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "qtrack/phase_space.hpp"

namespace qtrack {
namespace {

// Nodes are eigenvalues of the Jacobi matrix; weights are μ₀ times the squared
// first components of the normalized eigenvectors.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal, double mu0) {
  const auto n = off_diagonal.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = off_diagonal(i);
    jacobi(i + 1, i) = off_diagonal(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error("quadrature needs at least one node");
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
  } else {
    Eigen::VectorXd beta(n - 1);
    for (int k = 1; k < n; ++k) beta(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    rule = golub_welsch(beta, 2.0);
  }
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite_normal(int n) {
  if (n < 1) throw Error("quadrature needs at least one node");
  if (n == 1) return {{0.0}, {1.0}};
  // Probabilists' Hermite recurrence: off-diagonal √k.
  Eigen::VectorXd beta(n - 1);
  for (int k = 1; k < n; ++k) beta(k - 1) = std::sqrt(double(k));
  return golub_welsch(beta, 1.0);
}

QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b) {
  if (panels < 1) throw Error("composite rule needs at least one panel");
  QuadratureRule out;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const auto rule = gauss_legendre(order, a + p * width, a + (p + 1) * width);
    out.nodes.insert(out.nodes.end(), rule.nodes.begin(), rule.nodes.end());
    out.weights.insert(out.weights.end(), rule.weights.begin(), rule.weights.end());
  }
  return out;
}

}  // namespace qtrack
