#include "support.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace qtrack::testing {

Mat random_symplectic(std::mt19937_64& rng, int d, double scale) {
  const Mat a = random_matrix(rng, 2 * d, 2 * d, scale);
  const Mat h = 0.5 * (a + a.transpose());
  const Mat l = symplectic_form(d) * h;
  return Mat(l.exp());
}

}  // namespace qtrack::testing
