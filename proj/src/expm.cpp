#include "hetrdme/expm.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace hetrdme {

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) { return A.exp(); }

Eigen::VectorXd expm_action(const Eigen::SparseMatrix<double>& A, double t, const Eigen::VectorXd& v) {
  if (t == 0.0 || v.size() == 0) return v;
  double norm1 = 0.0;
  for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
    double col = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) col += std::abs(it.value());
    norm1 = std::max(norm1, col);
  }
  // Keep ||tau A|| <= 1 per substep so the series converges quickly without cancellation.
  const auto steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) * norm1)));
  const double tau = t / static_cast<double>(steps);
  Eigen::VectorXd x = v;
  Eigen::VectorXd term(v.size());
  for (long s = 0; s < steps; ++s) {
    term = x;
    Eigen::VectorXd acc = x;
    const double scale = x.lpNorm<Eigen::Infinity>();
    for (int k = 1; k < 60; ++k) {
      term = (tau / k) * (A * term);
      acc += term;
      if (term.lpNorm<Eigen::Infinity>() <= 1e-18 * scale) break;
    }
    x = acc;
  }
  return x;
}

}  // namespace hetrdme
