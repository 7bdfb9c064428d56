#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hetrdme {

/// Dense matrix exponential (Pade scaling and squaring).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

/// exp(tA) v by a scaled Taylor series; only matrix-vector products with A are formed.
Eigen::VectorXd expm_action(const Eigen::SparseMatrix<double>& A, double t, const Eigen::VectorXd& v);

}  // namespace hetrdme
