#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace tetiwd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// SPD test via Cholesky
inline bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  Eigen::LLT<Matrix> llt(symmetrized(m));
  return llt.info() == Eigen::Success;
}

// Cholesky factor L with a deterministic jitter escalation for draws that land
// numerically on the SPD boundary.
inline Matrix safe_cholesky(const Matrix& m) {
  Matrix a = symmetrized(m);
  double jitter = 0.0;
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = (jitter == 0.0) ? 1e-10 * scale : jitter * 100.0;
    a = symmetrized(m);
    a.diagonal().array() += jitter;
  }
  throw std::runtime_error("safe_cholesky: matrix is not positive definite");
}

inline Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spd_inverse: matrix is not positive definite");
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

inline double spd_logdet(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spd_logdet: matrix is not positive definite");
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

// Principal submatrix on the kept indices, in their given order.
inline Matrix principal_submatrix(const Matrix& m, const std::vector<int>& keep) {
  Matrix out(keep.size(), keep.size());
  for (size_t i = 0; i < keep.size(); ++i)
    for (size_t j = 0; j < keep.size(); ++j) out(i, j) = m(keep[i], keep[j]);
  return out;
}

// log of the multivariate gamma function Gamma_p(a)
inline double log_multigamma(int p, double a) {
  double r = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int j = 0; j < p; ++j) r += std::lgamma(a - 0.5 * j);
  return r;
}

}  // namespace tetiwd
