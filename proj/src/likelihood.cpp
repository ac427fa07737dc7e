#include "tetiwd/likelihood.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <stdexcept>

namespace tetiwd {

namespace {
constexpr double kRankTol = 1e-10;  // relative zero-threshold for the generalized determinant
}

std::vector<int> BlockCov::block_sizes() const {
  std::vector<int> sizes(num_blocks(), 0);
  for (int b : assignment) ++sizes[b];
  return sizes;
}

Matrix BlockCov::sigma_dense() const {
  const int n = num_objects();
  Matrix sigma(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sigma(i, j) = A(assignment[i], assignment[j]);
  sigma.diagonal().array() += alpha;
  return sigma;
}

BlockCov build_block_cov(std::vector<int> assignment, Matrix A, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("build_block_cov: alpha must be > 0");
  if (A.rows() != A.cols()) throw std::invalid_argument("build_block_cov: A must be square");
  const int k = static_cast<int>(A.rows());
  std::vector<int> sizes(k, 0);
  for (int b : assignment) {
    if (b < 0 || b >= k) throw std::invalid_argument("build_block_cov: block index out of range");
    ++sizes[b];
  }
  for (int c = 0; c < k; ++c)
    if (sizes[c] == 0) throw std::invalid_argument("build_block_cov: empty block");
  if (!is_spd(A)) throw std::invalid_argument("build_block_cov: A is not positive definite");
  return BlockCov{std::move(assignment), std::move(A), alpha};
}

double generalized_logdet(const Matrix& w_tilde) {
  const int n = static_cast<int>(w_tilde.rows());
  if (n == 1) return 0.0;  // empty product
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(w_tilde), Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double thresh = kRankTol * ev.maxCoeff();
  double logdet = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (ev[i] > thresh) {
      logdet += std::log(ev[i]);
      ++count;
    }
  }
  if (count != n - 1) throw std::runtime_error("generalized_logdet: unexpected rank");
  return logdet;
}

TiwdWorkspace compute_tilde_w(const BlockCov& cov) {
  const Matrix sigma = cov.sigma_dense();
  const int n = static_cast<int>(sigma.rows());
  TiwdWorkspace ws;
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("compute_tilde_w: Sigma_B numerically singular");
  ws.W = llt.solve(Matrix::Identity(n, n));
  ws.W = symmetrized(ws.W);
  const Vector w1 = ws.W * Vector::Ones(n);
  const double s = w1.sum();  // 1^T W 1, > 0 for SPD W
  ws.W_tilde = symmetrized(ws.W - (w1 * w1.transpose()) / s);
  ws.Delta.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      ws.Delta(i, j) = sigma(i, i) + sigma(j, j) - 2.0 * sigma(i, j);
  ws.logdet_gen = generalized_logdet(ws.W_tilde);
  return ws;
}

double loglik_tiw_sigma(const Matrix& d_mat, const Matrix& sigma, double dof) {
  const int n = static_cast<int>(sigma.rows());
  Eigen::LLT<Matrix> llt(symmetrized(sigma));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("loglik_tiw_sigma: covariance not positive definite");
  const Matrix w = symmetrized(llt.solve(Matrix::Identity(n, n)));
  const Vector w1 = w * Vector::Ones(n);
  const Matrix w_tilde = symmetrized(w - (w1 * w1.transpose()) / w1.sum());
  const double logdet = generalized_logdet(w_tilde);
  const double trace = (w_tilde.array() * d_mat.array()).sum();
  return 0.5 * dof * logdet + 0.25 * dof * trace;
}

BlockStats::BlockStats(const Matrix& d_mat, const std::vector<int>& assignment, int num_blocks)
    : n_(static_cast<int>(assignment.size())), s_(Matrix::Zero(num_blocks, num_blocks)),
      sizes_(num_blocks, 0) {
  for (int b : assignment) ++sizes_[b];
  const int k = num_blocks;
  // Row-partitioned accumulation: each row's contribution is computed by one
  // thread into its own slot, then combined serially in row order, so the
  // result does not depend on the thread count.
  std::vector<Matrix> partial(static_cast<size_t>(n_));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n_; ++i) {
    Matrix local = Matrix::Zero(k, k);
    const int bi = assignment[i];
    for (int j = 0; j < n_; ++j) local(bi, assignment[j]) += d_mat(i, j);
    partial[i] = std::move(local);
  }
  for (int i = 0; i < n_; ++i) s_ += partial[i];
  s_ = symmetrized(s_);
}

Vector BlockStats::row_sums(const Matrix& d_mat, const std::vector<int>& assignment, int l) const {
  Vector r = Vector::Zero(num_blocks());
  const int total = static_cast<int>(assignment.size());
  for (int j = 0; j < total; ++j)
    if (assignment[j] >= 0) r[assignment[j]] += d_mat(l, j);
  return r;
}

void BlockStats::remove(int block, const Vector& r) {
  const int k = num_blocks();
  for (int c = 0; c < k; ++c) {
    s_(block, c) -= r[c];
    s_(c, block) -= r[c];
  }
  // the diagonal loses D_lj + D_jl for j in the block; r[block] already
  // excludes the zero self-distance
  --sizes_[block];
  --n_;
}

void BlockStats::add(int block, const Vector& r) {
  const int k = num_blocks();
  for (int c = 0; c < k; ++c) {
    s_(block, c) += r[c];
    s_(c, block) += r[c];
  }
  ++sizes_[block];
  ++n_;
}

void BlockStats::drop_block(int block) {
  const int k = num_blocks();
  if (sizes_[block] != 0) throw std::logic_error("drop_block: block not empty");
  Matrix out(k - 1, k - 1);
  int oi = 0;
  for (int i = 0; i < k; ++i) {
    if (i == block) continue;
    int oj = 0;
    for (int j = 0; j < k; ++j) {
      if (j == block) continue;
      out(oi, oj) = s_(i, j);
      ++oj;
    }
    ++oi;
  }
  s_ = std::move(out);
  sizes_.erase(sizes_.begin() + block);
}

void BlockStats::append_block() {
  const int k = num_blocks();
  Matrix out = Matrix::Zero(k + 1, k + 1);
  out.topLeftCorner(k, k) = s_;
  s_ = std::move(out);
  sizes_.push_back(0);
}

double loglik_tiw_fast(const BlockStats& stats, const Matrix& A, double alpha, double dof) {
  const int k = stats.num_blocks();
  const int n = stats.num_objects();
  if (k != static_cast<int>(A.rows()))
    throw std::invalid_argument("loglik_tiw_fast: dimension mismatch");
  if (n == 1) return 0.0;

  Vector nvec(k);
  for (int c = 0; c < k; ++c) nvec[c] = stats.sizes()[c];

  // Woodbury: W = (1/a) I - (1/a^2) Z C Z^T with C = (A^{-1} + N/a)^{-1}
  Eigen::LLT<Matrix> llt_a(symmetrized(A));
  if (llt_a.info() != Eigen::Success)
    throw std::runtime_error("loglik_tiw_fast: A not positive definite");
  Matrix core = llt_a.solve(Matrix::Identity(k, k));
  core.diagonal() += nvec / alpha;
  Eigen::LLT<Matrix> llt_c(symmetrized(core));
  if (llt_c.info() != Eigen::Success)
    throw std::runtime_error("loglik_tiw_fast: Woodbury core not positive definite");
  const Matrix c_mat = symmetrized(llt_c.solve(Matrix::Identity(k, k)));

  // W 1 = Z w with w_c = (1 - (C n)_c / a) / a; 1^T W 1 = n . w
  const Vector u = c_mat * nvec;
  const Vector w = (Vector::Ones(k) - u / alpha) / alpha;
  const double s = nvec.dot(w);

  // W_tilde = (1/a) I - Z G Z^T
  const Matrix g = c_mat / (alpha * alpha) + (w * w.transpose()) / s;

  // spectrum: (n-k) copies of 1/a plus the eigenvalues of the k x k matrix
  // M = (1/a) I - N^{1/2} G N^{1/2}, whose kernel is the 1-direction
  const Vector sqrt_n = nvec.cwiseSqrt();
  Matrix m = -(sqrt_n.asDiagonal() * g * sqrt_n.asDiagonal());
  m.diagonal().array() += 1.0 / alpha;
  m = symmetrized(m);
  double logdet = (n - k) * std::log(1.0 / alpha);
  // filling the known kernel with an eigenvalue 1/a makes M positive definite,
  // so a Cholesky logdet replaces the eigendecomposition in the hot loop
  const Vector kern = sqrt_n / sqrt_n.norm();
  const Matrix filled = m + (kern * kern.transpose()) / alpha;
  Eigen::LLT<Matrix> llt_m(filled);
  if (llt_m.info() == Eigen::Success) {
    logdet += 2.0 * Matrix(llt_m.matrixL()).diagonal().array().log().sum() -
              std::log(1.0 / alpha);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    double lmax = ev.maxCoeff();
    if (n > k) lmax = std::max(lmax, 1.0 / alpha);
    const double thresh = kRankTol * lmax;
    int count = n - k;
    for (int i = 0; i < k; ++i) {
      if (ev[i] > thresh) {
        logdet += std::log(ev[i]);
        ++count;
      }
    }
    if (count != n - 1) throw std::runtime_error("loglik_tiw_fast: unexpected rank");
  }

  // tr(W_tilde D) = -sum_{cc'} G_{cc'} S_{cc'}; the (1/a) I part vanishes on
  // the zero diagonal of D
  const double trace = -(g.array() * stats.block_sums().array()).sum();
  return 0.5 * dof * logdet + 0.25 * dof * trace;
}

double loglik_tiw(const Matrix& d_mat, const BlockCov& cov, double dof, LikPath path) {
  if (d_mat.rows() != cov.num_objects() || d_mat.cols() != cov.num_objects())
    throw std::invalid_argument("loglik_tiw: size mismatch");
  if (path == LikPath::reference) {
    if (cov.num_objects() == 1) return 0.0;
    const TiwdWorkspace ws = compute_tilde_w(cov);
    const double trace = (ws.W_tilde.array() * d_mat.array()).sum();
    return 0.5 * dof * ws.logdet_gen + 0.25 * dof * trace;
  }
  BlockStats stats(d_mat, cov.assignment, cov.num_blocks());
  return loglik_tiw_fast(stats, cov.A, cov.alpha, dof);
}

double loglik_wishart_gram(const Matrix& k_mat, const BlockCov& cov, double dof) {
  if (k_mat.rows() != cov.num_objects() || k_mat.cols() != cov.num_objects())
    throw std::invalid_argument("loglik_wishart_gram: size mismatch");
  const Matrix sigma = cov.sigma_dense();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("loglik_wishart_gram: Sigma_B not positive definite");
  const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  const double trace = llt.solve(k_mat).trace();
  return -0.5 * dof * (logdet + trace);
}

}  // namespace tetiwd
