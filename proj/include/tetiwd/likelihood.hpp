#pragma once

#include <vector>

#include "tetiwd/linalg.hpp"

namespace tetiwd {

// Block-structured covariance Sigma_B = alpha I + Z A Z^T, where Z is the
// 0/1 membership matrix induced by `assignment` (one block per object) and A
// holds the between-cluster covariances. The diagonal of A plays the role the
// scalar between-class variance plays in the static, equidistant model.
struct BlockCov {
  std::vector<int> assignment;  // object -> block index in [0, k)
  Matrix A;                     // k x k SPD
  double alpha = 1.0;

  int num_objects() const { return static_cast<int>(assignment.size()); }
  int num_blocks() const { return static_cast<int>(A.rows()); }
  std::vector<int> block_sizes() const;
  Matrix sigma_dense() const;  // materializes alpha I + Z A Z^T
};

// Validates block structure (nonempty blocks, SPD A, alpha > 0).
BlockCov build_block_cov(std::vector<int> assignment, Matrix A, double alpha);

// Dense reference quantities for the translation-invariant likelihood.
// W_tilde = W - (1^T W 1)^{-1} W 1 1^T W annihilates the all-ones direction,
// so the likelihood depends on Sigma_B only through Delta.
struct TiwdWorkspace {
  Matrix W;        // Sigma_B^{-1}
  Matrix W_tilde;  // rank n-1, kernel spanned by 1
  Matrix Delta;    // Delta_ij = Sigma_ii + Sigma_jj - 2 Sigma_ij
  double logdet_gen = 0.0;
};

TiwdWorkspace compute_tilde_w(const BlockCov& cov);

// Sum of log eigenvalues above 1e-10 * lambda_max; requires exactly n-1 of
// them (throws "unexpected rank" otherwise). n = 1 gives 0 by convention.
double generalized_logdet(const Matrix& w_tilde);

enum class LikPath { fast, reference };

// log f(D | Sigma_B, d) = (d/2) logdet_gen(W_tilde) + (d/4) tr(W_tilde D),
// up to an additive constant. The fast path inverts only a k x k core
// (Woodbury) and reads D through per-block sums; the reference path goes
// through the dense eigendecomposition of W_tilde.
double loglik_tiw(const Matrix& d_mat, const BlockCov& cov, double dof,
                  LikPath path = LikPath::fast);

// Same likelihood from a raw covariance matrix (no block structure assumed).
// Used to check invariance across Sigma representatives with equal Delta.
double loglik_tiw_sigma(const Matrix& d_mat, const Matrix& sigma, double dof);

// Similarity-input path: log W_d(K | Sigma_B) up to a constant,
// -(d/2) (log|Sigma_B| + tr(Sigma_B^{-1} K)).
double loglik_wishart_gram(const Matrix& k_mat, const BlockCov& cov, double dof);

// --- fast-path machinery ----------------------------------------------------
// Per-block sufficient statistics of D: S(c,c') = sum of D_ij over i in block
// c, j in block c'. Building from scratch is the OpenMP kernel; single-object
// moves are O(n).
class BlockStats {
 public:
  BlockStats() = default;
  BlockStats(const Matrix& d_mat, const std::vector<int>& assignment, int num_blocks);

  int num_blocks() const { return static_cast<int>(sizes_.size()); }
  int num_objects() const { return n_; }
  const Matrix& block_sums() const { return s_; }
  const std::vector<int>& sizes() const { return sizes_; }

  // Row sums of object l's distance row grouped by block, r_c = sum_{j in c} D_lj.
  Vector row_sums(const Matrix& d_mat, const std::vector<int>& assignment, int l) const;

  // Remove object l (currently in `block`, with row sums r); the block may
  // become empty, in which case drop_block must be called by the owner.
  void remove(int block, const Vector& r);
  void add(int block, const Vector& r);
  void drop_block(int block);   // erase an empty block, shifting higher indices down
  void append_block();          // add an empty block at the end

 private:
  int n_ = 0;
  Matrix s_;
  std::vector<int> sizes_;
};

// Likelihood from cached block statistics; O(k^3).
double loglik_tiw_fast(const BlockStats& stats, const Matrix& A, double alpha, double dof);

}  // namespace tetiwd
