#include "tetiwd/cov_prior.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace tetiwd {

namespace {

// classical Wishart W(dof, V): mean dof * V
Matrix sample_wishart_classical(double dof, const Matrix& v, Rng& rng) {
  const int p = static_cast<int>(v.rows());
  if (!(dof > p - 1)) throw std::invalid_argument("sample_wishart: dof too small for dimension");
  const Matrix l = safe_cholesky(v);
  Matrix t = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    t(i, i) = std::sqrt(rng.chi_squared(dof - i));
    for (int j = 0; j < i; ++j) t(i, j) = rng.normal();
  }
  const Matrix lt = l * t;
  return symmetrized(lt * lt.transpose());
}

double log_wishart_density_classical(const Matrix& a, double dof, const Matrix& v) {
  const int p = static_cast<int>(a.rows());
  if (a.rows() != v.rows()) throw std::invalid_argument("log_wishart_density: dimension mismatch");
  if (!(dof > p - 1)) throw std::invalid_argument("log_wishart_density: dof too small");
  const double logdet_a = spd_logdet(a);
  const double logdet_v = spd_logdet(v);
  Eigen::LLT<Matrix> llt(symmetrized(v));
  const double tr = llt.solve(a).trace();
  return 0.5 * (dof - p - 1) * logdet_a - 0.5 * tr - 0.5 * dof * p * std::log(2.0) -
         0.5 * dof * logdet_v - log_multigamma(p, 0.5 * dof);
}

Matrix effective_scale(const WishartParams& params) {
  return params.normalized ? Matrix(params.scale / params.dof) : params.scale;
}

}  // namespace

Matrix sample_wishart(const WishartParams& params, Rng& rng) {
  return sample_wishart_classical(params.dof, effective_scale(params), rng);
}

double log_wishart_density(const Matrix& a, const WishartParams& params) {
  return log_wishart_density_classical(a, params.dof, effective_scale(params));
}

Matrix resize_down(const Matrix& a, const std::vector<int>& dying) {
  const int k = static_cast<int>(a.rows());
  std::vector<int> keep;
  for (int i = 0; i < k; ++i)
    if (std::find(dying.begin(), dying.end(), i) == dying.end()) keep.push_back(i);
  if (keep.empty()) throw std::invalid_argument("resize_down: all chains deleted");
  return principal_submatrix(a, keep);
}

Matrix augment_up(const Matrix& core, int n_new, double s, double dof, Rng& rng) {
  Matrix a = core;
  for (int j = 0; j < n_new; ++j) {
    const int m = static_cast<int>(a.rows()) + 1;  // dimension after this append
    if (!(dof - m > 0.0))
      throw std::invalid_argument("augment_up: dof must exceed the resulting chain count");
    const Matrix l = safe_cholesky(a);
    Vector z(m - 1);
    for (int i = 0; i < m - 1; ++i) z[i] = rng.normal();
    const Vector a12 = std::sqrt(s) * (l * z);  // N(0, s * A11)
    const double schur = s * rng.chi_squared(dof - m);  // W_1(dof - m, s)
    Eigen::LLT<Matrix> llt(symmetrized(a));
    const double quad = a12.dot(llt.solve(a12));
    Matrix grown(m, m);
    grown.topLeftCorner(m - 1, m - 1) = a;
    grown.topRightCorner(m - 1, 1) = a12;
    grown.bottomLeftCorner(1, m - 1) = a12.transpose();
    grown(m - 1, m - 1) = schur + quad;
    a = std::move(grown);
  }
  return a;
}

namespace {

// Output layout used by the transition: survivors in chains_now order first,
// then newborns in chain-id order; returns the row permutation mapping that
// layout onto chains_now order.
struct TransitionLayout {
  std::vector<int> survivor_prev_idx;  // positions in chains_prev, in chains_now survivor order
  std::vector<int> draw_to_now;        // draw row -> position in chains_now
  int num_new = 0;
};

TransitionLayout make_layout(const std::vector<int>& chains_prev,
                             const std::vector<int>& chains_now) {
  TransitionLayout lay;
  std::vector<int> newborn_ids;
  std::vector<int> survivors_now_pos;
  for (size_t i = 0; i < chains_now.size(); ++i) {
    const auto it = std::find(chains_prev.begin(), chains_prev.end(), chains_now[i]);
    if (it != chains_prev.end()) {
      lay.survivor_prev_idx.push_back(static_cast<int>(it - chains_prev.begin()));
      survivors_now_pos.push_back(static_cast<int>(i));
    } else {
      newborn_ids.push_back(chains_now[i]);
    }
  }
  std::sort(newborn_ids.begin(), newborn_ids.end());
  lay.num_new = static_cast<int>(newborn_ids.size());
  lay.draw_to_now = survivors_now_pos;
  for (int id : newborn_ids) {
    const auto it = std::find(chains_now.begin(), chains_now.end(), id);
    lay.draw_to_now.push_back(static_cast<int>(it - chains_now.begin()));
  }
  return lay;
}

Matrix permute(const Matrix& a, const std::vector<int>& to_pos) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(to_pos[i], to_pos[j]) = a(i, j);
  return out;
}

}  // namespace

Matrix sample_A_transition(const Matrix& a_prev, const std::vector<int>& chains_prev,
                           const std::vector<int>& chains_now, const WishartParams& params,
                           Rng& rng) {
  if (chains_now.empty())
    throw std::invalid_argument("sample_A_transition: no chains at target epoch");
  const TransitionLayout lay = make_layout(chains_prev, chains_now);

  Matrix draw;
  if (!lay.survivor_prev_idx.empty()) {
    const Matrix reduced = principal_submatrix(a_prev, lay.survivor_prev_idx);
    WishartParams step = params;
    step.scale = reduced;
    draw = sample_wishart(step, rng);
  } else {
    draw = Matrix(0, 0);
  }
  if (lay.num_new > 0) {
    if (draw.rows() == 0) {
      // no surviving chains: classical root draw, same convention as the
      // chain's starting prior
      WishartParams root = params;
      root.scale = Matrix::Identity(1, 1) * params.s;
      root.normalized = false;
      draw = sample_wishart(root, rng);
      draw = augment_up(draw, lay.num_new - 1, params.s, params.dof, rng);
    } else {
      draw = augment_up(draw, lay.num_new, params.s, params.dof, rng);
    }
  }
  return permute(draw, lay.draw_to_now);
}

double log_transition_density(const Matrix& a_now, const std::vector<int>& chains_now,
                              const Matrix& a_prev, const std::vector<int>& chains_prev,
                              const WishartParams& params) {
  const TransitionLayout lay = make_layout(chains_prev, chains_now);
  // lay.draw_to_now maps draw layout -> chains_now; invert to read a_now in
  // draw layout
  const int k = static_cast<int>(chains_now.size());
  std::vector<int> draw_rows(k);
  for (int i = 0; i < k; ++i) draw_rows[i] = lay.draw_to_now[i];
  Matrix a = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = a_now(draw_rows[i], draw_rows[j]);

  double lp = 0.0;
  int core_dim = static_cast<int>(lay.survivor_prev_idx.size());
  if (core_dim > 0) {
    const Matrix reduced = principal_submatrix(a_prev, lay.survivor_prev_idx);
    WishartParams step = params;
    step.scale = reduced;
    lp += log_wishart_density(a.topLeftCorner(core_dim, core_dim), step);
  } else if (lay.num_new > 0) {
    WishartParams root = params;
    root.scale = Matrix::Identity(1, 1) * params.s;
    root.normalized = false;
    lp += log_wishart_density(a.topLeftCorner(1, 1), root);
    core_dim = 1;
  }
  // newborn rows: N(0, s * A11) off-diagonal and W_1(dof - m, s) Schur
  // complement; the (A12, A22.1) -> (A12, A22) change of variables has unit
  // Jacobian
  for (int m = core_dim + 1; m <= static_cast<int>(a.rows()); ++m) {
    if (!(params.dof - m > 0.0))
      throw std::invalid_argument("log_transition_density: dof too small for chain count");
    const Matrix a11 = a.topLeftCorner(m - 1, m - 1);
    const Vector a12 = a.block(0, m - 1, m - 1, 1);
    Eigen::LLT<Matrix> llt(symmetrized(a11));
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("log_transition_density: leading block not SPD");
    const double quad = a12.dot(llt.solve(a12));
    const double schur = a(m - 1, m - 1) - quad;
    if (!(schur > 0.0)) return -std::numeric_limits<double>::infinity();
    const double logdet_a11 = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    // N(a12; 0, s * A11)
    lp += -0.5 * (m - 1) * std::log(2.0 * M_PI * params.s) - 0.5 * logdet_a11 -
          0.5 * quad / params.s;
    // W_1(dof - m, s) == Gamma(shape (dof-m)/2, scale 2s)
    const double nu = params.dof - m;
    lp += (0.5 * nu - 1.0) * std::log(schur) - schur / (2.0 * params.s) -
          0.5 * nu * std::log(2.0 * params.s) - std::lgamma(0.5 * nu);
  }
  return lp;
}

}  // namespace tetiwd
