#pragma once

#include <vector>

#include "tetiwd/linalg.hpp"
#include "tetiwd/rng.hpp"

namespace tetiwd {

// Wishart parameters for the between-cluster covariance chain. With
// `normalized` set (the default) the sampled mean equals `scale`, so the
// chain A_t -> A_{t+1} is mean-stationary and the dof acts purely as a
// stiffness knob; the classical convention (mean = dof * scale) stays
// available for sensitivity checks.
struct WishartParams {
  double dof = 10.0;
  Matrix scale;
  double s = 1.0;  // augmentation scalar for newborn rows
  bool normalized = true;
};

// Bartlett sampler (Cholesky of the scale times a lower-triangular factor
// with chi-distributed diagonal); supports real-valued dof > dim - 1.
Matrix sample_wishart(const WishartParams& params, Rng& rng);

// Log density including the normalizing constant (needed in MH ratios).
double log_wishart_density(const Matrix& a, const WishartParams& params);

// Principal submatrix after deleting the dying rows/columns.
Matrix resize_down(const Matrix& a, const std::vector<int>& dying);

// Appends n_new rows/columns one at a time: off-diagonal ~ N(0, s * core),
// Schur complement ~ W_1(dof - m, s) where m is the dimension after the
// append. Requires dof > resulting dimension.
Matrix augment_up(const Matrix& core, int n_new, double s, double dof, Rng& rng);

// One step of the covariance chain across a change in the chain set: delete
// dying rows, draw a Wishart around the reduced matrix, then augment a row
// per newborn chain (in chain-id order). Output rows follow chains_now.
Matrix sample_A_transition(const Matrix& a_prev, const std::vector<int>& chains_prev,
                           const std::vector<int>& chains_now, const WishartParams& params,
                           Rng& rng);

// Log density of a_now under the composite transition above. Also used with
// chains_prev == chains_now, where it reduces to a plain Wishart density.
double log_transition_density(const Matrix& a_now, const std::vector<int>& chains_now,
                              const Matrix& a_prev, const std::vector<int>& chains_prev,
                              const WishartParams& params);

}  // namespace tetiwd
