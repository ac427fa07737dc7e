#include "tetiwd/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tetiwd {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void ModelState::check_invariants() const {
  partitions.check_invariants();
  if (static_cast<int>(A.size()) != partitions.num_epochs())
    throw std::logic_error("model state: covariance list length mismatch");
  for (int t = 0; t < partitions.num_epochs(); ++t) {
    if (A[t].rows() != partitions.num_blocks_at(t))
      throw std::logic_error("model state: dim(A_t) != k_bt");
    if (!is_spd(A[t])) throw std::logic_error("model state: A_t not SPD");
  }
  if (!(alpha > 0.0)) throw std::logic_error("model state: alpha <= 0");
  if (!std::isfinite(dof) || dof <= 0.0) throw std::logic_error("model state: bad dof");
}

Sampler::Sampler(const DistanceSeries& data, ModelHyper hyper, SamplerOptions opts, uint64_t seed)
    : data_(data), hyper_(hyper), opts_(opts), rng_(seed) {
  trace_.num_epochs = data.num_epochs();
}

WishartParams Sampler::chain_params(const Matrix& scale) const {
  // the prior chain keeps the configured dof; annealing sharpens only the
  // likelihood exponent
  return WishartParams{hyper_.dof, scale, hyper_.s, hyper_.wishart_normalized};
}

WishartParams Sampler::root_params(int dim) const {
  // the root of the covariance chain is a classical Wishart around the
  // identity: its scale d*I matches the augmentation rows, while transitions
  // stay mean-stationary
  return WishartParams{hyper_.dof, Matrix::Identity(dim, dim), hyper_.s, false};
}

void Sampler::init() {
  std::vector<int> sizes(data_.num_epochs());
  for (int t = 0; t < data_.num_epochs(); ++t) sizes[t] = data_.size_at(t);
  state_.partitions = PartitionState::single_chain(sizes);
  state_.dof = hyper_.dof;
  if (opts_.fixed_alpha)
    state_.alpha = *opts_.fixed_alpha;
  else if (opts_.init_alpha)
    state_.alpha = *opts_.init_alpha;
  else
    state_.alpha = rng_.gamma(hyper_.alpha_shape, hyper_.alpha_scale);
  state_.A.clear();
  for (int t = 0; t < data_.num_epochs(); ++t) {
    if (opts_.fixed_a_diag)
      state_.A.push_back(Matrix::Constant(1, 1, *opts_.fixed_a_diag));
    else
      state_.A.push_back(sample_wishart(root_params(1), rng_));
  }
  refresh_stats();
  trace_.rows.clear();
  sweep_count_ = 0;
}

void Sampler::refresh_stats() {
  stats_.clear();
  for (int t = 0; t < data_.num_epochs(); ++t)
    stats_.emplace_back(data_.matrices[t], state_.partitions.assignments[t],
                        state_.partitions.num_blocks_at(t));
}

double Sampler::epoch_loglik(int t) const {
  return loglik_tiw_fast(stats_[t], state_.A[t], state_.alpha, state_.dof);
}

double Sampler::log_cov_prior_at(int t, const Matrix& a_t) const {
  if (t == 0) return log_wishart_density(a_t, root_params(static_cast<int>(a_t.rows())));
  return log_transition_density(a_t, state_.partitions.chains_at[t], state_.A[t - 1],
                                state_.partitions.chains_at[t - 1],
                                chain_params(Matrix::Identity(1, 1)));
}

double Sampler::log_posterior() const {
  PriorParams pri{hyper_.xi, hyper_.capacity, hyper_.m_aux};
  double lp = 0.0;
  for (int t = 0; t < data_.num_epochs(); ++t) {
    lp += epoch_loglik(t);
    lp += log_conditional_prior(state_.partitions, t, pri);
  }
  if (opts_.update_A && !opts_.fixed_a_diag)
    for (int t = 0; t < data_.num_epochs(); ++t) lp += log_cov_prior_at(t, state_.A[t]);
  if (opts_.update_alpha && !opts_.fixed_alpha)
    lp += (hyper_.alpha_shape - 1.0) * std::log(state_.alpha) -
          state_.alpha / hyper_.alpha_scale;
  return lp;
}

void Sampler::remove_object(int t, int l) {
  auto& part = state_.partitions;
  auto& assign = part.assignments[t];
  const int b_old = assign[l];
  const Vector r_old = stats_[t].row_sums(data_.matrices[t], assign, l);
  stats_[t].remove(b_old, r_old);
  assign[l] = -1;
  if (stats_[t].sizes()[b_old] > 0) return;

  // the block died: sever its chain and drop the row of A_t
  const int chain = part.chains_at[t][b_old];
  if (part.block_of_chain(chain, t + 1) >= 0) {
    const int suffix_id = part.next_chain_id++;
    for (int u = t + 1; u < part.num_epochs(); ++u) {
      const int b = part.block_of_chain(chain, u);
      if (b < 0) break;
      part.chains_at[u][b] = suffix_id;
    }
  }
  stats_[t].drop_block(b_old);
  // a lone object leaving leaves the epoch momentarily without any block
  state_.A[t] = state_.A[t].rows() == 1 ? Matrix(0, 0) : resize_down(state_.A[t], {b_old});
  part.chains_at[t].erase(part.chains_at[t].begin() + b_old);
  for (auto& a : assign)
    if (a > b_old) --a;
}

void Sampler::commit(int t, int l, const ScoredCandidate& chosen, const Vector& row) {
  auto& part = state_.partitions;
  auto& assign = part.assignments[t];
  if (chosen.cand.kind == CandidateKind::existing) {
    stats_[t].add(chosen.cand.block, row);
    assign[l] = chosen.cand.block;
    return;
  }
  const int k = stats_[t].num_blocks();
  stats_[t].append_block();
  Vector r2 = Vector::Zero(k + 1);
  r2.head(k) = row;
  stats_[t].add(k, r2);
  assign[l] = k;
  state_.A[t] = chosen.a_grown;

  int id = -1;
  switch (chosen.cand.kind) {
    case CandidateKind::fresh:
      id = part.next_chain_id++;
      break;
    case CandidateKind::revive:
      id = chosen.cand.chain_prev;
      break;
    case CandidateKind::adopt:
      id = chosen.cand.chain_next;
      break;
    case CandidateKind::bridge: {
      id = chosen.cand.chain_prev;
      for (int u = t + 1; u < part.num_epochs(); ++u) {
        const int b = part.block_of_chain(chosen.cand.chain_next, u);
        if (b < 0) break;
        part.chains_at[u][b] = id;
      }
      break;
    }
    default:
      throw std::logic_error("commit: bad candidate kind");
  }
  part.chains_at[t].push_back(id);
}

void Sampler::reassign_object(int t, int l) {
  remove_object(t, l);
  const auto& assign = state_.partitions.assignments[t];
  const int k = stats_[t].num_blocks();
  const Vector row = stats_[t].row_sums(data_.matrices[t], assign, l);

  PriorParams pri{hyper_.xi, hyper_.capacity, hyper_.m_aux};
  const auto prior_cands = assignment_prior_logweights(state_.partitions, t, pri);

  std::vector<ScoredCandidate> scored;
  scored.reserve(prior_cands.size() * hyper_.m_aux);
  for (const auto& cand : prior_cands) {
    if (cand.kind == CandidateKind::existing) {
      BlockStats s2 = stats_[t];
      s2.add(cand.block, row);
      const double ll = loglik_tiw_fast(s2, state_.A[t], state_.alpha, state_.dof);
      scored.push_back({cand, Matrix(), cand.log_prior + ll});
    } else {
      // the covariance chain has no mass on more chains than the dof allows
      if (!opts_.fixed_a_diag && hyper_.dof - (k + 1) <= 0.0) continue;
      BlockStats s2 = stats_[t];
      s2.append_block();
      Vector r2 = Vector::Zero(k + 1);
      r2.head(k) = row;
      s2.add(k, r2);
      for (int inst = 0; inst < hyper_.m_aux; ++inst) {
        Matrix grown;
        if (opts_.fixed_a_diag)
          grown = Matrix::Identity(k + 1, k + 1) * *opts_.fixed_a_diag;
        else if (k == 0)
          grown = sample_wishart(root_params(1), rng_);
        else
          grown = augment_up(state_.A[t], 1, hyper_.s, hyper_.dof, rng_);
        const double ll = loglik_tiw_fast(s2, grown, state_.alpha, state_.dof);
        scored.push_back({cand, std::move(grown), cand.log_prior + ll});
      }
    }
  }
  if (scored.empty()) throw std::logic_error("reassign_object: no feasible candidate");

  double max_lw = kNegInf;
  for (const auto& s : scored) max_lw = std::max(max_lw, s.log_weight);
  double total = 0.0;
  for (auto& s : scored) {
    s.log_weight = std::exp(s.log_weight - max_lw);
    total += s.log_weight;
  }
  const double u = rng_.uniform() * total;
  double cum = 0.0;
  size_t pick = scored.size() - 1;
  for (size_t i = 0; i < scored.size(); ++i) {
    cum += scored[i].log_weight;
    if (u < cum) {
      pick = i;
      break;
    }
  }
  commit(t, l, scored[pick], row);
}

bool Sampler::mh_update_A(int t) {
  if (!opts_.update_A || opts_.fixed_a_diag) return false;
  const Matrix a_old = state_.A[t];
  const double pdof = opts_.proposal_dof > 0.0 ? opts_.proposal_dof : hyper_.dof;
  WishartParams q_fwd{pdof, a_old, hyper_.s, hyper_.wishart_normalized};
  const Matrix a_new = sample_wishart(q_fwd, rng_);

  double lr = loglik_tiw_fast(stats_[t], a_new, state_.alpha, state_.dof) -
              loglik_tiw_fast(stats_[t], a_old, state_.alpha, state_.dof);
  lr += log_cov_prior_at(t, a_new) - log_cov_prior_at(t, a_old);
  if (t + 1 < data_.num_epochs()) {
    const auto& chains_t = state_.partitions.chains_at[t];
    const auto& chains_next = state_.partitions.chains_at[t + 1];
    const WishartParams base = chain_params(Matrix::Identity(1, 1));
    lr += log_transition_density(state_.A[t + 1], chains_next, a_new, chains_t, base) -
          log_transition_density(state_.A[t + 1], chains_next, a_old, chains_t, base);
  }
  // the Wishart random walk is not symmetric; include the proposal correction
  WishartParams q_rev{pdof, a_new, hyper_.s, hyper_.wishart_normalized};
  lr += log_wishart_density(a_old, q_rev) - log_wishart_density(a_new, q_fwd);

  if (std::log(rng_.uniform_pos()) < lr) {
    state_.A[t] = a_new;
    return true;
  }
  return false;
}

void Sampler::update_alpha() {
  if (!opts_.update_alpha || opts_.fixed_alpha) return;
  if (opts_.alpha_proposal_sd <= 0.0) return;
  const double a0 = state_.alpha;
  const double a1 = a0 * std::exp(opts_.alpha_proposal_sd * rng_.normal());
  double lr = (hyper_.alpha_shape - 1.0) * (std::log(a1) - std::log(a0)) -
              (a1 - a0) / hyper_.alpha_scale;
  lr += std::log(a1) - std::log(a0);  // log-normal walk proposal correction
  for (int t = 0; t < data_.num_epochs(); ++t)
    lr += loglik_tiw_fast(stats_[t], state_.A[t], a1, state_.dof) -
          loglik_tiw_fast(stats_[t], state_.A[t], a0, state_.dof);
  if (std::log(rng_.uniform_pos()) < lr) state_.alpha = a1;
}

void Sampler::gibbs_sweep() {
  const auto t_start = std::chrono::steady_clock::now();
  const int T = data_.num_epochs();
  for (int t = 0; t < T; ++t)
    for (int l = 0; l < data_.size_at(t); ++l) reassign_object(t, l);

  TraceRow row;
  row.accept_A.resize(T, 0.0);
  for (int t = 0; t < T; ++t) row.accept_A[t] = mh_update_A(t) ? 1.0 : 0.0;
  update_alpha();

  row.sweep = sweep_count_++;
  row.log_posterior = log_posterior();
  row.alpha = state_.alpha;
  row.dof = state_.dof;
  row.k_bt.resize(T);
  for (int t = 0; t < T; ++t) row.k_bt[t] = state_.partitions.num_blocks_at(t);
  row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  trace_.rows.push_back(std::move(row));

  if (opts_.paranoid) {
    state_.check_invariants();
    for (int t = 0; t < T; ++t) {
      const BlockStats fresh(data_.matrices[t], state_.partitions.assignments[t],
                             state_.partitions.num_blocks_at(t));
      const double err = (fresh.block_sums() - stats_[t].block_sums()).cwiseAbs().maxCoeff();
      if (err > 1e-6 * std::max(1.0, fresh.block_sums().cwiseAbs().maxCoeff()))
        throw std::logic_error("gibbs_sweep: incremental block sums drifted");
    }
  }
}

RunResult Sampler::run(const RunConfig& config) {
  init();
  RunResult result;
  auto set_phase = [&](char phase, int count) {
    for (int i = 0; i < count; ++i) {
      gibbs_sweep();
      trace_.rows.back().phase = phase;
    }
  };

  set_phase('b', config.burnin);

  ModelState best = state_;
  double best_lp = log_posterior();
  for (int i = 0; i < config.sweeps; ++i) {
    gibbs_sweep();
    trace_.rows.back().phase = 's';
    const double lp = trace_.rows.back().log_posterior;
    if (lp > best_lp) {
      best_lp = lp;
      best = state_;
    }
  }

  if (config.anneal_gamma > 1.0) {
    // stability is judged on the block structure: a singleton block dies and
    // is re-created within a sweep, re-drawing its chain link from the prior,
    // so link patterns can keep flipping after the clustering has frozen
    int stable = 0;
    std::string prev_key = state_.partitions.partition_key();
    bool converged = false;
    for (int i = 0; i < config.anneal_max_sweeps; ++i) {
      state_.dof *= config.anneal_gamma;
      gibbs_sweep();
      trace_.rows.back().phase = 'a';
      const std::string key = state_.partitions.partition_key();
      stable = (key == prev_key) ? stable + 1 : 0;
      prev_key = key;
      if (stable >= config.anneal_stable_sweeps) {
        converged = true;
        break;
      }
    }
    if (converged) {
      result.frozen = state_;
    } else {
      result.frozen = best;
      result.annealing_converged = false;
      result.warning = "annealing did not converge; returning max-posterior sampled state";
    }
  } else {
    result.frozen = config.sweeps > 0 ? best : state_;
  }
  result.trace = trace_;
  return result;
}

double moment_alpha_scale(const DistanceSeries& data) {
  // within-cluster entries concentrate around Delta = 2 * alpha and are the
  // small ones; a low quantile of the off-diagonal distances keeps the prior
  // scale on the within-cluster side even when most pairs straddle clusters
  std::vector<double> offdiag;
  for (const auto& d : data.matrices) {
    const int n = static_cast<int>(d.rows());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) offdiag.push_back(d(i, j));
  }
  if (offdiag.empty()) return 1.0;
  const size_t q10 = offdiag.size() / 10;
  std::nth_element(offdiag.begin(), offdiag.begin() + q10, offdiag.end());
  return std::max(1e-6, offdiag[q10] / 2.0);
}

double estimate_dof_from_rank(const DistanceSeries& data, double rel_tol) {
  int best = 1;
  for (const auto& d : data.matrices) {
    const int n = static_cast<int>(d.rows());
    const Matrix q = centering_projector(n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(-0.5 * q * d * q),
                                              Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < n; ++i)
      if (eig.eigenvalues()[i] > rel_tol * lmax) ++rank;
    best = std::max(best, rank);
  }
  return static_cast<double>(best);
}

}  // namespace tetiwd
