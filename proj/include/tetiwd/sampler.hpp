#pragma once

#include <optional>
#include <vector>

#include "tetiwd/cov_prior.hpp"
#include "tetiwd/distance_data.hpp"
#include "tetiwd/likelihood.hpp"
#include "tetiwd/partition_prior.hpp"
#include "tetiwd/rng.hpp"

namespace tetiwd {

struct ModelHyper {
  double xi = 1.0;
  int capacity = 0;  // <= 0 selects the CRP limit
  int m_aux = 3;
  double dof = 100.0;  // degrees of freedom d (also the annealing knob)
  double s = 1.0;
  bool wishart_normalized = true;
  double alpha_shape = 1.0;  // Gamma prior on alpha, shape r
  double alpha_scale = 1.0;  // Gamma prior scale (named apart from m_aux)
};

struct SamplerOptions {
  bool update_A = true;
  bool update_alpha = true;
  std::optional<double> fixed_alpha;   // set: alpha pinned, never resampled
  std::optional<double> init_alpha;    // starting value only; alpha still resampled
  std::optional<double> fixed_a_diag;  // set: A_t = value * I, MH disabled
  double alpha_proposal_sd = 0.3;      // log-normal random walk scale
  double proposal_dof = 0.0;           // <= 0: reuse hyper.dof for MH proposals
  bool paranoid = false;               // re-verify state invariants every sweep
};

struct RunConfig {
  int sweeps = 500;
  int burnin = 250;
  double anneal_gamma = 1.05;  // 1.0 disables annealing
  int anneal_max_sweeps = 200;
  int anneal_stable_sweeps = 10;
};

// Full MCMC state: per-epoch partitions with their chain registry, the
// between-cluster covariance per epoch (rows follow chains_at[t]), and alpha.
struct ModelState {
  PartitionState partitions;
  std::vector<Matrix> A;
  double alpha = 1.0;
  double dof = 100.0;

  void check_invariants() const;
};

struct TraceRow {
  int sweep = 0;
  char phase = 's';  // b = burn-in, s = sampling, a = annealing
  double log_posterior = 0.0;
  double alpha = 0.0;
  double dof = 0.0;
  std::vector<int> k_bt;
  std::vector<double> accept_A;  // per-epoch MH acceptance of the sweep
  double wall_s = 0.0;
};

struct Trace {
  int num_epochs = 0;
  std::vector<TraceRow> rows;
};

struct RunResult {
  Trace trace;
  ModelState frozen;
  bool annealing_converged = true;
  std::string warning;
};

class Sampler {
 public:
  Sampler(const DistanceSeries& data, ModelHyper hyper, SamplerOptions opts, uint64_t seed);

  // one chain spanning all epochs; 1x1 covariances from the root prior
  void init();

  // Gibbs step for object l at epoch t: removes it (dropping an emptied block
  // and severing its chain), scores every candidate destination by exact
  // prior ratio times epoch-t likelihood, samples one, and commits the
  // registry and covariance changes.
  void reassign_object(int t, int l);

  bool mh_update_A(int t);  // Wishart random-walk with Hastings correction
  void update_alpha();

  void gibbs_sweep();

  RunResult run(const RunConfig& config);

  double log_posterior() const;
  double epoch_loglik(int t) const;  // from the incremental block statistics

  const ModelState& state() const { return state_; }
  ModelState& state() { return state_; }
  const Trace& trace() const { return trace_; }
  Rng& rng() { return rng_; }

  // rebuilds block statistics from scratch (used after external state edits)
  void refresh_stats();

 private:
  struct ScoredCandidate {
    AssignCandidate cand;
    Matrix a_grown;  // covariance used when the candidate opens a new block
    double log_weight = 0.0;
  };

  WishartParams chain_params(const Matrix& scale) const;
  WishartParams root_params(int dim) const;
  double log_cov_prior_at(int t, const Matrix& a_t) const;
  void remove_object(int t, int l);
  void commit(int t, int l, const ScoredCandidate& chosen, const Vector& row);
  Matrix candidate_cov(int t, bool new_block, Matrix* a_grown_out);

  const DistanceSeries& data_;
  ModelHyper hyper_;
  SamplerOptions opts_;
  ModelState state_;
  std::vector<BlockStats> stats_;
  Rng rng_;
  Trace trace_;
  int sweep_count_ = 0;
};

// Utility: degrees-of-freedom estimate from the numerical rank of the
// centered Gram matrices (largest across epochs).
double estimate_dof_from_rank(const DistanceSeries& data, double rel_tol = 1e-9);

// Moment-based default scale for the Gamma prior on alpha, from the median
// off-diagonal distance.
double moment_alpha_scale(const DistanceSeries& data);

}  // namespace tetiwd
