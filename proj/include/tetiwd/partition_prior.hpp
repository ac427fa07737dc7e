#pragma once

#include <string>
#include <vector>

namespace tetiwd {

// Dirichlet-Multinomial prior parameters. capacity <= 0 selects the infinite
// (CRP / Ewens) limit; a finite capacity is kept for enumeration tests.
struct PriorParams {
  double xi = 1.0;   // Dirichlet rate
  int capacity = 0;  // mixture capacity k, <= 0 means infinite
  int m_aux = 3;     // auxiliary candidates per new-cluster type

  bool infinite() const { return capacity <= 0; }
};

// Per-epoch partitions plus the registry linking blocks across adjacent
// epochs into persistent cluster chains. Block indices at each epoch are
// dense in [0, k_t); chains_at[t][b] is the chain id of block b, and a chain
// occupies a contiguous run of epochs.
struct PartitionState {
  std::vector<std::vector<int>> assignments;  // [t][object] -> block
  std::vector<std::vector<int>> chains_at;    // [t][block] -> chain id
  int next_chain_id = 0;

  int num_epochs() const { return static_cast<int>(assignments.size()); }
  // count of assigned objects (an index of -1 marks the object currently held
  // out of its epoch during a Gibbs move)
  int size_at(int t) const {
    int n = 0;
    for (int b : assignments[t])
      if (b >= 0) ++n;
    return n;
  }
  int num_blocks_at(int t) const { return static_cast<int>(chains_at[t].size()); }
  std::vector<int> block_sizes_at(int t) const;
  // block index of a chain at epoch t, or -1 when absent
  int block_of_chain(int chain, int t) const;
  int chain_size_at(int chain, int t) const;

  // one chain covering all epochs, every object in it
  static PartitionState single_chain(const std::vector<int>& sizes_per_epoch);

  // Label-free canonical form (first-occurrence block labels plus parent
  // links); equal strings mean equal clusterings, so no label switching can
  // affect comparisons.
  std::string canonical_key() const;
  // per-epoch block structure only, ignoring chain identity
  std::string partition_key() const;

  void check_invariants() const;  // throws std::logic_error on violation
};

// log P(B | xi, k) for a single epoch: Dirichlet-Multinomial over partitions
// for finite capacity, Ewens for the infinite limit. Throws when the
// partition has more blocks than the capacity allows.
double log_prior_partition(const std::vector<int>& block_sizes, const PriorParams& params);

// One epoch of the conditional prior, reduced to its sufficient statistics:
// per-block sizes and pseudo-counts (the size at t-1 of the chain a block
// continues; 0 for a newborn block), plus the previous epoch's totals.
// Returns -inf when the configuration is infeasible under a finite capacity.
struct EpochPriorView {
  std::vector<int> sizes;
  std::vector<int> pseudo;
  int n_prev = 0;       // objects at t-1
  int chains_prev = 0;  // blocks at t-1
};

double log_conditional_prior(const EpochPriorView& view, const PriorParams& params);

// View of epoch t of `state` (t = 0 has an empty previous epoch, which makes
// the conditional collapse to the single-epoch prior).
EpochPriorView epoch_prior_view(const PartitionState& state, int t);

// log P(B_t | B_{t-1}) read off the registry.
double log_conditional_prior(const PartitionState& state, int t, const PriorParams& params);

// --- Gibbs assignment candidates --------------------------------------------

enum class CandidateKind {
  existing,  // join a block present at t
  revive,    // new block continuing a chain alive at t-1 but absent at t
  adopt,     // new block adopted as parent by a chain born at t+1
  bridge,    // new block linking a t-1 chain to a t+1 orphan
  fresh      // completely new chain
};

struct AssignCandidate {
  CandidateKind kind = CandidateKind::fresh;
  int block = -1;       // existing: block index at t
  int chain_prev = -1;  // revive/bridge: chain id alive at t-1
  int chain_next = -1;  // adopt/bridge: orphan chain id at t+1
  double log_prior = 0.0;
};

// Prior log-weights for reassigning one currently-removed object at epoch t.
// Each weight is the exact log of P(B_t | B_{t-1}) * P(B_{t+1} | B_t)
// evaluated at the candidate state (boundary epochs drop the missing factor);
// common terms cancel in normalization. New-cluster kinds are listed once and
// carry log(1/m_aux) so the caller can instantiate m_aux parameter draws per
// kind. Infeasible candidates (finite capacity exhausted) are omitted.
std::vector<AssignCandidate> assignment_prior_logweights(const PartitionState& state, int t,
                                                         const PriorParams& params);

}  // namespace tetiwd
