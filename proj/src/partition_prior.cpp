#include "tetiwd/partition_prior.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tetiwd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of the falling factorial k (k-1) ... (k-q+1)
double log_falling_factorial(int k, int q) {
  return std::lgamma(k + 1.0) - std::lgamma(k - q + 1.0);
}

}  // namespace

std::vector<int> PartitionState::block_sizes_at(int t) const {
  std::vector<int> sizes(num_blocks_at(t), 0);
  for (int b : assignments[t])
    if (b >= 0) ++sizes[b];
  return sizes;
}

int PartitionState::block_of_chain(int chain, int t) const {
  if (t < 0 || t >= num_epochs()) return -1;
  const auto& ids = chains_at[t];
  const auto it = std::find(ids.begin(), ids.end(), chain);
  return it == ids.end() ? -1 : static_cast<int>(it - ids.begin());
}

int PartitionState::chain_size_at(int chain, int t) const {
  const int b = block_of_chain(chain, t);
  if (b < 0) return 0;
  int count = 0;
  for (int x : assignments[t])
    if (x == b) ++count;
  return count;
}

PartitionState PartitionState::single_chain(const std::vector<int>& sizes_per_epoch) {
  PartitionState state;
  state.next_chain_id = 1;
  for (int n : sizes_per_epoch) {
    state.assignments.emplace_back(n, 0);
    state.chains_at.push_back({0});
  }
  return state;
}

std::string PartitionState::canonical_key() const {
  std::ostringstream out;
  std::vector<std::vector<int>> canon_of_block(num_epochs());
  for (int t = 0; t < num_epochs(); ++t) {
    // first-occurrence relabeling of blocks
    std::vector<int>& canon = canon_of_block[t];
    canon.assign(num_blocks_at(t), -1);
    int next = 0;
    if (t) out << ';';
    for (size_t i = 0; i < assignments[t].size(); ++i) {
      int& c = canon[assignments[t][i]];
      if (c < 0) c = next++;
      if (i) out << ',';
      out << c;
    }
    if (t == 0) continue;
    // parent links in canonical label space, listed in canonical block order
    std::vector<int> parent_of_canon(num_blocks_at(t), -1);
    for (int b = 0; b < num_blocks_at(t); ++b) {
      const int prev_block = block_of_chain(chains_at[t][b], t - 1);
      parent_of_canon[canon[b]] = prev_block < 0 ? -1 : canon_of_block[t - 1][prev_block];
    }
    out << '|';
    for (size_t c = 0; c < parent_of_canon.size(); ++c) {
      if (c) out << ',';
      out << parent_of_canon[c];
    }
  }
  return out.str();
}

std::string PartitionState::partition_key() const {
  std::ostringstream out;
  for (int t = 0; t < num_epochs(); ++t) {
    std::vector<int> canon(num_blocks_at(t), -1);
    int next = 0;
    if (t) out << ';';
    for (size_t i = 0; i < assignments[t].size(); ++i) {
      int& c = canon[assignments[t][i]];
      if (c < 0) c = next++;
      if (i) out << ',';
      out << c;
    }
  }
  return out.str();
}

void PartitionState::check_invariants() const {
  if (assignments.size() != chains_at.size())
    throw std::logic_error("state: epoch count mismatch");
  std::map<int, std::vector<int>> epochs_of_chain;
  for (int t = 0; t < num_epochs(); ++t) {
    const int k = num_blocks_at(t);
    const auto sizes = block_sizes_at(t);
    for (int b : assignments[t])
      if (b < 0 || b >= k) throw std::logic_error("state: block index out of range");
    for (int c = 0; c < k; ++c)
      if (sizes[c] == 0) throw std::logic_error("state: empty block");
    std::vector<int> seen;
    for (int id : chains_at[t]) {
      if (id < 0 || id >= next_chain_id) throw std::logic_error("state: bad chain id");
      if (std::find(seen.begin(), seen.end(), id) != seen.end())
        throw std::logic_error("state: duplicate chain at epoch");
      seen.push_back(id);
      epochs_of_chain[id].push_back(t);
    }
  }
  for (const auto& [id, epochs] : epochs_of_chain) {
    for (size_t i = 1; i < epochs.size(); ++i)
      if (epochs[i] != epochs[i - 1] + 1)
        throw std::logic_error("state: chain not contiguous across epochs");
  }
}

double log_conditional_prior(const EpochPriorView& view, const PriorParams& params) {
  const double xi = params.xi;
  int n_t = 0, q = 0;
  for (int s : view.sizes) n_t += s;
  for (int m : view.pseudo)
    if (m == 0) ++q;
  if (view.sizes.size() != view.pseudo.size())
    throw std::invalid_argument("epoch view: sizes/pseudo mismatch");

  double lp = std::lgamma(xi + view.n_prev) - std::lgamma(n_t + xi + view.n_prev);
  if (params.infinite()) {
    lp += q * std::log(xi);
    for (size_t b = 0; b < view.sizes.size(); ++b) {
      if (view.pseudo[b] > 0)
        lp += std::lgamma(view.pseudo[b] + static_cast<double>(view.sizes[b])) -
              std::lgamma(static_cast<double>(view.pseudo[b]));
      else
        lp += std::lgamma(static_cast<double>(view.sizes[b]));
    }
    return lp;
  }
  const int k = params.capacity;
  const int free_labels = k - view.chains_prev;
  if (q > free_labels || free_labels < 0) return kNegInf;
  lp += log_falling_factorial(free_labels, q);
  const double rate = xi / k;
  for (size_t b = 0; b < view.sizes.size(); ++b)
    lp += std::lgamma(rate + view.pseudo[b] + view.sizes[b]) -
          std::lgamma(rate + view.pseudo[b]);
  return lp;
}

double log_prior_partition(const std::vector<int>& block_sizes, const PriorParams& params) {
  if (!params.infinite() && static_cast<int>(block_sizes.size()) > params.capacity)
    throw std::invalid_argument("log_prior_partition: more blocks than capacity");
  EpochPriorView view;
  view.sizes = block_sizes;
  view.pseudo.assign(block_sizes.size(), 0);
  return log_conditional_prior(view, params);
}

EpochPriorView epoch_prior_view(const PartitionState& state, int t) {
  EpochPriorView view;
  view.sizes = state.block_sizes_at(t);
  view.pseudo.assign(view.sizes.size(), 0);
  if (t > 0) {
    view.n_prev = state.size_at(t - 1);
    view.chains_prev = state.num_blocks_at(t - 1);
    for (int b = 0; b < state.num_blocks_at(t); ++b)
      view.pseudo[b] = state.chain_size_at(state.chains_at[t][b], t - 1);
  }
  return view;
}

double log_conditional_prior(const PartitionState& state, int t, const PriorParams& params) {
  return log_conditional_prior(epoch_prior_view(state, t), params);
}

std::vector<AssignCandidate> assignment_prior_logweights(const PartitionState& state, int t,
                                                         const PriorParams& params) {
  const int T = state.num_epochs();
  const EpochPriorView base_t = epoch_prior_view(state, t);
  const bool has_next = t + 1 < T;
  EpochPriorView base_next;
  if (has_next) base_next = epoch_prior_view(state, t + 1);
  const double log_m = std::log(static_cast<double>(params.m_aux));

  // chains alive at t-1 with no block at t; orphan chains born at t+1
  std::vector<int> dead_prev, orphan_next;
  if (t > 0)
    for (int id : state.chains_at[t - 1])
      if (state.block_of_chain(id, t) < 0) dead_prev.push_back(id);
  if (has_next)
    for (int id : state.chains_at[t + 1])
      if (state.block_of_chain(id, t) < 0) orphan_next.push_back(id);

  // the candidate state's epoch-(t+1) view only changes through the
  // pseudo-count of one t+1 block and through the number of chains at t
  auto eval = [&](const EpochPriorView& view_t, int next_block_bump) {
    double lp = log_conditional_prior(view_t, params);
    if (!has_next || lp == kNegInf) return lp;
    EpochPriorView next = base_next;
    next.n_prev += 1;  // the reassigned object counts toward epoch t's total
    next.chains_prev = static_cast<int>(view_t.sizes.size());
    if (next_block_bump >= 0) next.pseudo[next_block_bump] += 1;
    return lp + log_conditional_prior(next, params);
  };

  std::vector<AssignCandidate> out;
  const int k_t = state.num_blocks_at(t);
  for (int b = 0; b < k_t; ++b) {
    EpochPriorView v = base_t;
    v.sizes[b] += 1;
    const int nb = state.block_of_chain(state.chains_at[t][b], t + 1 < T ? t + 1 : -1);
    AssignCandidate cand;
    cand.kind = CandidateKind::existing;
    cand.block = b;
    cand.log_prior = eval(v, nb);
    if (cand.log_prior != kNegInf) out.push_back(cand);
  }
  auto push_new = [&](CandidateKind kind, int chain_prev, int chain_next, int pseudo) {
    EpochPriorView v = base_t;
    v.sizes.push_back(1);
    v.pseudo.push_back(pseudo);
    const int nb = chain_next >= 0 ? state.block_of_chain(chain_next, t + 1) : -1;
    AssignCandidate cand;
    cand.kind = kind;
    cand.chain_prev = chain_prev;
    cand.chain_next = chain_next;
    cand.log_prior = eval(v, nb) - log_m;
    if (cand.log_prior != kNegInf) out.push_back(cand);
  };
  for (int cp : dead_prev) push_new(CandidateKind::revive, cp, -1, state.chain_size_at(cp, t - 1));
  for (int cn : orphan_next) push_new(CandidateKind::adopt, -1, cn, 0);
  for (int cp : dead_prev)
    for (int cn : orphan_next)
      push_new(CandidateKind::bridge, cp, cn, state.chain_size_at(cp, t - 1));
  push_new(CandidateKind::fresh, -1, -1, 0);
  return out;
}

}  // namespace tetiwd
