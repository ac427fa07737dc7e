#pragma once

#include <map>
#include <utility>
#include <vector>

#include "tetiwd/sampler.hpp"

namespace tetiwd {

// Kernel-PCA embedding of the overall distance matrix across all epochs;
// computed once as preprocessing, never inside the sampling loop. Rows are
// ordered epoch by epoch (global row = epoch_offset[t] + local index).
struct OverallEmbedding {
  Matrix coords;      // N x r, X* = V Lambda^{1/2}
  Vector eigenvalues;  // kept eigenvalues, nonincreasing
  std::vector<int> epoch_offset;
  std::vector<int> epoch_size;
  int num_epochs() const { return static_cast<int>(epoch_size.size()); }
  int global_row(int t, int local) const { return epoch_offset[t] + local; }
};

// rank <= 0 selects all eigenvalues >= 1e-9 * lambda_max; a rank above the
// numerical rank is truncated (with a note through the returned eigenvalues).
OverallEmbedding embed_overall(const Matrix& d_star, const std::vector<int>& sizes_per_epoch,
                               int rank = 0);

// Mean embedded coordinate of each chain incarnation, keyed (chain id, t).
std::map<std::pair<int, int>, Vector> chain_centroids(const OverallEmbedding& embedding,
                                                      const ModelState& state);

struct ChainRow {
  int chain = 0;  // canonical id (birth order)
  int birth = 0;  // first epoch present (1-based in reports)
  int death = 0;  // last epoch present
  std::vector<int> sizes;  // per epoch, 0 where absent
};

// One row per chain, canonical ids ordered by (birth epoch, block index).
std::vector<ChainRow> chain_table(const PartitionState& partitions);

// original chain id -> canonical id, same ordering as chain_table
std::map<int, int> canonical_chain_ids(const PartitionState& partitions);

}  // namespace tetiwd
