#include "tetiwd/tracking.hpp"

#include "tetiwd/distance_data.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <stdexcept>

namespace tetiwd {

OverallEmbedding embed_overall(const Matrix& d_star, const std::vector<int>& sizes_per_epoch,
                               int rank) {
  const int n = static_cast<int>(d_star.rows());
  int total = 0;
  OverallEmbedding emb;
  for (int s : sizes_per_epoch) {
    emb.epoch_offset.push_back(total);
    emb.epoch_size.push_back(s);
    total += s;
  }
  if (total != n) throw std::invalid_argument("embed_overall: sizes do not match D*");

  // K*_c = -(1/2) Q* D* Q*, centered without materializing Q* (O(n^2))
  Matrix kc = -0.5 * d_star;
  Vector row_mean = kc.rowwise().mean();
  const double grand = row_mean.mean();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kc(i, j) += grand - row_mean[i] - row_mean[j];
  kc = symmetrized(kc);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(kc);
  const Vector& ev = eig.eigenvalues();  // increasing
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  int numerical_rank = 0;
  for (int i = 0; i < n; ++i)
    if (ev[i] >= 1e-9 * lmax && ev[i] > 0.0) ++numerical_rank;
  int r = rank > 0 ? std::min(rank, numerical_rank) : numerical_rank;
  r = std::max(r, 1);

  emb.coords.resize(n, r);
  emb.eigenvalues.resize(r);
  for (int c = 0; c < r; ++c) {
    const int src = n - 1 - c;  // descending order
    const double lambda = std::max(ev[src], 0.0);
    emb.eigenvalues[c] = lambda;
    emb.coords.col(c) = eig.eigenvectors().col(src) * std::sqrt(lambda);
  }
  return emb;
}

std::map<std::pair<int, int>, Vector> chain_centroids(const OverallEmbedding& embedding,
                                                      const ModelState& state) {
  std::map<std::pair<int, int>, Vector> centroids;
  const auto& part = state.partitions;
  if (embedding.num_epochs() != part.num_epochs())
    throw std::invalid_argument("chain_centroids: embedding does not cover all epochs");
  for (int t = 0; t < part.num_epochs(); ++t) {
    if (embedding.epoch_size[t] != static_cast<int>(part.assignments[t].size()))
      throw std::invalid_argument("chain_centroids: epoch size mismatch");
    const int k = part.num_blocks_at(t);
    std::vector<Vector> sum(k, Vector::Zero(embedding.coords.cols()));
    std::vector<int> count(k, 0);
    for (int l = 0; l < embedding.epoch_size[t]; ++l) {
      const int b = part.assignments[t][l];
      sum[b] += embedding.coords.row(embedding.global_row(t, l)).transpose();
      ++count[b];
    }
    for (int b = 0; b < k; ++b)
      centroids[{part.chains_at[t][b], t}] = sum[b] / count[b];
  }
  return centroids;
}

std::map<int, int> canonical_chain_ids(const PartitionState& partitions) {
  // (birth epoch, block index at birth) ordering
  std::vector<std::pair<std::pair<int, int>, int>> order;
  std::map<int, int> birth;
  for (int t = 0; t < partitions.num_epochs(); ++t)
    for (int b = 0; b < partitions.num_blocks_at(t); ++b) {
      const int id = partitions.chains_at[t][b];
      if (!birth.count(id)) {
        birth[id] = t;
        order.push_back({{t, b}, id});
      }
    }
  std::sort(order.begin(), order.end());
  std::map<int, int> canon;
  for (size_t i = 0; i < order.size(); ++i) canon[order[i].second] = static_cast<int>(i);
  return canon;
}

std::vector<ChainRow> chain_table(const PartitionState& partitions) {
  const auto canon = canonical_chain_ids(partitions);
  const int T = partitions.num_epochs();
  std::vector<ChainRow> rows(canon.size());
  for (const auto& [id, cid] : canon) {
    ChainRow& row = rows[cid];
    row.chain = cid;
    row.sizes.assign(T, 0);
    row.birth = -1;
    for (int t = 0; t < T; ++t) {
      const int s = partitions.chain_size_at(id, t);
      row.sizes[t] = s;
      if (s > 0) {
        if (row.birth < 0) row.birth = t + 1;  // 1-based epochs in reports
        row.death = t + 1;
      }
    }
  }
  return rows;
}

}  // namespace tetiwd
