#pragma once

#include <vector>

#include "tetiwd/sampler.hpp"

namespace tetiwd {

enum class GeneratorKind { model, drift };

struct ExperimentConfig {
  int T = 5;
  int n_t = 20;
  int latent_dim = 100;  // replicate dimension d_t per epoch
  int clusters = 3;
  double alpha = 2.0;
  double dof = 100.0;  // generator Wishart degrees of freedom
  double xi = 1.0;
  GeneratorKind generator = GeneratorKind::model;
  // drift-generator knobs (defaults give heavily overlapping clusters)
  double center_scale = 1.0;
  double drift_scale = 1.0;
  double noise_sd = 1.0;
};

struct SyntheticTruth {
  std::vector<std::vector<int>> assignments;  // ground-truth labels per epoch
  std::vector<Matrix> A;                      // model generator: between-cluster covariances
  std::vector<Matrix> centers;                // drift generator: k x dim per epoch
  double alpha = 0.0;
  std::vector<Matrix> latent;  // X_t, n_t x d_t
  GeneratorKind kind = GeneratorKind::model;
};

struct SyntheticData {
  DistanceSeries series;
  Matrix d_star;  // cross-epoch squared distances of the stacked latent rows
  SyntheticTruth truth;
};

// Model-based generation: B_1 with exactly `clusters` blocks, A_1 from a
// Wishart around the identity, latent Gaussians column by column, then
// conditionally linked partitions and covariance transitions for t > 1.
SyntheticData gen_model_data(const ExperimentConfig& config, Rng& rng);

// Model-independent generation: persistent Gaussian clusters whose centers
// relocate between epochs and whose sizes are Dirichlet-Multinomial linked.
SyntheticData gen_drift_data(const ExperimentConfig& config, Rng& rng);

// Sequential seating from the conditional Dirichlet-Multinomial (CRP limit):
// previous chains weigh in with their sizes, fresh blocks with xi. Returns
// the assignment and, per block, the previous-chain index (or -1 when new).
struct SeatingResult {
  std::vector<int> assignment;
  std::vector<int> parent;  // block -> index into prev_sizes, or -1
};
SeatingResult sample_conditional_partition(const std::vector<int>& prev_sizes, int n, double xi,
                                           Rng& rng);

// Hubert-Arabie adjusted Rand index.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

enum class LinkageMethod { ward, complete, single };

// Agglomerative clustering on a distance matrix via the Lance-Williams
// recurrences, cut at k blocks. Single and complete linkage see the input
// monotonically, so squared distances give the same cut as plain ones; Ward
// expects squared Euclidean distances, which is what the pipeline carries.
std::vector<int> run_linkage(const Matrix& d, LinkageMethod method, int k);

struct FitOptions {
  ModelHyper hyper;
  SamplerOptions opts;
  RunConfig run;
};

// Static clustering = the full sampler restricted to a single epoch.
std::vector<int> run_static_tiwd(const Matrix& d, const FitOptions& fit, uint64_t seed);

// Dynamic Gaussian baseline on embedded coordinates: same conditional
// partition prior, collapsed Gaussian likelihood with per-cluster mean and a
// shared-per-cluster spherical variance under a normal-inverse-gamma prior.
std::vector<std::vector<int>> run_te_gauss(const Matrix& d_star,
                                           const std::vector<int>& sizes_per_epoch,
                                           const FitOptions& fit, uint64_t seed);

// One static clustering over all objects of all epochs, split back per epoch.
std::vector<std::vector<int>> run_pooled(const Matrix& d_star,
                                         const std::vector<int>& sizes_per_epoch,
                                         const FitOptions& fit, uint64_t seed);

// --- paired-run comparison ---------------------------------------------------

double median(std::vector<double> values);

struct SignTestResult {
  int wins = 0;
  int losses = 0;
  int ties = 0;
  double p_one_sided = 1.0;  // P(>= wins | fair coin), ties excluded
};

// one-sided sign test for "a beats b" over paired runs
SignTestResult paired_sign_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tetiwd
