// Benchmark of the likelihood kernel: the fast Woodbury/block-statistics path
// (OpenMP-parallel statistics build) against the serial dense-eigendecomposition
// reference, plus the per-sweep scaling of the Gibbs sampler.

#include "tetiwd/evalgen.hpp"
#include "tetiwd/likelihood.hpp"
#include "tetiwd/sampler.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>

using namespace tetiwd;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

BlockCov random_cov(int n, int k, Rng& rng) {
  std::vector<int> assign(n);
  for (int i = 0; i < n; ++i) assign[i] = i < k ? i : static_cast<int>(rng.uniform_int(k));
  Matrix g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = rng.normal();
  Matrix a = g * g.transpose() + 0.5 * Matrix::Identity(k, k);
  return build_block_cov(assign, a, 1.0 + rng.uniform());
}

Matrix random_distance(int n, int dim, Rng& rng) {
  Matrix x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) x(i, j) = rng.normal();
  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  return d;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (no OpenMP)\n");
#endif

  std::printf("\nlikelihood evaluation, fast vs reference (median of reps)\n");
  std::printf("%8s %4s %12s %12s %10s %12s\n", "n", "k", "fast [us]", "ref [us]", "speedup",
              "|diff|");
  Rng rng(7);
  for (int n : {25, 50, 100, 200, 400, 800}) {
    const int k = 5;
    const BlockCov cov = random_cov(n, k, rng);
    const Matrix d = random_distance(n, 8, rng);
    const int reps = n <= 100 ? 200 : 20;

    auto t0 = std::chrono::steady_clock::now();
    double fast_val = 0.0;
    for (int r = 0; r < reps; ++r) fast_val = loglik_tiw(d, cov, 10.0, LikPath::fast);
    const double fast_us = seconds_since(t0) / reps * 1e6;

    t0 = std::chrono::steady_clock::now();
    double ref_val = 0.0;
    for (int r = 0; r < std::max(1, reps / 10); ++r)
      ref_val = loglik_tiw(d, cov, 10.0, LikPath::reference);
    const double ref_us = seconds_since(t0) / std::max(1, reps / 10) * 1e6;

    std::printf("%8d %4d %12.1f %12.1f %9.1fx %12.3e\n", n, k, fast_us, ref_us, ref_us / fast_us,
                std::abs(fast_val - ref_val));
  }

  std::printf("\ncached-statistics evaluation (the sampler's inner loop)\n");
  std::printf("%8s %4s %12s\n", "n", "k", "eval [us]");
  for (int n : {50, 100, 200, 400}) {
    const int k = 5;
    const BlockCov cov = random_cov(n, k, rng);
    const Matrix d = random_distance(n, 8, rng);
    const BlockStats stats(d, cov.assignment, k);
    const int reps = 2000;
    auto t0 = std::chrono::steady_clock::now();
    double v = 0.0;
    for (int r = 0; r < reps; ++r) v += loglik_tiw_fast(stats, cov.A, cov.alpha, 10.0);
    std::printf("%8d %4d %12.2f\n", n, k, seconds_since(t0) / reps * 1e6);
    (void)v;
  }

  std::printf("\ngibbs sweep scaling (T=1, k~3); expect roughly quadratic in n\n");
  std::printf("%8s %14s\n", "n", "sweep [ms]");
  std::vector<double> times;
  const std::vector<int> ns = {50, 100, 200};
  for (int n : ns) {
    ExperimentConfig exp;
    exp.T = 1;
    exp.n_t = n;
    exp.latent_dim = 50;
    exp.clusters = 3;
    Rng gen_rng(11);
    const SyntheticData data = gen_model_data(exp, gen_rng);
    ModelHyper hyper;
    hyper.dof = 50.0;
    hyper.alpha_scale = moment_alpha_scale(data.series);
    SamplerOptions opts;
    opts.init_alpha = hyper.alpha_scale;
    Sampler sampler(data.series, hyper, opts, 3);
    sampler.init();
    for (int warm = 0; warm < 5; ++warm) sampler.gibbs_sweep();
    const int reps = 10;
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) sampler.gibbs_sweep();
    const double ms = seconds_since(t0) / reps * 1e3;
    times.push_back(ms);
    std::printf("%8d %14.3f\n", n, ms);
  }
  const double slope = std::log(times.back() / times.front()) /
                       std::log(static_cast<double>(ns.back()) / ns.front());
  std::printf("measured log-log slope: %.2f\n", slope);
  if (slope > 3.0) std::printf("warning: slope above 3; the inner loop may have regressed\n");
  return 0;
}
