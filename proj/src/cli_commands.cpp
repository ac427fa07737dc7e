#include "tetiwd/cli.hpp"

#include "tetiwd/distance_data.hpp"
#include "tetiwd/evalgen.hpp"
#include "tetiwd/sampler.hpp"
#include "tetiwd/tracking.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace tetiwd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// strict config access: every key must be known, every read type-checked
class ConfigView {
 public:
  explicit ConfigView(json j) : j_(std::move(j)) {
    if (!j_.is_object()) throw ConfigError("config must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required config key '" + key + "'");
    try {
      return j_.at(key).get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw() const { return j_; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  json j_;
  std::set<std::string> seen_;
};

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) {
    if (const char* env = std::getenv("TETIWD_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string());
}

void write_run_metadata(const fs::path& dir, const json& effective_config) {
  write_text_atomic(dir / "run_config.json", effective_config.dump(2) + "\n");
  json versions;
  versions["tool"] = std::string("tetiwd ") + kToolVersion;
  versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  write_text_atomic(dir / "versions.json", versions.dump(2) + "\n");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw DataError("bad matrix in JSON");
  const size_t n = rows.size();
  const size_t m = rows[0].size();
  Matrix out(n, m);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out(i, j) = rows[i][j].get<double>();
  return out;
}

json state_to_json(const ModelState& state) {
  const auto& part = state.partitions;
  json j;
  j["T"] = part.num_epochs();
  json n = json::array();
  for (int t = 0; t < part.num_epochs(); ++t) n.push_back(part.size_at(t));
  j["n"] = n;
  j["alpha"] = state.alpha;
  j["dof"] = state.dof;
  j["assignments"] = part.assignments;
  const auto rows = chain_table(part);
  const auto canon = canonical_chain_ids(part);
  json chains = json::array();
  for (const auto& row : rows) {
    json c;
    c["id"] = row.chain;
    c["birth"] = row.birth;
    c["death"] = row.death;
    c["sizes"] = row.sizes;
    json blocks = json::array();
    for (int t = 0; t < part.num_epochs(); ++t) {
      int block = -1;
      for (int b = 0; b < part.num_blocks_at(t); ++b)
        if (canon.at(part.chains_at[t][b]) == row.chain) block = b;
      blocks.push_back(block);
    }
    c["blocks"] = blocks;
    chains.push_back(std::move(c));
  }
  j["chains"] = chains;
  json a_list = json::array();
  for (const auto& a : state.A) a_list.push_back(matrix_to_json(a));
  j["A"] = a_list;
  return j;
}

ModelState state_from_json(const json& j) {
  ModelState state;
  state.alpha = j.at("alpha").get<double>();
  state.dof = j.at("dof").get<double>();
  state.partitions.assignments = j.at("assignments").get<std::vector<std::vector<int>>>();
  const int T = static_cast<int>(state.partitions.assignments.size());
  state.partitions.chains_at.assign(T, {});
  for (int t = 0; t < T; ++t) {
    int k = 0;
    for (int b : state.partitions.assignments[t]) k = std::max(k, b + 1);
    state.partitions.chains_at[t].assign(k, -1);
  }
  int max_id = 0;
  for (const auto& c : j.at("chains")) {
    const int id = c.at("id").get<int>();
    max_id = std::max(max_id, id + 1);
    const auto blocks = c.at("blocks").get<std::vector<int>>();
    for (int t = 0; t < T; ++t)
      if (blocks[t] >= 0) state.partitions.chains_at[t][blocks[t]] = id;
  }
  state.partitions.next_chain_id = max_id;
  for (const auto& a : j.at("A")) state.A.push_back(matrix_from_json(a));
  state.partitions.check_invariants();
  return state;
}

void write_trace_csv(const fs::path& dir, const Trace& trace) {
  std::ostringstream out, timing;
  out << "sweep,phase,log_posterior,alpha,dof";
  for (int t = 1; t <= trace.num_epochs; ++t) out << ",k_bt_" << t;
  for (int t = 1; t <= trace.num_epochs; ++t) out << ",accept_A_" << t;
  out << '\n';
  timing << "sweep,wall_s\n";
  for (const auto& row : trace.rows) {
    out << row.sweep << ',' << row.phase << ',' << format_double(row.log_posterior) << ','
        << format_double(row.alpha) << ',' << format_double(row.dof);
    for (int v : row.k_bt) out << ',' << v;
    for (double v : row.accept_A) out << ',' << format_double(v);
    out << '\n';
    timing << row.sweep << ',' << format_double(row.wall_s) << '\n';
  }
  write_text_atomic(dir / "trace.csv", out.str());
  write_text_atomic(dir / "trace_timing.csv", timing.str());
}

void write_chain_table_csv(const fs::path& path, const PartitionState& part) {
  const auto rows = chain_table(part);
  std::ostringstream out;
  out << "chain,birth,death";
  const int T = part.num_epochs();
  for (int t = 1; t <= T; ++t) out << ",size_t" << t;
  out << '\n';
  for (const auto& row : rows) {
    out << row.chain << ',' << row.birth << ',' << row.death;
    for (int s : row.sizes) out << ',' << s;
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

ExperimentConfig experiment_from_config(ConfigView& cfg) {
  ExperimentConfig exp;
  const std::string preset = cfg.get<std::string>("preset", "");
  if (preset == "well-separated") {
    exp = ExperimentConfig{};  // defaults follow the first synthetic setup
  } else if (preset == "overlapping") {
    exp.T = 5;
    exp.n_t = 200;
    exp.latent_dim = 40;
    exp.clusters = 5;
    exp.alpha = 20.0;
    exp.dof = 40.0;
  } else if (preset == "drift") {
    exp.generator = GeneratorKind::drift;
    exp.T = 5;
    exp.n_t = 200;
    exp.latent_dim = 40;
    exp.clusters = 5;
    exp.center_scale = 1.0;
    exp.drift_scale = 1.0;
    exp.noise_sd = 2.0;
  } else if (!preset.empty()) {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  const std::string gen = cfg.get<std::string>(
      "generator", exp.generator == GeneratorKind::drift ? "drift" : "model");
  if (gen == "model")
    exp.generator = GeneratorKind::model;
  else if (gen == "drift")
    exp.generator = GeneratorKind::drift;
  else
    throw ConfigError("generator must be 'model' or 'drift'");
  exp.T = cfg.get<int>("T", exp.T);
  exp.n_t = cfg.get<int>("n_t", exp.n_t);
  exp.latent_dim = cfg.get<int>("latent_dim", exp.latent_dim);
  exp.clusters = cfg.get<int>("clusters", exp.clusters);
  exp.alpha = cfg.get<double>("alpha", exp.alpha);
  exp.dof = cfg.get<double>("dof", exp.dof);
  exp.xi = cfg.get<double>("xi", exp.xi);
  exp.center_scale = cfg.get<double>("center_scale", exp.center_scale);
  exp.drift_scale = cfg.get<double>("drift_scale", exp.drift_scale);
  exp.noise_sd = cfg.get<double>("noise_sd", exp.noise_sd);
  if (exp.T < 1 || exp.n_t < 1 || exp.clusters < 1 || exp.latent_dim < 1 ||
      exp.clusters > exp.n_t || !(exp.alpha > 0.0) || !(exp.dof > 0.0))
    throw ConfigError("invalid experiment dimensions");
  return exp;
}

json truth_to_json(const SyntheticTruth& truth) {
  json j;
  j["generator"] = truth.kind == GeneratorKind::model ? "model" : "drift";
  j["alpha"] = truth.alpha;
  j["assignments"] = truth.assignments;
  if (!truth.A.empty()) {
    json a_list = json::array();
    for (const auto& a : truth.A) a_list.push_back(matrix_to_json(a));
    j["A"] = a_list;
  }
  if (!truth.centers.empty()) {
    json c_list = json::array();
    for (const auto& c : truth.centers) c_list.push_back(matrix_to_json(c));
    j["centers"] = c_list;
  }
  return j;
}

FitOptions fit_options_from_config(ConfigView& cfg, const char* prefix = "") {
  auto key = [&](const char* name) { return std::string(prefix) + name; };
  FitOptions fit;
  fit.hyper.xi = cfg.get<double>(key("xi"), 1.0);
  fit.hyper.capacity = cfg.get<int>(key("capacity"), 0);
  fit.hyper.m_aux = cfg.get<int>(key("m_aux"), 3);
  fit.hyper.s = cfg.get<double>(key("s"), 1.0);
  fit.hyper.wishart_normalized = cfg.get<bool>(key("wishart_normalized"), true);
  fit.hyper.alpha_shape = cfg.get<double>(key("alpha_shape"), 1.0);
  fit.hyper.alpha_scale = cfg.get<double>(key("alpha_scale"), 1.0);
  fit.opts.update_A = cfg.get<bool>(key("update_A"), true);
  fit.opts.update_alpha = cfg.get<bool>(key("update_alpha"), true);
  if (cfg.has(key("alpha"))) fit.opts.fixed_alpha = cfg.require<double>(key("alpha"));
  if (cfg.has(key("fixed_a_diag"))) fit.opts.fixed_a_diag = cfg.require<double>(key("fixed_a_diag"));
  fit.opts.alpha_proposal_sd = cfg.get<double>(key("alpha_proposal_sd"), 0.3);
  fit.opts.proposal_dof = cfg.get<double>(key("proposal_dof"), 0.0);
  fit.run.sweeps = cfg.get<int>("sweeps", 500);
  fit.run.burnin = cfg.get<int>("burnin", 250);
  fit.run.anneal_gamma = cfg.get<double>(key("anneal_gamma"), 1.05);
  fit.run.anneal_max_sweeps = cfg.get<int>(key("anneal_max_sweeps"), 200);
  if (fit.run.sweeps < 0 || fit.run.burnin < 0 || fit.run.anneal_gamma < 1.0)
    throw ConfigError("invalid sweep configuration");
  return fit;
}

int num_blocks_of(const std::vector<int>& assignment) {
  int k = 0;
  for (int b : assignment) k = std::max(k, b + 1);
  return k;
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

int cmd_simulate(json config) {
  ConfigView cfg(std::move(config));
  const fs::path out_dir = cfg.require<std::string>("out_dir");
  const uint64_t seed = cfg.get<uint64_t>("seed", 1);
  const std::string fmt_name = cfg.get<std::string>("format", "csv");
  const int threads = cfg.get<int>("threads", 0);
  if (fmt_name != "csv" && fmt_name != "binary") throw ConfigError("format must be csv or binary");
  const MatrixFormat fmt = fmt_name == "csv" ? MatrixFormat::csv : MatrixFormat::binary;
  const ExperimentConfig exp = experiment_from_config(cfg);
  cfg.finish();
  apply_threads(threads);
  ensure_dir(out_dir);

  Rng rng(seed);
  const SyntheticData data =
      exp.generator == GeneratorKind::model ? gen_model_data(exp, rng) : gen_drift_data(exp, rng);

  const std::string ext = fmt == MatrixFormat::csv ? ".csv" : ".bin";
  Manifest manifest;
  manifest.format = fmt;
  for (int t = 0; t < exp.T; ++t) {
    const fs::path p = out_dir / ("D_t" + std::to_string(t + 1) + ext);
    write_matrix(p, data.series.matrices[t], fmt);
    manifest.time_points.push_back(p);
  }
  const fs::path overall = out_dir / ("D_star" + ext);
  write_matrix(overall, data.d_star, fmt);
  manifest.overall = overall;
  const fs::path truth_path = out_dir / "truth.json";
  write_text_atomic(truth_path, truth_to_json(data.truth).dump(2) + "\n");
  manifest.truth = truth_path;
  write_manifest(out_dir / "manifest.json", manifest);
  write_run_metadata(out_dir, cfg.raw());
  std::cerr << "simulate: wrote " << exp.T << " matrices (n_t=" << exp.n_t << ") to " << out_dir
            << "\n";
  return 0;
}

int cmd_fit(json config) {
  ConfigView cfg(std::move(config));
  const fs::path manifest_path = cfg.require<std::string>("manifest");
  const fs::path out_dir = cfg.require<std::string>("out_dir");
  const uint64_t seed = cfg.get<uint64_t>("seed", 1);
  const int threads = cfg.get<int>("threads", 0);
  const bool alpha_scale_given = cfg.has("alpha_scale");
  FitOptions fit = fit_options_from_config(cfg);
  double dof = 0.0;
  bool dof_auto = true;
  if (cfg.has("dof")) {
    dof = cfg.require<double>("dof");
    dof_auto = false;
  }
  cfg.finish();
  apply_threads(threads);

  const Manifest manifest = read_manifest(manifest_path);
  const DistanceSeries data = load_distance_series(manifest.time_points, manifest.format);
  for (int t = 0; t < data.num_epochs(); ++t) {
    const double scale = std::max(1.0, data.matrices[t].maxCoeff());
    const ValidationReport report = validate_negative_type(data.matrices[t], 1e-8 * scale);
    if (!report.is_negative_type)
      std::cerr << "warning: epoch " << (t + 1)
                << " is not of negative type (min eigenvalue " << report.min_eigenvalue
                << "); proceeding\n";
  }
  fit.hyper.dof = dof_auto ? estimate_dof_from_rank(data) : dof;
  if (!alpha_scale_given) fit.hyper.alpha_scale = moment_alpha_scale(data);
  if (!fit.opts.fixed_alpha) fit.opts.init_alpha = fit.hyper.alpha_scale;

  ensure_dir(out_dir);
  Sampler sampler(data, fit.hyper, fit.opts, seed);
  const RunResult result = sampler.run(fit.run);
  if (!result.warning.empty()) std::cerr << "warning: " << result.warning << "\n";

  write_trace_csv(out_dir, result.trace);
  write_text_atomic(out_dir / "state.json", state_to_json(result.frozen).dump(2) + "\n");
  write_chain_table_csv(out_dir / "chain_table.csv", result.frozen.partitions);
  write_run_metadata(out_dir, cfg.raw());
  std::cerr << "fit: " << result.trace.rows.size() << " sweeps, final k = [";
  for (int t = 0; t < result.frozen.partitions.num_epochs(); ++t)
    std::cerr << (t ? "," : "") << result.frozen.partitions.num_blocks_at(t);
  std::cerr << "]\n";
  return 0;
}

namespace {

struct BenchmarkRow {
  std::string method;
  uint64_t seed_index = 0;
  int t = 0;
  double ari = 0.0;
  double runtime_s = 0.0;
};

struct RepeatOutput {
  std::vector<BenchmarkRow> rows;
  std::map<std::string, double> mean_ari;  // per method, averaged over epochs
};

}  // namespace

int cmd_benchmark(json config) {
  ConfigView cfg(std::move(config));
  const fs::path out_dir = cfg.require<std::string>("out_dir");
  const uint64_t master_seed = cfg.get<uint64_t>("seed", 1);
  const int repeats = cfg.get<int>("repeats", 5);
  const int threads = cfg.get<int>("threads", 0);
  const std::vector<std::string> all_methods = {"te-tiwd", "static",   "ward",  "complete",
                                                "single",  "te-gauss", "pooled"};
  std::vector<std::string> methods =
      cfg.get<std::vector<std::string>>("methods", all_methods);
  for (const auto& m : methods)
    if (std::find(all_methods.begin(), all_methods.end(), m) == all_methods.end())
      throw ConfigError("unknown method '" + m + "'");
  const ExperimentConfig exp = experiment_from_config(cfg);
  const bool fit_alpha_scale_given = cfg.has("fit_alpha_scale");
  FitOptions base_fit = fit_options_from_config(cfg, "fit_");
  const bool fit_dof_given = cfg.has("fit_dof");
  const double fit_dof = fit_dof_given ? cfg.require<double>("fit_dof") : 0.0;
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  cfg.finish();
  apply_threads(threads);
  ensure_dir(out_dir);

  const bool needs_static_k =
      std::find(methods.begin(), methods.end(), std::string("ward")) != methods.end() ||
      std::find(methods.begin(), methods.end(), std::string("complete")) != methods.end() ||
      std::find(methods.begin(), methods.end(), std::string("single")) != methods.end();

  std::vector<RepeatOutput> outputs(repeats);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int rep = 0; rep < repeats; ++rep) {
    const uint64_t rep_seed = derive_seed(master_seed, rep);
    Rng gen_rng(rep_seed);
    const SyntheticData data = exp.generator == GeneratorKind::model
                                   ? gen_model_data(exp, gen_rng)
                                   : gen_drift_data(exp, gen_rng);
    std::vector<int> sizes(exp.T, exp.n_t);
    RepeatOutput& out = outputs[rep];
    // per-method defaults follow the fit command's recipe, derived from the
    // input each method actually sees
    auto tune = [&](const DistanceSeries& input) {
      FitOptions fit = base_fit;
      fit.hyper.dof = fit_dof_given ? fit_dof : estimate_dof_from_rank(input);
      if (!fit_alpha_scale_given) fit.hyper.alpha_scale = moment_alpha_scale(input);
      if (!fit.opts.fixed_alpha) fit.opts.init_alpha = fit.hyper.alpha_scale;
      return fit;
    };
    const FitOptions fit = tune(data.series);
    DistanceSeries star_series;
    star_series.matrices = {data.d_star};
    const FitOptions fit_star = tune(star_series);

    auto record = [&](const std::string& method, const std::vector<std::vector<int>>& parts,
                      double runtime) {
      double mean = 0.0;
      for (int t = 0; t < exp.T; ++t) {
        const double ari = adjusted_rand_index(data.truth.assignments[t], parts[t]);
        out.rows.push_back({method, static_cast<uint64_t>(rep), t + 1, ari, runtime});
        mean += ari;
      }
      out.mean_ari[method] = mean / exp.T;
    };
    auto timed = [&](auto&& fn) {
      const auto start = std::chrono::steady_clock::now();
      auto result = fn();
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return std::make_pair(std::move(result), secs);
    };

    // static per-epoch runs double as the cluster-count source for the
    // linkage cuts
    std::vector<std::vector<int>> static_parts(exp.T);
    double static_time = 0.0;
    const bool want_static =
        std::find(methods.begin(), methods.end(), std::string("static")) != methods.end();
    if (want_static || needs_static_k) {
      const auto start = std::chrono::steady_clock::now();
      for (int t = 0; t < exp.T; ++t)
        static_parts[t] =
            run_static_tiwd(data.series.matrices[t], fit, derive_seed(rep_seed, 100 + t));
      static_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    for (const auto& method : methods) {
      if (method == "te-tiwd") {
        auto [result, secs] = timed([&] {
          Sampler sampler(data.series, fit.hyper, fit.opts, derive_seed(rep_seed, 1));
          return sampler.run(fit.run);
        });
        record(method, result.frozen.partitions.assignments, secs);
      } else if (method == "static") {
        record(method, static_parts, static_time);
      } else if (method == "ward" || method == "complete" || method == "single") {
        const LinkageMethod lm = method == "ward"      ? LinkageMethod::ward
                                 : method == "complete" ? LinkageMethod::complete
                                                        : LinkageMethod::single;
        auto [result, secs] = timed([&] {
          std::vector<std::vector<int>> parts(exp.T);
          for (int t = 0; t < exp.T; ++t)
            parts[t] = run_linkage(data.series.matrices[t], lm,
                                   std::max(1, num_blocks_of(static_parts[t])));
          return parts;
        });
        record(method, result, secs);
      } else if (method == "te-gauss") {
        auto [result, secs] = timed(
            [&] { return run_te_gauss(data.d_star, sizes, fit, derive_seed(rep_seed, 2)); });
        record(method, result, secs);
      } else if (method == "pooled") {
        auto [result, secs] = timed(
            [&] { return run_pooled(data.d_star, sizes, fit_star, derive_seed(rep_seed, 3)); });
        record(method, result, secs);
      }
    }
  }

  // results.csv in deterministic order
  std::ostringstream csv;
  csv << "method,seed,t,ari,runtime_s\n";
  for (const auto& out : outputs)
    for (const auto& row : out.rows)
      csv << row.method << ',' << row.seed_index << ',' << row.t << ','
          << format_double(row.ari) << ',' << format_double(row.runtime_s) << '\n';
  write_text_atomic(out_dir / "results.csv", csv.str());

  json summary;
  std::map<std::string, std::vector<double>> per_seed;
  for (const auto& out : outputs)
    for (const auto& [method, mean] : out.mean_ari) per_seed[method].push_back(mean);
  for (const auto& [method, values] : per_seed) {
    summary["methods"][method]["per_seed_mean_ari"] = values;
    summary["methods"][method]["median_ari"] = median(values);
  }
  if (per_seed.count("te-tiwd")) {
    for (const auto& [method, values] : per_seed) {
      if (method == "te-tiwd") continue;
      const SignTestResult st = paired_sign_test(per_seed["te-tiwd"], values);
      summary["comparisons"][method] = {{"wins", st.wins},
                                        {"losses", st.losses},
                                        {"ties", st.ties},
                                        {"p_one_sided", st.p_one_sided}};
    }
  }
  write_text_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  write_run_metadata(out_dir, cfg.raw());
  std::cerr << "benchmark: " << repeats << " repeats over " << methods.size() << " methods\n";
  return 0;
}

int cmd_evaluate(json config) {
  ConfigView cfg(std::move(config));
  const fs::path state_path = cfg.require<std::string>("state");
  const fs::path truth_path = cfg.require<std::string>("truth");
  const fs::path out_path = cfg.require<std::string>("out");
  cfg.finish();

  std::ifstream sin(state_path);
  if (!sin) throw DataError("cannot open " + state_path.string());
  json sj;
  sin >> sj;
  const ModelState state = state_from_json(sj);
  std::ifstream tin(truth_path);
  if (!tin) throw DataError("cannot open " + truth_path.string());
  json tj;
  tin >> tj;
  const auto truth = tj.at("assignments").get<std::vector<std::vector<int>>>();
  if (truth.size() != state.partitions.assignments.size())
    throw DataError("truth and state epoch counts differ");

  json out;
  json per_t = json::array();
  double mean = 0.0;
  for (size_t t = 0; t < truth.size(); ++t) {
    const double ari = adjusted_rand_index(truth[t], state.partitions.assignments[t]);
    per_t.push_back(ari);
    mean += ari;
  }
  out["ari_per_epoch"] = per_t;
  out["ari_mean"] = mean / truth.size();
  write_text_atomic(out_path, out.dump(2) + "\n");
  std::cerr << "evaluate: mean ARI " << (mean / truth.size()) << "\n";
  return 0;
}

int cmd_track(json config) {
  ConfigView cfg(std::move(config));
  const fs::path manifest_path = cfg.require<std::string>("manifest");
  const fs::path state_path = cfg.require<std::string>("state");
  const fs::path out_dir = cfg.require<std::string>("out_dir");
  const int rank = cfg.get<int>("rank", 0);
  cfg.finish();
  ensure_dir(out_dir);

  std::ifstream sin(state_path);
  if (!sin) throw DataError("cannot open " + state_path.string());
  json sj;
  sin >> sj;
  const ModelState state = state_from_json(sj);
  write_chain_table_csv(out_dir / "chain_table.csv", state.partitions);

  const Manifest manifest = read_manifest(manifest_path);
  if (manifest.overall.empty()) {
    std::cerr << "warning: manifest has no overall distance matrix; chain table only "
                 "(no centroids)\n";
    write_run_metadata(out_dir, cfg.raw());
    return 0;
  }
  const Matrix d_star =
      validate_distance_matrix(read_matrix(manifest.overall, manifest.format));
  std::vector<int> sizes;
  for (int t = 0; t < state.partitions.num_epochs(); ++t)
    sizes.push_back(state.partitions.size_at(t));
  const OverallEmbedding emb = embed_overall(d_star, sizes, rank);
  const auto centroids = chain_centroids(emb, state);
  const auto canon = canonical_chain_ids(state.partitions);

  json cj;
  cj["rank"] = emb.coords.cols();
  json entries = json::array();
  std::ostringstream traj;
  traj << "chain,t";
  for (int c = 0; c < emb.coords.cols(); ++c) traj << ",x" << (c + 1);
  traj << '\n';
  // canonical order for deterministic output
  std::vector<std::pair<std::pair<int, int>, Vector>> ordered;
  for (const auto& [key, value] : centroids)
    ordered.push_back({{canon.at(key.first), key.second}, value});
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, value] : ordered) {
    json e;
    e["chain"] = key.first;
    e["t"] = key.second + 1;
    json coords = json::array();
    for (int c = 0; c < value.size(); ++c) coords.push_back(value[c]);
    e["centroid"] = coords;
    entries.push_back(std::move(e));
    traj << key.first << ',' << (key.second + 1);
    for (int c = 0; c < value.size(); ++c) traj << ',' << format_double(value[c]);
    traj << '\n';
  }
  cj["centroids"] = entries;
  write_text_atomic(out_dir / "centroids.json", cj.dump(2) + "\n");
  write_text_atomic(out_dir / "trajectories.csv", traj.str());
  write_run_metadata(out_dir, cfg.raw());
  std::cerr << "track: " << canon.size() << " chains, embedding rank " << emb.coords.cols()
            << "\n";
  return 0;
}

int cmd_report(json config) {
  ConfigView cfg(std::move(config));
  const auto inputs = cfg.require<std::vector<std::string>>("results");
  const fs::path out_path = cfg.require<std::string>("out");
  cfg.finish();

  // per (method, seed): mean ARI over epochs
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
  for (const auto& input : inputs) {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open " + input);
    std::string line;
    if (!std::getline(in, line) || line.rfind("method,seed,t,ari", 0) != 0)
      throw DataError("unexpected results header in " + input);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string method, seed, t, ari, runtime;
      std::getline(ss, method, ',');
      std::getline(ss, seed, ',');
      std::getline(ss, t, ',');
      std::getline(ss, ari, ',');
      std::getline(ss, runtime, ',');
      auto& cell = acc[method][input + "#" + seed];
      cell.first += std::stod(ari);
      cell.second += 1;
    }
  }
  std::ostringstream out;
  out << "method,n,min,q1,median,q3,max\n";
  auto quantile = [](const std::vector<double>& sorted, double q) {
    const double pos = q * (sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  for (const auto& [method, seeds] : acc) {
    std::vector<double> means;
    for (const auto& [key, cell] : seeds) means.push_back(cell.first / cell.second);
    std::sort(means.begin(), means.end());
    out << method << ',' << means.size() << ',' << format_double(means.front()) << ','
        << format_double(quantile(means, 0.25)) << ',' << format_double(quantile(means, 0.5))
        << ',' << format_double(quantile(means, 0.75)) << ',' << format_double(means.back())
        << '\n';
  }
  write_text_atomic(out_path, out.str());
  std::cerr << "report: aggregated " << acc.size() << " methods\n";
  return 0;
}

namespace {

json load_config_arg(const std::string& config_path, const std::vector<std::string>& sets) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config " + config_path);
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError("config parse error: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      j[key] = json::parse(value);
    } catch (const std::exception&) {
      j[key] = value;  // bare strings pass through
    }
  }
  return j;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"time-evolving clustering of pairwise distance data"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    int64_t seed = -1;
    int sweeps = -1;
    int burnin = -1;
    std::string out;
    int threads = 0;
  };
  std::map<std::string, Common> commons;
  const std::vector<std::string> names = {"simulate", "fit",   "benchmark",
                                          "evaluate", "track", "report"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    Common& c = commons[name];
    sub->add_option("--config", c.config_path, "JSON config file");
    sub->add_option("--set", c.sets, "override a config key (key=value)");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--sweeps", c.sweeps, "sampling sweeps");
    sub->add_option("--burnin", c.burnin, "burn-in sweeps");
    sub->add_option("--out", c.out, "output directory or file");
    sub->add_option("--threads", c.threads, "worker thread count");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const Common& c = commons[name];
  try {
    json config = load_config_arg(c.config_path, c.sets);
    if (c.seed >= 0) config["seed"] = static_cast<uint64_t>(c.seed);
    if (c.sweeps >= 0) config["sweeps"] = c.sweeps;
    if (c.burnin >= 0) config["burnin"] = c.burnin;
    if (c.threads > 0) config["threads"] = c.threads;
    if (!c.out.empty()) {
      if (name == "evaluate" || name == "report")
        config["out"] = c.out;
      else
        config["out_dir"] = c.out;
    }
    if (name == "simulate") return cmd_simulate(std::move(config));
    if (name == "fit") return cmd_fit(std::move(config));
    if (name == "benchmark") return cmd_benchmark(std::move(config));
    if (name == "evaluate") return cmd_evaluate(std::move(config));
    if (name == "track") return cmd_track(std::move(config));
    if (name == "report") return cmd_report(std::move(config));
    throw ConfigError("unknown command");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace tetiwd::cli
