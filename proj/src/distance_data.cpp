#include "tetiwd/distance_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tetiwd {

namespace fs = std::filesystem;
using nlohmann::json;

Matrix centering_projector(int n) {
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("non-numeric cell in " + path.string());
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty matrix file " + path.string());
  const size_t n = rows.size();
  Matrix m(n, rows[0].size());
  for (size_t i = 0; i < n; ++i) {
    if (rows[i].size() != rows[0].size())
      throw DataError("ragged rows in " + path.string());
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Matrix read_matrix_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TDW1", 4) != 0)
    throw DataError("bad magic in " + path.string());
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n == 0 || n > (1u << 20)) throw DataError("bad size in " + path.string());
  Matrix m(n, n);
  // row-major on disk; Eigen default is column-major, so read through a buffer
  std::vector<double> buf(n * n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!in) throw DataError("truncated matrix in " + path.string());
  for (uint64_t i = 0; i < n; ++i)
    for (uint64_t j = 0; j < n; ++j) m(i, j) = buf[i * n + j];
  return m;
}

Matrix read_matrix(const fs::path& path, MatrixFormat format) {
  return format == MatrixFormat::csv ? read_matrix_csv(path) : read_matrix_binary(path);
}

namespace {

// "%.17g" round-trips doubles exactly, keeping repeated runs byte-identical
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_binary(const fs::path& path, const Matrix& m) {
  if (m.rows() != m.cols()) throw std::runtime_error("binary format requires square matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("TDW1", 4);
  const uint64_t n = static_cast<uint64_t>(m.rows());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  std::vector<double> buf(n * n);
  for (uint64_t i = 0; i < n; ++i)
    for (uint64_t j = 0; j < n; ++j) buf[i * n + j] = m(i, j);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

void write_matrix(const fs::path& path, const Matrix& m, MatrixFormat format) {
  if (format == MatrixFormat::csv)
    write_matrix_csv(path, m);
  else
    write_matrix_binary(path, m);
}

Matrix validate_distance_matrix(Matrix d, double tol) {
  if (d.rows() != d.cols()) throw DataError("distance matrix is not square");
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  const double atol = tol * scale;
  const double asym = (d - d.transpose()).cwiseAbs().maxCoeff();
  if (asym > atol) throw DataError("asymmetric input (max |D_ij - D_ji| = " + std::to_string(asym) + ")");
  d = symmetrized(d);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (std::abs(d(i, i)) > atol) throw DataError("nonzero diagonal in distance matrix");
    d(i, i) = 0.0;
  }
  const double min_entry = d.minCoeff();
  if (min_entry < -atol) throw DataError("negative distance entries");
  d = d.cwiseMax(0.0);
  return d;
}

DistanceSeries load_distance_series(const std::vector<fs::path>& paths, MatrixFormat format,
                                    double tol) {
  if (paths.empty()) throw DataError("no input files");
  DistanceSeries series;
  series.matrices.reserve(paths.size());
  for (const auto& p : paths) {
    Matrix d = read_matrix(p, format);
    try {
      series.matrices.push_back(validate_distance_matrix(std::move(d), tol));
    } catch (const DataError& e) {
      throw DataError(p.string() + ": " + e.what());
    }
  }
  return series;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("manifest parse error: " + std::string(e.what()));
  }
  Manifest m;
  const fs::path base = path.parent_path();
  const std::string fmt = j.value("format", "csv");
  if (fmt == "csv")
    m.format = MatrixFormat::csv;
  else if (fmt == "binary")
    m.format = MatrixFormat::binary;
  else
    throw DataError("manifest: unknown format '" + fmt + "'");
  if (!j.contains("time_points") || !j["time_points"].is_array() || j["time_points"].empty())
    throw DataError("manifest: missing time_points");
  for (const auto& tp : j["time_points"]) m.time_points.push_back(base / tp.get<std::string>());
  if (j.contains("overall")) m.overall = base / j["overall"].get<std::string>();
  if (j.contains("truth")) m.truth = base / j["truth"].get<std::string>();
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  json j;
  j["format"] = manifest.format == MatrixFormat::csv ? "csv" : "binary";
  j["time_points"] = json::array();
  for (const auto& tp : manifest.time_points) j["time_points"].push_back(tp.filename().string());
  if (!manifest.overall.empty()) j["overall"] = manifest.overall.filename().string();
  if (!manifest.truth.empty()) j["truth"] = manifest.truth.filename().string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ValidationReport validate_negative_type(const Matrix& d, double tol) {
  ValidationReport report;
  const int n = static_cast<int>(d.rows());
  const Matrix q = centering_projector(n);
  const Matrix kc = symmetrized(-0.5 * q * d * q);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kc, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  report.min_eigenvalue = ev.minCoeff();
  report.is_negative_type = report.min_eigenvalue >= -tol;
  for (int i = 0; i < n; ++i)
    if (ev[i] < 0.0) report.clipped_mass += -ev[i];
  if (!report.is_negative_type)
    report.messages.push_back("matrix is not of negative type (min eigenvalue " +
                              std::to_string(report.min_eigenvalue) + ")");
  return report;
}

GramMatrix gram_from_distances(const Matrix& d, double rel_tol) {
  const int n = static_cast<int>(d.rows());
  const Matrix q = centering_projector(n);
  const Matrix kc = symmetrized(-0.5 * q * d * q);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kc);
  Vector ev = eig.eigenvalues();
  (void)rel_tol;  // negatives of any size are clipped; clipped_mass lets callers warn
  GramMatrix g;
  g.centered = true;
  for (int i = 0; i < n; ++i) {
    if (ev[i] < 0.0) {
      g.clipped_mass += -ev[i];
      ev[i] = 0.0;
    }
  }
  g.K = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  g.K = symmetrized(g.K);
  return g;
}

Matrix distances_from_gram(const Matrix& k) {
  const int n = static_cast<int>(k.rows());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = k(i, i) + k(j, j) - 2.0 * k(i, j);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace tetiwd
