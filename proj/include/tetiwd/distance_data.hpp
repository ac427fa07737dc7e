#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tetiwd/linalg.hpp"

namespace tetiwd {

// Raised on malformed or inconsistent input data (CLI maps it to exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { csv, binary };

// Ordered per-time-point squared-distance matrices. Immutable after load and
// safe to share across threads.
struct DistanceSeries {
  std::vector<Matrix> matrices;

  int num_epochs() const { return static_cast<int>(matrices.size()); }
  int size_at(int t) const { return static_cast<int>(matrices[t].rows()); }
  int total_objects() const {
    int n = 0;
    for (const auto& m : matrices) n += static_cast<int>(m.rows());
    return n;
  }
};

struct GramMatrix {
  Matrix K;
  bool centered = false;
  double clipped_mass = 0.0;  // total magnitude of eigenvalues clipped to zero
};

struct ValidationReport {
  bool is_negative_type = false;
  double min_eigenvalue = 0.0;
  double clipped_mass = 0.0;
  std::vector<std::string> messages;
};

// centering projector Q with Q_ij = delta_ij - 1/n
Matrix centering_projector(int n);

// --- matrix file I/O -------------------------------------------------------
// CSV: plain numeric grid, no header. Binary: magic "TDW1", u64 n, then n^2
// little-endian doubles (row-major).

Matrix read_matrix_csv(const std::filesystem::path& path);
Matrix read_matrix_binary(const std::filesystem::path& path);
Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);
void write_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format);

// Validates each file as a squared-distance matrix: square, symmetric within
// tol (then symmetrized), zero diagonal within tol, entries >= -tol (tiny
// negatives clipped). Violations raise DataError.
DistanceSeries load_distance_series(const std::vector<std::filesystem::path>& paths,
                                    MatrixFormat format, double tol = 1e-8);

// Same validation applied to an in-memory matrix.
Matrix validate_distance_matrix(Matrix d, double tol = 1e-8);

// Manifest JSON: {"format": "csv"|"binary", "time_points": [...],
// "overall": optional path, "truth": optional path}; paths are relative to
// the manifest's directory.
struct Manifest {
  MatrixFormat format = MatrixFormat::csv;
  std::vector<std::filesystem::path> time_points;
  std::filesystem::path overall;  // empty when absent
  std::filesystem::path truth;    // empty when absent
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// --- distance / Gram conversions -------------------------------------------

// Eigenvalues of -(1/2) Q D Q decide whether D is a squared-Euclidean
// (negative type) matrix; tol is the absolute slack on the smallest one.
ValidationReport validate_negative_type(const Matrix& d, double tol);

// Centered Gram matrix K_c = -(1/2) Q D Q with eigenvalues in
// [-rel_tol * lambda_max, 0) clipped to zero; larger violations are clipped
// too but recorded in clipped_mass so callers can warn.
GramMatrix gram_from_distances(const Matrix& d, double rel_tol = 1e-8);

// D_ij = K_ii + K_jj - 2 K_ij
Matrix distances_from_gram(const Matrix& k);

}  // namespace tetiwd
