#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tetiwd/distance_data.hpp"
#include "tetiwd/rng.hpp"

using namespace tetiwd;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "tetiwd_dd_tests";

fs::path write_csv(const std::string& name, const std::string& content) {
  fs::create_directories(kTmp);
  const fs::path p = kTmp / name;
  std::ofstream out(p);
  out << content;
  return p;
}

Matrix from_points(const std::vector<double>& pts) {
  const int n = static_cast<int>(pts.size());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = (pts[i] - pts[j]) * (pts[i] - pts[j]);
  return d;
}

}  // namespace

TEST_CASE("load a single CSV file with an equilateral matrix") {
  const fs::path p = write_csv("equilateral.csv", "0,2,2\n2,0,2\n2,2,0\n");
  const DistanceSeries series = load_distance_series({p}, MatrixFormat::csv);
  CHECK(series.num_epochs() == 1);
  CHECK(series.size_at(0) == 3);
  CHECK(series.matrices[0](0, 1) == 2.0);
}

TEST_CASE("several files form an ordered series") {
  Rng rng(5);
  std::vector<fs::path> paths;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> pts(20);
    for (auto& x : pts) x = rng.normal();
    const Matrix d = from_points(pts);
    const fs::path p = kTmp / ("epoch" + std::to_string(t) + ".csv");
    fs::create_directories(kTmp);
    write_matrix_csv(p, d);
    paths.push_back(p);
  }
  const DistanceSeries series = load_distance_series(paths, MatrixFormat::csv);
  CHECK(series.num_epochs() == 5);
  for (int t = 0; t < 5; ++t) CHECK(series.size_at(t) == 20);
  CHECK(series.total_objects() == 100);
}

TEST_CASE("load rejects malformed inputs") {
  const fs::path asym = write_csv("asym.csv", "0,1,2\n3,0,1\n2,1,0\n");
  CHECK_THROWS_AS(load_distance_series({asym}, MatrixFormat::csv), DataError);
  CHECK_THROWS_WITH(load_distance_series({asym}, MatrixFormat::csv),
                    doctest::Contains("asymmetric"));

  const fs::path ragged = write_csv("ragged.csv", "0,1\n1,0,3\n");
  CHECK_THROWS_AS(load_distance_series({ragged}, MatrixFormat::csv), DataError);

  const fs::path negative = write_csv("negative.csv", "0,-2\n-2,0\n");
  CHECK_THROWS_AS(load_distance_series({negative}, MatrixFormat::csv), DataError);

  const fs::path diag = write_csv("diag.csv", "1,1\n1,0\n");
  CHECK_THROWS_AS(load_distance_series({diag}, MatrixFormat::csv), DataError);

  // asymmetry within tolerance is symmetrized away
  const fs::path mild = write_csv("mild.csv", "0,1.000000000001\n1,0\n");
  const DistanceSeries ok = load_distance_series({mild}, MatrixFormat::csv);
  CHECK(ok.matrices[0](0, 1) == doctest::Approx(ok.matrices[0](1, 0)));
}

TEST_CASE("binary round trip preserves bytes") {
  Rng rng(9);
  std::vector<double> pts(7);
  for (auto& x : pts) x = rng.normal();
  const Matrix d = from_points(pts);
  fs::create_directories(kTmp);
  const fs::path p = kTmp / "round.bin";
  write_matrix_binary(p, d);
  const Matrix back = read_matrix_binary(p);
  CHECK((back - d).cwiseAbs().maxCoeff() == 0.0);
  const fs::path bad = write_csv("bad.bin", "not a matrix");
  CHECK_THROWS_AS(read_matrix_binary(bad), DataError);
}

TEST_CASE("manifest round trip") {
  fs::create_directories(kTmp);
  Manifest m;
  m.format = MatrixFormat::csv;
  m.time_points = {kTmp / "e1.csv", kTmp / "e2.csv"};
  m.overall = kTmp / "all.csv";
  write_manifest(kTmp / "manifest.json", m);
  const Manifest back = read_manifest(kTmp / "manifest.json");
  CHECK(back.format == MatrixFormat::csv);
  REQUIRE(back.time_points.size() == 2);
  CHECK(back.time_points[0].filename() == "e1.csv");
  CHECK(back.overall.filename() == "all.csv");
  CHECK(back.truth.empty());
}

TEST_CASE("negative type holds for any real point configuration") {
  // points 0, 1, 3 on a line
  const Matrix d = from_points({0.0, 1.0, 3.0});
  CHECK(d(0, 2) == 9.0);
  const ValidationReport report = validate_negative_type(d, 1e-8);
  CHECK(report.is_negative_type);
  CHECK(report.clipped_mass < 1e-9);
}

TEST_CASE("triangle-of-squares violation is flagged as not negative type") {
  Matrix d(3, 3);
  d << 0, 1, 16, 1, 0, 1, 16, 1, 0;
  const ValidationReport report = validate_negative_type(d, 1e-8);
  CHECK_FALSE(report.is_negative_type);
  CHECK(report.min_eigenvalue < -1e-3);
  // direct decomposition oracle: smallest eigenvalue of -QDQ/2
  const Matrix q = centering_projector(3);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(-0.5 * q * d * q), Eigen::EigenvaluesOnly);
  CHECK(report.min_eigenvalue == doctest::Approx(eig.eigenvalues().minCoeff()).epsilon(1e-10));
  CHECK_FALSE(report.messages.empty());
}

TEST_CASE("all-zero distances are degenerately of negative type") {
  const ValidationReport report = validate_negative_type(Matrix::Zero(4, 4), 1e-8);
  CHECK(report.is_negative_type);
  CHECK(report.min_eigenvalue == doctest::Approx(0.0));
}

TEST_CASE("gram_from_distances round-trips through distances_from_gram") {
  // equilateral: all off-diagonal squared distances 2
  Matrix d(3, 3);
  d << 0, 2, 2, 2, 0, 2, 2, 2, 0;
  const GramMatrix g = gram_from_distances(d);
  CHECK(g.centered);
  CHECK((distances_from_gram(g.K) - d).cwiseAbs().maxCoeff() < 1e-10);
  // centered: row sums vanish
  CHECK((g.K * Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-10);

  CHECK(gram_from_distances(Matrix::Zero(3, 3)).K.cwiseAbs().maxCoeff() < 1e-12);

  // two points at squared distance 4: K_c = [[1,-1],[-1,1]]
  Matrix d2(2, 2);
  d2 << 0, 4, 4, 0;
  const GramMatrix g2 = gram_from_distances(d2);
  CHECK(g2.K(0, 0) == doctest::Approx(1.0));
  CHECK(g2.K(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("distances_from_gram basics and translation kernel") {
  CHECK(distances_from_gram(Matrix::Identity(2, 2))(0, 1) == doctest::Approx(2.0));
  // K and K + 1v^T + v1^T give identical distances
  Rng rng(13);
  const int n = 6;
  Matrix x(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
  const Matrix k = x * x.transpose();
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  const Matrix shifted = k + Vector::Ones(n) * v.transpose() + v * Vector::Ones(n).transpose();
  CHECK((distances_from_gram(k) - distances_from_gram(shifted)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gram/distance round trip on random negative-type inputs (property)") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(12));
    const int dim = 1 + static_cast<int>(rng.uniform_int(5));
    Matrix x(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = 3.0 * rng.normal();
    Matrix d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
    const GramMatrix g = gram_from_distances(d);
    const double scale = std::max(1.0, d.maxCoeff());
    CHECK((distances_from_gram(g.K) - d).cwiseAbs().maxCoeff() < 1e-8 * scale);
    CHECK(validate_negative_type(d, 1e-8 * scale).is_negative_type);
    // centered gram of a centered gram is itself
    const GramMatrix gg = gram_from_distances(distances_from_gram(g.K));
    CHECK((gg.K - g.K).cwiseAbs().maxCoeff() < 1e-8 * scale);
  }
}

TEST_CASE("clipping reports the mass removed from non-Euclidean inputs") {
  Matrix d(3, 3);
  d << 0, 1, 16, 1, 0, 1, 16, 1, 0;
  const GramMatrix g = gram_from_distances(d);
  CHECK(g.clipped_mass > 1e-3);
  // the clipped gram is PSD
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g.K, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}
