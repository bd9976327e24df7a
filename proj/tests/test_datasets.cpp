#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "oracles.hpp"
#include "qcoral/classify.hpp"
#include "qcoral/datasets.hpp"

using namespace qcoral;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("qcoral_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

// n 28x28 images whose pixels all equal 10 * label.
void write_idx(const fs::path& dir, const std::vector<int>& labels) {
  std::ofstream img(dir / "train-images-idx3-ubyte", std::ios::binary);
  std::ofstream lab(dir / "train-labels-idx1-ubyte", std::ios::binary);
  put_be32(img, 2051);
  put_be32(img, static_cast<std::uint32_t>(labels.size()));
  put_be32(img, 28);
  put_be32(img, 28);
  put_be32(lab, 2049);
  put_be32(lab, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    const std::vector<char> px(28 * 28, static_cast<char>(10 * l));
    img.write(px.data(), static_cast<std::streamsize>(px.size()));
    const char c = static_cast<char>(l);
    lab.write(&c, 1);
  }
}

}  // namespace

TEST(Synthetic, ShapeAndLabels) {
  for (auto kind : {DatasetKind::d1, DatasetKind::d2, DatasetKind::d3}) {
    const auto spec = default_spec(kind, 3);
    const DataMatrix x = generate_synthetic_raw(spec);
    EXPECT_EQ(x.dimension(), 4);
    EXPECT_EQ(x.samples(), spec.sample_count);
    std::map<int, int> hist;
    for (int l : *x.labels) ++hist[l];
    EXPECT_EQ(static_cast<int>(hist.size()), spec.class_count);
    for (const auto& [l, n] : hist) EXPECT_EQ(n, spec.sample_count / spec.class_count) << "label " << l;
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = generate_synthetic_raw(default_spec(DatasetKind::d1, 5));
  const auto b = generate_synthetic_raw(default_spec(DatasetKind::d1, 5));
  const auto c = generate_synthetic_raw(default_spec(DatasetKind::d1, 6));
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(*a.labels, *b.labels);
  EXPECT_NE(a.values, c.values);
}

TEST(Synthetic, PreprocessedColumnsAreUnit) {
  const auto x = generate_synthetic(default_spec(DatasetKind::d2, 2));
  for (Index i = 0; i < x.samples(); ++i) EXPECT_NEAR(x.values.col(i).norm(), 1.0, 1e-12);
}

TEST(Synthetic, NearZeroMean) {
  const auto x = generate_synthetic_raw(default_spec(DatasetKind::d1, 4));
  // Offsets come in +/- pairs within each class, so the raw cloud is centered up to noise.
  EXPECT_LE(x.values.rowwise().mean().norm(), 0.5);
}

TEST(Synthetic, NoiseRatioBetweenDomains) {
  std::vector<double> ratios;
  for (unsigned long long s = 1; s <= 5; ++s) {
    const double v1 = class_conditional_variance(generate_synthetic_raw(default_spec(DatasetKind::d1, s)));
    const double v2 = class_conditional_variance(generate_synthetic_raw(default_spec(DatasetKind::d2, s)));
    ratios.push_back(v2 / v1);
  }
  for (double r : ratios) EXPECT_NEAR(r, 4.0, 0.8);
}

TEST(Synthetic, SpecValidation) {
  auto s = default_spec(DatasetKind::d1);
  s.dimension = 3;
  EXPECT_THROW(s.validate(), ConfigError);
  s = default_spec(DatasetKind::d3);
  s.class_count = 2;
  s.sample_count = 100;
  EXPECT_THROW(s.validate(), ConfigError);
  s = default_spec(DatasetKind::d1);
  s.sample_count = 99;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(parse_dataset_kind("d9"), ConfigError);
}

TEST(Csv, RoundTrip) {
  TempDir tmp;
  const auto x = generate_synthetic_raw(default_spec(DatasetKind::d1, 1));
  write_csv(x, tmp.path() / "d1.csv");
  std::ifstream in(tmp.path() / "d1.csv");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 101);
  const auto y = read_csv(tmp.path() / "d1.csv");
  EXPECT_EQ(x.values, y.values);
  EXPECT_EQ(*x.labels, *y.labels);
}

TEST(Csv, MalformedRowsReportLine) {
  TempDir tmp;
  {
    std::ofstream out(tmp.path() / "bad.csv");
    out << "f0,f1,label\n1,2,0\n3,4\n";
  }
  try {
    read_csv(tmp.path() / "bad.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(tmp.path() / "nan.csv");
    out << "f0,label\nabc,1\n";
  }
  EXPECT_THROW(read_csv(tmp.path() / "nan.csv"), DataError);
  EXPECT_THROW(read_csv(tmp.path() / "missing.csv"), DataError);
}

TEST(Iris, BundledFile) {
  const auto x = load_iris();
  EXPECT_EQ(x.dimension(), 4);
  EXPECT_EQ(x.samples(), 150);
  std::array<int, 3> hist{};
  for (int l : *x.labels) ++hist[static_cast<std::size_t>(l)];
  EXPECT_EQ(hist, (std::array<int, 3>{50, 50, 50}));
  EXPECT_EQ(load_iris().values, x.values);
}

TEST(Iris, TruncatedFileIsRejected) {
  TempDir tmp;
  std::ifstream in(data_root() / "iris.csv");
  std::ofstream out(tmp.path() / "iris.csv");
  std::string line;
  for (int i = 0; i < 100 && std::getline(in, line); ++i) out << line << '\n';
  out.close();
  EXPECT_THROW(load_iris(tmp.path() / "iris.csv"), DataError);
}

TEST(Iris, DataDirOverride) {
  TempDir tmp;
  fs::copy_file(data_root() / "iris.csv", tmp.path() / "iris.csv");
  ::setenv("QCORAL_DATA_DIR", tmp.path().c_str(), 1);
  EXPECT_EQ(data_root(), tmp.path());
  EXPECT_EQ(load_iris().samples(), 150);
  ::unsetenv("QCORAL_DATA_DIR");
}

TEST(Resize, ConstantImageStaysConstant) {
  const std::vector<double> img(28 * 28, 0.3);
  for (double v : bilinear_resize(img, 28, 28, 16, 16)) EXPECT_NEAR(v, 0.3, 1e-15);
}

TEST(Resize, LinearRampIsExact) {
  std::vector<double> img(4 * 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) img[static_cast<std::size_t>(r * 4 + c)] = r + 2.0 * c;
  const auto out = bilinear_resize(img, 4, 4, 7, 7);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) EXPECT_NEAR(out[static_cast<std::size_t>(r * 7 + c)], 0.5 * r + c, 1e-12);
}

TEST(Digits, IdxRoundTrip) {
  TempDir tmp;
  std::vector<int> labels;
  for (int rep = 0; rep < 3; ++rep)
    for (int l = 0; l < 10; ++l) labels.push_back(l);
  write_idx(tmp.path(), labels);
  const auto x = load_digits(DatasetKind::mnist, tmp.path(), 20);
  EXPECT_EQ(x.dimension(), 256);
  EXPECT_EQ(x.samples(), 20);
  std::array<int, 10> hist{};
  for (int l : *x.labels) ++hist[static_cast<std::size_t>(l)];
  for (int h : hist) EXPECT_EQ(h, 2);
  for (Index j = 0; j < 20; ++j) {
    const double want = 10.0 * (*x.labels)[static_cast<std::size_t>(j)] / 255.0;
    EXPECT_NEAR(x.values.col(j).maxCoeff(), want, 1e-12);
    EXPECT_NEAR(x.values.col(j).minCoeff(), want, 1e-12);
  }
  EXPECT_THROW(load_digits(DatasetKind::mnist, tmp.path(), 40), DataError);
  EXPECT_THROW(load_digits(DatasetKind::mnist, tmp.path(), 15), ConfigError);
}

TEST(Digits, IdxBadMagic) {
  TempDir tmp;
  write_idx(tmp.path(), {0, 1});
  {
    std::fstream f(tmp.path() / "train-images-idx3-ubyte", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put(0);
  }
  EXPECT_THROW(load_digits(DatasetKind::mnist, tmp.path(), 10), DataError);
}

TEST(Digits, UspsSignedRange) {
  TempDir tmp;
  {
    std::ofstream out(tmp.path() / "usps.txt");
    for (int l = 0; l < 10; ++l) {
      out << l;
      for (int k = 0; k < 256; ++k) out << ' ' << (k % 2 ? -1.0 : 1.0);
      out << '\n';
    }
  }
  const auto x = load_digits(DatasetKind::usps, tmp.path(), 10);
  EXPECT_EQ(x.samples(), 10);
  EXPECT_DOUBLE_EQ(x.values(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x.values(1, 0), 0.0);
  {
    std::ofstream out(tmp.path() / "short.txt");
    out << "1 0.5 0.5\n";
  }
  EXPECT_THROW(load_digits(DatasetKind::usps, tmp.path() / "short.txt", 10), DataError);
}

TEST(Digits, MissingDirectory) {
  EXPECT_THROW(load_digits(DatasetKind::mnist, "/nonexistent/qcoral", 10), DataError);
}

TEST(Pad, PowerOfTwoUnchanged) {
  const auto x = generate_synthetic(default_spec(DatasetKind::d1, 1));
  const auto p = pad_to_qubits(x);
  EXPECT_EQ(p.values, x.values);
  EXPECT_EQ(p.unpadded_dimension(), 4);
}

TEST(Pad, ThreeFeaturesGetOneZeroRow) {
  std::mt19937_64 rng(1);
  const DataMatrix x(oracle::random_matrix(rng, 3, 7), std::vector<int>(7, 0));
  const auto p = pad_to_qubits(x);
  ASSERT_EQ(p.dimension(), 4);
  EXPECT_EQ(p.unpadded_dimension(), 3);
  EXPECT_TRUE(p.values.row(3).isZero());
  for (Index i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(p.values.col(i).norm(), x.values.col(i).norm());
}

// ---------------------------------------------------------------------------
// Nearest-neighbor classifier.

TEST(Knn, SinglePoint) {
  const DataMatrix train(Matrix::Ones(2, 1), std::vector<int>{7});
  const DataMatrix test(Matrix::Zero(2, 3), std::vector<int>{7, 7, 7});
  const auto r = knn_predict(train, test);
  EXPECT_EQ(r.predicted, (std::vector<int>{7, 7, 7}));
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Knn, SelfMatchIsPerfect) {
  const auto x = generate_synthetic(default_spec(DatasetKind::d3, 2));
  const auto r = knn_predict(x, x);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.confusion.trace(), 150);
}

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix train = oracle::random_matrix(rng, 5, 30);
    const Matrix test = oracle::random_matrix(rng, 5, 20);
    std::vector<int> labels(30);
    for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
    EXPECT_EQ(knn_predict(DataMatrix(train, labels), DataMatrix(test)).predicted,
              oracle::brute_knn(train, labels, test));
  }
}

TEST(Knn, TiesGoToLowestIndex) {
  Matrix train(1, 2);
  train << -1, 1;
  const auto r = knn_predict(DataMatrix(train, std::vector<int>{4, 9}), DataMatrix(Matrix::Zero(1, 1)));
  EXPECT_EQ(r.predicted[0], 4);
}

TEST(Knn, Errors) {
  const DataMatrix labeled(Matrix::Ones(2, 2), std::vector<int>{0, 1});
  EXPECT_THROW(knn_predict(DataMatrix(Matrix::Ones(2, 2)), labeled), ValidationError);
  EXPECT_THROW(knn_predict(labeled, DataMatrix(Matrix::Ones(3, 2))), DimensionError);
}
