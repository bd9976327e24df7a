#pragma once

// Synthetic generators, CSV / IDX / USPS readers, bilinear rescaling and
// power-of-two padding.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qcoral/coral.hpp"
#include "qcoral/linalg.hpp"

namespace qcoral {

enum class DatasetKind { d1, d2, d3, iris, mnist, usps, csv };

inline const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::d1: return "d1";
    case DatasetKind::d2: return "d2";
    case DatasetKind::d3: return "d3";
    case DatasetKind::iris: return "iris";
    case DatasetKind::mnist: return "mnist";
    case DatasetKind::usps: return "usps";
    case DatasetKind::csv: return "csv";
  }
  return "unknown";
}

inline DatasetKind parse_dataset_kind(const std::string& s) {
  static const std::map<std::string, DatasetKind> table = {
      {"d1", DatasetKind::d1},       {"d2", DatasetKind::d2},   {"d3", DatasetKind::d3},
      {"iris", DatasetKind::iris},   {"mnist", DatasetKind::mnist},
      {"usps", DatasetKind::usps},   {"csv", DatasetKind::csv}};
  const auto it = table.find(s);
  if (it == table.end()) throw ConfigError("datasets", "unknown dataset kind '" + s + "'");
  return it->second;
}

inline bool is_synthetic(DatasetKind k) {
  return k == DatasetKind::d1 || k == DatasetKind::d2 || k == DatasetKind::d3;
}

struct DatasetSpec {
  DatasetKind kind = DatasetKind::d1;
  int sample_count = 100;
  int dimension = 4;
  int class_count = 2;
  double sigma = 1.0;
  /// Distance of the class offsets from the origin, in units of sigma.
  double separation = 4.0;
  unsigned long long seed = 1;
  std::optional<std::string> path;

  void validate() const {
    if (dimension < 1) throw ConfigError("datasets", "dimension must be >= 1");
    if (sample_count < 1) throw ConfigError("datasets", "sample_count must be >= 1");
    if (class_count < 1) throw ConfigError("datasets", "class_count must be >= 1");
    if (is_synthetic(kind)) {
      if (sample_count % class_count != 0) {
        throw ConfigError("datasets", "sample_count " + std::to_string(sample_count) +
                                          " not divisible by class_count " +
                                          std::to_string(class_count));
      }
      if (dimension < 4) throw ConfigError("datasets", "synthetic kinds need dimension >= 4");
      if (!(sigma > 0.0)) throw ConfigError("datasets", "sigma must be positive");
      const int expected = kind == DatasetKind::d3 ? 3 : 2;
      if (class_count != expected) {
        throw ConfigError("datasets", std::string(to_string(kind)) + " has " +
                                          std::to_string(expected) + " classes");
      }
    }
    if ((kind == DatasetKind::csv) && !path) throw ConfigError("datasets", "csv kind needs a path");
  }
};

/// Default spec per kind: 100 4-d points in 2 classes for d1 (sigma 1) and
/// d2 (sigma 2); 150 4-d points in 3 classes for d3.
inline DatasetSpec default_spec(DatasetKind kind, unsigned long long seed = 1) {
  DatasetSpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case DatasetKind::d1: break;
    case DatasetKind::d2: s.sigma = 2.0; break;
    case DatasetKind::d3:
      s.sample_count = 150;
      s.class_count = 3;
      s.separation = 3.0;
      break;
    case DatasetKind::iris:
      s.sample_count = 150;
      s.class_count = 3;
      break;
    case DatasetKind::mnist:
      s.sample_count = 2000;
      s.dimension = 256;
      s.class_count = 10;
      break;
    case DatasetKind::usps:
      s.sample_count = 1800;
      s.dimension = 256;
      s.class_count = 10;
      break;
    case DatasetKind::csv: break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic data.

namespace detail {

struct Offset {
  int axis;  // -1: the origin
  double sign;
};

/// Per-class lattice offsets. Classes of d1/d2 are pairs of antipodal blobs
/// so that their second-order statistics do not depend on the sign of any
/// axis; d3 orders its classes along the third feature.
inline std::vector<std::vector<Offset>> class_offsets(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::d1:
      return {{{0, 1}, {0, -1}}, {{1, 1}, {1, -1}, {2, 1}, {2, -1}}};
    case DatasetKind::d2:
      return {{{3, 1}, {3, -1}}, {{0, 1}, {0, -1}, {1, 1}, {1, -1}}};
    case DatasetKind::d3:
      return {{{2, 1}}, {{-1, 0}}, {{2, -1}}};
    default:
      throw ConfigError("datasets", std::string(to_string(kind)) + " is not synthetic");
  }
}

}  // namespace detail

/// Raw (pre-normalization) synthetic samples, class-major order.
inline DataMatrix generate_synthetic_raw(const DatasetSpec& spec) {
  spec.validate();
  if (!is_synthetic(spec.kind)) {
    throw ConfigError("datasets", "generate_synthetic needs kind d1, d2 or d3");
  }
  const auto offsets = detail::class_offsets(spec.kind);
  const int per_class = spec.sample_count / spec.class_count;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(spec.dimension, spec.sample_count);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(spec.sample_count));
  Index col = 0;
  for (int k = 0; k < spec.class_count; ++k) {
    const auto& offs = offsets[static_cast<std::size_t>(k)];
    for (int j = 0; j < per_class; ++j, ++col) {
      for (Index m = 0; m < x.rows(); ++m) x(m, col) = spec.sigma * normal(rng);
      const auto& o = offs[static_cast<std::size_t>(j) % offs.size()];
      if (o.axis >= 0) x(o.axis, col) += o.sign * spec.separation * spec.sigma;
      labels.push_back(k);
    }
  }
  return DataMatrix(std::move(x), std::move(labels));
}

/// Preprocessed synthetic dataset (zero mean, unit columns).
inline DataMatrix generate_synthetic(const DatasetSpec& spec) {
  return preprocess(generate_synthetic_raw(spec));
}

/// Mean over classes of the per-feature variance around the class mean.
inline double class_conditional_variance(const DataMatrix& x) {
  if (!x.labels) throw ValidationError("datasets", "class-conditional variance needs labels");
  std::map<int, std::vector<Index>> groups;
  for (Index i = 0; i < x.samples(); ++i) groups[(*x.labels)[static_cast<std::size_t>(i)]].push_back(i);
  double acc = 0.0;
  for (const auto& [label, idx] : groups) {
    Matrix g(x.dimension(), static_cast<Index>(idx.size()));
    for (Index j = 0; j < g.cols(); ++j) g.col(j) = x.values.col(idx[static_cast<std::size_t>(j)]);
    const Matrix centered = g.colwise() - g.rowwise().mean();
    acc += centered.squaredNorm() / static_cast<double>(g.size());
  }
  return acc / static_cast<double>(groups.size());
}

// ---------------------------------------------------------------------------
// Paths.

/// QCORAL_DATA_DIR when set, otherwise the bundled data directory.
inline std::filesystem::path data_root() {
  if (const char* env = std::getenv("QCORAL_DATA_DIR"); env && *env) return env;
#ifdef QCORAL_SOURCE_DATA_DIR
  return QCORAL_SOURCE_DATA_DIR;
#else
  return "data";
#endif
}

/// Relative paths that do not exist as given are looked up under data_root().
inline std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
  if (p.is_absolute() || std::filesystem::exists(p)) return p;
  return data_root() / p;
}

// ---------------------------------------------------------------------------
// CSV.

/// Writes `f0,...,f{D-1},label` then one row per sample. Unlabeled data gets
/// label -1.
inline void write_csv(const DataMatrix& x, const std::filesystem::path& path) {
  x.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("datasets", "cannot open '" + path.string() + "' for writing");
  for (Index m = 0; m < x.dimension(); ++m) out << 'f' << m << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (Index i = 0; i < x.samples(); ++i) {
    for (Index m = 0; m < x.dimension(); ++m) out << x.values(m, i) << ',';
    out << (x.labels ? (*x.labels)[static_cast<std::size_t>(i)] : -1) << '\n';
  }
  if (!out) throw DataError("datasets", "write to '" + path.string() + "' failed");
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

inline double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DataError("datasets", where + ": not a number: '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size() || !std::isfinite(v)) {
    throw DataError("datasets", where + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Reads a labeled CSV with a header row; the last column is the label.
inline DataMatrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("datasets", "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("datasets", path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, ',');
  if (header.size() < 2) throw DataError("datasets", path.string() + ":1: header needs >= 2 columns");
  const Index d = static_cast<Index>(header.size()) - 1;
  std::vector<std::vector<double>> cols;
  std::vector<int> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (static_cast<Index>(fields.size()) != d + 1) {
      throw DataError("datasets", where + ": expected " + std::to_string(d + 1) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Index m = 0; m < d; ++m) row[static_cast<std::size_t>(m)] = detail::parse_number(fields[static_cast<std::size_t>(m)], where);
    const double lab = detail::parse_number(fields.back(), where);
    if (lab != std::floor(lab)) throw DataError("datasets", where + ": label is not an integer");
    cols.push_back(std::move(row));
    labels.push_back(static_cast<int>(lab));
  }
  if (cols.empty()) throw DataError("datasets", path.string() + ": no data rows");
  Matrix x(d, static_cast<Index>(cols.size()));
  for (Index i = 0; i < x.cols(); ++i) {
    for (Index m = 0; m < d; ++m) x(m, i) = cols[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  }
  return DataMatrix(std::move(x), std::move(labels));
}

/// 4 x 150 matrix with labels 0/1/2, 50 each.
inline DataMatrix load_iris(const std::filesystem::path& path = "iris.csv") {
  const auto resolved = resolve_data_path(path);
  DataMatrix x = read_csv(resolved);
  const std::string where = resolved.string();
  if (x.dimension() != 4) {
    throw DataError("datasets", where + ": expected 4 features, got " + std::to_string(x.dimension()));
  }
  if (x.samples() != 150) {
    throw DataError("datasets", where + ":" + std::to_string(x.samples() + 2) +
                                    ": expected 150 rows, got " + std::to_string(x.samples()));
  }
  std::array<int, 3> hist{};
  for (std::size_t i = 0; i < x.labels->size(); ++i) {
    const int l = (*x.labels)[i];
    if (l < 0 || l > 2) {
      throw DataError("datasets", where + ":" + std::to_string(i + 2) + ": label " +
                                      std::to_string(l) + " outside {0,1,2}");
    }
    ++hist[static_cast<std::size_t>(l)];
  }
  if (hist != std::array<int, 3>{50, 50, 50}) {
    throw DataError("datasets", where + ": class histogram is not (50,50,50)");
  }
  return x;
}

// ---------------------------------------------------------------------------
// Digits.

/// Bilinear resampling with corner alignment; `img` is row-major h x w.
inline std::vector<double> bilinear_resize(const std::vector<double>& img, int h, int w, int oh,
                                           int ow) {
  if (static_cast<int>(img.size()) != h * w || h < 1 || w < 1 || oh < 1 || ow < 1) {
    throw DimensionError("datasets", "bilinear_resize: bad image shape");
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  const double sy = oh > 1 ? static_cast<double>(h - 1) / (oh - 1) : 0.0;
  const double sx = ow > 1 ? static_cast<double>(w - 1) / (ow - 1) : 0.0;
  for (int r = 0; r < oh; ++r) {
    const double y = r * sy;
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = y - y0;
    for (int c = 0; c < ow; ++c) {
      const double x = c * sx;
      const int x0 = std::min(static_cast<int>(x), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = x - x0;
      auto at = [&](int yy, int xx) { return img[static_cast<std::size_t>(yy * w + xx)]; };
      out[static_cast<std::size_t>(r * ow + c)] =
          (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
          fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
    }
  }
  return out;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& where) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("datasets", where + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

struct RawDigits {
  std::vector<std::vector<double>> images;  // 16x16 row-major, values in [0,1]
  std::vector<int> labels;
};

inline RawDigits read_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ifstream fi(images, std::ios::binary);
  std::ifstream fl(labels, std::ios::binary);
  if (!fi) throw DataError("datasets", "cannot open '" + images.string() + "'");
  if (!fl) throw DataError("datasets", "cannot open '" + labels.string() + "'");
  const std::string wi = images.string();
  const std::string wl = labels.string();
  if (read_be32(fi, wi) != 2051) throw DataError("datasets", wi + ": bad magic number (want 2051)");
  if (read_be32(fl, wl) != 2049) throw DataError("datasets", wl + ": bad magic number (want 2049)");
  const std::uint32_t n = read_be32(fi, wi);
  const std::uint32_t rows = read_be32(fi, wi);
  const std::uint32_t cols = read_be32(fi, wi);
  const std::uint32_t nl = read_be32(fl, wl);
  if (n != nl) throw DataError("datasets", "image / label count mismatch");
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw DataError("datasets", wi + ": implausible image size");
  }
  RawDigits out;
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw DataError("datasets", wi + ": truncated at image " + std::to_string(i));
    }
    char lab = 0;
    if (!fl.read(&lab, 1)) throw DataError("datasets", wl + ": truncated at label " + std::to_string(i));
    std::vector<double> img(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) img[k] = buf[k] / 255.0;
    out.images.push_back(bilinear_resize(img, static_cast<int>(rows), static_cast<int>(cols), 16, 16));
    out.labels.push_back(static_cast<unsigned char>(lab));
  }
  return out;
}

/// Whitespace-delimited `label v1 ... v256`; values in [-1,1] are mapped to [0,1].
inline RawDigits read_usps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("datasets", "cannot open '" + path.string() + "'");
  RawDigits out;
  std::string line;
  int lineno = 0;
  bool signed_range = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (tok.size() != 257) {
      throw DataError("datasets", where + ": expected 257 fields, got " + std::to_string(tok.size()));
    }
    const double lab = parse_number(tok[0], where);
    std::vector<double> img(256);
    for (std::size_t k = 0; k < 256; ++k) {
      img[k] = parse_number(tok[k + 1], where);
      if (img[k] < 0.0) signed_range = true;
    }
    out.labels.push_back(static_cast<int>(lab));
    out.images.push_back(std::move(img));
  }
  if (out.images.empty()) throw DataError("datasets", path.string() + ": no images");
  if (signed_range) {
    for (auto& img : out.images) {
      for (double& v : img) v = 0.5 * (v + 1.0);
    }
  }
  return out;
}

}  // namespace detail

/// `count` images, count/classes per label in file order, as a 256 x count
/// matrix. `path` is a directory holding the IDX pair (MNIST) or the USPS
/// text file itself (a directory is searched for `usps.txt`).
inline DataMatrix load_digits(DatasetKind kind, const std::filesystem::path& path, int count,
                              int classes = 10) {
  if (count < 1 || count % classes != 0) {
    throw ConfigError("datasets", "digit count must be a positive multiple of " + std::to_string(classes));
  }
  const auto root = resolve_data_path(path);
  detail::RawDigits raw;
  if (kind == DatasetKind::mnist) {
    raw = detail::read_mnist(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte");
  } else if (kind == DatasetKind::usps) {
    raw = detail::read_usps(std::filesystem::is_directory(root) ? root / "usps.txt" : root);
  } else {
    throw ConfigError("datasets", "load_digits needs kind mnist or usps");
  }
  const int per = count / classes;
  std::vector<int> taken(static_cast<std::size_t>(classes), 0);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < raw.labels.size() && static_cast<int>(chosen.size()) < count; ++i) {
    const int l = raw.labels[i];
    if (l < 0 || l >= classes) continue;
    if (taken[static_cast<std::size_t>(l)] < per) {
      ++taken[static_cast<std::size_t>(l)];
      chosen.push_back(i);
    }
  }
  if (static_cast<int>(chosen.size()) < count) {
    throw DataError("datasets", "only " + std::to_string(chosen.size()) +
                                    " class-balanced images available, " + std::to_string(count) +
                                    " requested");
  }
  Matrix x(256, count);
  std::vector<int> labels;
  for (Index j = 0; j < count; ++j) {
    const auto& img = raw.images[chosen[static_cast<std::size_t>(j)]];
    for (Index m = 0; m < 256; ++m) x(m, j) = img[static_cast<std::size_t>(m)];
    labels.push_back(raw.labels[chosen[static_cast<std::size_t>(j)]]);
  }
  return DataMatrix(std::move(x), std::move(labels));
}

// ---------------------------------------------------------------------------

/// Appends zero rows up to the next power of two and records the original
/// dimension.
inline DataMatrix pad_to_qubits(const DataMatrix& x) {
  DataMatrix out = x;
  const Index d = x.dimension();
  const Index p = next_power_of_two(std::max<Index>(1, d));
  out.original_dimension = x.unpadded_dimension();
  if (p != d) {
    out.values = Matrix::Zero(p, x.samples());
    out.values.topRows(d) = x.values;
  }
  return out;
}

/// Raw data for any spec (synthetic, Iris, digits or CSV); not preprocessed.
inline DataMatrix load_dataset(const DatasetSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DatasetKind::d1:
    case DatasetKind::d2:
    case DatasetKind::d3: return generate_synthetic_raw(spec);
    case DatasetKind::iris: return load_iris(spec.path.value_or("iris.csv"));
    case DatasetKind::mnist: return load_digits(spec.kind, spec.path.value_or("mnist"), spec.sample_count);
    case DatasetKind::usps: return load_digits(spec.kind, spec.path.value_or("usps"), spec.sample_count);
    case DatasetKind::csv: return read_csv(resolve_data_path(*spec.path));
  }
  throw ConfigError("datasets", "unknown dataset kind");
}

}  // namespace qcoral
