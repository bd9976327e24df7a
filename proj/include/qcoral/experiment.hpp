#pragma once

// Experiment configuration (flat `key = value` text), the five pipelines,
// result documents and table aggregation.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcoral/classify.hpp"
#include "qcoral/coral.hpp"
#include "qcoral/datasets.hpp"
#include "qcoral/qblas.hpp"
#include "qcoral/vqcoral.hpp"

namespace qcoral {

inline constexpr int kResultSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Method { na, coral, qblas, vq_e2e, vq_mm };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::na: return "na";
    case Method::coral: return "coral";
    case Method::qblas: return "qblas";
    case Method::vq_e2e: return "vq_e2e";
    case Method::vq_mm: return "vq_mm";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  static const std::map<std::string, Method> table = {{"na", Method::na},
                                                      {"coral", Method::coral},
                                                      {"qblas", Method::qblas},
                                                      {"vq_e2e", Method::vq_e2e},
                                                      {"vq_mm", Method::vq_mm}};
  const auto it = table.find(s);
  if (it == table.end()) throw ConfigError("cli", "unknown method '" + s + "'");
  return it->second;
}

inline const char* method_label(Method m) {
  switch (m) {
    case Method::na: return "NA";
    case Method::coral: return "Classical CORAL";
    case Method::qblas: return "QBLAS CORAL";
    case Method::vq_e2e: return "VQCORAL";
    case Method::vq_mm: return "VQCORAL (MM)";
  }
  return "unknown";
}

struct PhaseSettings {
  int bits = 10;
  std::optional<double> gamma;
  std::optional<double> evolution_time;
  qblas::Backend backend = qblas::Backend::automatic;
};

struct ExperimentConfig {
  Method method = Method::na;
  DatasetSpec source = default_spec(DatasetKind::d1, 1);
  DatasetSpec target = default_spec(DatasetKind::d2, 2);
  int qubits = 0;  // 0: log2 of the padded dimension
  int layers = 8;
  OptimizerConfig optimizer;
  vq::DeflationConfig deflation;
  PhaseSettings phase;
  vq::VmmSharing sharing = vq::VmmSharing::per_sample;
  int jobs = 1;
  std::string output_path;

  std::string task_name() const {
    auto name = [](const DatasetSpec& s) {
      return s.kind == DatasetKind::csv && s.path ? std::filesystem::path(*s.path).stem().string()
                                                   : std::string(to_string(s.kind));
    };
    return name(source) + "->" + name(target);
  }

  void validate() const {
    source.validate();
    target.validate();
    if (layers < 1) throw ConfigError("cli", "layers must be >= 1");
    if (qubits < 0) throw ConfigError("cli", "qubits must be >= 0");
    if (jobs < 1) throw ConfigError("cli", "jobs must be >= 1");
    optimizer.validate();
  }
};

/// Sets every seed in the config from one value (targets get seed + 1000).
inline void apply_seed(ExperimentConfig& cfg, unsigned long long seed) {
  cfg.source.seed = seed;
  cfg.target.seed = seed + 1000;
  cfg.optimizer.seed = seed;
}

// ---------------------------------------------------------------------------
// Config text.

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("cli", "key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

template <class Int = long long>
Int to_integer(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("cli", "key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

inline const char* to_string(qblas::Backend b) {
  switch (b) {
    case qblas::Backend::gate: return "gate";
    case qblas::Backend::spectral: return "spectral";
    case qblas::Backend::automatic: return "automatic";
  }
  return "automatic";
}

inline void dataset_entries(std::vector<std::pair<std::string, std::string>>& out,
                            const std::string& prefix, const DatasetSpec& s) {
  out.emplace_back(prefix + ".kind", qcoral::to_string(s.kind));
  out.emplace_back(prefix + ".samples", std::to_string(s.sample_count));
  out.emplace_back(prefix + ".dimension", std::to_string(s.dimension));
  out.emplace_back(prefix + ".classes", std::to_string(s.class_count));
  out.emplace_back(prefix + ".sigma", format_double(s.sigma));
  out.emplace_back(prefix + ".separation", format_double(s.separation));
  out.emplace_back(prefix + ".seed", std::to_string(s.seed));
  if (s.path) out.emplace_back(prefix + ".path", *s.path);
}

}  // namespace detail

/// Ordered key/value view of a config; the canonical serialization.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  using detail::format_double;
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("method", to_string(c.method));
  detail::dataset_entries(e, "source", c.source);
  detail::dataset_entries(e, "target", c.target);
  e.emplace_back("circuit.qubits", std::to_string(c.qubits));
  e.emplace_back("circuit.layers", std::to_string(c.layers));
  e.emplace_back("optimizer.learning_rate", format_double(c.optimizer.learning_rate));
  e.emplace_back("optimizer.epsilon", format_double(c.optimizer.accumulator_epsilon));
  e.emplace_back("optimizer.max_iterations", std::to_string(c.optimizer.max_iterations));
  e.emplace_back("optimizer.convergence_tol", format_double(c.optimizer.convergence_tol));
  e.emplace_back("optimizer.window", std::to_string(c.optimizer.convergence_window));
  e.emplace_back("optimizer.restarts", std::to_string(c.optimizer.restarts));
  e.emplace_back("optimizer.seed", std::to_string(c.optimizer.seed));
  if (c.deflation.penalty_weight) {
    e.emplace_back("deflation.penalty_weight", format_double(*c.deflation.penalty_weight));
  }
  if (c.deflation.eta) e.emplace_back("deflation.eta", format_double(*c.deflation.eta));
  e.emplace_back("deflation.target_count", std::to_string(c.deflation.target_count));
  e.emplace_back("deflation.restarts", std::to_string(c.deflation.restarts));
  e.emplace_back("phase.bits", std::to_string(c.phase.bits));
  if (c.phase.gamma) e.emplace_back("phase.gamma", format_double(*c.phase.gamma));
  if (c.phase.evolution_time) {
    e.emplace_back("phase.evolution_time", format_double(*c.phase.evolution_time));
  }
  e.emplace_back("phase.backend", detail::to_string(c.phase.backend));
  e.emplace_back("vmm.sharing", c.sharing == vq::VmmSharing::shared ? "shared" : "per_sample");
  e.emplace_back("jobs", std::to_string(c.jobs));
  if (!c.output_path.empty()) e.emplace_back("output", c.output_path);
  return e;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  for (const auto& [k, v] : config_entries(c)) out << k << " = " << v << '\n';
  return out.str();
}

/// Applies one key. Dataset kinds reset the section to that kind's defaults,
/// so `kind` should come first within a section (serialize_config does this).
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
  using detail::to_double;
  using detail::to_integer;
  auto dataset = [&](DatasetSpec& s, const std::string& field) {
    if (field == "kind") {
      const auto seed = s.seed;
      s = default_spec(parse_dataset_kind(v), seed);
    } else if (field == "samples") {
      s.sample_count = static_cast<int>(to_integer(key, v));
    } else if (field == "dimension") {
      s.dimension = static_cast<int>(to_integer(key, v));
    } else if (field == "classes") {
      s.class_count = static_cast<int>(to_integer(key, v));
    } else if (field == "sigma") {
      s.sigma = to_double(key, v);
    } else if (field == "separation") {
      s.separation = to_double(key, v);
    } else if (field == "seed") {
      s.seed = to_integer<unsigned long long>(key, v);
    } else if (field == "path") {
      s.path = v;
    } else {
      throw ConfigError("cli", "unknown key '" + key + "'");
    }
  };
  if (key == "method") {
    c.method = parse_method(v);
  } else if (key.rfind("source.", 0) == 0) {
    dataset(c.source, key.substr(7));
  } else if (key.rfind("target.", 0) == 0) {
    dataset(c.target, key.substr(7));
  } else if (key == "circuit.qubits") {
    c.qubits = static_cast<int>(to_integer(key, v));
  } else if (key == "circuit.layers") {
    c.layers = static_cast<int>(to_integer(key, v));
  } else if (key == "optimizer.learning_rate") {
    c.optimizer.learning_rate = to_double(key, v);
  } else if (key == "optimizer.epsilon") {
    c.optimizer.accumulator_epsilon = to_double(key, v);
  } else if (key == "optimizer.max_iterations") {
    c.optimizer.max_iterations = static_cast<int>(to_integer(key, v));
  } else if (key == "optimizer.convergence_tol") {
    c.optimizer.convergence_tol = to_double(key, v);
  } else if (key == "optimizer.window") {
    c.optimizer.convergence_window = static_cast<int>(to_integer(key, v));
  } else if (key == "optimizer.restarts") {
    c.optimizer.restarts = static_cast<int>(to_integer(key, v));
  } else if (key == "optimizer.seed") {
    c.optimizer.seed = to_integer<unsigned long long>(key, v);
  } else if (key == "deflation.penalty_weight") {
    c.deflation.penalty_weight = to_double(key, v);
  } else if (key == "deflation.eta") {
    c.deflation.eta = to_double(key, v);
  } else if (key == "deflation.target_count") {
    c.deflation.target_count = static_cast<int>(to_integer(key, v));
  } else if (key == "deflation.restarts") {
    c.deflation.restarts = static_cast<int>(to_integer(key, v));
  } else if (key == "phase.bits") {
    c.phase.bits = static_cast<int>(to_integer(key, v));
  } else if (key == "phase.gamma") {
    c.phase.gamma = to_double(key, v);
  } else if (key == "phase.evolution_time") {
    c.phase.evolution_time = to_double(key, v);
  } else if (key == "phase.backend") {
    if (v == "gate") {
      c.phase.backend = qblas::Backend::gate;
    } else if (v == "spectral") {
      c.phase.backend = qblas::Backend::spectral;
    } else if (v == "automatic") {
      c.phase.backend = qblas::Backend::automatic;
    } else {
      throw ConfigError("cli", "phase.backend must be gate, spectral or automatic");
    }
  } else if (key == "vmm.sharing") {
    if (v == "shared") {
      c.sharing = vq::VmmSharing::shared;
    } else if (v == "per_sample") {
      c.sharing = vq::VmmSharing::per_sample;
    } else {
      throw ConfigError("cli", "vmm.sharing must be per_sample or shared");
    }
  } else if (key == "jobs") {
    c.jobs = static_cast<int>(to_integer(key, v));
  } else if (key == "output") {
    c.output_path = v;
  } else {
    throw ConfigError("cli", "unknown key '" + key + "'");
  }
}

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("cli", "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("cli", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli", "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Pipelines.

struct RunResult {
  ExperimentConfig config;
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;
  std::vector<double> cost_trace;
  std::optional<double> decorrelate_probability;  // qblas
  std::optional<double> align_probability;        // qblas
  std::optional<double> mean_decorrelate_cost;    // vq_mm
  std::optional<double> mean_align_cost;          // vq_mm
  Index flagged_samples = 0;                      // vq_mm
  double wall_time = 0.0;                         // seconds
  Matrix source_projection;                       // 2 x n_s aligned source
  Matrix target_projection;                       // 2 x n_t target
  std::vector<int> source_labels;
  std::vector<int> target_labels;
};

struct PreparedData {
  DataMatrix source;  // preprocessed, padded to 2^q rows
  DataMatrix target;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  DataMatrix xs = load_dataset(cfg.source);
  DataMatrix xt = load_dataset(cfg.target);
  if (xs.dimension() != xt.dimension()) {
    throw DataError("cli", "source dimension " + std::to_string(xs.dimension()) +
                               " != target dimension " + std::to_string(xt.dimension()));
  }
  if (!xs.labels) throw DataError("cli", "source dataset has no labels");
  return {pad_to_qubits(preprocess(xs)), pad_to_qubits(preprocess(xt))};
}

namespace detail {

inline void normalize_columns(DataMatrix& x) {
  for (Index i = 0; i < x.samples(); ++i) {
    const double n = x.values.col(i).norm();
    if (n > 1e-300) x.values.col(i) /= n;
  }
}

inline qsim::DensityMatrix density_of(const DataMatrix& x) {
  Matrix c = covariance(x);
  const double tr = c.trace();
  if (!(tr > 0.0)) throw DataError("cli", "dataset has zero covariance");
  return qsim::DensityMatrix::from_real(c / tr, 1e-9);
}

}  // namespace detail

/// Aligned source for the configured method (columns unit-normalized).
inline DataMatrix align_source(const ExperimentConfig& cfg, const PreparedData& data,
                               RunResult& result) {
  const DataMatrix& xs = data.source;
  const DataMatrix& xt = data.target;
  const int q = log2_exact(xs.dimension());
  if (cfg.qubits != 0 && cfg.qubits != q) {
    throw ConfigError("cli", "circuit.qubits = " + std::to_string(cfg.qubits) +
                                 " but the padded data needs " + std::to_string(q));
  }
  DataMatrix aligned;
  switch (cfg.method) {
    case Method::na: aligned = xs; break;
    case Method::coral: aligned = apply_coral(fit_coral(xs, xt), xs); break;
    case Method::qblas: {
      qblas::QblasOptions opt;
      opt.phase_bits = cfg.phase.bits;
      opt.gamma = cfg.phase.gamma;
      opt.evolution_time = cfg.phase.evolution_time;
      opt.backend = cfg.phase.backend;
      const auto s1 = qblas::qblas_decorrelate(xs, opt);
      const auto s2 = qblas::qblas_align(s1.postselection, xt, xs.samples(), opt);
      result.decorrelate_probability = s1.postselection.success_probability;
      result.align_probability = s2.postselection.success_probability;
      aligned = s2.readback;
      aligned.labels = xs.labels;
      break;
    }
    case Method::vq_e2e: {
      const qsim::AnsatzCircuit circuit(q, cfg.layers);
      const auto rs = detail::density_of(xs);
      const auto rt = detail::density_of(xt);
      const TrainingTrace trace = vq::train_end_to_end(circuit, rs, rt, cfg.optimizer);
      result.cost_trace = trace.cost_history;
      aligned = vq::apply_trained_transform(circuit, trace.final_parameters, xs);
      break;
    }
    case Method::vq_mm: {
      const qsim::AnsatzCircuit circuit(q, cfg.layers);
      const auto rs = detail::density_of(xs);
      const auto rt = detail::density_of(xt);
      const Index r = std::min(symmetric_eig(rs.matrix().real()).rank,
                               symmetric_eig(rt.matrix().real()).rank);
      vq::DeflationConfig src = cfg.deflation;
      src.target_count = 0;
      vq::DeflationConfig tgt = cfg.deflation;
      tgt.target_count = cfg.deflation.target_count > 0 ? cfg.deflation.target_count
                                                        : static_cast<int>(r);
      std::vector<TrainingTrace> traces;
      const auto es = vq::vqcmsr(circuit, rs, src, vq::DeflationMode::all_eigen, cfg.optimizer, &traces);
      const auto et = vq::vqcmsr(circuit, rt, tgt, vq::DeflationMode::top_r_via_eta, cfg.optimizer, &traces);
      for (const auto& t : traces) result.cost_trace.push_back(t.final_cost);
      const Matrix cs_half = vq::square_root_from_eigenpairs(es, +1);
      const Matrix ct_half = vq::square_root_from_eigenpairs(et, +1);
      vq::VmmOptions vo;
      vo.sharing = cfg.sharing;
      vo.jobs = cfg.jobs;
      const auto vr = vq::train_vmm(circuit, xs, cs_half, ct_half, cfg.optimizer, vo);
      double m1 = 0.0;
      double m2 = 0.0;
      for (double v : vr.decorrelate_cost) m1 += v;
      for (double v : vr.align_cost) m2 += v;
      result.mean_decorrelate_cost = m1 / static_cast<double>(std::max<std::size_t>(1, vr.decorrelate_cost.size()));
      result.mean_align_cost = m2 / static_cast<double>(std::max<std::size_t>(1, vr.align_cost.size()));
      result.flagged_samples = vr.flagged;
      aligned = vr.aligned;
      break;
    }
  }
  aligned.labels = xs.labels;
  detail::normalize_columns(aligned);
  return aligned;
}

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.config = cfg;
  const PreparedData data = prepare_data(cfg);
  const DataMatrix aligned = align_source(cfg, data, r);
  const PredictionReport pred = knn_predict(aligned, data.target);
  r.accuracy = pred.accuracy;
  r.confusion = pred.confusion;
  const Index rows = std::min<Index>(2, aligned.dimension());
  r.source_projection = aligned.values.topRows(rows);
  r.target_projection = data.target.values.topRows(rows);
  r.source_labels = aligned.labels.value_or(std::vector<int>{});
  r.target_labels = data.target.labels.value_or(std::vector<int>{});
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------------------
// Result documents.

inline nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["schema_version"] = kResultSchemaVersion;
  j["artifact_version"] = kArtifactVersion;
  j["config"] = serialize_config(r.config);
  j["task"] = r.config.task_name();
  j["method"] = to_string(r.config.method);
  j["seed"] = r.config.optimizer.seed;
  j["accuracy"] = r.accuracy;
  nlohmann::json conf = nlohmann::json::array();
  for (Index a = 0; a < r.confusion.rows(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (Index b = 0; b < r.confusion.cols(); ++b) row.push_back(r.confusion(a, b));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  j["cost_trace"] = r.cost_trace;
  if (r.decorrelate_probability) j["postselection"]["decorrelate"] = *r.decorrelate_probability;
  if (r.align_probability) j["postselection"]["align"] = *r.align_probability;
  if (r.mean_decorrelate_cost) j["vmm"]["mean_decorrelate_cost"] = *r.mean_decorrelate_cost;
  if (r.mean_align_cost) j["vmm"]["mean_align_cost"] = *r.mean_align_cost;
  if (r.config.method == Method::vq_mm) j["vmm"]["flagged_samples"] = r.flagged_samples;
  j["wall_time_s"] = r.wall_time;
  auto proj = [](const Matrix& m, const std::vector<int>& labels) {
    nlohmann::json a = nlohmann::json::array();
    for (Index i = 0; i < m.cols(); ++i) {
      a.push_back({m(0, i), m.rows() > 1 ? m(1, i) : 0.0,
                   i < static_cast<Index>(labels.size()) ? labels[static_cast<std::size_t>(i)] : -1});
    }
    return a;
  };
  j["projection"]["source"] = proj(r.source_projection, r.source_labels);
  j["projection"]["target"] = proj(r.target_projection, r.target_labels);
  return j;
}

inline void write_result(const RunResult& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cli", "cannot open '" + path.string() + "' for writing");
  out << to_json(r).dump(2) << '\n';
  if (!out) throw DataError("cli", "write to '" + path.string() + "' failed");
}

struct ResultSummary {
  std::string task;
  Method method = Method::na;
  double accuracy = 0.0;
  std::filesystem::path file;
  nlohmann::json projection;
};

/// Reads one result document; throws DataError when it is malformed.
inline ResultSummary read_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cli", "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("schema_version").get<int>() != kResultSchemaVersion) {
      throw DataError("cli", path.string() + ": unsupported schema version");
    }
    ResultSummary s;
    s.task = j.at("task").get<std::string>();
    s.method = parse_method(j.at("method").get<std::string>());
    s.accuracy = j.at("accuracy").get<double>();
    if (!(s.accuracy >= 0.0 && s.accuracy <= 1.0)) throw DataError("cli", path.string() + ": accuracy outside [0,1]");
    s.file = path;
    if (j.contains("projection")) s.projection = j["projection"];
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cli", path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("cli", path.string() + ": " + e.what());
  }
}

enum class TableFormat { csv, markdown };

struct Table {
  std::vector<std::string> tasks;   // columns, first-seen order
  std::vector<Method> methods;      // rows, canonical order
  /// cell -> accuracies of every run in it
  std::map<std::pair<Method, std::string>, std::vector<double>> cells;
  std::vector<std::string> warnings;
  std::vector<ResultSummary> results;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Collects every *.json in `dir`; malformed files become warnings.
inline Table collect_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("cli", "'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Table t;
  for (const auto& f : files) {
    try {
      ResultSummary s = read_result(f);
      if (std::find(t.tasks.begin(), t.tasks.end(), s.task) == t.tasks.end()) t.tasks.push_back(s.task);
      t.cells[{s.method, s.task}].push_back(s.accuracy);
      t.results.push_back(std::move(s));
    } catch (const Error& e) {
      t.warnings.push_back(std::string("skipping ") + e.what());
    }
  }
  if (t.results.empty()) throw DataError("cli", "no readable result files in '" + dir.string() + "'");
  for (Method m : {Method::na, Method::coral, Method::qblas, Method::vq_e2e, Method::vq_mm}) {
    for (const auto& task : t.tasks) {
      if (t.cells.count({m, task})) {
        t.methods.push_back(m);
        break;
      }
    }
  }
  return t;
}

/// Method x task grid of median accuracies in percent; empty cells are "-".
inline std::string render_table(const Table& t, TableFormat f) {
  std::ostringstream out;
  auto cell = [&](Method m, const std::string& task) -> std::string {
    const auto it = t.cells.find({m, task});
    if (it == t.cells.end()) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * median(it->second) << '%';
    return s.str();
  };
  if (f == TableFormat::csv) {
    out << "method";
    for (const auto& task : t.tasks) out << ',' << task;
    out << '\n';
    for (Method m : t.methods) {
      out << method_label(m);
      for (const auto& task : t.tasks) out << ',' << cell(m, task);
      out << '\n';
    }
  } else {
    out << "| |";
    for (const auto& task : t.tasks) out << ' ' << task << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < t.tasks.size(); ++i) out << "---|";
    out << '\n';
    for (Method m : t.methods) {
      out << "| " << method_label(m) << " |";
      for (const auto& task : t.tasks) out << ' ' << cell(m, task) << " |";
      out << '\n';
    }
  }
  return out.str();
}

/// `set,x,y,label` rows (set is source or target) for one result.
inline std::string render_projection(const ResultSummary& s) {
  std::ostringstream out;
  out << std::setprecision(17) << "set,x,y,label\n";
  for (const char* set : {"source", "target"}) {
    if (!s.projection.contains(set)) continue;
    for (const auto& p : s.projection[set]) {
      out << set << ',' << p.at(0).get<double>() << ',' << p.at(1).get<double>() << ','
          << p.at(2).get<int>() << '\n';
    }
  }
  return out.str();
}

}  // namespace qcoral
