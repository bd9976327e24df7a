#pragma once

// Gate-level simulation of phase-estimation-based CORAL.
//
// Register layout of every intermediate state, low bits first:
//   embedding (e qubits) | sample index (ni qubits) | phase (t qubits) | ancilla (1 qubit)
// The data vector of sample i sits in the top block of the embedding register
// (rows [0, D') of the Hermitian embedding [[0, X], [X^T, 0]]).

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "qcoral/linalg.hpp"
#include "qcoral/qsim.hpp"

namespace qcoral::qblas {

using qsim::CMatrix;
using qsim::Complex;
using qsim::CVector;
using qsim::QuantumState;

/// [[0, X], [X^T, 0]] zero-padded to a power-of-two dimension.
struct HermitianEmbedding {
  Matrix matrix;
  double evolution_time = 0.0;
  Index source_rows = 0;  // D
  Index source_cols = 0;  // n
  Index top_dim = 0;      // D' (padded feature dimension)
  Index bottom_dim = 0;   // n' (padded sample dimension)
  // Cached eigendecomposition (matrix = V diag(w) V^T).
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dimension() const { return matrix.rows(); }
  int qubits() const { return log2_exact(matrix.rows()); }
  double lambda_max() const {
    return eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  }
  /// exp(i * matrix * time).
  CMatrix evolution(double time) const {
    CVector phases(eigenvalues.size());
    for (Index k = 0; k < eigenvalues.size(); ++k) phases(k) = std::polar(1.0, eigenvalues(k) * time);
    const CMatrix v = eigenvectors.cast<Complex>();
    return v * phases.asDiagonal() * v.transpose();
  }
};

/// `pad_rows` / `pad_cols` override the power-of-two padding of D and n.
inline HermitianEmbedding hermitian_embed(const DataMatrix& x, Index pad_rows = 0,
                                          Index pad_cols = 0) {
  x.validate();
  HermitianEmbedding e;
  e.source_rows = x.dimension();
  e.source_cols = x.samples();
  e.top_dim = pad_rows > 0 ? pad_rows : next_power_of_two(std::max<Index>(1, x.dimension()));
  e.bottom_dim = pad_cols > 0 ? pad_cols : next_power_of_two(std::max<Index>(1, x.samples()));
  if (e.top_dim < x.dimension() || e.bottom_dim < x.samples()) {
    throw DimensionError("qblas", "padding smaller than the data matrix");
  }
  const Index dim = next_power_of_two(e.top_dim + e.bottom_dim);
  e.matrix = Matrix::Zero(dim, dim);
  e.matrix.block(0, e.top_dim, x.dimension(), x.samples()) = x.values;
  e.matrix.block(e.top_dim, 0, x.samples(), x.dimension()) = x.values.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(e.matrix);
  e.eigenvalues = es.eigenvalues();
  e.eigenvectors = es.eigenvectors();
  const double lmax = e.lambda_max();
  e.evolution_time = lmax > 0 ? 0.8 * std::numbers::pi / lmax : 1.0;
  return e;
}

struct PhaseEstimationConfig {
  int phase_bits = 10;
  double evolution_time = 0.0;  // per controlled step; eigenphase = lambda * t
  double gamma = 1.0;
  /// Bins with |sigma_hat| below this are treated as zero singular values:
  /// no rotation, the branch stays on ancilla |0>.
  double cutoff = 0.0;

  Index bins() const { return Index{1} << phase_bits; }

  /// Signed eigenvalue estimate carried by phase-register value k.
  double bin_value(Index k) const {
    const Index t = bins();
    const Index signed_k = k < t / 2 ? k : k - t;
    return 2.0 * std::numbers::pi * static_cast<double>(signed_k) /
           (evolution_time * static_cast<double>(t));
  }
  double bin_width() const {
    return 2.0 * std::numbers::pi / (evolution_time * static_cast<double>(bins()));
  }

  void validate(double lambda_max) const {
    if (phase_bits < 4) throw ConfigError("qblas", "phase register needs 2^t_bits >= 16");
    if (phase_bits > 16) throw ConfigError("qblas", "phase register wider than 16 bits");
    if (!(evolution_time > 0.0)) throw ConfigError("qblas", "evolution time must be positive");
    if (evolution_time * lambda_max >= std::numbers::pi) {
      throw ConfigError("qblas", "evolution_time * lambda_max must stay below pi");
    }
    if (!(gamma > 0.0)) throw ConfigError("qblas", "gamma must be positive");
  }
};

enum class RotationMode { inverse, forward };

struct QpeLayout {
  int embed_qubits = 0;
  int index_qubits = 0;
  int phase_bits = 0;
  bool has_ancilla = false;

  int phase_offset() const { return embed_qubits + index_qubits; }
  int ancilla_qubit() const { return embed_qubits + index_qubits + phase_bits; }
  int total_qubits() const { return ancilla_qubit() + (has_ancilla ? 1 : 0); }
};

struct QpeState {
  QuantumState state;
  QpeLayout layout;
};

struct PostselectionResult {
  /// Normalized post-measurement state on index (x) embedding registers.
  QuantumState state;
  double success_probability = 0.0;
  double attempts_expected = 0.0;
  int embed_qubits = 0;
  int index_qubits = 0;
  Index top_dim = 0;
};

namespace detail {

inline void controlled_evolutions(CVector& amps, const HermitianEmbedding& emb,
                                  const PhaseEstimationConfig& cfg, const QpeLayout& lay,
                                  double direction) {
  for (int k = 0; k < cfg.phase_bits; ++k) {
    const double steps = static_cast<double>(Index{1} << k);
    const CMatrix u = emb.evolution(direction * cfg.evolution_time * steps);
    qsim::kernels::apply_register_unitary(amps, 0, lay.embed_qubits, u, lay.phase_offset() + k);
  }
}

inline double rotation_amplitude(double sigma_hat, double gamma, RotationMode mode) {
  return mode == RotationMode::inverse ? gamma / sigma_hat : gamma * sigma_hat;
}

}  // namespace detail

/// QPE of exp(i X~ t) on the embedding register. `input` spans the
/// embedding (low) and sample-index (high) registers.
inline QpeState qpe_singular_values(const HermitianEmbedding& emb, const QuantumState& input,
                                    const PhaseEstimationConfig& cfg) {
  cfg.validate(emb.lambda_max());
  QpeLayout lay;
  lay.embed_qubits = emb.qubits();
  lay.index_qubits = input.qubit_count() - lay.embed_qubits;
  lay.phase_bits = cfg.phase_bits;
  if (lay.index_qubits < 0) throw DimensionError("qblas", "input narrower than the embedding");
  if (lay.total_qubits() > qsim::kMaxStateQubits) {
    throw ConfigError("qblas", "QPE state exceeds the simulator limit");
  }

  CVector amps = CVector::Zero(input.dimension() << cfg.phase_bits);
  amps.head(input.dimension()) = input.amplitudes();
  for (int k = 0; k < cfg.phase_bits; ++k) qsim::kernels::apply_h(amps, lay.phase_offset() + k);
  detail::controlled_evolutions(amps, emb, cfg, lay, +1.0);
  qsim::kernels::apply_qft(amps, lay.phase_offset(), cfg.phase_bits, /*inverse=*/true);
  return {QuantumState::from_amplitudes(std::move(amps), 1e-9), lay};
}

/// Adds an ancilla and rotates it so that its |1> amplitude is
/// gamma / |sigma_hat| (inverse) or gamma * |sigma_hat| (forward) in every
/// phase branch with |sigma_hat| >= cfg.cutoff.
inline QpeState conditional_rotation(const QpeState& in, const PhaseEstimationConfig& cfg,
                                     RotationMode mode) {
  if (in.layout.has_ancilla) throw ConfigError("qblas", "state already carries an ancilla");
  if (in.layout.phase_bits != cfg.phase_bits) {
    throw ConfigError("qblas", "phase register width does not match configuration");
  }
  QpeLayout lay = in.layout;
  lay.has_ancilla = true;
  const Index t = cfg.bins();
  const int off = lay.phase_offset();

  // Precompute per-bin amplitudes and validate them before touching the state.
  Vector amp1 = Vector::Zero(t);
  for (Index k = 0; k < t; ++k) {
    const double sigma_hat = std::abs(cfg.bin_value(k));
    if (sigma_hat == 0.0 || sigma_hat < cfg.cutoff) continue;
    const double a = detail::rotation_amplitude(sigma_hat, cfg.gamma, mode);
    if (!(a >= -1.0 - 1e-12 && a <= 1.0 + 1e-12)) {
      throw ConfigError("qblas", "rotation argument " + std::to_string(a) +
                                     " outside [-1, 1] in phase bin " + std::to_string(k) +
                                     " (|sigma_hat| = " + std::to_string(sigma_hat) + ")");
    }
    amp1(k) = std::clamp(a, -1.0, 1.0);
  }

  const Index half = in.state.dimension();
  CVector amps = CVector::Zero(2 * half);
  const CVector& src = in.state.amplitudes();
  for (Index idx = 0; idx < half; ++idx) {
    const Index k = (idx >> off) & (t - 1);
    const double a = amp1(k);
    amps(idx) = std::sqrt(std::max(0.0, 1.0 - a * a)) * src(idx);
    amps(idx + half) = a * src(idx);
  }
  return {QuantumState::from_amplitudes(std::move(amps), 1e-9), lay};
}

/// Inverse QPE, then projection onto ancilla |1> and phase register |0>.
inline PostselectionResult uncompute_and_postselect(const QpeState& in,
                                                    const HermitianEmbedding& emb,
                                                    const PhaseEstimationConfig& cfg) {
  if (!in.layout.has_ancilla) throw ConfigError("qblas", "no ancilla to postselect");
  const QpeLayout& lay = in.layout;
  CVector amps = in.state.amplitudes();
  qsim::kernels::apply_qft(amps, lay.phase_offset(), cfg.phase_bits, /*inverse=*/false);
  detail::controlled_evolutions(amps, emb, cfg, lay, -1.0);
  for (int k = 0; k < cfg.phase_bits; ++k) qsim::kernels::apply_h(amps, lay.phase_offset() + k);

  const Index kept = Index{1} << lay.phase_offset();
  const Index anc = Index{1} << lay.ancilla_qubit();
  CVector projected = amps.segment(anc, kept);
  const double p = projected.squaredNorm();
  if (!(p >= 1e-12)) {
    throw NumericalError("qblas", "degenerate postselection: success probability " +
                                      std::to_string(p) + " below 1e-12");
  }
  projected /= std::sqrt(p);
  PostselectionResult r{QuantumState::from_amplitudes(std::move(projected), 1e-9), p, 1.0 / p,
                        lay.embed_qubits, lay.index_qubits, emb.top_dim};
  return r;
}

// ---------------------------------------------------------------------------
// Spectral route: the same postselected map, computed from the closed-form
// phase-register distribution instead of gate-by-gate simulation.

/// Probability that QPE with `cfg` reports bin k for eigenvalue `lambda`.
inline double qpe_bin_probability(double lambda, Index k, const PhaseEstimationConfig& cfg) {
  const Index t = cfg.bins();
  const double delta = lambda * cfg.evolution_time -
                       2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(t);
  const double half = 0.5 * delta;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-300) return 1.0;
  const double num = std::sin(static_cast<double>(t) * half);
  return (num * num) / (static_cast<double>(t) * static_cast<double>(t) * s * s);
}

/// Filter value g(lambda) = sum_k P(k | lambda) f(k) applied by
/// rotate-uncompute-postselect to an eigenvector with eigenvalue lambda.
inline double postselected_filter(double lambda, const PhaseEstimationConfig& cfg,
                                  RotationMode mode) {
  const Index t = cfg.bins();
  double g = 0.0;
  for (Index k = 0; k < t; ++k) {
    const double sigma_hat = std::abs(cfg.bin_value(k));
    if (sigma_hat == 0.0 || sigma_hat < cfg.cutoff) continue;
    const double a = detail::rotation_amplitude(sigma_hat, cfg.gamma, mode);
    if (std::abs(a) > 1.0 + 1e-12) {
      throw ConfigError("qblas", "rotation argument outside [-1, 1] in phase bin " +
                                     std::to_string(k));
    }
    g += qpe_bin_probability(lambda, k, cfg) * a;
  }
  return g;
}

/// Effective operator V diag(g(lambda)) V^T on the embedding register.
inline Matrix postselected_operator(const HermitianEmbedding& emb, const PhaseEstimationConfig& cfg,
                                    RotationMode mode) {
  cfg.validate(emb.lambda_max());
  Vector g(emb.eigenvalues.size());
  for (Index k = 0; k < g.size(); ++k) g(k) = postselected_filter(emb.eigenvalues(k), cfg, mode);
  return emb.eigenvectors * g.asDiagonal() * emb.eigenvectors.transpose();
}

// ---------------------------------------------------------------------------
// End-to-end decorrelation / alignment.

enum class Backend { gate, spectral, automatic };

struct QblasOptions {
  int phase_bits = 10;
  std::optional<double> gamma;           // default chosen per mode
  std::optional<double> evolution_time;  // default 0.8 pi / lambda_max
  double rank_tol = kDefaultRankTol;
  Backend backend = Backend::automatic;
  /// automatic backend switches to the spectral route above this many qubits.
  int gate_qubit_limit = 20;
};

/// Default configuration for one stage: t = 0.8 pi / lambda_max, and
/// gamma = 0.9 * smallest retained bin (inverse) or 0.9 / largest
/// representable bin (forward).
inline PhaseEstimationConfig default_config(const HermitianEmbedding& emb, RotationMode mode,
                                            const QblasOptions& opt) {
  PhaseEstimationConfig cfg;
  cfg.phase_bits = opt.phase_bits;
  cfg.evolution_time = opt.evolution_time.value_or(emb.evolution_time);
  const double lmax = emb.lambda_max();
  if (lmax <= 0.0) throw DataError("qblas", "data matrix has no nonzero singular value");
  if (mode == RotationMode::inverse) {
    double smallest = lmax;
    for (Index k = 0; k < emb.eigenvalues.size(); ++k) {
      const double s = std::abs(emb.eigenvalues(k));
      if (s > opt.rank_tol * lmax && s >= cfg.bin_width() && s < smallest) smallest = s;
    }
    const double bin = std::round(smallest / cfg.bin_width()) * cfg.bin_width();
    cfg.gamma = opt.gamma.value_or(0.9 * bin);
    cfg.cutoff = cfg.gamma;
  } else {
    const double largest_bin = std::numbers::pi / cfg.evolution_time;
    cfg.gamma = opt.gamma.value_or(0.9 / largest_bin);
    cfg.cutoff = 0.5 * cfg.bin_width();
  }
  return cfg;
}

/// Per-column unit-normalized readback of the top block; zero columns stay zero.
inline DataMatrix readback(const PostselectionResult& r, Index rows, Index cols) {
  const Index edim = Index{1} << r.embed_qubits;
  DataMatrix out(Matrix::Zero(rows, cols));
  for (Index i = 0; i < cols; ++i) {
    Vector col(rows);
    for (Index m = 0; m < rows; ++m) col(m) = r.state[i * edim + m].real();
    const double nrm = col.norm();
    if (nrm > 1e-300) out.values.col(i) = col / nrm;
  }
  return out;
}

namespace detail {

/// index (x) embedding input with sample vectors in the top block.
inline QuantumState load_columns(const Matrix& columns, const HermitianEmbedding& emb,
                                 Index index_dim) {
  const Index edim = emb.dimension();
  CVector a = CVector::Zero(edim * index_dim);
  for (Index i = 0; i < columns.cols(); ++i) {
    for (Index m = 0; m < columns.rows(); ++m) a(i * edim + m) = columns(m, i);
  }
  const double n2 = a.squaredNorm();
  if (n2 == 0.0) throw ValidationError("qblas", "cannot encode an all-zero input");
  a /= std::sqrt(n2);
  return QuantumState::from_amplitudes(std::move(a), 1e-9);
}

inline PostselectionResult run_stage(const HermitianEmbedding& emb, const QuantumState& input,
                                     const PhaseEstimationConfig& cfg, RotationMode mode,
                                     const QblasOptions& opt) {
  const int index_qubits = input.qubit_count() - emb.qubits();
  const int total = emb.qubits() + index_qubits + cfg.phase_bits + 1;
  const bool gate = opt.backend == Backend::gate ||
                    (opt.backend == Backend::automatic && total <= opt.gate_qubit_limit);
  if (gate) {
    const QpeState phased = qpe_singular_values(emb, input, cfg);
    const QpeState rotated = conditional_rotation(phased, cfg, mode);
    return uncompute_and_postselect(rotated, emb, cfg);
  }
  const Matrix g = postselected_operator(emb, cfg, mode);
  const Index edim = emb.dimension();
  const Index idim = input.dimension() / edim;
  const Eigen::Map<const CMatrix> in(input.amplitudes().data(), edim, idim);
  CMatrix out = g.cast<Complex>() * in;
  const double p = out.squaredNorm();
  if (!(p >= 1e-12)) {
    throw NumericalError("qblas", "degenerate postselection: success probability below 1e-12");
  }
  CVector flat = Eigen::Map<CVector>(out.data(), out.size()) / std::sqrt(p);
  return {QuantumState::from_amplitudes(std::move(flat), 1e-9), p, 1.0 / p, emb.qubits(),
          index_qubits, emb.top_dim};
}

}  // namespace detail

struct StageResult {
  PostselectionResult postselection;
  DataMatrix readback;
  PhaseEstimationConfig config;
};

/// Decorrelation stage: columns proportional to C_s^{-1/2} x_i.
inline StageResult qblas_decorrelate(const DataMatrix& xs, const QblasOptions& opt = {}) {
  xs.validate();
  const HermitianEmbedding emb = hermitian_embed(xs);
  const PhaseEstimationConfig cfg = default_config(emb, RotationMode::inverse, opt);
  const Index index_dim = next_power_of_two(std::max<Index>(1, xs.samples()));
  const QuantumState input = detail::load_columns(xs.values, emb, index_dim);
  StageResult r{detail::run_stage(emb, input, cfg, RotationMode::inverse, opt), {}, cfg};
  r.readback = readback(r.postselection, xs.dimension(), xs.samples());
  r.readback.labels = xs.labels;
  return r;
}

/// Alignment stage on the decorrelated state: columns proportional to
/// C_t^{1/2} x~_i.
inline StageResult qblas_align(const PostselectionResult& decorrelated, const DataMatrix& xt,
                               Index source_samples, const QblasOptions& opt = {}) {
  xt.validate();
  const HermitianEmbedding emb = hermitian_embed(xt);
  if (emb.top_dim != decorrelated.top_dim) {
    throw DimensionError("qblas", "source and target feature registers differ");
  }
  const PhaseEstimationConfig cfg = default_config(emb, RotationMode::forward, opt);
  // Carry the top block of every index branch over into the target embedding.
  const Index src_edim = Index{1} << decorrelated.embed_qubits;
  const Index index_dim = Index{1} << decorrelated.index_qubits;
  Matrix cols = Matrix::Zero(emb.top_dim, index_dim);
  for (Index i = 0; i < index_dim; ++i) {
    for (Index m = 0; m < emb.top_dim; ++m) cols(m, i) = decorrelated.state[i * src_edim + m].real();
  }
  const QuantumState input = detail::load_columns(cols, emb, index_dim);
  StageResult r{detail::run_stage(emb, input, cfg, RotationMode::forward, opt), {}, cfg};
  r.readback = readback(r.postselection, xt.dimension(), source_samples);
  return r;
}

}  // namespace qcoral::qblas
