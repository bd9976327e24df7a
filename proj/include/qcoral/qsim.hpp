#pragma once

// Exact dense statevector / density-matrix simulation.
//
// Qubit j is bit j of the amplitude index (qubit 0 is least significant).
// Multi-register states place later registers on higher bits, so appending a
// register in |0> is a zero-extension of the amplitude vector.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcoral/linalg.hpp"

namespace qcoral::qsim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Gate2 = Eigen::Matrix2cd;

/// Upper bound on qubits for any raw state vector.
inline constexpr int kMaxStateQubits = 26;
/// Upper bound on ansatz width (the unitary is built densely).
inline constexpr int kMaxAnsatzQubits = 12;

class QuantumState {
 public:
  /// Validates power-of-two length and unit norm within `tol`, then
  /// renormalizes exactly.
  static QuantumState from_amplitudes(CVector amps, double tol = 1e-10) {
    if (!is_power_of_two(amps.size())) {
      throw DimensionError("qsim", "state length " + std::to_string(amps.size()) +
                                       " is not a power of two");
    }
    const int q = log2_exact(amps.size());
    if (q > kMaxStateQubits) throw ConfigError("qsim", "state exceeds simulator qubit limit");
    if (!amps.allFinite()) throw NumericalError("qsim", "non-finite amplitudes");
    const double n2 = amps.squaredNorm();
    if (std::abs(n2 - 1.0) > tol) {
      throw ValidationError("qsim", "state norm^2 = " + std::to_string(n2) + " is not 1");
    }
    amps /= std::sqrt(n2);
    return QuantumState(std::move(amps), q);
  }

  static QuantumState basis(int qubits, Index k) {
    if (qubits < 0 || qubits > kMaxStateQubits) throw ConfigError("qsim", "bad qubit count");
    CVector a = CVector::Zero(Index{1} << qubits);
    if (k < 0 || k >= a.size()) throw DimensionError("qsim", "basis index out of range");
    a(k) = 1.0;
    return QuantumState(std::move(a), qubits);
  }

  const CVector& amplitudes() const { return amps_; }
  int qubit_count() const { return qubits_; }
  Index dimension() const { return amps_.size(); }
  Complex operator[](Index i) const { return amps_(i); }

 private:
  QuantumState(CVector a, int q) : amps_(std::move(a)), qubits_(q) {}
  CVector amps_;
  int qubits_ = 0;
};

/// Validates a Hermitian matrix (within `tol`, entrywise).
inline void require_hermitian(const CMatrix& h, double tol, const char* what) {
  if (h.rows() != h.cols()) throw DimensionError("qsim", std::string(what) + " is not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > tol * scale) {
    throw ValidationError("qsim", std::string(what) + " is not Hermitian");
  }
}

/// Trace-one Hermitian positive semidefinite matrix.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(CMatrix m, double tol = 1e-12) {
    if (!is_power_of_two(m.rows()) || m.rows() != m.cols()) {
      throw DimensionError("qsim", "density matrix must be 2^q x 2^q");
    }
    require_hermitian(m, tol, "density matrix");
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > tol) {
      throw ValidationError("qsim", "density matrix trace " + std::to_string(tr) + " != 1");
    }
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      throw ValidationError("qsim", "density matrix has a negative eigenvalue");
    }
    return DensityMatrix(std::move(m));
  }

  /// Embeds a real trace-normalized PSD matrix (e.g. C / tr C).
  static DensityMatrix from_real(const Matrix& m, double tol = 1e-12) {
    return from_matrix(m.cast<Complex>(), tol);
  }

  const CMatrix& matrix() const { return m_; }
  Index dimension() const { return m_.rows(); }
  int qubit_count() const { return log2_exact(m_.rows()); }

 private:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

// ---------------------------------------------------------------------------
// Gate kernels. Each column of `m` is an independent state (or matrix column).

namespace kernels {

inline void apply_1q(Eigen::Ref<CMatrix> m, int qubit, const Gate2& g) {
  const Index bit = Index{1} << qubit;
  const Index n = m.rows();
  for (Index c = 0; c < m.cols(); ++c) {
    Complex* col = m.col(c).data();
    for (Index i = 0; i < n; ++i) {
      if (i & bit) continue;
      const Complex a0 = col[i];
      const Complex a1 = col[i | bit];
      col[i] = g(0, 0) * a0 + g(0, 1) * a1;
      col[i | bit] = g(1, 0) * a0 + g(1, 1) * a1;
    }
  }
}

/// Real rotation kernel [[c, -s], [s, c]]; the hot loop of every ansatz.
inline void apply_ry(Eigen::Ref<CMatrix> m, int qubit, double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const Index bit = Index{1} << qubit;
  const Index n = m.rows();
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    for (Index i = 0; i < n; ++i) {
      if (i & bit) continue;
      const Complex a0 = p[i];
      const Complex a1 = p[i | bit];
      p[i] = c * a0 - s * a1;
      p[i | bit] = s * a0 + c * a1;
    }
  }
}

inline void apply_h(Eigen::Ref<CMatrix> m, int qubit) {
  const double r = std::numbers::sqrt2 / 2.0;
  const Index bit = Index{1} << qubit;
  const Index n = m.rows();
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    for (Index i = 0; i < n; ++i) {
      if (i & bit) continue;
      const Complex a0 = p[i];
      const Complex a1 = p[i | bit];
      p[i] = r * (a0 + a1);
      p[i | bit] = r * (a0 - a1);
    }
  }
}

inline void apply_cnot(Eigen::Ref<CMatrix> m, int control, int target) {
  const Index cbit = Index{1} << control;
  const Index tbit = Index{1} << target;
  const Index n = m.rows();
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    for (Index i = 0; i < n; ++i) {
      if ((i & cbit) && !(i & tbit)) std::swap(p[i], p[i | tbit]);
    }
  }
}

inline void apply_swap(Eigen::Ref<CMatrix> m, int a, int b) {
  if (a == b) return;
  const Index abit = Index{1} << a;
  const Index bbit = Index{1} << b;
  const Index n = m.rows();
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    for (Index i = 0; i < n; ++i) {
      if ((i & abit) && !(i & bbit)) std::swap(p[i], p[(i & ~abit) | bbit]);
    }
  }
}

/// diag(1, 1, 1, e^{i phi}) on qubits (a, b).
inline void apply_cphase(Eigen::Ref<CMatrix> m, int a, int b, double phi) {
  const Index mask = (Index{1} << a) | (Index{1} << b);
  const Complex ph = std::polar(1.0, phi);
  const Index n = m.rows();
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    for (Index i = 0; i < n; ++i) {
      if ((i & mask) == mask) p[i] *= ph;
    }
  }
}

/// Applies a dense 2^width unitary to qubits [offset, offset + width),
/// optionally controlled on qubit `control` being |1>.
inline void apply_register_unitary(Eigen::Ref<CMatrix> m, int offset, int width,
                                   const CMatrix& u, int control = -1) {
  const Index rdim = Index{1} << width;
  if (u.rows() != rdim || u.cols() != rdim) {
    throw DimensionError("qsim", "register unitary size mismatch");
  }
  const Index lo_mask = (Index{1} << offset) - 1;
  const Index n = m.rows();
  const Index cbit = control >= 0 ? (Index{1} << control) : 0;
  CVector buf(rdim);
  CVector res(rdim);
  for (Index col = 0; col < m.cols(); ++col) {
    Complex* p = m.col(col).data();
    // Iterate over the "rest" index with the register bits cleared.
    const Index rest_count = n >> width;
    for (Index r = 0; r < rest_count; ++r) {
      const Index base = (r & lo_mask) | ((r & ~lo_mask) << width);
      if (cbit && !(base & cbit)) continue;
      for (Index k = 0; k < rdim; ++k) buf(k) = p[base | (k << offset)];
      res.noalias() = u * buf;
      for (Index k = 0; k < rdim; ++k) p[base | (k << offset)] = res(k);
    }
  }
}

/// Quantum Fourier transform on qubits [offset, offset + width), register
/// value read with qubit `offset` as least significant bit:
/// |j> -> 2^{-w/2} sum_k exp(sign * 2 pi i j k / 2^w) |k>, sign = +1 forward.
inline void apply_qft(Eigen::Ref<CMatrix> m, int offset, int width, bool inverse = false) {
  const double sgn = inverse ? -1.0 : 1.0;
  if (!inverse) {
    for (int j = width - 1; j >= 0; --j) {
      apply_h(m, offset + j);
      for (int k = j - 1; k >= 0; --k) {
        apply_cphase(m, offset + j, offset + k,
                     sgn * std::numbers::pi / static_cast<double>(Index{1} << (j - k)));
      }
    }
    for (int j = 0; j < width / 2; ++j) apply_swap(m, offset + j, offset + width - 1 - j);
  } else {
    for (int j = 0; j < width / 2; ++j) apply_swap(m, offset + j, offset + width - 1 - j);
    for (int j = 0; j < width; ++j) {
      for (int k = 0; k < j; ++k) {
        apply_cphase(m, offset + j, offset + k,
                     sgn * std::numbers::pi / static_cast<double>(Index{1} << (j - k)));
      }
      apply_h(m, offset + j);
    }
  }
}

}  // namespace kernels

inline Gate2 ry_matrix(double theta) {
  Gate2 g;
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  g << c, -s, s, c;
  return g;
}

inline Gate2 hadamard_matrix() {
  Gate2 g;
  const double r = std::numbers::sqrt2 / 2.0;
  g << r, r, r, -r;
  return g;
}

// ---------------------------------------------------------------------------
// Layered ansatz: H on every qubit, then L rotation layers of R_y with an
// entangling CNOT layer between consecutive rotation layers.

struct GateOp {
  enum class Kind { h, ry, cnot } kind;
  int q0 = 0;
  int q1 = -1;
  int param = -1;  // parameter index for ry
};

class AnsatzCircuit {
 public:
  using Pattern = std::vector<std::pair<int, int>>;

  /// Linear-chain entangler 0->1, 1->2, ..., (q-2)->(q-1).
  static Pattern linear_chain(int qubits) {
    Pattern p;
    for (int j = 0; j + 1 < qubits; ++j) p.emplace_back(j, j + 1);
    return p;
  }

  AnsatzCircuit(int qubits, int layers) : AnsatzCircuit(qubits, layers, linear_chain(qubits)) {}

  AnsatzCircuit(int qubits, int layers, Pattern entangler)
      : qubits_(qubits), layers_(layers), pattern_(std::move(entangler)) {
    if (qubits < 1 || qubits > kMaxAnsatzQubits) {
      throw ConfigError("qsim", "ansatz qubit count " + std::to_string(qubits) +
                                    " outside [1, " + std::to_string(kMaxAnsatzQubits) + "]");
    }
    if (layers < 0) throw ConfigError("qsim", "ansatz layer count must be >= 0");
    for (const auto& [c, t] : pattern_) {
      if (c == t || c < 0 || t < 0 || c >= qubits || t >= qubits) {
        throw ConfigError("qsim", "invalid entangler pair (" + std::to_string(c) + "," +
                                      std::to_string(t) + ")");
      }
    }
    for (int j = 0; j < qubits_; ++j) ops_.push_back({GateOp::Kind::h, j});
    for (int l = 0; l < layers_; ++l) {
      for (int j = 0; j < qubits_; ++j) ops_.push_back({GateOp::Kind::ry, j, -1, l * qubits_ + j});
      if (l + 1 < layers_) {
        for (const auto& [c, t] : pattern_) ops_.push_back({GateOp::Kind::cnot, c, t});
      }
    }
  }

  int qubit_count() const { return qubits_; }
  int layer_count() const { return layers_; }
  Index dimension() const { return Index{1} << qubits_; }
  int parameter_count() const { return qubits_ * layers_; }
  const Pattern& entangler_pattern() const { return pattern_; }
  const std::vector<GateOp>& ops() const { return ops_; }

  void check_parameters(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != parameter_count()) {
      throw DimensionError("qsim", "ansatz expects " + std::to_string(parameter_count()) +
                                       " parameters, got " + std::to_string(theta.size()));
    }
  }

  /// In-place application to every column of `m` (rows = 2^q).
  void apply(Eigen::Ref<CMatrix> m, std::span<const double> theta) const {
    check_parameters(theta);
    if (m.rows() != dimension()) throw DimensionError("qsim", "ansatz / state dimension mismatch");
    for (const auto& op : ops_) apply_op(m, op, theta);
  }

  static void apply_op(Eigen::Ref<CMatrix> m, const GateOp& op, std::span<const double> theta,
                       double shift = 0.0) {
    switch (op.kind) {
      case GateOp::Kind::h: kernels::apply_h(m, op.q0); break;
      case GateOp::Kind::ry:
        kernels::apply_ry(m, op.q0, theta[static_cast<std::size_t>(op.param)] + shift);
        break;
      case GateOp::Kind::cnot: kernels::apply_cnot(m, op.q0, op.q1); break;
    }
  }

  /// Applies the inverse of one op (all ops are real orthogonal).
  static void apply_op_inverse(Eigen::Ref<CMatrix> m, const GateOp& op,
                               std::span<const double> theta) {
    if (op.kind == GateOp::Kind::ry) {
      kernels::apply_ry(m, op.q0, -theta[static_cast<std::size_t>(op.param)]);
    } else {
      apply_op(m, op, theta);  // H and CNOT are self-inverse
    }
  }

  CMatrix unitary(std::span<const double> theta) const {
    CMatrix u = CMatrix::Identity(dimension(), dimension());
    apply(u, theta);
    return u;
  }

 private:
  int qubits_;
  int layers_;
  Pattern pattern_;
  std::vector<GateOp> ops_;
};

// ---------------------------------------------------------------------------
// State-level operations.

/// Zero-pads a unit real vector to `pad_to` entries and loads it as amplitudes.
inline QuantumState amplitude_encode(const Vector& v, Index pad_to) {
  if (!is_power_of_two(pad_to) || pad_to < v.size()) {
    throw DimensionError("qsim", "pad_to must be a power of two >= vector length");
  }
  const double nrm = v.norm();
  if (nrm == 0.0 || !std::isfinite(nrm)) {
    throw ValidationError("qsim", "cannot amplitude-encode a zero or non-finite vector");
  }
  CVector a = CVector::Zero(pad_to);
  a.head(v.size()) = v.cast<Complex>();
  return QuantumState::from_amplitudes(std::move(a), 1e-10);
}

inline int feature_qubits(const DataMatrix& x) {
  return log2_exact(next_power_of_two(std::max<Index>(1, x.dimension())));
}
inline int index_qubits(const DataMatrix& x) {
  return log2_exact(next_power_of_two(std::max<Index>(1, x.samples())));
}

/// sum_i |i> (x) |x_i>, globally normalized; the sample index lives on the
/// high-order qubits, features on the low-order qubits.
inline QuantumState encode_dataset(const DataMatrix& x) {
  x.validate();
  const double fro = x.values.norm();
  if (fro == 0.0) throw ValidationError("qsim", "cannot encode an all-zero data matrix");
  const Index dp = Index{1} << feature_qubits(x);
  const Index np = Index{1} << index_qubits(x);
  CVector a = CVector::Zero(dp * np);
  for (Index i = 0; i < x.samples(); ++i) {
    for (Index m = 0; m < x.dimension(); ++m) a(i * dp + m) = x.values(m, i) / fro;
  }
  return QuantumState::from_amplitudes(std::move(a), 1e-10);
}

enum class Register { low, high };

/// Reduced density matrix after tracing out one side of the split at
/// `low_qubits` (the low register spans qubits [0, low_qubits)).
inline DensityMatrix partial_trace(const QuantumState& s, int low_qubits, Register traced) {
  if (low_qubits < 0 || low_qubits > s.qubit_count()) {
    throw DimensionError("qsim", "invalid register split at " + std::to_string(low_qubits));
  }
  const Index dl = Index{1} << low_qubits;
  const Index dh = s.dimension() / dl;
  // Amplitude matrix A(l, h) = psi[h * dl + l].
  const Eigen::Map<const CMatrix> a(s.amplitudes().data(), dl, dh);
  CMatrix rho = traced == Register::high ? CMatrix(a * a.adjoint())
                                         : CMatrix((a.adjoint() * a).transpose());
  return DensityMatrix::from_matrix(std::move(rho), 1e-10);
}

inline QuantumState apply_ansatz(const AnsatzCircuit& c, std::span<const double> theta,
                                 const QuantumState& s) {
  if (s.qubit_count() != c.qubit_count()) {
    throw DimensionError("qsim", "ansatz width does not match state");
  }
  CVector a = s.amplitudes();
  c.apply(a, theta);
  return QuantumState::from_amplitudes(std::move(a), 1e-10);
}

/// <psi|H|psi> for a Hermitian observable.
inline double expectation(const QuantumState& s, const CMatrix& h) {
  if (h.rows() != s.dimension() || h.cols() != s.dimension()) {
    throw DimensionError("qsim", "observable dimension does not match state");
  }
  require_hermitian(h, 1e-10, "observable");
  return s.amplitudes().dot(h * s.amplitudes()).real();
}

/// |<a|b>|^2.
inline double overlap(const QuantumState& a, const QuantumState& b) {
  if (a.dimension() != b.dimension()) throw DimensionError("qsim", "overlap size mismatch");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

/// U_theta rho U_theta^dagger.
inline CMatrix conjugate_matrix(const AnsatzCircuit& c, std::span<const double> theta,
                                const CMatrix& rho) {
  if (rho.rows() != c.dimension() || rho.cols() != c.dimension()) {
    throw DimensionError("qsim", "conjugate: matrix / circuit dimension mismatch");
  }
  CMatrix left = rho;
  c.apply(left, theta);                   // U rho
  CMatrix out = left.adjoint();           // rho U^dagger
  c.apply(out, theta);                    // U rho U^dagger
  return 0.5 * (out + out.adjoint());
}

inline DensityMatrix conjugate(const AnsatzCircuit& c, std::span<const double> theta,
                               const DensityMatrix& rho) {
  return DensityMatrix::from_matrix(conjugate_matrix(c, theta, rho.matrix()), 1e-10);
}

}  // namespace qcoral::qsim
