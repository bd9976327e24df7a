#pragma once

// Variational correlation alignment: the end-to-end cost over conjugated
// density matrices, the deflation eigensolver for covariance square roots,
// and the two-stage matrix-multiplication variant.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "qcoral/linalg.hpp"
#include "qcoral/optim.hpp"
#include "qcoral/qsim.hpp"

namespace qcoral::vq {

using qsim::AnsatzCircuit;
using qsim::CMatrix;
using qsim::Complex;
using qsim::CVector;
using qsim::DensityMatrix;

/// Deflation stagnated; `partial` holds the eigenpairs found so far.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, SpectralDecomposition partial)
      : NumericalError("vqcoral", what), partial_(std::move(partial)) {}
  const SpectralDecomposition& partial() const { return partial_; }

 private:
  SpectralDecomposition partial_;
};

namespace detail {

/// A <- G^dagger A G for one ansatz op (A Hermitian).
inline void unconjugate(CMatrix& a, const qsim::GateOp& op, std::span<const double> theta) {
  AnsatzCircuit::apply_op_inverse(a, op, theta);
  a.adjointInPlace();
  AnsatzCircuit::apply_op_inverse(a, op, theta);
}

inline Vector real_part_checked(const CVector& v, const char* what) {
  if (v.imag().cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("vqcoral", std::string(what) + ": imaginary part above 1e-10");
  }
  return v.real();
}

/// Runs `fn(i)` for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(Index count, int jobs, Fn&& fn) {
  const int workers = static_cast<int>(std::clamp<Index>(jobs, 1, std::max<Index>(1, count)));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// U_theta |0...0>, real by construction.
inline Vector ansatz_state(const AnsatzCircuit& c, std::span<const double> theta) {
  CVector a = CVector::Zero(c.dimension());
  a(0) = 1.0;
  c.apply(a, theta);
  return detail::real_part_checked(a, "ansatz state");
}

/// U_theta applied to a real vector.
inline Vector ansatz_apply(const AnsatzCircuit& c, std::span<const double> theta, const Vector& v) {
  if (v.size() != c.dimension()) throw DimensionError("vqcoral", "vector / circuit size mismatch");
  CVector a = v.cast<Complex>();
  c.apply(a, theta);
  return detail::real_part_checked(a, "ansatz output");
}

// ---------------------------------------------------------------------------
// End-to-end alignment.

inline void check_pair(const AnsatzCircuit& c, const DensityMatrix& rs, const DensityMatrix& rt) {
  if (rs.dimension() != c.dimension() || rt.dimension() != c.dimension()) {
    throw DimensionError("vqcoral", "density matrices must be " + std::to_string(c.dimension()) +
                                        "x" + std::to_string(c.dimension()));
  }
}

/// ||U rho_s U^dagger - rho_t||_F^2.
inline double end_to_end_cost(const AnsatzCircuit& c, std::span<const double> theta,
                              const DensityMatrix& rs, const DensityMatrix& rt) {
  check_pair(c, rs, rt);
  return (qsim::conjugate_matrix(c, theta, rs.matrix()) - rt.matrix()).squaredNorm();
}

/// Sum_k (lambda_k(rho_s) - lambda_k(rho_t))^2 over descending spectra; no
/// unitary conjugation can go below it.
inline double spectral_lower_bound(const DensityMatrix& rs, const DensityMatrix& rt) {
  if (rs.dimension() != rt.dimension()) throw DimensionError("vqcoral", "spectrum size mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> a(rs.matrix(), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<CMatrix> b(rt.matrix(), Eigen::EigenvaluesOnly);
  return (a.eigenvalues() - b.eigenvalues()).squaredNorm();
}

/// Adjoint-mode gradient of end_to_end_cost. The cost equals
/// tr(rho_s^2) + tr(rho_t^2) - 2 tr(U rho_s U^T rho_t), and each R_y
/// derivative is half of the same gate rotated by an extra pi.
inline Params end_to_end_gradient(const AnsatzCircuit& c, std::span<const double> theta,
                                  const DensityMatrix& rs, const DensityMatrix& rt) {
  check_pair(c, rs, rt);
  CMatrix m = qsim::conjugate_matrix(c, theta, rs.matrix());
  CMatrix n = rt.matrix();
  Params grad(theta.size(), 0.0);
  const auto& ops = c.ops();
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    detail::unconjugate(m, *it, theta);
    if (it->kind == qsim::GateOp::Kind::ry) {
      CMatrix x = m;
      AnsatzCircuit::apply_op(x, *it, theta);
      x.adjointInPlace();
      AnsatzCircuit::apply_op(x, *it, theta, std::numbers::pi);
      const double d = x.transpose().cwiseProduct(n).sum().real();
      grad[static_cast<std::size_t>(it->param)] = -2.0 * d;
    }
    detail::unconjugate(n, *it, theta);
  }
  return grad;
}

inline CostFunction end_to_end_cost_function(const AnsatzCircuit& c, const DensityMatrix& rs,
                                             const DensityMatrix& rt,
                                             GradientMethod method = GradientMethod::analytic) {
  CostFunction f;
  f.method = method;
  f.value = [&c, &rs, &rt](std::span<const double> t) { return end_to_end_cost(c, t, rs, rt); };
  f.analytic_gradient = [&c, &rs, &rt](std::span<const double> t) {
    return end_to_end_gradient(c, t, rs, rt);
  };
  return f;
}

inline TrainingTrace train_end_to_end(const AnsatzCircuit& c, const DensityMatrix& rs,
                                      const DensityMatrix& rt, const OptimizerConfig& opt,
                                      GradientMethod method = GradientMethod::analytic) {
  check_pair(c, rs, rt);
  return minimize_with_restarts(end_to_end_cost_function(c, rs, rt, method),
                                static_cast<std::size_t>(c.parameter_count()), opt);
}

/// Each column x_i replaced by Re(U x_i) renormalized; labels carried over.
inline DataMatrix apply_trained_transform(const AnsatzCircuit& c, std::span<const double> theta,
                                          const DataMatrix& xs) {
  xs.validate();
  if (xs.dimension() != c.dimension()) {
    throw DimensionError("vqcoral", "data dimension " + std::to_string(xs.dimension()) +
                                        " != circuit dimension " + std::to_string(c.dimension()));
  }
  CMatrix a = xs.values.cast<Complex>();
  c.apply(a, theta);
  if (a.imag().cwiseAbs().maxCoeff() > 1e-10) {
    throw NumericalError("vqcoral", "transported samples have imaginary parts above 1e-10");
  }
  DataMatrix out = xs;
  out.column_norms.reset();
  out.values = a.real();
  for (Index i = 0; i < out.samples(); ++i) {
    const double nrm = out.values.col(i).norm();
    if (nrm > 1e-300) out.values.col(i) /= nrm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deflation eigensolver.

struct DeflationConfig {
  std::optional<double> penalty_weight;  // default 2 tr(H)
  std::optional<double> eta;             // default 1.05 tr(H)
  int target_count = 0;                  // 0 means every eigenpair
  int restarts = 3;
};

enum class DeflationMode { all_eigen, top_r_via_eta };

/// Overlap above which a new vector counts as collapsed onto earlier ones.
inline constexpr double kCollapseOverlap = 0.5;

/// Modified Gram-Schmidt on the columns, in order.
inline Matrix orthonormalize_columns(Matrix v) {
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < j; ++i) v.col(j) -= v.col(i).dot(v.col(j)) * v.col(i);
    const double nrm = v.col(j).norm();
    if (nrm < 1e-12) throw NumericalError("vqcoral", "eigenvectors are linearly dependent");
    v.col(j) /= nrm;
  }
  return v;
}

/// Sequential eigenpairs of H by minimizing
/// F_k = <psi|H'|psi> + alpha sum_{i<k} |<psi|psi_i>|^2, with H' = H
/// (all_eigen, ascending order) or H' = eta I - H (top_r_via_eta, largest
/// eigenvalues of H first, reported as eta - E).
inline SpectralDecomposition vqcmsr(const AnsatzCircuit& c, const DensityMatrix& h,
                                    const DeflationConfig& cfg, DeflationMode mode,
                                    const OptimizerConfig& opt,
                                    std::vector<TrainingTrace>* traces = nullptr) {
  if (h.dimension() != c.dimension()) {
    throw DimensionError("vqcoral", "operator / circuit dimension mismatch");
  }
  const Matrix hr = h.matrix().real();
  const double tr = hr.trace();
  const double eta = cfg.eta.value_or(1.05 * tr);
  const double alpha = cfg.penalty_weight.value_or(2.0 * tr);
  if (cfg.restarts < 1) throw ConfigError("vqcoral", "deflation restarts must be >= 1");
  if (!(alpha > tr)) throw ConfigError("vqcoral", "penalty weight must exceed the spectral range");
  if (mode == DeflationMode::top_r_via_eta && eta < tr - 1e-12) {
    throw ConfigError("vqcoral", "eta must be at least the trace bound on lambda_max");
  }
  const Index d = hr.rows();
  const Index count = cfg.target_count > 0 ? std::min<Index>(cfg.target_count, d) : d;
  const Matrix op = mode == DeflationMode::all_eigen
                        ? hr
                        : Matrix(eta * Matrix::Identity(d, d) - hr);

  OptimizerConfig local = opt;
  local.restarts = cfg.restarts;
  Matrix found(d, 0);
  std::vector<double> energies;
  auto partial = [&] {
    Vector vals(static_cast<Index>(energies.size()));
    for (Index k = 0; k < vals.size(); ++k) {
      vals(k) = mode == DeflationMode::all_eigen ? energies[k] : eta - energies[k];
    }
    return make_spectral(vals, found);
  };

  for (Index k = 0; k < count; ++k) {
    Matrix penalized = op;
    if (found.cols() > 0) penalized += alpha * found * found.transpose();
    CostFunction f;
    f.method = GradientMethod::parameter_shift;
    f.value = [&c, &penalized](std::span<const double> t) {
      const Vector psi = ansatz_state(c, t);
      return psi.dot(penalized * psi);
    };
    local.seed = opt.seed + static_cast<unsigned long long>(k) * 1000003ULL;
    TrainingTrace trace =
        minimize_with_restarts(f, static_cast<std::size_t>(c.parameter_count()), local);
    const Vector psi = ansatz_state(c, trace.final_parameters);
    const double leak = found.cols() > 0 ? (found.transpose() * psi).squaredNorm() : 0.0;
    if (traces) traces->push_back(trace);
    if (leak > kCollapseOverlap) {
      throw ConvergenceError("deflation stagnated at eigenpair " + std::to_string(k) +
                                 " (overlap with earlier eigenvectors " + std::to_string(leak) +
                                 ")",
                             partial());
    }
    found.conservativeResize(d, found.cols() + 1);
    found.col(found.cols() - 1) = psi;
    found = orthonormalize_columns(found);
    energies.clear();
    for (Index i = 0; i < found.cols(); ++i) energies.push_back(found.col(i).dot(op * found.col(i)));
  }
  return partial();
}

/// matrix_half_power over variational eigenpairs, after re-orthonormalizing
/// the eigenvectors.
inline Matrix square_root_from_eigenpairs(const SpectralDecomposition& s, int sign) {
  SpectralDecomposition clean = s;
  if (clean.eigenvectors.cols() > 0) clean.eigenvectors = orthonormalize_columns(s.eigenvectors);
  return matrix_half_power(clean, sign);
}

// ---------------------------------------------------------------------------
// Matrix-multiplication variant.

/// Per-sample ratio terms of L_m1: numerator |<x|S|psi>|^2, denominator
/// <psi|S^2|psi> with S = C_s^{1/2}.
inline std::vector<RatioTerm> decorrelate_terms(const Matrix& states, const Matrix& xs,
                                                const Matrix& cs_half) {
  std::vector<RatioTerm> terms(static_cast<std::size_t>(states.cols()));
  for (Index i = 0; i < states.cols(); ++i) {
    const Vector s_psi = cs_half * states.col(i);
    const double amp = xs.col(i).dot(s_psi);
    terms[static_cast<std::size_t>(i)] = {amp * amp, s_psi.squaredNorm()};
  }
  return terms;
}

/// Per-sample ratio terms of L_m2: numerator |<psi|w>|^2, denominator
/// ||w||^2 with w = C_t^{1/2} x~*.
inline std::vector<RatioTerm> align_terms(const Matrix& states, const Matrix& targets,
                                          const Matrix& ct_half) {
  std::vector<RatioTerm> terms(static_cast<std::size_t>(states.cols()));
  for (Index i = 0; i < states.cols(); ++i) {
    const Vector w = ct_half * targets.col(i);
    const double amp = states.col(i).dot(w);
    terms[static_cast<std::size_t>(i)] = {amp * amp, w.squaredNorm()};
  }
  return terms;
}

inline void check_vmm_inputs(const AnsatzCircuit& c, const Matrix& x, const Matrix& half) {
  if (x.rows() != c.dimension() || half.rows() != c.dimension() || half.cols() != c.dimension()) {
    throw DimensionError("vqcoral", "vmm inputs must live in the circuit's " +
                                        std::to_string(c.dimension()) + "-dim space");
  }
  if (!is_symmetric(half)) throw ValidationError("vqcoral", "square-root factor is not symmetric");
}

/// L_m1 with psi_i = U_theta|0> for every sample (one sample per call in
/// per-sample training).
inline double vmm_cost_decorrelate(const AnsatzCircuit& c, std::span<const double> theta_d,
                                   const Matrix& xs, const Matrix& cs_half) {
  check_vmm_inputs(c, xs, cs_half);
  const Vector psi = ansatz_state(c, theta_d);
  const Matrix states = psi.replicate(1, xs.cols());
  return ratio_cost_value(decorrelate_terms(states, xs, cs_half));
}

/// L_m2 with x^(theta_a) = U_theta|0> against fixed decorrelated targets.
inline double vmm_cost_align(const AnsatzCircuit& c, std::span<const double> theta_a,
                             const Matrix& decorrelated, const Matrix& ct_half) {
  check_vmm_inputs(c, decorrelated, ct_half);
  const Vector psi = ansatz_state(c, theta_a);
  const Matrix states = psi.replicate(1, decorrelated.cols());
  return ratio_cost_value(align_terms(states, decorrelated, ct_half));
}

enum class VmmSharing {
  per_sample,  // psi_i = U_{theta_i}|0>, one parameter set per sample
  shared,      // psi_i = U_theta|x_i>, one parameter set for all samples
};

struct VmmOptions {
  VmmSharing sharing = VmmSharing::per_sample;
  int jobs = 1;
};

struct VmmResult {
  DataMatrix aligned;
  std::vector<double> decorrelate_cost;  // final L_m1 per sample
  std::vector<double> align_cost;        // final L_m2 per sample
  Index flagged = 0;                     // samples with a zero-norm branch
  std::chrono::duration<double> wall_time{0};
};

namespace detail {

inline Index count_flagged(const std::vector<RatioTerm>& t) {
  return std::count_if(t.begin(), t.end(), [](const RatioTerm& r) { return r.denominator <= kRatioFloor; });
}

inline CostFunction ratio_cost(std::function<std::vector<RatioTerm>(std::span<const double>)> terms) {
  CostFunction f;
  f.method = GradientMethod::parameter_shift_ratio;
  f.ratio_terms = terms;
  f.value = [terms](std::span<const double> t) { return ratio_cost_value(terms(t)); };
  return f;
}

inline Matrix apply_to_columns(const AnsatzCircuit& c, std::span<const double> theta,
                               const Matrix& x) {
  CMatrix a = x.cast<Complex>();
  c.apply(a, theta);
  return a.real();
}

}  // namespace detail

/// Two sequential stages: decorrelation states trained against L_m1, then
/// alignment states trained against L_m2 with the stage-1 optima as fixed
/// targets. Output columns are unit vectors proportional to
/// C_t^{1/2} C_s^{-1/2} x_i up to the variational error.
inline VmmResult train_vmm(const AnsatzCircuit& c, const DataMatrix& xs, const Matrix& cs_half,
                           const Matrix& ct_half, const OptimizerConfig& opt,
                           const VmmOptions& vo = {}) {
  xs.validate();
  check_vmm_inputs(c, xs.values, cs_half);
  check_vmm_inputs(c, xs.values, ct_half);
  const auto start = std::chrono::steady_clock::now();
  const Index n = xs.samples();
  const auto params = static_cast<std::size_t>(c.parameter_count());
  VmmResult out;
  out.aligned = xs;
  out.aligned.column_norms.reset();
  out.decorrelate_cost.assign(static_cast<std::size_t>(n), 1.0);
  out.align_cost.assign(static_cast<std::size_t>(n), 1.0);

  if (vo.sharing == VmmSharing::per_sample) {
    Matrix decorrelated(c.dimension(), n);
    std::vector<Index> flags(static_cast<std::size_t>(n), 0);
    detail::parallel_for(n, vo.jobs, [&](Index i) {
      const Matrix x = xs.values.col(i);
      OptimizerConfig local = opt;
      local.seed = opt.seed + static_cast<unsigned long long>(i) * 7919ULL;
      auto t1 = detail::ratio_cost([&](std::span<const double> t) {
        return decorrelate_terms(ansatz_state(c, t), x, cs_half);
      });
      const TrainingTrace tr1 = minimize_with_restarts(t1, params, local);
      const Vector d = ansatz_state(c, tr1.final_parameters);
      decorrelated.col(i) = d;
      const Matrix target = d;
      auto t2 = detail::ratio_cost([&](std::span<const double> t) {
        return align_terms(ansatz_state(c, t), target, ct_half);
      });
      local.seed += 1;
      const TrainingTrace tr2 = minimize_with_restarts(t2, params, local);
      const Vector a = ansatz_state(c, tr2.final_parameters);
      out.aligned.values.col(i) = a;
      out.decorrelate_cost[static_cast<std::size_t>(i)] = tr1.final_cost;
      out.align_cost[static_cast<std::size_t>(i)] = tr2.final_cost;
      flags[static_cast<std::size_t>(i)] =
          detail::count_flagged(decorrelate_terms(d, x, cs_half)) +
          detail::count_flagged(align_terms(a, target, ct_half));
    });
    for (Index f : flags) out.flagged += f;
  } else {
    const Matrix x = xs.values;
    auto t1 = detail::ratio_cost([&](std::span<const double> t) {
      return decorrelate_terms(detail::apply_to_columns(c, t, x), x, cs_half);
    });
    const TrainingTrace tr1 = minimize_with_restarts(t1, params, opt);
    const Matrix d = detail::apply_to_columns(c, tr1.final_parameters, x);
    auto t2 = detail::ratio_cost([&](std::span<const double> t) {
      return align_terms(detail::apply_to_columns(c, t, d), d, ct_half);
    });
    OptimizerConfig local = opt;
    local.seed += 1;
    const TrainingTrace tr2 = minimize_with_restarts(t2, params, local);
    const Matrix a = detail::apply_to_columns(c, tr2.final_parameters, d);
    out.aligned.values = a;
    const auto terms1 = decorrelate_terms(d, x, cs_half);
    const auto terms2 = align_terms(a, d, ct_half);
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.decorrelate_cost[k] = ratio_cost_value({terms1[k]});
      out.align_cost[k] = ratio_cost_value({terms2[k]});
    }
    out.flagged = detail::count_flagged(terms1) + detail::count_flagged(terms2);
  }
  for (Index i = 0; i < n; ++i) {
    const double nrm = out.aligned.values.col(i).norm();
    if (nrm > 1e-300) out.aligned.values.col(i) /= nrm;
  }
  out.wall_time = std::chrono::steady_clock::now() - start;
  return out;
}

}  // namespace qcoral::vq
