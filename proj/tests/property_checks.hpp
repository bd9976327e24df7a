#pragma once

// Randomized invariant suites. Shared by the gtest suite, the acceptance
// binary and `qcoral selftest`. Each trial reports error / tolerance; a
// trial fails when that ratio exceeds 1.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qcoral/qcoral.hpp"

namespace qcoral::checks {

inline constexpr int kDefaultTrials = 200;

struct CheckResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst_ratio = 0.0;  // max over trials of error / tolerance
  std::string first_failure;

  bool passed() const { return trials > 0 && failures == 0; }
};

namespace detail {

using Trial = std::function<double(std::mt19937_64&, std::string&)>;

inline CheckResult run_suite(const std::string& name, int trials, unsigned long long seed,
                             const Trial& trial) {
  CheckResult r;
  r.name = name;
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    std::string note;
    double ratio = 0.0;
    try {
      ratio = trial(rng, note);
    } catch (const std::exception& e) {
      ratio = std::numeric_limits<double>::infinity();
      note = e.what();
    }
    ++r.trials;
    if (!(ratio <= 1.0)) {
      ++r.failures;
      if (r.first_failure.empty()) r.first_failure = "trial " + std::to_string(t) + ": " + note;
    }
    if (!(ratio <= r.worst_ratio)) r.worst_ratio = ratio;
  }
  return r;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Matrix unit_columns(Matrix x) {
  for (Index i = 0; i < x.cols(); ++i) x.col(i).normalize();
  return x;
}

inline double ratio(double err, double tol, std::string& note, const char* what) {
  note = std::string(what) + " error " + std::to_string(err);
  return err / tol;
}

}  // namespace detail

/// Every gate of a random ansatz keeps a random state at unit norm.
inline CheckResult norm_preservation(int trials = kDefaultTrials, unsigned long long seed = 11) {
  return detail::run_suite("norm preservation", trials, seed, [](std::mt19937_64& rng, std::string& note) {
    const int q = detail::uniform_int(rng, 1, 5);
    const qsim::AnsatzCircuit c(q, detail::uniform_int(rng, 1, 4));
    const auto theta = oracle::random_angles(rng, static_cast<std::size_t>(c.parameter_count()));
    qsim::CVector psi(c.dimension());
    std::normal_distribution<double> n(0.0, 1.0);
    for (Index i = 0; i < psi.size(); ++i) psi(i) = {n(rng), n(rng)};
    psi.normalize();
    double worst = 0.0;
    for (const auto& op : c.ops()) {
      qsim::AnsatzCircuit::apply_op(psi, op, theta);
      worst = std::max(worst, std::abs(psi.squaredNorm() - 1.0));
    }
    return detail::ratio(worst, 1e-12, note, "norm");
  });
}

/// U rho U^dagger keeps trace, Hermiticity and the sorted spectrum.
inline CheckResult conjugation_spectrum(int trials = kDefaultTrials, unsigned long long seed = 12) {
  return detail::run_suite("spectrum invariance under conjugation", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const int q = detail::uniform_int(rng, 1, 3);
    const qsim::AnsatzCircuit c(q, detail::uniform_int(rng, 1, 5));
    const auto theta = oracle::random_angles(rng, static_cast<std::size_t>(c.parameter_count()));
    const Matrix rho = oracle::random_density(rng, c.dimension());
    const auto out = qsim::conjugate(c, theta, qsim::DensityMatrix::from_real(rho));
    const qsim::CMatrix& m = out.matrix();
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double tr = std::abs(m.trace() - qsim::Complex(1.0));
    const double spec =
        (oracle::jacobi(m.real()).values - oracle::jacobi(rho).values).cwiseAbs().maxCoeff();
    const double imag = m.imag().cwiseAbs().maxCoeff();
    return detail::ratio(std::max({herm, tr, spec, imag}), 1e-10, note, "spectrum/trace");
  });
}

/// Tracing the sample register of encode_dataset(X) leaves X X^T / ||X||_F^2.
inline CheckResult partial_trace_covariance(int trials = kDefaultTrials,
                                            unsigned long long seed = 13) {
  return detail::run_suite("partial-trace / covariance identity", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const Index d = Index{1} << detail::uniform_int(rng, 0, 3);
    const Index n = detail::uniform_int(rng, 1, 8);
    const DataMatrix x(oracle::random_matrix(rng, d, n));
    const auto psi = qsim::encode_dataset(x);
    const int low = qsim::feature_qubits(x);
    const auto rho = qsim::partial_trace(psi, low, qsim::Register::high);
    const Matrix expected = x.values * x.values.transpose() / x.values.squaredNorm();
    const double err = (rho.matrix().real() - expected).cwiseAbs().maxCoeff() +
                       rho.matrix().imag().cwiseAbs().maxCoeff();
    const double err_loop =
        (oracle::trace_out_high(psi.amplitudes(), Index{1} << low) - rho.matrix()).cwiseAbs().maxCoeff();
    return detail::ratio(std::max(err, err_loop), 1e-12, note, "partial trace");
  });
}

/// L_m1 and L_m2 stay in [0, 1] and vanish on an exactly matched state.
inline CheckResult ratio_cost_range(int trials = kDefaultTrials, unsigned long long seed = 14) {
  return detail::run_suite("L_m in [0, 1]", trials, seed, [](std::mt19937_64& rng, std::string& note) {
    const int q = detail::uniform_int(rng, 1, 3);
    const qsim::AnsatzCircuit c(q, detail::uniform_int(rng, 1, 4));
    const Index d = c.dimension();
    const auto theta = oracle::random_angles(rng, static_cast<std::size_t>(c.parameter_count()));
    const Matrix half = oracle::psd_power(oracle::random_density(rng, d), 0.5);
    Matrix x = detail::unit_columns(oracle::random_matrix(rng, d, detail::uniform_int(rng, 1, 6)));
    const bool matched = rng() % 2 == 0;
    if (matched) {
      // Every column equal to the normalized S psi makes both costs zero.
      const Vector psi = vq::ansatz_state(c, theta);
      const Vector s_psi = (half * psi).normalized();
      for (Index i = 0; i < x.cols(); ++i) x.col(i) = s_psi;
    }
    const double l1 = vq::vmm_cost_decorrelate(c, theta, x, half);
    double worst = std::max({0.0, -l1, l1 - 1.0});
    if (matched) {
      worst = std::max(worst, std::abs(l1));
      // Align target: states whose recolored image is parallel to psi.
      const Vector psi = vq::ansatz_state(c, theta);
      const Matrix targets = (oracle::psd_power(half, -1.0) * psi).normalized().replicate(1, x.cols());
      const double l2 = vq::vmm_cost_align(c, theta, targets, half);
      worst = std::max(worst, std::abs(l2));
    } else {
      const double l2 = vq::vmm_cost_align(c, theta, x, half);
      worst = std::max({worst, -l2, l2 - 1.0});
    }
    return detail::ratio(worst, 1e-10, note, matched ? "matched L_m" : "L_m range");
  });
}

/// VQCMSR eigenvectors are mutually orthogonal, eigenvalues sum to tr(H).
inline CheckResult deflation_orthogonality(int trials = kDefaultTrials,
                                           unsigned long long seed = 15) {
  return detail::run_suite("deflation orthogonality", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const int q = detail::uniform_int(rng, 1, 2);
    const qsim::AnsatzCircuit c(q, q == 1 ? 2 : 6);
    const Matrix h = oracle::random_density(rng, c.dimension());
    OptimizerConfig opt;
    opt.seed = rng();
    opt.max_iterations = 600;
    const auto s = vq::vqcmsr(c, qsim::DensityMatrix::from_real(h), {},
                              vq::DeflationMode::all_eigen, opt);
    double leak = 0.0;
    for (Index i = 0; i < s.eigenvectors.cols(); ++i)
      for (Index j = i + 1; j < s.eigenvectors.cols(); ++j)
        leak = std::max(leak, std::pow(s.eigenvectors.col(i).dot(s.eigenvectors.col(j)), 2));
    const double trace_gap = std::abs(s.eigenvalues.sum() - h.trace());
    note = "overlap " + std::to_string(leak) + ", trace gap " + std::to_string(trace_gap);
    return std::max(leak / 1e-3, trace_gap / 1e-2);
  });
}

/// 1-NN matches the brute-force oracle, is scale invariant and permutes with
/// its test columns.
inline CheckResult knn_oracle(int trials = kDefaultTrials, unsigned long long seed = 16) {
  return detail::run_suite("knn oracle equivalence", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const Index d = detail::uniform_int(rng, 1, 8);
    const Index n = detail::uniform_int(rng, 1, 30);
    const Index m = detail::uniform_int(rng, 1, 30);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = detail::uniform_int(rng, 0, 3);
    const Matrix train = detail::unit_columns(oracle::random_matrix(rng, d, n));
    const Matrix test = detail::unit_columns(oracle::random_matrix(rng, d, m));
    const DataMatrix tr(train, labels);
    const auto got = knn_predict(tr, DataMatrix(test)).predicted;
    int bad = got == oracle::brute_knn(train, labels, test) ? 0 : 1;

    const double scale = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
    const auto scaled = knn_predict(DataMatrix(scale * train, labels), DataMatrix(scale * test)).predicted;
    bad += scaled == got ? 0 : 1;

    std::vector<Index> perm(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix permuted(d, m);
    for (Index i = 0; i < m; ++i) permuted.col(i) = test.col(perm[static_cast<std::size_t>(i)]);
    const auto p = knn_predict(tr, DataMatrix(permuted)).predicted;
    for (Index i = 0; i < m; ++i)
      if (p[static_cast<std::size_t>(i)] != got[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]) {
        ++bad;
        break;
      }
    note = std::to_string(bad) + " mismatching prediction sets";
    return bad == 0 ? 0.0 : 2.0;
  });
}

/// end_to_end_cost never drops below the sorted-spectrum distance.
inline CheckResult spectral_lower_bound(int trials = kDefaultTrials, unsigned long long seed = 17) {
  return detail::run_suite("spectral lower bound", trials, seed, [](std::mt19937_64& rng, std::string& note) {
    const int q = detail::uniform_int(rng, 1, 3);
    const qsim::AnsatzCircuit c(q, detail::uniform_int(rng, 1, 6));
    const auto theta = oracle::random_angles(rng, static_cast<std::size_t>(c.parameter_count()));
    const Matrix a = oracle::random_density(rng, c.dimension());
    const Matrix b = oracle::random_density(rng, c.dimension());
    const double cost = vq::end_to_end_cost(c, theta, qsim::DensityMatrix::from_real(a),
                                            qsim::DensityMatrix::from_real(b));
    const double bound = (oracle::jacobi(a).values - oracle::jacobi(b).values).squaredNorm();
    note = "cost " + std::to_string(cost) + " < bound " + std::to_string(bound);
    return cost >= bound - 1e-10 ? 0.0 : 2.0;
  });
}

/// covariance is PSD, and C^{1/2} C^{-1/2} is the range projector.
inline CheckResult covariance_psd(int trials = kDefaultTrials, unsigned long long seed = 18) {
  return detail::run_suite("covariance PSD / pseudo-inverse", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const Index d = detail::uniform_int(rng, 1, 8);
    const Index n = detail::uniform_int(rng, 1, 12);
    const DataMatrix x(oracle::random_matrix(rng, d, n));
    const Matrix c = covariance(x);
    const oracle::Eig e = oracle::jacobi(c);
    const double psd = std::max(0.0, -e.values.minCoeff() - 1e-10 * e.values.maxCoeff());
    const auto s = symmetric_eig(c);
    const Matrix proj = matrix_half_power(s, +1) * matrix_half_power(s, -1);
    const Matrix expected = e.vectors.leftCols(oracle::numeric_rank(c)) *
                            e.vectors.leftCols(oracle::numeric_rank(c)).transpose();
    const double perr = (proj - expected).norm();
    note = "psd violation " + std::to_string(psd) + ", projector error " + std::to_string(perr);
    return psd > 0.0 ? 2.0 : perr / 1e-8;
  });
}

/// Classical CORAL hits the target covariance, and the factored A* path
/// agrees with the step pipeline.
inline CheckResult coral_alignment(int trials = kDefaultTrials, unsigned long long seed = 19) {
  return detail::run_suite("CORAL alignment fidelity", trials, seed,
                           [](std::mt19937_64& rng, std::string& note) {
    const Index d = detail::uniform_int(rng, 2, 6);
    const Index n = detail::uniform_int(rng, 2 * d, 60);
    // Mildly anisotropic full-rank data.
    Matrix scale = Matrix::Identity(d, d);
    for (Index i = 0; i < d; ++i) scale(i, i) = std::exp(std::uniform_real_distribution<double>(-1, 1)(rng));
    const DataMatrix xs(scale * oracle::random_matrix(rng, d, n));
    const DataMatrix xt(oracle::random_matrix(rng, d, d) * oracle::random_matrix(rng, d, n));
    const auto t = fit_coral(xs, xt);
    const DataMatrix out = apply_coral(t, xs);
    const Matrix ct = covariance(xt);
    const double fid = (covariance(out) - ct).norm() / ct.norm();
    const double path = (t.combined.transpose() * xs.values - out.values).norm() /
                        std::max(1.0, out.values.norm());
    const double oracle_gap = (oracle::coral(xs.values, xt.values) - out.values).norm() /
                              std::max(1.0, out.values.norm());
    note = "covariance gap " + std::to_string(fid) + ", path gap " + std::to_string(path) +
           ", oracle gap " + std::to_string(oracle_gap);
    return std::max({fid / 1e-8, path / 1e-10, oracle_gap / 1e-8});
  });
}

/// serialize(parse(serialize(c))) == serialize(c) for random configs.
inline CheckResult config_round_trip(int trials = kDefaultTrials, unsigned long long seed = 20) {
  return detail::run_suite("config round trip", trials, seed, [](std::mt19937_64& rng, std::string& note) {
    ExperimentConfig c;
    const Method methods[] = {Method::na, Method::coral, Method::qblas, Method::vq_e2e, Method::vq_mm};
    c.method = methods[rng() % 5];
    const DatasetKind kinds[] = {DatasetKind::d1, DatasetKind::d2, DatasetKind::d3};
    c.source = default_spec(kinds[rng() % 3], rng() % 100000);
    c.target = default_spec(kinds[rng() % 3], rng() % 100000);
    c.source.sigma = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    c.target.separation = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
    c.layers = detail::uniform_int(rng, 1, 20);
    c.optimizer.learning_rate = std::uniform_real_distribution<double>(1e-4, 1.0)(rng);
    c.optimizer.max_iterations = detail::uniform_int(rng, 1, 5000);
    c.optimizer.restarts = detail::uniform_int(rng, 1, 5);
    c.optimizer.seed = rng();
    if (rng() % 2) c.deflation.eta = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
    if (rng() % 2) c.phase.gamma = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    c.phase.bits = detail::uniform_int(rng, 4, 12);
    c.sharing = rng() % 2 ? vq::VmmSharing::shared : vq::VmmSharing::per_sample;
    c.jobs = detail::uniform_int(rng, 1, 8);
    const std::string text = serialize_config(c);
    const std::string again = serialize_config(parse_config(text));
    note = "serialized texts differ";
    return text == again ? 0.0 : 2.0;
  });
}

/// Same spec and seed give bit-identical synthetic data.
inline CheckResult generator_determinism(int trials = kDefaultTrials, unsigned long long seed = 21) {
  return detail::run_suite("synthetic determinism", trials, seed, [](std::mt19937_64& rng, std::string& note) {
    const DatasetKind kinds[] = {DatasetKind::d1, DatasetKind::d2, DatasetKind::d3};
    const DatasetSpec s = default_spec(kinds[rng() % 3], rng());
    const DataMatrix a = generate_synthetic(s);
    const DataMatrix b = generate_synthetic(s);
    note = "regenerated data differs";
    const bool same = a.values.cwiseEqual(b.values).all() && a.labels == b.labels;
    return same ? 0.0 : 2.0;
  });
}

/// Every suite in a fixed order.
inline std::vector<CheckResult> run_all(int trials = kDefaultTrials) {
  return {norm_preservation(trials),        conjugation_spectrum(trials),
          partial_trace_covariance(trials), ratio_cost_range(trials),
          deflation_orthogonality(trials),  knn_oracle(trials),
          spectral_lower_bound(trials),     covariance_psd(trials),
          coral_alignment(trials),          config_round_trip(trials),
          generator_determinism(trials)};
}

}  // namespace qcoral::checks
