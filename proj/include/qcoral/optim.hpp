#pragma once

// Gradients (parameter shift, quotient-rule parameter shift, finite
// differences, analytic hooks) and the AdaGrad training loop.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcoral/errors.hpp"

namespace qcoral {

using Params = std::vector<double>;

struct OptimizerConfig {
  double learning_rate = 0.1;
  double accumulator_epsilon = 1e-8;
  int max_iterations = 2000;
  double convergence_tol = 1e-8;  // |delta cost| threshold
  int convergence_window = 20;    // consecutive iterations below tol
  int restarts = 3;
  unsigned long long seed = 7;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("optim", "learning_rate must be > 0");
    if (max_iterations < 1) throw ConfigError("optim", "max_iterations must be >= 1");
    if (restarts < 1) throw ConfigError("optim", "restarts must be >= 1");
    if (!(accumulator_epsilon >= 0.0)) throw ConfigError("optim", "epsilon must be >= 0");
  }
};

struct TrainingTrace {
  std::vector<double> cost_history;  // cost before each update, then the final cost
  Params final_parameters;
  double final_cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  int restart_index = 0;
  std::chrono::duration<double> wall_time{0};

  double initial_cost() const {
    return cost_history.empty() ? final_cost : cost_history.front();
  }
};

enum class GradientMethod {
  parameter_shift,        // exact for costs with unit-frequency dependence on each angle
  parameter_shift_ratio,  // quotient rule over parameter-shifted quadratic forms
  finite_difference,      // central differences, step 1e-5
  analytic,               // caller-supplied gradient (adjoint differentiation)
};

inline const char* to_string(GradientMethod m) {
  switch (m) {
    case GradientMethod::parameter_shift: return "parameter_shift";
    case GradientMethod::parameter_shift_ratio: return "parameter_shift_ratio";
    case GradientMethod::finite_difference: return "finite_difference";
    case GradientMethod::analytic: return "analytic";
  }
  return "unknown";
}

/// Numerator / denominator pair of one term of a ratio cost
/// f = 1 - (1/n) sum_i num_i / den_i. Each part is a quadratic form in the
/// circuit output, so each is parameter-shift differentiable on its own.
struct RatioTerm {
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Differentiable cost handle.
struct CostFunction {
  std::function<double(std::span<const double>)> value;
  GradientMethod method = GradientMethod::parameter_shift;
  /// Required for parameter_shift_ratio.
  std::function<std::vector<RatioTerm>(std::span<const double>)> ratio_terms;
  /// Required for analytic.
  std::function<Params(std::span<const double>)> analytic_gradient;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
/// Ratio terms whose denominator falls below this count as "no overlap".
inline constexpr double kRatioFloor = 1e-14;

namespace detail {

inline void require_finite(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw NumericalError("optim", std::string("non-finite cost at ") + where);
  }
}

}  // namespace detail

/// 1 - mean(num/den); terms with a vanishing denominator contribute 1.
inline double ratio_cost_value(const std::vector<RatioTerm>& terms) {
  if (terms.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& t : terms) {
    if (t.denominator > kRatioFloor) acc += t.numerator / t.denominator;
  }
  return 1.0 - acc / static_cast<double>(terms.size());
}

inline Params finite_difference_gradient(const CostFunction& cost, std::span<const double> theta,
                                         double h = kFiniteDifferenceStep) {
  Params g(theta.size());
  Params work(theta.begin(), theta.end());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    work[j] = theta[j] + h;
    const double fp = cost.value(work);
    work[j] = theta[j] - h;
    const double fm = cost.value(work);
    work[j] = theta[j];
    detail::require_finite(fp, "finite-difference point");
    detail::require_finite(fm, "finite-difference point");
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Params gradient(const CostFunction& cost, std::span<const double> theta) {
  constexpr double shift = std::numbers::pi / 2.0;
  Params work(theta.begin(), theta.end());
  switch (cost.method) {
    case GradientMethod::parameter_shift: {
      Params g(theta.size());
      for (std::size_t j = 0; j < theta.size(); ++j) {
        work[j] = theta[j] + shift;
        const double fp = cost.value(work);
        work[j] = theta[j] - shift;
        const double fm = cost.value(work);
        work[j] = theta[j];
        detail::require_finite(fp, "shifted point");
        detail::require_finite(fm, "shifted point");
        g[j] = 0.5 * (fp - fm);
      }
      return g;
    }
    case GradientMethod::parameter_shift_ratio: {
      if (!cost.ratio_terms) throw ConfigError("optim", "ratio cost without ratio_terms");
      const std::vector<RatioTerm> base = cost.ratio_terms(theta);
      const double n = static_cast<double>(base.size());
      Params g(theta.size(), 0.0);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        work[j] = theta[j] + shift;
        const auto plus = cost.ratio_terms(work);
        work[j] = theta[j] - shift;
        const auto minus = cost.ratio_terms(work);
        work[j] = theta[j];
        double acc = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
          const double den = base[i].denominator;
          if (den <= kRatioFloor) continue;
          const double dnum = 0.5 * (plus[i].numerator - minus[i].numerator);
          const double dden = 0.5 * (plus[i].denominator - minus[i].denominator);
          acc += (dnum * den - base[i].numerator * dden) / (den * den);
        }
        g[j] = -acc / n;
        detail::require_finite(g[j], "ratio gradient");
      }
      return g;
    }
    case GradientMethod::finite_difference:
      return finite_difference_gradient(cost, theta);
    case GradientMethod::analytic: {
      if (!cost.analytic_gradient) throw ConfigError("optim", "analytic cost without gradient");
      Params g = cost.analytic_gradient(theta);
      for (double v : g) detail::require_finite(v, "analytic gradient");
      return g;
    }
  }
  throw ConfigError("optim", "unknown gradient method");
}

/// accumulator += grad^2; theta -= lr * grad / sqrt(accumulator + eps).
inline void adagrad_step(std::span<double> theta, std::span<const double> grad,
                         std::span<double> accumulator, const OptimizerConfig& cfg) {
  if (theta.size() != grad.size() || theta.size() != accumulator.size()) {
    throw DimensionError("optim", "adagrad_step shape mismatch");
  }
  for (std::size_t j = 0; j < theta.size(); ++j) {
    accumulator[j] += grad[j] * grad[j];
    theta[j] -= cfg.learning_rate * grad[j] / std::sqrt(accumulator[j] + cfg.accumulator_epsilon);
  }
}

/// Uniform initialization in [-pi, pi).
inline Params random_parameters(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
  Params p(count);
  for (double& v : p) v = dist(rng);
  return p;
}

/// Single AdaGrad run from `theta0`.
inline TrainingTrace minimize_adagrad(const CostFunction& cost, Params theta0,
                                      const OptimizerConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainingTrace trace;
  Params theta = std::move(theta0);
  Params acc(theta.size(), 0.0);
  Params best = theta;
  double best_cost = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::quiet_NaN();
  int quiet = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double f = cost.value(theta);
    detail::require_finite(f, "training iterate");
    trace.cost_history.push_back(f);
    if (f < best_cost) {
      best_cost = f;
      best = theta;
    }
    if (std::isfinite(prev) && std::abs(prev - f) < cfg.convergence_tol) {
      if (++quiet >= cfg.convergence_window) {
        trace.converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
    prev = f;
    if (theta.empty()) {
      trace.converged = true;
      break;
    }
    const Params g = gradient(cost, theta);
    adagrad_step(theta, g, acc, cfg);
  }
  if (!trace.converged) {
    const double f = cost.value(theta);
    detail::require_finite(f, "final iterate");
    trace.cost_history.push_back(f);
    if (f < best_cost) {
      best_cost = f;
      best = theta;
    }
  }
  trace.final_parameters = std::move(best);
  trace.final_cost = best_cost;
  trace.wall_time = std::chrono::steady_clock::now() - start;
  return trace;
}

/// `cfg.restarts` seeded random initializations; keeps the lowest final cost.
inline TrainingTrace minimize_with_restarts(const CostFunction& cost, std::size_t parameter_count,
                                            const OptimizerConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  TrainingTrace best;
  for (int r = 0; r < cfg.restarts; ++r) {
    TrainingTrace t = minimize_adagrad(cost, random_parameters(parameter_count, rng), cfg);
    t.restart_index = r;
    if (r == 0 || t.final_cost < best.final_cost) best = std::move(t);
  }
  best.wall_time = std::chrono::steady_clock::now() - start;
  return best;
}

}  // namespace qcoral
