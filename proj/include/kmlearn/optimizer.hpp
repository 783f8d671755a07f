#pragma once

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kmlearn/errors.hpp"
#include "kmlearn/spectral.hpp"
#include "kmlearn/sym_matrix.hpp"

namespace kmlearn {

/// Projected gradient descent settings. The defaults reproduce the reference
/// experimental protocol: start at (1/p) I, Armijo backtracking from step
/// 0.1 with acceptance constant 1e-3 and halving, stop when consecutive
/// iterates move less than stop_delta per unit step, cap iterations at 2000.
struct PgdConfig {
  int max_iter = 2000;
  double armijo_c = 1e-3;
  double backtrack_beta = 0.5;
  double initial_step = 0.1;
  double min_step = 1e-12;
  double stop_delta = 1e-3;
  std::optional<double> cap;        // operator-norm cap M, off by default
  std::optional<double> init_diag;  // defaults to 1/p at minimize time

  void validate() const {
    if (max_iter < 1) throw InvalidConfig("PgdConfig: max_iter must be >= 1");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
      throw InvalidConfig("PgdConfig: armijo_c must lie in (0, 1)");
    }
    if (!(backtrack_beta > 0.0 && backtrack_beta < 1.0)) {
      throw InvalidConfig("PgdConfig: backtrack_beta must lie in (0, 1)");
    }
    if (!(initial_step > 0.0)) throw InvalidConfig("PgdConfig: initial_step must be positive");
    if (!(min_step > 0.0)) throw InvalidConfig("PgdConfig: min_step must be positive");
    if (!(stop_delta > 0.0)) throw InvalidConfig("PgdConfig: stop_delta must be positive");
    if (cap && !(*cap > 0.0)) throw InvalidConfig("PgdConfig: cap must be positive");
    if (init_diag && !(*init_diag > 0.0)) {
      throw InvalidConfig("PgdConfig: init_diag must be positive");
    }
  }
};

enum class PgdStatus { kConverged, kMaxIterReached, kStepUnderflow };

inline const char* to_string(PgdStatus status) {
  switch (status) {
    case PgdStatus::kConverged: return "converged";
    case PgdStatus::kMaxIterReached: return "max_iter_reached";
    case PgdStatus::kStepUnderflow: return "step_underflow";
  }
  return "unknown";
}

struct PgdIterationRecord {
  int iteration;      // 1-based
  double objective;   // value at the trial iterate of this step
  double step;        // accepted eta
  double move_ratio;  // ||Sigma_{t+1} - Sigma_t||_F / eta
  int backtracks;
};

struct PgdTrace {
  double initial_objective = 0.0;
  std::vector<PgdIterationRecord> iterations;
  PgdStatus status = PgdStatus::kMaxIterReached;
};

struct PgdResult {
  SymMatrix sigma;
  double objective;
  PgdTrace trace;
};

/// Anything that can evaluate the objective, and the objective with its
/// gradient, at a metric.
template <class T>
concept PgdOracle = requires(T oracle, const SymMatrix& sigma) {
  { oracle.value(sigma) } -> std::convertible_to<double>;
  { oracle.value_and_gradient(sigma) } -> std::convertible_to<std::pair<double, SymMatrix>>;
};

/// Adapter for a plain callable Sigma -> (value, gradient).
class FunctionOracle {
 public:
  using Fn = std::function<std::pair<double, SymMatrix>(const SymMatrix&)>;
  explicit FunctionOracle(Fn fn) : fn_(std::move(fn)) {}

  double value(const SymMatrix& sigma) const { return fn_(sigma).first; }
  std::pair<double, SymMatrix> value_and_gradient(const SymMatrix& sigma) const {
    return fn_(sigma);
  }

 private:
  Fn fn_;
};

namespace detail {

// Slack for comparisons of objective values; descent holds exactly in exact
// arithmetic, this absorbs eigensolver round-off on reprojected iterates.
inline constexpr double kDescentSlack = 1e-12;

inline SymMatrix project_feasible(const Eigen::MatrixXd& m, const std::optional<double>& cap) {
  const SymMatrix s(m);
  return cap ? project_psd_capped(s, *cap) : project_psd(s);
}

}  // namespace detail

struct ArmijoResult {
  double eta;
  SymMatrix sigma_next;
  double value_next;
  int backtracks;
  bool underflow;
};

/// Backtracking line search on the projection arc: starting from
/// initial_step, shrink eta by backtrack_beta until
///   J(P(Sigma - eta G)) <= J(Sigma) + c < G, P(Sigma - eta G) - Sigma >,
/// where P projects onto the feasible cone. The inner product on the
/// projection arc is nonpositive for feasible Sigma, so acceptance implies
/// descent.
template <PgdOracle Oracle>
ArmijoResult armijo_step(Oracle& oracle, const SymMatrix& sigma, double value,
                         const SymMatrix& gradient, const PgdConfig& config) {
  config.validate();
  double eta = config.initial_step;
  int backtracks = 0;
  const double slack = detail::kDescentSlack * std::max(1.0, std::abs(value));
  while (true) {
    if (eta < config.min_step) {
      return {eta, sigma, value, backtracks, true};
    }
    SymMatrix trial = detail::project_feasible(sigma.mat() - eta * gradient.mat(), config.cap);
    double trial_value;
    try {
      trial_value = oracle.value(trial);
    } catch (NumericalFailure& failure) {
      if (!failure.iterate) failure.iterate = trial.mat();
      throw;
    }
    const double decrease =
        config.armijo_c * (gradient.mat().cwiseProduct(trial.mat() - sigma.mat())).sum();
    if (trial_value <= value + decrease + slack) {
      return {eta, std::move(trial), trial_value, backtracks, false};
    }
    eta *= config.backtrack_beta;
    ++backtracks;
  }
}

/// Projected gradient descent over {Sigma >= 0} (optionally capped in
/// operator norm). Terminates when the per-step movement ratio
/// ||Sigma_{t+1} - Sigma_t||_F / eta drops below stop_delta; the returned
/// matrix is then the iterate at which that stationarity was measured, so
/// ||P(Sigma* - eta grad J(Sigma*)) - Sigma*||_F <= stop_delta * eta holds
/// at the result by construction.
template <PgdOracle Oracle>
PgdResult minimize(Oracle& oracle, Eigen::Index p, const PgdConfig& config) {
  config.validate();
  if (p < 1) throw InvalidConfig("minimize: dimension must be >= 1");

  SymMatrix sigma = SymMatrix::ScaledIdentity(p, config.init_diag.value_or(1.0 / static_cast<double>(p)));
  if (config.cap) sigma = detail::project_feasible(sigma.mat(), config.cap);

  double value;
  SymMatrix gradient = SymMatrix::Zero(p);
  try {
    std::tie(value, gradient) = oracle.value_and_gradient(sigma);
  } catch (NumericalFailure& failure) {
    if (!failure.iterate) failure.iterate = sigma.mat();
    throw;
  }

  PgdTrace trace;
  trace.initial_objective = value;
  trace.status = PgdStatus::kMaxIterReached;

  for (int t = 1; t <= config.max_iter; ++t) {
    ArmijoResult step = armijo_step(oracle, sigma, value, gradient, config);
    if (step.underflow) {
      trace.status = PgdStatus::kStepUnderflow;
      break;
    }
    const double move_ratio = (step.sigma_next.mat() - sigma.mat()).norm() / step.eta;
    trace.iterations.push_back({t, step.value_next, step.eta, move_ratio, step.backtracks});
    if (step.value_next > value + detail::kDescentSlack * std::max(1.0, std::abs(value))) {
      throw NumericalFailure("minimize: objective increased on an accepted step at iteration " +
                                 std::to_string(t),
                             step.sigma_next.mat());
    }
    if (move_ratio < config.stop_delta) {
      // Stationarity certified at the current iterate; the probe step is
      // within stop_delta * eta of it and is not accepted.
      trace.status = PgdStatus::kConverged;
      break;
    }
    sigma = std::move(step.sigma_next);
    value = step.value_next;
    try {
      gradient = oracle.value_and_gradient(sigma).second;
    } catch (NumericalFailure& failure) {
      if (!failure.iterate) failure.iterate = sigma.mat();
      throw;
    }
  }
  return {std::move(sigma), value, std::move(trace)};
}

}  // namespace kmlearn
