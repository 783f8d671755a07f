#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "kmlearn/dataset.hpp"
#include "kmlearn/errors.hpp"
#include "kmlearn/rng.hpp"
#include "kmlearn/sym_matrix.hpp"

namespace kmlearn {

enum class CovariateLaw { kIsoGaussian, kArGaussian, kBernoulliHalf, kUniform01 };

inline std::string to_string(CovariateLaw law, double ar_rho = 0.5) {
  switch (law) {
    case CovariateLaw::kIsoGaussian: return "iso";
    case CovariateLaw::kArGaussian: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "ar%g", ar_rho);
      return buf;
    }
    case CovariateLaw::kBernoulliHalf: return "bernoulli";
    case CovariateLaw::kUniform01: return "uniform";
  }
  return "unknown";
}

/// Smallest ambient dimension on which the regression formula is defined.
inline int min_dimension(char fn_id) {
  switch (fn_id) {
    case 'a': return 3;
    case 'b': return 2;
    case 'c': return 5;
    case 'd': return 4;
    case 'e': return 1;
    default:
      throw InvalidConfig(std::string("unknown regression function id '") + fn_id + "'");
  }
}

/// Simulation configuration: covariate law, regression function, noise level
/// and sizes. seed fully determines the sample.
struct ScenarioSpec {
  char fn_id = 'c';
  CovariateLaw covariate_law = CovariateLaw::kIsoGaussian;
  double ar_rho = 0.5;  // only used by kArGaussian
  double sigma_noise = 0.1;
  int n = 300;
  int p = 50;
  std::uint64_t seed = 0;

  void validate() const {
    const int min_p = min_dimension(fn_id);
    if (p < min_p) {
      throw InvalidConfig(std::string("scenario (") + fn_id + ") needs p >= " +
                          std::to_string(min_p) + ", got " + std::to_string(p));
    }
    if (n < 2) throw InvalidConfig("scenario: n must be >= 2");
    if (sigma_noise < 0.0) throw InvalidConfig("scenario: sigma_noise must be nonnegative");
    if (covariate_law == CovariateLaw::kArGaussian &&
        !(ar_rho > -1.0 && ar_rho < 1.0)) {
      throw InvalidConfig("scenario: ar_rho must lie in (-1, 1)");
    }
  }

  std::string id() const {
    return std::string(1, fn_id) + "-" + to_string(covariate_law, ar_rho);
  }
};

/// The central mean subspace S* implied by a regression function: the
/// smallest subspace whose projection of X carries all of E[Y|X].
struct GroundTruth {
  Eigen::MatrixXd basis;  // p x d, orthonormal columns
  int dim;
  SymMatrix projector;    // basis basis^T
};

inline double regression_value(char fn_id, const Eigen::VectorXd& x) {
  if (x.size() < min_dimension(fn_id)) {
    throw InvalidConfig(std::string("regression_value: fn (") + fn_id + ") needs p >= " +
                        std::to_string(min_dimension(fn_id)) + ", got " +
                        std::to_string(x.size()));
  }
  switch (fn_id) {
    case 'a': return x(0) + x(1) + x(2);
    case 'b': return x(0) * x(1);
    case 'c': {
      const double s = x(0) + x(1) + x(2);
      return 0.1 * s * s * s + std::tanh(x(0) + x(2) + x(4));
    }
    case 'd': {
      const double q = x(1) + x(2);
      const double cube = x(3) - 0.5;
      return 2.0 * (x(0) + x(1)) + q * q + cube * cube * cube;
    }
    case 'e': return 0.0;
    default:
      throw InvalidConfig(std::string("unknown regression function id '") + fn_id + "'");
  }
}

namespace detail {

/// Modified Gram-Schmidt; inputs here are tiny, exact-rational direction
/// sets, so no pivoting is needed.
inline Eigen::MatrixXd orthonormalize(Eigen::MatrixXd v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index k = 0; k < j; ++k) {
      v.col(j) -= v.col(k).dot(v.col(j)) * v.col(k);
    }
    const double norm = v.col(j).norm();
    if (norm < 1e-12) throw InvalidInput("orthonormalize: directions are linearly dependent");
    v.col(j) /= norm;
  }
  return v;
}

}  // namespace detail

inline GroundTruth central_subspace(char fn_id, int p) {
  if (p < min_dimension(fn_id)) {
    throw InvalidConfig(std::string("central_subspace: fn (") + fn_id + ") needs p >= " +
                        std::to_string(min_dimension(fn_id)) + ", got " + std::to_string(p));
  }
  std::vector<Eigen::VectorXd> directions;
  auto direction = [p](std::initializer_list<int> support) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    for (int i : support) v(i) = 1.0;
    return v;
  };
  switch (fn_id) {
    case 'a':
      directions.push_back(direction({0, 1, 2}));
      break;
    case 'b':
      directions.push_back(direction({0}));
      directions.push_back(direction({1}));
      break;
    case 'c':
      directions.push_back(direction({0, 1, 2}));
      directions.push_back(direction({0, 2, 4}));
      break;
    case 'd':
      directions.push_back(direction({0, 1}));
      directions.push_back(direction({1, 2}));
      directions.push_back(direction({3}));
      break;
    case 'e':
      break;
    default:
      throw InvalidConfig(std::string("unknown regression function id '") + fn_id + "'");
  }
  const int d = static_cast<int>(directions.size());
  Eigen::MatrixXd raw(p, d);
  for (int j = 0; j < d; ++j) raw.col(j) = directions[j];
  const Eigen::MatrixXd basis = d > 0 ? detail::orthonormalize(raw) : raw;
  return {basis, d, SymMatrix(basis * basis.transpose())};
}

/// Draw a dataset. X is filled row by row (sample-major), then the noise,
/// so the stream layout is part of the reproducibility contract.
inline Dataset sample(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Eigen::MatrixXd x(spec.n, spec.p);
  switch (spec.covariate_law) {
    case CovariateLaw::kIsoGaussian:
      for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.p; ++j) x(i, j) = rng.next_normal();
      }
      break;
    case CovariateLaw::kArGaussian: {
      for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.p; ++j) x(i, j) = rng.next_normal();
      }
      Eigen::MatrixXd cov(spec.p, spec.p);
      for (int i = 0; i < spec.p; ++i) {
        for (int j = 0; j < spec.p; ++j) cov(i, j) = std::pow(spec.ar_rho, std::abs(i - j));
      }
      const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
      x = x * chol.transpose();
      break;
    }
    case CovariateLaw::kBernoulliHalf:
      for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.p; ++j) x(i, j) = rng.next_uniform() < 0.5 ? 1.0 : 0.0;
      }
      break;
    case CovariateLaw::kUniform01:
      for (int i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.p; ++j) x(i, j) = rng.next_uniform();
      }
      break;
  }
  Eigen::VectorXd y(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    y(i) = regression_value(spec.fn_id, x.row(i)) + spec.sigma_noise * rng.next_normal();
  }
  return Dataset(std::move(x), std::move(y));
}

/// Var(E[Y|X]) where it has a closed form; drives the dichotomy between the
/// low-rank phenomenon (positive) and full-rank solutions (zero).
inline std::optional<double> explained_variance(char fn_id, CovariateLaw law) {
  if (fn_id == 'e') return 0.0;
  if (law == CovariateLaw::kIsoGaussian) {
    if (fn_id == 'a') return 3.0;
    if (fn_id == 'b') return 1.0;
  }
  return std::nullopt;
}

}  // namespace kmlearn
