#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <string>
#include <utility>

#include "kmlearn/dataset.hpp"
#include "kmlearn/errors.hpp"
#include "kmlearn/kernels.hpp"
#include "kmlearn/sym_matrix.hpp"

namespace kmlearn {

/// Kernel ridge regression solution with intercept for one (Sigma, lambda,
/// data) triple. The coefficients satisfy r = n*lambda*alpha exactly at the
/// optimum, which el_residual tracks as a built-in correctness check.
struct KrrFit {
  Eigen::VectorXd alpha;
  double gamma = 0.0;
  Eigen::VectorXd residuals;
  double objective = 0.0;    // (1/2n)||r||^2 + (lambda/2) alpha^T K alpha
  double lambda = 0.0;
  double el_residual = 0.0;  // ||r - n*lambda*alpha||_inf
};

namespace detail {

inline KrrFit fit_from_gram(const Dataset& data, double lambda, const Eigen::MatrixXd& k) {
  const Eigen::Index n = data.n();
  const double nf = static_cast<double>(n);

  KrrFit out;
  out.lambda = lambda;

  // Degenerate response: the closed form is exact, skip the factorization.
  if ((data.y.array() == data.y(0)).all()) {
    out.alpha = Eigen::VectorXd::Zero(n);
    out.gamma = data.y(0);
    out.residuals = Eigen::VectorXd::Zero(n);
    out.objective = 0.0;
    out.el_residual = 0.0;
    return out;
  }

  // Solve (H K H + n lambda I) alpha = H y with H = I - 11^T/n. The solution
  // has mean zero, so it also solves (H K + n lambda I) alpha = H y, and the
  // system matrix is symmetric positive definite with spectrum >= n lambda.
  const Eigen::VectorXd row_means = k.rowwise().mean();
  const double grand_mean = row_means.mean();
  Eigen::MatrixXd system = k;
  system.colwise() -= row_means;
  system.rowwise() -= row_means.transpose();
  system.array() += grand_mean;
  system.diagonal().array() += nf * lambda;

  const Eigen::VectorXd y_centered = data.y.array() - data.y.mean();

  // Large-scale kernels (polynomial psi on wide metrics) can push the
  // system's condition number high enough that one backward-stable solve
  // leaves a visible stationarity residual; iterative refinement restores
  // r = n*lambda*alpha to working precision.
  const double target = 1e-13 * std::max(1.0, y_centered.lpNorm<Eigen::Infinity>());
  auto refine = [&](const auto& factorization) {
    out.alpha = factorization.solve(y_centered);
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd residual = y_centered - system * out.alpha;
      if (residual.lpNorm<Eigen::Infinity>() <= target) break;
      out.alpha += factorization.solve(residual);
    }
  };
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) {
    refine(llt);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) {
      throw NumericalFailure(
          "krr: centered kernel system could not be factorized (n*lambda = " +
          std::to_string(nf * lambda) + ", diagonal range [" +
          std::to_string(system.diagonal().minCoeff()) + ", " +
          std::to_string(system.diagonal().maxCoeff()) + "])");
    }
    refine(ldlt);
  }
  // The exact solution is mean-free; project the round-off away.
  out.alpha.array() -= out.alpha.mean();

  const Eigen::VectorXd k_alpha = k * out.alpha;
  out.gamma = (data.y - k_alpha).mean();
  out.residuals = data.y - k_alpha - Eigen::VectorXd::Constant(n, out.gamma);
  out.objective =
      0.5 / nf * out.residuals.squaredNorm() + 0.5 * lambda * out.alpha.dot(k_alpha);
  out.el_residual = (out.residuals - nf * lambda * out.alpha).lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace detail

/// Minimize the regularized least squares over (f, gamma) for a fixed metric.
inline KrrFit fit(const KernelSpec& kernel, const Dataset& data, const SymMatrix& sigma,
                  double lambda) {
  if (!(lambda > 0.0)) throw InvalidConfig("krr: lambda must be positive");
  const detail::GramBundle bundle = detail::build_gram(kernel, data.x, sigma);
  return detail::fit_from_gram(data, lambda, bundle.k);
}

/// J_n(Sigma): the objective value after partial minimization over (f, gamma).
inline double objective(const KernelSpec& kernel, const Dataset& data, const SymMatrix& sigma,
                        double lambda) {
  return fit(kernel, data, sigma, lambda).objective;
}

/// Value and gradient of J_n at sigma; one Gram build and one factorization
/// are shared between the two.
inline std::pair<double, SymMatrix> objective_and_gradient(const KernelSpec& kernel,
                                                           const Dataset& data,
                                                           const SymMatrix& sigma,
                                                           double lambda) {
  if (!(lambda > 0.0)) throw InvalidConfig("krr: lambda must be positive");
  const detail::GramBundle bundle = detail::build_gram(kernel, data.x, sigma);
  const KrrFit result = detail::fit_from_gram(data, lambda, bundle.k);
  const Eigen::MatrixXd kprime = detail::gram_derivative(kernel, bundle);
  return {result.objective,
          detail::contract_gradient(kernel, data.x, result.residuals, lambda, kprime)};
}

/// Out-of-sample prediction K_new alpha + gamma.
inline Eigen::VectorXd predict(const KrrFit& fitted, const KernelSpec& kernel,
                               const SymMatrix& sigma, const Eigen::MatrixXd& x_train,
                               const Eigen::MatrixXd& x_new) {
  if (x_new.cols() != x_train.cols()) {
    throw InvalidInput("predict: x_new has " + std::to_string(x_new.cols()) +
                       " columns, expected " + std::to_string(x_train.cols()));
  }
  if (fitted.alpha.size() != x_train.rows()) {
    throw InvalidInput("predict: fit does not match x_train");
  }
  detail::check_data_metric(x_train, sigma, "predict");
  if (!x_new.allFinite()) throw InvalidInput("predict: non-finite query points");

  const Eigen::MatrixXd cross = (x_new * sigma.mat()) * x_train.transpose();
  Eigen::MatrixXd k_new;
  if (kernel.is_radial()) {
    const Eigen::VectorXd q_new = ((x_new * sigma.mat()).cwiseProduct(x_new)).rowwise().sum();
    const Eigen::VectorXd q_train =
        ((x_train * sigma.mat()).cwiseProduct(x_train)).rowwise().sum();
    Eigen::MatrixXd d = (-2.0 * cross).colwise() + q_new;
    d.rowwise() += q_train.transpose();
    d = d.cwiseMax(0.0);
    const auto& profile = kernel.radial();
    k_new = Eigen::MatrixXd::Zero(d.rows(), d.cols());
    for (const auto& c : profile.components()) {
      k_new += c.weight * (-c.rate * d.array()).exp().matrix();
    }
  } else {
    const auto& profile = kernel.inner_product();
    k_new = cross.unaryExpr([&profile](double t) { return profile.value(t); });
  }
  return (k_new * fitted.alpha).array() + fitted.gamma;
}

/// Value/gradient oracle over a fixed (kernel, data, lambda) triple with a
/// single-entry cache: a line-search trial evaluated for its value alone does
/// not pay for the Gram build again when the gradient is requested at the
/// same metric.
class KrrOracle {
 public:
  KrrOracle(KernelSpec kernel, Dataset data, double lambda)
      : kernel_(std::move(kernel)), data_(std::move(data)), lambda_(lambda) {
    if (!(lambda_ > 0.0)) throw InvalidConfig("KrrOracle: lambda must be positive");
  }

  double value(const SymMatrix& sigma) {
    ensure_fit(sigma);
    return fit_.objective;
  }

  std::pair<double, SymMatrix> value_and_gradient(const SymMatrix& sigma) {
    ensure_fit(sigma);
    const Eigen::MatrixXd kprime = detail::gram_derivative(kernel_, bundle_);
    return {fit_.objective,
            detail::contract_gradient(kernel_, data_.x, fit_.residuals, lambda_, kprime)};
  }

  const KrrFit& last_fit() const { return fit_; }
  const Dataset& data() const { return data_; }
  double lambda() const { return lambda_; }

 private:
  void ensure_fit(const SymMatrix& sigma) {
    if (cached_ && cached_sigma_.rows() == sigma.dim() &&
        (cached_sigma_.array() == sigma.mat().array()).all()) {
      return;
    }
    bundle_ = detail::build_gram(kernel_, data_.x, sigma);
    fit_ = detail::fit_from_gram(data_, lambda_, bundle_.k);
    cached_sigma_ = sigma.mat();
    cached_ = true;
  }

  KernelSpec kernel_;
  Dataset data_;
  double lambda_;
  bool cached_ = false;
  Eigen::MatrixXd cached_sigma_;
  detail::GramBundle bundle_;
  KrrFit fit_;
};

}  // namespace kmlearn
