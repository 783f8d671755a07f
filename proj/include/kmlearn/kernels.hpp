#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include "kmlearn/errors.hpp"
#include "kmlearn/sym_matrix.hpp"

namespace kmlearn {

/// One exponential component of a radial profile.
struct RadialComponent {
  double weight;  // w > 0
  double rate;    // t > 0, bounded away from zero
};

/// Radial profile phi(z) = sum_k w_k exp(-t_k z): a finite atomic mixing
/// measure, which keeps phi completely monotone with phi'(z) available in
/// closed form. The Gaussian kernel is the single component (w, t) = (1, 1).
class RadialProfile {
 public:
  explicit RadialProfile(std::vector<RadialComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw InvalidConfig("RadialProfile: needs at least one component");
    for (const auto& c : components_) {
      if (!(c.weight > 0.0) || !(c.rate > 0.0)) {
        throw InvalidConfig("RadialProfile: weights and rates must be positive");
      }
    }
  }

  static RadialProfile Gaussian() { return RadialProfile({{1.0, 1.0}}); }

  double value(double z) const {
    double v = 0.0;
    for (const auto& c : components_) v += c.weight * std::exp(-c.rate * z);
    return v;
  }

  double derivative(double z) const {
    double v = 0.0;
    for (const auto& c : components_) v -= c.weight * c.rate * std::exp(-c.rate * z);
    return v;
  }

  double value_at_zero() const {
    double v = 0.0;
    for (const auto& c : components_) v += c.weight;
    return v;
  }

  /// m_mu: the support of the mixing measure lies in [m_mu, inf).
  double min_rate() const {
    double m = components_.front().rate;
    for (const auto& c : components_) m = std::min(m, c.rate);
    return m;
  }

  const std::vector<RadialComponent>& components() const { return components_; }

 private:
  std::vector<RadialComponent> components_;
};

/// Inner-product profile psi(t) = sum_k xi_k t^k with xi_k >= 0 and at least
/// one positive coefficient of degree >= 1 (a constant psi would make the
/// metric irrelevant).
class InnerProductProfile {
 public:
  explicit InnerProductProfile(std::vector<double> coefficients)
      : coefficients_(std::move(coefficients)) {
    double tail = 0.0;
    for (std::size_t k = 0; k < coefficients_.size(); ++k) {
      if (coefficients_[k] < 0.0) {
        throw InvalidConfig("InnerProductProfile: coefficients must be nonnegative");
      }
      if (k >= 1) tail += coefficients_[k];
    }
    if (!(tail > 0.0)) {
      throw InvalidConfig("InnerProductProfile: needs a positive coefficient of degree >= 1");
    }
  }

  static InnerProductProfile Linear() { return InnerProductProfile({0.0, 1.0}); }
  static InnerProductProfile Cubic() { return InnerProductProfile({0.0, 0.0, 0.0, 1.0}); }

  double value(double t) const {
    // Horner evaluation.
    double v = 0.0;
    for (std::size_t k = coefficients_.size(); k-- > 0;) v = v * t + coefficients_[k];
    return v;
  }

  double derivative(double t) const {
    double v = 0.0;
    for (std::size_t k = coefficients_.size(); k-- > 1;) {
      v = v * t + static_cast<double>(k) * coefficients_[k];
    }
    return v;
  }

  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_;
};

namespace detail {

inline std::string short_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

/// A kernel family: radial k(x,x') = phi(||x-x'||_Sigma^2) or inner-product
/// u(x,x') = psi(x^T Sigma x').
class KernelSpec {
 public:
  explicit KernelSpec(RadialProfile profile) : profile_(std::move(profile)) {}
  explicit KernelSpec(InnerProductProfile profile) : profile_(std::move(profile)) {}

  static KernelSpec gaussian() { return KernelSpec(RadialProfile::Gaussian()); }
  static KernelSpec mixture(std::vector<RadialComponent> components) {
    return KernelSpec(RadialProfile(std::move(components)));
  }
  static KernelSpec linear() { return KernelSpec(InnerProductProfile::Linear()); }
  static KernelSpec cubic() { return KernelSpec(InnerProductProfile::Cubic()); }
  static KernelSpec polynomial(std::vector<double> coefficients) {
    return KernelSpec(InnerProductProfile(std::move(coefficients)));
  }

  bool is_radial() const { return std::holds_alternative<RadialProfile>(profile_); }
  const RadialProfile& radial() const { return std::get<RadialProfile>(profile_); }
  const InnerProductProfile& inner_product() const {
    return std::get<InnerProductProfile>(profile_);
  }

  /// Stable identifier used in run records and CSV output (no commas).
  std::string id() const {
    if (is_radial()) {
      const auto& cs = radial().components();
      if (cs.size() == 1 && cs[0].weight == 1.0 && cs[0].rate == 1.0) return "gauss";
      std::string s = "mix";
      for (const auto& c : cs) {
        s += ":" + detail::short_float(c.weight) + ":" + detail::short_float(c.rate);
      }
      return s;
    }
    const auto& xs = inner_product().coefficients();
    if (xs.size() == 2 && xs[0] == 0.0 && xs[1] == 1.0) return "linear";
    if (xs.size() == 4 && xs[0] == 0.0 && xs[1] == 0.0 && xs[2] == 0.0 && xs[3] == 1.0) {
      return "cubic";
    }
    std::string s = "poly";
    for (double x : xs) s += ":" + detail::short_float(x);
    return s;
  }

 private:
  std::variant<RadialProfile, InnerProductProfile> profile_;
};

namespace detail {

inline void check_data_metric(const Eigen::MatrixXd& x, const SymMatrix& sigma,
                              const char* where) {
  if (x.cols() != sigma.dim()) {
    throw InvalidInput(std::string(where) + ": data has " + std::to_string(x.cols()) +
                       " columns but metric is " + std::to_string(sigma.dim()) + "-dimensional");
  }
  if (!x.allFinite() || !sigma.all_finite()) {
    throw InvalidInput(std::string(where) + ": non-finite input");
  }
}

}  // namespace detail

/// Pairwise squared metric distances d_ij = (x_i-x_j)^T Sigma (x_i-x_j),
/// clamped at zero against round-off; the diagonal is exactly zero.
inline Eigen::MatrixXd squared_metric_distances(const Eigen::MatrixXd& x,
                                                const SymMatrix& sigma) {
  detail::check_data_metric(x, sigma, "squared_metric_distances");
  const Eigen::MatrixXd g = (x * sigma.mat()) * x.transpose();
  const Eigen::VectorXd diag = g.diagonal();
  Eigen::MatrixXd d = (-2.0 * g).colwise() + diag;
  d.rowwise() += diag.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

namespace detail {

/// Gram matrix plus the pairwise matrix it was built from (squared distances
/// for radial kernels, X Sigma X^T for inner-product ones), kept so the
/// gradient contraction can reuse it.
struct GramBundle {
  Eigen::MatrixXd pairwise;
  Eigen::MatrixXd k;
};

inline GramBundle build_gram(const KernelSpec& kernel, const Eigen::MatrixXd& x,
                             const SymMatrix& sigma) {
  check_data_metric(x, sigma, "gram");
  GramBundle bundle;
  if (kernel.is_radial()) {
    bundle.pairwise = squared_metric_distances(x, sigma);
    const auto& profile = kernel.radial();
    bundle.k = Eigen::MatrixXd::Zero(bundle.pairwise.rows(), bundle.pairwise.cols());
    for (const auto& c : profile.components()) {
      bundle.k += c.weight * (-c.rate * bundle.pairwise.array()).exp().matrix();
    }
  } else {
    bundle.pairwise = (x * sigma.mat()) * x.transpose();
    const auto& profile = kernel.inner_product();
    bundle.k = bundle.pairwise.unaryExpr([&profile](double t) { return profile.value(t); });
  }
  return bundle;
}

/// phi'(d_ij) or psi'(s_ij) on the cached pairwise matrix.
inline Eigen::MatrixXd gram_derivative(const KernelSpec& kernel, const GramBundle& bundle) {
  if (kernel.is_radial()) {
    const auto& profile = kernel.radial();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bundle.pairwise.rows(), bundle.pairwise.cols());
    for (const auto& c : profile.components()) {
      out -= (c.weight * c.rate) * (-c.rate * bundle.pairwise.array()).exp().matrix();
    }
    return out;
  }
  const auto& profile = kernel.inner_product();
  return bundle.pairwise.unaryExpr([&profile](double t) { return profile.derivative(t); });
}

/// The contraction itself, given the precomputed derivative matrix. Radial:
/// sum_ij W_ij (x_i-x_j)(x_i-x_j)^T = 2 (X^T D X - X^T W X) with
/// D = diag(W 1). Inner-product: symmetrized X^T W X.
inline SymMatrix contract_gradient(const KernelSpec& kernel, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& residuals, double lambda,
                                   const Eigen::MatrixXd& kprime) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd w = (residuals * residuals.transpose()).cwiseProduct(kprime);
  if (kernel.is_radial()) {
    const Eigen::VectorXd row_sums = w.rowwise().sum();
    const Eigen::MatrixXd weighted = row_sums.asDiagonal() * x - w * x;
    return SymMatrix(-(1.0 / (lambda * n * n)) * (x.transpose() * weighted));
  }
  return SymMatrix(-(0.5 / (lambda * n * n)) * (x.transpose() * (w * x)));
}

}  // namespace detail

/// Gram matrix of the kernel on the sample under the metric sigma.
inline Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& x,
                            const SymMatrix& sigma) {
  return detail::build_gram(kernel, x, sigma).k;
}

/// Empirical gradient of the partially minimized objective,
///   -(1/(2 lambda n^2)) sum_{i,j} r_i r_j d/dSigma k_Sigma(x_i, x_j),
/// a V-statistic over all ordered pairs including i = j. Radial kernels use
/// d/dSigma k = phi'(d) (x_i-x_j)(x_i-x_j)^T; inner-product kernels use the
/// symmetrized direction (x x'^T + x' x^T)/2 since the gradient lives in the
/// symmetric matrices.
inline SymMatrix gradient_contraction(const KernelSpec& kernel, const Eigen::MatrixXd& x,
                                      const SymMatrix& sigma, const Eigen::VectorXd& residuals,
                                      double lambda) {
  detail::check_data_metric(x, sigma, "gradient_contraction");
  if (!(lambda > 0.0)) throw InvalidConfig("gradient_contraction: lambda must be positive");
  if (residuals.size() != x.rows()) {
    throw InvalidInput("gradient_contraction: residual length " +
                       std::to_string(residuals.size()) + " does not match n = " +
                       std::to_string(x.rows()));
  }
  if (!residuals.allFinite()) throw InvalidInput("gradient_contraction: non-finite residuals");

  const detail::GramBundle bundle = detail::build_gram(kernel, x, sigma);
  return detail::contract_gradient(kernel, x, residuals, lambda,
                                   detail::gram_derivative(kernel, bundle));
}

}  // namespace kmlearn
