#pragma once

#include <Eigen/Core>

#include <utility>

#include "kmlearn/errors.hpp"

namespace kmlearn {

/// Dense real symmetric p x p matrix. Construction symmetrizes as
/// (A + A^T)/2, which absorbs round-off from gradient contractions and keeps
/// every downstream eigendecomposition well-posed. Immutable after
/// construction.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1) {
      throw InvalidInput("SymMatrix: expected a square matrix with dim >= 1, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    mat_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix Zero(Eigen::Index p) { return SymMatrix(Eigen::MatrixXd::Zero(p, p)); }
  static SymMatrix Identity(Eigen::Index p) { return SymMatrix(Eigen::MatrixXd::Identity(p, p)); }
  static SymMatrix Diagonal(const Eigen::VectorXd& d) {
    return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
  }
  /// c * I_p, the optimizer's canonical starting point with c = 1/p.
  static SymMatrix ScaledIdentity(Eigen::Index p, double c) {
    return SymMatrix(c * Eigen::MatrixXd::Identity(p, p));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

  bool all_finite() const { return mat_.allFinite(); }
  double frobenius_norm() const { return mat_.norm(); }

 private:
  Eigen::MatrixXd mat_;
};

}  // namespace kmlearn
