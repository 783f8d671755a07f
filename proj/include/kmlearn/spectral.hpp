#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "kmlearn/errors.hpp"
#include "kmlearn/sym_matrix.hpp"

namespace kmlearn {

/// Default thresholds for reading an integer rank off a converged, noisy
/// metric: the PSD projection drives killed eigenvalues to exact zero while
/// the iterate-difference stopping rule leaves O(1e-4) noise, so a relative
/// 1e-3 cut separates the two regimes.
inline constexpr double kDefaultRankRelTol = 1e-3;
inline constexpr double kDefaultRankAbsTol = 1e-8;

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending
/// with eigenvector columns aligned.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors; // orthonormal columns

  /// True when the spectral gap at the r-th/(r+1)-th eigenvalue boundary is
  /// within tol, i.e. a rank-r truncation splits a near-degenerate pair.
  bool near_tie_at(Eigen::Index r, double tol = 1e-12) const {
    if (r <= 0 || r >= eigenvalues.size()) return false;
    return std::abs(eigenvalues(r - 1) - eigenvalues(r)) <= tol;
  }
};

inline SpectralDecomposition eigh(const SymMatrix& a) {
  if (!a.all_finite()) {
    throw InvalidInput("eigh: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigh: eigendecomposition did not converge");
  }
  // Eigen sorts ascending; flip to descending.
  const Eigen::Index p = a.dim();
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors.resize(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    out.eigenvectors.col(k) = solver.eigenvectors().col(p - 1 - k);
  }
  return out;
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues at zero.
inline SymMatrix project_psd(const SymMatrix& a) {
  SpectralDecomposition d = eigh(a);
  const Eigen::VectorXd clipped = d.eigenvalues.cwiseMax(0.0);
  return SymMatrix(d.eigenvectors * clipped.asDiagonal() * d.eigenvectors.transpose());
}

/// Nearest point of {0 <= eigenvalues <= cap}: clip the spectrum into
/// [0, cap]. Equals project_psd whenever every eigenvalue is below the cap.
inline SymMatrix project_psd_capped(const SymMatrix& a, double cap) {
  if (!(cap > 0.0)) {
    throw InvalidConfig("project_psd_capped: cap must be positive, got " + std::to_string(cap));
  }
  SpectralDecomposition d = eigh(a);
  const Eigen::VectorXd clipped = d.eigenvalues.cwiseMax(0.0).cwiseMin(cap);
  return SymMatrix(d.eigenvectors * clipped.asDiagonal() * d.eigenvectors.transpose());
}

/// Number of eigenvalues strictly above max(abs_tol, rel_tol * lambda_max).
inline Eigen::Index estimate_rank(const SymMatrix& a, double rel_tol = kDefaultRankRelTol,
                                  double abs_tol = kDefaultRankAbsTol) {
  if (rel_tol < 0.0 || abs_tol < 0.0) {
    throw InvalidConfig("estimate_rank: tolerances must be nonnegative");
  }
  SpectralDecomposition d = eigh(a);
  const double lambda_max = d.eigenvalues(0);
  const double threshold = std::max(abs_tol, rel_tol * std::max(lambda_max, 0.0));
  Eigen::Index rank = 0;
  while (rank < d.eigenvalues.size() && d.eigenvalues(rank) > threshold) ++rank;
  return rank;
}

/// Orthogonal projector onto the span of the top-r eigenvectors. Ties at the
/// r-th eigenvalue are broken by the stable descending order of eigh;
/// SpectralDecomposition::near_tie_at reports such splits.
inline SymMatrix column_space_projector(const SymMatrix& a, Eigen::Index r) {
  const Eigen::Index p = a.dim();
  if (r < 0 || r > p) {
    throw InvalidConfig("column_space_projector: rank " + std::to_string(r) +
                        " out of [0, " + std::to_string(p) + "]");
  }
  if (r == 0) return SymMatrix::Zero(p);
  SpectralDecomposition d = eigh(a);
  const Eigen::MatrixXd q = d.eigenvectors.leftCols(r);
  return SymMatrix(q * q.transpose());
}

/// Orthonormal basis of the complement of span(basis) in R^p, taken from the
/// trailing columns of a full Householder QR factor.
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& basis, Eigen::Index p) {
  if (basis.rows() != p && basis.cols() != 0) {
    throw InvalidInput("orthogonal_complement: basis has " + std::to_string(basis.rows()) +
                       " rows, expected " + std::to_string(p));
  }
  const Eigen::Index d = basis.cols();
  if (d < 0 || d > p) throw InvalidInput("orthogonal_complement: bad basis width");
  if (d == 0) return Eigen::MatrixXd::Identity(p, p);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(p - d);
}

enum class MatrixNorm { kFrobenius, kOperator };

namespace detail {

inline void check_projector(const SymMatrix& p, const char* name) {
  const Eigen::MatrixXd& m = p.mat();
  const double idem = (m * m - m).cwiseAbs().maxCoeff();
  if (idem > 1e-6) {
    throw InvalidInput(std::string("subspace_distance: ") + name +
                       " is not an orthogonal projector (||P^2 - P||_max = " +
                       std::to_string(idem) + ")");
  }
}

}  // namespace detail

/// ||P1 - P2|| in the requested norm; zero iff the subspaces coincide.
inline double subspace_distance(const SymMatrix& p1, const SymMatrix& p2,
                                MatrixNorm norm = MatrixNorm::kFrobenius) {
  if (p1.dim() != p2.dim()) {
    throw InvalidInput("subspace_distance: dimension mismatch " + std::to_string(p1.dim()) +
                       " vs " + std::to_string(p2.dim()));
  }
  detail::check_projector(p1, "first argument");
  detail::check_projector(p2, "second argument");
  const SymMatrix diff(p1.mat() - p2.mat());
  if (norm == MatrixNorm::kFrobenius) return diff.frobenius_norm();
  const SpectralDecomposition d = eigh(diff);
  return std::max(std::abs(d.eigenvalues(0)), std::abs(d.eigenvalues(d.eigenvalues.size() - 1)));
}

}  // namespace kmlearn
