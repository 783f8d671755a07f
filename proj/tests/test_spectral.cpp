#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>

#include "kmlearn/spectral.hpp"
#include "kmlearn/rng.hpp"
#include "test_util.hpp"

using namespace kmlearn;
using kmtest::random_matrix;
using kmtest::random_projector;
using kmtest::random_psd;
using kmtest::random_symmetric;

namespace {

// Test-only oracle: cyclic Jacobi eigensolver, independent of the Eigen
// solver behind eigh.
void jacobi_eigh(Eigen::MatrixXd a, Eigen::VectorXd& eigenvalues, Eigen::MatrixXd& eigenvectors) {
  const Eigen::Index n = a.rows();
  eigenvectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-26) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::JacobiRotation<double> rot(c, s);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        eigenvectors.applyOnTheRight(p, q, rot);
      }
    }
  }
  eigenvalues = a.diagonal();
}

Eigen::MatrixXd jacobi_clip_psd(const Eigen::MatrixXd& a, double cap = -1.0) {
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  jacobi_eigh(a, evals, evecs);
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    evals(i) = std::max(evals(i), 0.0);
    if (cap > 0.0) evals(i) = std::min(evals(i), cap);
  }
  return evecs * evals.asDiagonal() * evecs.transpose();
}

}  // namespace

TEST_CASE("eigh on diagonal and 2x2 cases", "[spectral]") {
  Eigen::MatrixXd d = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
  const SpectralDecomposition dec = eigh(SymMatrix(d));
  REQUIRE(dec.eigenvalues(0) == Catch::Approx(3.0));
  REQUIRE(dec.eigenvalues(1) == Catch::Approx(2.0));
  REQUIRE(dec.eigenvalues(2) == Catch::Approx(1.0));
  // Axis eigenvectors up to sign: each column has a single unit entry.
  for (int k = 0; k < 3; ++k) {
    REQUIRE(dec.eigenvectors.col(k).cwiseAbs().maxCoeff() == Catch::Approx(1.0).margin(1e-12));
  }

  Eigen::MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  const SpectralDecomposition dec2 = eigh(SymMatrix(flip));
  REQUIRE(dec2.eigenvalues(0) == Catch::Approx(1.0));
  REQUIRE(dec2.eigenvalues(1) == Catch::Approx(-1.0));
}

TEST_CASE("eigh reconstruction and orthonormality on random draws", "[spectral]") {
  Rng rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix a = random_symmetric(rng, 6);
    const SpectralDecomposition dec = eigh(a);
    const Eigen::MatrixXd q = dec.eigenvectors;
    REQUIRE((q.transpose() * q - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);
    const Eigen::MatrixXd rebuilt = q * dec.eigenvalues.asDiagonal() * q.transpose();
    REQUIRE((rebuilt - a.mat()).norm() <= 1e-8 * std::max(1.0, a.mat().norm()));
    for (Eigen::Index i = 0; i + 1 < dec.eigenvalues.size(); ++i) {
      REQUIRE(dec.eigenvalues(i) >= dec.eigenvalues(i + 1));
    }
  }
}

TEST_CASE("eigh rejects non-finite input", "[spectral]") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(eigh(SymMatrix(bad)), InvalidInput);
}

TEST_CASE("project_psd clips negative eigenvalues", "[spectral]") {
  const SymMatrix out = project_psd(SymMatrix::Diagonal(Eigen::Vector2d(2.0, -3.0)));
  REQUIRE(out(0, 0) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(out(1, 1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(std::abs(out(0, 1)) <= 1e-12);
}

TEST_CASE("project_psd is the identity on the cone and idempotent", "[spectral]") {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix a = random_psd(rng, 5);
    REQUIRE((project_psd(a).mat() - a.mat()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.mat().norm()));
    const SymMatrix b = random_symmetric(rng, 5);
    const SymMatrix once = project_psd(b);
    const SymMatrix twice = project_psd(once);
    REQUIRE((twice.mat() - once.mat()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("project_psd matches the Jacobi eigen-clip oracle", "[spectral]") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix a = random_symmetric(rng, 5);
    const Eigen::MatrixXd expected = jacobi_clip_psd(a.mat());
    REQUIRE((project_psd(a).mat() - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("project_psd is Frobenius-nearest against random PSD candidates", "[spectral]") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix a = random_symmetric(rng, 4);
    const double projected_dist = (project_psd(a).mat() - a.mat()).norm();
    for (int candidate = 0; candidate < 200; ++candidate) {
      const SymMatrix b = random_psd(rng, 4);
      REQUIRE(projected_dist <= (b.mat() - a.mat()).norm() + 1e-12);
    }
  }
}

TEST_CASE("project_psd_capped clips both ends of the spectrum", "[spectral]") {
  const SymMatrix out = project_psd_capped(SymMatrix::Diagonal(Eigen::Vector2d(5.0, -1.0)), 3.0);
  REQUIRE(out(0, 0) == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(out(1, 1) == Catch::Approx(0.0).margin(1e-12));

  // Inactive cap (the operator-norm bound used in the experiments).
  const SymMatrix same = project_psd_capped(SymMatrix::Diagonal(Eigen::Vector2d(1.0, 2.0)), 100000.0);
  REQUIRE(same(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(same(1, 1) == Catch::Approx(2.0).margin(1e-12));

  REQUIRE_THROWS_AS(project_psd_capped(SymMatrix::Identity(2), 0.0), InvalidConfig);
  REQUIRE_THROWS_AS(project_psd_capped(SymMatrix::Identity(2), -1.0), InvalidConfig);
}

TEST_CASE("project_psd_capped spectrum lands in [0, cap] and matches the oracle", "[spectral]") {
  Rng rng(303);
  for (int rep = 0; rep < 50; ++rep) {
    const SymMatrix a = random_symmetric(rng, 4);
    const SymMatrix capped = project_psd_capped(a, 1.0);
    const SpectralDecomposition dec = eigh(capped);
    REQUIRE(dec.eigenvalues.minCoeff() >= -1e-10);
    REQUIRE(dec.eigenvalues.maxCoeff() <= 1.0 + 1e-10);
    REQUIRE((capped.mat() - jacobi_clip_psd(a.mat(), 1.0)).cwiseAbs().maxCoeff() <= 1e-10);
    // Equals the plain projection when the cap is inactive.
    const SymMatrix psd = project_psd(a);
    if (eigh(psd).eigenvalues.maxCoeff() <= 1.0) {
      REQUIRE((capped.mat() - psd.mat()).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("estimate_rank threshold rule", "[spectral]") {
  REQUIRE(estimate_rank(SymMatrix::Zero(3)) == 0);
  REQUIRE(estimate_rank(SymMatrix::Diagonal(Eigen::Vector3d(1.0, 5e-4, 0.0)), 1e-3, 1e-8) == 1);
  REQUIRE(estimate_rank(SymMatrix::Identity(4)) == 4);
  REQUIRE_THROWS_AS(estimate_rank(SymMatrix::Identity(2), -1e-3, 1e-8), InvalidConfig);
  REQUIRE_THROWS_AS(estimate_rank(SymMatrix::Identity(2), 1e-3, -1e-8), InvalidConfig);
}

TEST_CASE("estimate_rank of a projector equals its trace rank", "[spectral]") {
  Rng rng(404);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index p = 3 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const Eigen::Index r = static_cast<Eigen::Index>(rng.next_u64() % (p + 1));
    const SymMatrix a = random_psd(rng, p);
    const SymMatrix projector = column_space_projector(a, r);
    REQUIRE(estimate_rank(projector) == r);
  }
}

TEST_CASE("column_space_projector basics", "[spectral]") {
  const SymMatrix top = column_space_projector(SymMatrix::Diagonal(Eigen::Vector2d(3.0, 1.0)), 1);
  REQUIRE(top(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(top(1, 1) == Catch::Approx(0.0).margin(1e-12));

  const SymMatrix all = column_space_projector(SymMatrix::Identity(3), 3);
  REQUIRE((all.mat() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  const SymMatrix none = column_space_projector(SymMatrix::Identity(3), 0);
  REQUIRE(none.mat().cwiseAbs().maxCoeff() == 0.0);

  REQUIRE_THROWS_AS(column_space_projector(SymMatrix::Identity(3), 4), InvalidConfig);
  REQUIRE_THROWS_AS(column_space_projector(SymMatrix::Identity(3), -1), InvalidConfig);
}

TEST_CASE("column_space_projector returns orthogonal projectors", "[spectral]") {
  Rng rng(505);
  for (int rep = 0; rep < 50; ++rep) {
    const SymMatrix a = random_psd(rng, 6);
    const Eigen::Index r = static_cast<Eigen::Index>(rng.next_u64() % 7);
    const SymMatrix proj = column_space_projector(a, r);
    REQUIRE((proj.mat() * proj.mat() - proj.mat()).cwiseAbs().maxCoeff() <= 1e-8);
    REQUIRE(proj.mat().trace() == Catch::Approx(static_cast<double>(r)).margin(1e-8));
  }
}

TEST_CASE("near-degenerate truncation is flagged", "[spectral]") {
  const SpectralDecomposition tied = eigh(SymMatrix::Diagonal(Eigen::Vector3d(1.0, 1.0, 0.0)));
  REQUIRE(tied.near_tie_at(1));
  REQUIRE_FALSE(tied.near_tie_at(2));
  const SpectralDecomposition spread = eigh(SymMatrix::Diagonal(Eigen::Vector3d(3.0, 2.0, 1.0)));
  REQUIRE_FALSE(spread.near_tie_at(1));
}

TEST_CASE("subspace_distance closed-form cases", "[spectral]") {
  const SymMatrix p1 = SymMatrix::Diagonal(Eigen::Vector2d(1.0, 0.0));
  const SymMatrix p2 = SymMatrix::Diagonal(Eigen::Vector2d(0.0, 1.0));
  REQUIRE(subspace_distance(p1, p1) == 0.0);
  REQUIRE(subspace_distance(p1, p2, MatrixNorm::kFrobenius) ==
          Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // span(e1) vs span((e1+e2)/sqrt(2)): the 2x2 difference has eigenvalues
  // +-sqrt(b^2 + c^2) with b = 1/2 off-diagonal, c = 1/2 diagonal.
  Eigen::MatrixXd half(2, 2);
  half << 0.5, 0.5, 0.5, 0.5;
  const double expected = std::sqrt(0.25 + 0.25);
  REQUIRE(subspace_distance(p1, SymMatrix(half), MatrixNorm::kOperator) ==
          Catch::Approx(expected).epsilon(1e-12));

  REQUIRE_THROWS_AS(subspace_distance(p1, SymMatrix::Identity(3)), InvalidInput);
  REQUIRE_THROWS_AS(subspace_distance(p1, SymMatrix::Diagonal(Eigen::Vector2d(0.5, 0.5))),
                    InvalidInput);
}

TEST_CASE("subspace_distance is symmetric and satisfies the triangle inequality", "[spectral]") {
  Rng rng(606);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index p = 4;
    const SymMatrix a = random_projector(rng, p, 1 + static_cast<Eigen::Index>(rng.next_u64() % 3));
    const SymMatrix b = random_projector(rng, p, 1 + static_cast<Eigen::Index>(rng.next_u64() % 3));
    const SymMatrix c = random_projector(rng, p, 1 + static_cast<Eigen::Index>(rng.next_u64() % 3));
    for (MatrixNorm norm : {MatrixNorm::kFrobenius, MatrixNorm::kOperator}) {
      const double ab = subspace_distance(a, b, norm);
      const double ba = subspace_distance(b, a, norm);
      const double ac = subspace_distance(a, c, norm);
      const double cb = subspace_distance(c, b, norm);
      REQUIRE(ab == Catch::Approx(ba).margin(1e-13));
      REQUIRE(ab <= ac + cb + 1e-12);
    }
  }
}

TEST_CASE("orthogonal_complement spans the orthocomplement", "[spectral]") {
  Rng rng(707);
  const Eigen::MatrixXd basis = kmtest::random_orthonormal(rng, 5).leftCols(2);
  const Eigen::MatrixXd comp = orthogonal_complement(basis, 5);
  REQUIRE(comp.cols() == 3);
  REQUIRE((comp.transpose() * comp - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
          1e-10);
  REQUIRE((basis.transpose() * comp).cwiseAbs().maxCoeff() <= 1e-10);

  const Eigen::MatrixXd empty(5, 0);
  REQUIRE((orthogonal_complement(empty, 5) - Eigen::MatrixXd::Identity(5, 5)).norm() == 0.0);
}
