#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>

#include "kmlearn/scenarios.hpp"
#include "kmlearn/spectral.hpp"
#include "test_util.hpp"

using namespace kmlearn;

TEST_CASE("regression formulas at pinned points", "[scenarios]") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  REQUIRE(regression_value('c', zero) == 0.0);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(5);
  e1(0) = 1.0;
  REQUIRE(regression_value('c', e1) == Catch::Approx(0.1 + std::tanh(1.0)).epsilon(1e-12));

  Eigen::VectorXd d_point = Eigen::VectorXd::Zero(4);
  d_point << 1.0, 1.0, 1.0, 0.5;
  REQUIRE(regression_value('d', d_point) == Catch::Approx(8.0).epsilon(1e-12));

  Eigen::VectorXd b_point(2);
  b_point << 3.0, -2.0;
  REQUIRE(regression_value('b', b_point) == -6.0);
  REQUIRE(regression_value('a', e1) == 1.0);
  REQUIRE(regression_value('e', e1) == 0.0);

  Eigen::VectorXd short_x(2);
  short_x << 1.0, 1.0;
  REQUIRE_THROWS_AS(regression_value('c', short_x), InvalidConfig);
  REQUIRE_THROWS_AS(regression_value('z', e1), InvalidConfig);
}

TEST_CASE("central subspaces have the right dimension and bases", "[scenarios]") {
  const GroundTruth a = central_subspace('a', 3);
  REQUIRE(a.dim == 1);
  REQUIRE((a.basis - Eigen::Vector3d(1, 1, 1).normalized()).cwiseAbs().maxCoeff() <= 1e-12);

  REQUIRE(central_subspace('b', 10).dim == 2);
  REQUIRE(central_subspace('c', 50).dim == 2);
  REQUIRE(central_subspace('d', 50).dim == 3);

  const GroundTruth e = central_subspace('e', 50);
  REQUIRE(e.dim == 0);
  REQUIRE(e.projector.mat().cwiseAbs().maxCoeff() == 0.0);

  for (char fn : {'a', 'b', 'c', 'd'}) {
    const GroundTruth t = central_subspace(fn, 12);
    REQUIRE((t.basis.transpose() * t.basis - Eigen::MatrixXd::Identity(t.dim, t.dim))
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    REQUIRE((t.projector.mat() - t.basis * t.basis.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  }

  REQUIRE_THROWS_AS(central_subspace('c', 4), InvalidConfig);
  REQUIRE_THROWS_AS(central_subspace('d', 3), InvalidConfig);
}

TEST_CASE("regression values depend on x only through the projection onto S*", "[scenarios]") {
  Rng rng(97);
  for (char fn : {'a', 'b', 'c', 'd', 'e'}) {
    const int p = 9;
    const GroundTruth truth = central_subspace(fn, p);
    const Eigen::MatrixXd perp =
        Eigen::MatrixXd::Identity(p, p) - truth.projector.mat();
    for (int rep = 0; rep < 100; ++rep) {
      const Eigen::VectorXd x = kmtest::random_matrix(rng, p, 1);
      const Eigen::VectorXd z = perp * kmtest::random_matrix(rng, p, 1);
      const double fx = regression_value(fn, x);
      const double fprojected = regression_value(fn, truth.projector.mat() * x + z);
      REQUIRE(fx == Catch::Approx(fprojected).margin(1e-9));
    }
  }
}

TEST_CASE("sampling is deterministic in the seed", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'c';
  spec.n = 40;
  spec.p = 6;
  spec.seed = 12345;
  const Dataset d1 = sample(spec);
  const Dataset d2 = sample(spec);
  REQUIRE((d1.x.array() == d2.x.array()).all());
  REQUIRE((d1.y.array() == d2.y.array()).all());

  spec.seed = 12346;
  const Dataset d3 = sample(spec);
  REQUIRE_FALSE((d1.x.array() == d3.x.array()).all());
}

TEST_CASE("isotropic covariates have the right moments", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'a';
  spec.n = 10000;
  spec.p = 8;
  spec.seed = 2222;
  const Dataset data = sample(spec);
  const double bound = 4.0 / std::sqrt(10000.0);
  for (int j = 0; j < 8; ++j) {
    const double mean = data.x.col(j).mean();
    const double var = (data.x.col(j).array() - mean).square().mean();
    REQUIRE(std::abs(mean) <= bound);
    REQUIRE(std::abs(var - 1.0) <= 0.1);
  }
  // Var(f(X)) = Var(X1 + X2 + X3) = 3 for the linear scenario.
  Eigen::VectorXd f(10000);
  for (int i = 0; i < 10000; ++i) f(i) = regression_value('a', data.x.row(i));
  const double fvar = (f.array() - f.mean()).square().mean();
  REQUIRE(std::abs(fvar - 3.0) <= 0.3);
}

TEST_CASE("autoregressive covariates have the right correlation", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'a';
  spec.covariate_law = CovariateLaw::kArGaussian;
  spec.ar_rho = 0.5;
  spec.n = 10000;
  spec.p = 6;
  spec.seed = 3333;
  const Dataset data = sample(spec);
  auto corr = [&](int a, int b) {
    const Eigen::ArrayXd xa = data.x.col(a).array() - data.x.col(a).mean();
    const Eigen::ArrayXd xb = data.x.col(b).array() - data.x.col(b).mean();
    return (xa * xb).mean() / std::sqrt(xa.square().mean() * xb.square().mean());
  };
  REQUIRE(std::abs(corr(0, 1) - 0.5) <= 0.05);
  REQUIRE(std::abs(corr(1, 2) - 0.5) <= 0.05);
  REQUIRE(std::abs(corr(0, 2) - 0.25) <= 0.05);
}

TEST_CASE("bernoulli and uniform covariates stay in range", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'a';
  spec.n = 5000;
  spec.p = 5;
  spec.seed = 4444;

  spec.covariate_law = CovariateLaw::kBernoulliHalf;
  const Dataset bern = sample(spec);
  REQUIRE(((bern.x.array() == 0.0) || (bern.x.array() == 1.0)).all());
  REQUIRE(std::abs(bern.x.mean() - 0.5) <= 0.02);

  spec.covariate_law = CovariateLaw::kUniform01;
  const Dataset unif = sample(spec);
  REQUIRE((unif.x.array() >= 0.0).all());
  REQUIRE((unif.x.array() < 1.0).all());
  REQUIRE(std::abs(unif.x.mean() - 0.5) <= 0.02);
}

TEST_CASE("projections of isotropic covariates decorrelate at the root-n rate", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'a';
  spec.n = 10000;
  spec.p = 6;
  spec.seed = 5555;
  const Dataset data = sample(spec);
  const GroundTruth truth = central_subspace('a', 6);
  const Eigen::MatrixXd b_perp = orthogonal_complement(truth.basis, 6);
  const Eigen::MatrixXd u = data.x * truth.basis;   // n x 1
  const Eigen::MatrixXd v = data.x * b_perp;        // n x 5
  const Eigen::MatrixXd cross =
      (u.transpose() * v) / static_cast<double>(data.n());
  REQUIRE(cross.cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(10000.0));
}

TEST_CASE("explained variance closed forms", "[scenarios]") {
  REQUIRE(explained_variance('a', CovariateLaw::kIsoGaussian) == 3.0);
  REQUIRE(explained_variance('e', CovariateLaw::kIsoGaussian) == 0.0);
  REQUIRE(explained_variance('e', CovariateLaw::kBernoulliHalf) == 0.0);
  REQUIRE_FALSE(explained_variance('c', CovariateLaw::kIsoGaussian).has_value());
  REQUIRE_FALSE(explained_variance('a', CovariateLaw::kUniform01).has_value());

  // Monte Carlo oracle for Var(X1 X2) under the isotropic law.
  Rng rng(6666);
  const int draws = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = rng.next_normal() * rng.next_normal();
    sum += v;
    sum_sq += v * v;
  }
  const double mc_var = sum_sq / draws - (sum / draws) * (sum / draws);
  REQUIRE(*explained_variance('b', CovariateLaw::kIsoGaussian) ==
          Catch::Approx(mc_var).margin(0.02));
}

TEST_CASE("scenario validation", "[scenarios]") {
  ScenarioSpec spec;
  spec.fn_id = 'c';
  spec.p = 4;  // needs 5
  REQUIRE_THROWS_AS(spec.validate(), InvalidConfig);
  spec.p = 5;
  REQUIRE_NOTHROW(spec.validate());

  spec.covariate_law = CovariateLaw::kArGaussian;
  spec.ar_rho = 1.0;
  REQUIRE_THROWS_AS(spec.validate(), InvalidConfig);
  spec.ar_rho = 0.5;
  REQUIRE_NOTHROW(spec.validate());

  spec.sigma_noise = -0.1;
  REQUIRE_THROWS_AS(spec.validate(), InvalidConfig);

  REQUIRE(ScenarioSpec{.fn_id = 'a', .ar_rho = 0.5}.id() == "a-iso");
  ScenarioSpec ar;
  ar.fn_id = 'b';
  ar.covariate_law = CovariateLaw::kArGaussian;
  REQUIRE(ar.id() == "b-ar0.5");
}
