#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kmlearn/errors.hpp"
#include "kmlearn/krr.hpp"
#include "kmlearn/optimizer.hpp"
#include "kmlearn/records.hpp"
#include "kmlearn/rng.hpp"
#include "kmlearn/scenarios.hpp"
#include "kmlearn/spectral.hpp"

namespace kmlearn {

/// Operator-norm cap applied by default when optimizing inner-product
/// kernels, whose iterates otherwise occasionally diverge.
inline constexpr double kDefaultInnerProductCap = 100000.0;

struct RankTolerances {
  double rel_tol = kDefaultRankRelTol;
  double abs_tol = kDefaultRankAbsTol;
};

/// Desk-scale lambda grid: 8 roughly log-spaced points covering (0, 3].
inline std::vector<double> default_lambda_grid() {
  return {0.05, 0.08, 0.14, 0.24, 0.41, 0.70, 1.20, 3.00};
}

struct SweepConfig {
  ScenarioSpec scenario;  // scenario.seed is the sweep's base seed
  KernelSpec kernel = KernelSpec::gaussian();
  std::vector<double> lambdas = default_lambda_grid();
  int replicates = 20;
  PgdConfig pgd;
  RankTolerances rank_tolerances;
  int workers = 1;
  // Off by default: measured wall times would break the byte-identical
  // output contract across worker counts and repeated invocations.
  bool record_timing = false;

  void validate() const {
    scenario.validate();
    pgd.validate();
    if (lambdas.empty()) throw InvalidConfig("sweep: lambda grid must be nonempty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(lambdas[i] > 0.0)) throw InvalidConfig("sweep: lambdas must be strictly positive");
      if (i > 0 && lambdas[i] < lambdas[i - 1]) {
        throw InvalidConfig("sweep: lambdas must be sorted ascending");
      }
    }
    if (replicates < 1) throw InvalidConfig("sweep: replicates must be >= 1");
    if (workers < 1) throw InvalidConfig("sweep: workers must be >= 1");
    if (rank_tolerances.rel_tol < 0.0 || rank_tolerances.abs_tol < 0.0) {
      throw InvalidConfig("sweep: rank tolerances must be nonnegative");
    }
  }
};

/// rho_hat = lambda_min(B^T grad B) with B an orthonormal basis of the
/// complement of S*; positivity is the empirical fingerprint of the
/// non-degeneracy condition at the solution.
inline double sharpness_certificate(const SymMatrix& grad, const GroundTruth& truth) {
  const Eigen::Index p = grad.dim();
  if (truth.dim >= p) {
    throw NotApplicable("sharpness_certificate: S* fills the ambient space, no complement");
  }
  const Eigen::MatrixXd b = orthogonal_complement(truth.basis, p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b.transpose() * grad.mat() * b);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("sharpness_certificate: eigendecomposition failed");
  }
  return solver.eigenvalues()(0);
}

/// Max relative error between the analytic gradient and central finite
/// differences of the objective over all symmetric coordinate directions.
/// Requires an interior metric: Sigma +- step E must stay PSD.
inline double gradient_check(const KernelSpec& kernel, const Dataset& data,
                             const SymMatrix& sigma, double lambda, double step) {
  if (!(step > 0.0)) throw InvalidConfig("gradient_check: step must be positive");
  const SpectralDecomposition dec = eigh(sigma);
  const double lambda_min = dec.eigenvalues(dec.eigenvalues.size() - 1);
  if (lambda_min < step) {
    throw BoundaryProximity("gradient_check: min eigenvalue " + std::to_string(lambda_min) +
                            " is below the probe step " + std::to_string(step) +
                            "; shrink the step or move sigma into the interior");
  }
  const auto [value, grad] = objective_and_gradient(kernel, data, sigma, lambda);
  (void)value;
  const Eigen::Index p = sigma.dim();
  const double floor = 1e-9 * std::max(1.0, grad.mat().cwiseAbs().maxCoeff());
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      Eigen::MatrixXd direction = Eigen::MatrixXd::Zero(p, p);
      if (i == j) {
        direction(i, i) = 1.0;
      } else {
        direction(i, j) = 0.5;
        direction(j, i) = 0.5;
      }
      const double plus =
          objective(kernel, data, SymMatrix(sigma.mat() + step * direction), lambda);
      const double minus =
          objective(kernel, data, SymMatrix(sigma.mat() - step * direction), lambda);
      const double fd = (plus - minus) / (2.0 * step);
      const double analytic = grad(i, j);
      const double rel =
          std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), floor});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

/// Sample, optimize, and diagnose one (scenario, kernel, lambda) cell.
inline RunRecord run_single(const ScenarioSpec& scenario, const KernelSpec& kernel,
                            double lambda, const PgdConfig& pgd,
                            const RankTolerances& tolerances = {},
                            bool record_timing = true) {
  scenario.validate();
  if (!(lambda > 0.0)) throw InvalidConfig("run_single: lambda must be positive");
  const auto start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.seed = scenario.seed;
  rec.lambda = lambda;
  rec.scenario = scenario.id();
  rec.kernel = kernel.id();
  rec.n = scenario.n;
  rec.p = scenario.p;

  const GroundTruth truth = central_subspace(scenario.fn_id, scenario.p);
  rec.dim_s_star = truth.dim;

  PgdConfig config = pgd;
  if (!config.cap && !kernel.is_radial()) config.cap = kDefaultInnerProductCap;

  try {
    Dataset data = sample(scenario);
    KrrOracle oracle(kernel, std::move(data), lambda);
    const PgdResult result = minimize(oracle, scenario.p, config);
    rec.iterations = static_cast<int>(result.trace.iterations.size());
    rec.status = to_string(result.trace.status);
    const auto [objective_final, grad] = oracle.value_and_gradient(result.sigma);
    rec.objective_final = objective_final;
    rec.rank = static_cast<int>(
        estimate_rank(result.sigma, tolerances.rel_tol, tolerances.abs_tol));
    const SymMatrix learned = column_space_projector(result.sigma, rec.rank);
    rec.subspace_dist_fro =
        subspace_distance(learned, truth.projector, MatrixNorm::kFrobenius);
    if (truth.dim < scenario.p) {
      rec.sharpness_rho_hat = sharpness_certificate(grad, truth);
    }
  } catch (const NumericalFailure&) {
    rec.status = "numerical_failure";
    rec.rank = 0;
    rec.subspace_dist_fro = std::numeric_limits<double>::quiet_NaN();
    rec.objective_final = std::numeric_limits<double>::quiet_NaN();
  }

  if (record_timing) {
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

/// Run the full replicate x lambda grid. Each cell's dataset is seeded by
/// replicate_seed(base, replicate) so results are independent of worker
/// count and scheduling; output is ordered by (replicate, lambda).
inline std::vector<RunRecord> sweep(const SweepConfig& config) {
  config.validate();
  const std::size_t n_lambdas = config.lambdas.size();
  const std::size_t cells = static_cast<std::size_t>(config.replicates) * n_lambdas;
  std::vector<RunRecord> records(cells);

  auto run_cell = [&config, n_lambdas, &records](std::size_t index) {
    const std::size_t replicate = index / n_lambdas;
    const std::size_t lambda_index = index % n_lambdas;
    ScenarioSpec cell = config.scenario;
    cell.seed = replicate_seed(config.scenario.seed, replicate);
    try {
      records[index] = run_single(cell, config.kernel, config.lambdas[lambda_index],
                                  config.pgd, config.rank_tolerances, config.record_timing);
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.seed = cell.seed;
      failed.lambda = config.lambdas[lambda_index];
      failed.scenario = cell.id();
      failed.kernel = config.kernel.id();
      failed.n = cell.n;
      failed.p = cell.p;
      failed.status = "numerical_failure";
      failed.subspace_dist_fro = std::numeric_limits<double>::quiet_NaN();
      failed.objective_final = std::numeric_limits<double>::quiet_NaN();
      records[index] = std::move(failed);
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.workers), cells);
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&next, cells, &run_cell] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells) return;
          run_cell(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return records;
}

}  // namespace kmlearn
