// Command-line front end: single runs, replicate x lambda sweeps, gradient
// checking and figure-style reports.

#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kmlearn/kmlearn.hpp"

namespace {

using namespace kmlearn;

bool use_color() {
  if (std::getenv("NO_COLOR") != nullptr) return false;
  return isatty(fileno(stdout)) != 0;
}

std::string paint(const std::string& text, const char* code) {
  if (!use_color()) return text;
  return std::string("\033[") + code + "m" + text + "\033[0m";
}

CovariateLaw parse_covariates(const std::string& token, double& ar_rho) {
  if (token == "iso") return CovariateLaw::kIsoGaussian;
  if (token == "bernoulli") return CovariateLaw::kBernoulliHalf;
  if (token == "uniform") return CovariateLaw::kUniform01;
  if (token.rfind("ar:", 0) == 0) {
    ar_rho = std::stod(token.substr(3));
    return CovariateLaw::kArGaussian;
  }
  throw CLI::ValidationError("--covariates", "expected iso|ar:<rho>|bernoulli|uniform, got '" +
                                                 token + "'");
}

KernelSpec parse_kernel(const std::string& token) {
  if (token == "gauss") return KernelSpec::gaussian();
  if (token == "linear") return KernelSpec::linear();
  if (token == "cubic") return KernelSpec::cubic();
  if (token.rfind("mix:", 0) == 0) {
    // mix:<w:t,w:t,...>
    std::vector<RadialComponent> components;
    std::stringstream stream(token.substr(4));
    std::string pair;
    while (std::getline(stream, pair, ',')) {
      const std::size_t colon = pair.find(':');
      if (colon == std::string::npos) {
        throw CLI::ValidationError("--kernel", "mix components are w:t pairs, got '" + pair + "'");
      }
      components.push_back(
          {std::stod(pair.substr(0, colon)), std::stod(pair.substr(colon + 1))});
    }
    return KernelSpec::mixture(std::move(components));
  }
  throw CLI::ValidationError("--kernel",
                             "expected gauss|mix:<w:t,...>|linear|cubic, got '" + token + "'");
}

// A comma list ("0.5,0.7,3"), a log-spaced range ("0.05:3.0:8"), or empty for
// the default grid.
std::vector<double> parse_lambdas(const std::string& token) {
  if (token.empty()) return default_lambda_grid();
  if (token.find(':') != std::string::npos) {
    double lo = 0, hi = 0;
    int count = 0;
    if (std::sscanf(token.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1 ||
        !(lo > 0.0) || !(hi >= lo)) {
      throw CLI::ValidationError("--lambda", "range is <lo>:<hi>:<count> with 0 < lo <= hi");
    }
    std::vector<double> grid;
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) {
      grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    }
    return grid;
  }
  std::vector<double> values;
  std::stringstream stream(token);
  std::string item;
  while (std::getline(stream, item, ',')) values.push_back(std::stod(item));
  if (values.empty()) throw CLI::ValidationError("--lambda", "empty lambda list");
  std::sort(values.begin(), values.end());
  return values;
}

struct CommonOptions {
  std::string scenario = "c";
  std::string covariates = "iso";
  std::string kernel = "gauss";
  std::string lambdas;
  int n = 300;
  int p = 50;
  double sigma_noise = 0.1;
  std::uint64_t seed = 100;
  double cap = 0.0;  // 0 = unset
  int max_iter = 2000;
  double stop_delta = 1e-3;
  double rank_rel_tol = kDefaultRankRelTol;
  double rank_abs_tol = kDefaultRankAbsTol;
  std::string config_path;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--scenario", opts.scenario, "Regression function, one of a..e")
      ->check(CLI::IsMember({"a", "b", "c", "d", "e"}));
  cmd->add_option("--covariates", opts.covariates, "iso | ar:<rho> | bernoulli | uniform");
  cmd->add_option("--kernel", opts.kernel, "gauss | mix:<w:t,...> | linear | cubic");
  cmd->add_option("--lambda", opts.lambdas,
                  "Comma list (0.5,0.7) or log range <lo>:<hi>:<count>; default is the 8-point "
                  "grid on (0, 3]");
  cmd->add_option("--n", opts.n, "Sample size")->check(CLI::PositiveNumber);
  cmd->add_option("--p", opts.p, "Ambient dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--sigma-noise", opts.sigma_noise, "Noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", opts.seed, "Base seed");
  cmd->add_option("--cap", opts.cap,
                  "Operator-norm cap M (inner-product kernels default to 100000)");
  cmd->add_option("--max-iter", opts.max_iter, "Gradient descent iteration cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--stop-delta", opts.stop_delta, "Iterate-difference stopping threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rank-rel-tol", opts.rank_rel_tol, "Relative eigenvalue cut for rank");
  cmd->add_option("--rank-abs-tol", opts.rank_abs_tol, "Absolute eigenvalue cut for rank");
  cmd->add_option("--config", opts.config_path,
                  "Flat key = value (TOML subset) file; command-line flags win");
}

// Flat TOML subset: `key = value` lines, `#` comments, quoted strings.
std::map<std::string, std::string> read_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path.string());
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    auto trim = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::string();
      const auto end = s.find_last_not_of(" \t\r");
      return s.substr(begin, end - begin + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", "line " + std::to_string(line_no) +
                                                 ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    values[key] = value;
  }
  return values;
}

// Config file values fill in everything the command line did not set.
void apply_flat_config(const CLI::App* cmd, CommonOptions& opts, int* replicates, int* workers,
                       bool* timing, std::string* out_dir) {
  if (opts.config_path.empty()) return;
  const std::map<std::string, std::string> file = read_flat_config(opts.config_path);
  auto fresh = [cmd](const std::string& flag) { return cmd->count(flag) == 0; };
  for (const auto& [key, value] : file) {
    if (key == "scenario" && fresh("--scenario")) opts.scenario = value;
    else if (key == "covariates" && fresh("--covariates")) opts.covariates = value;
    else if (key == "kernel" && fresh("--kernel")) opts.kernel = value;
    else if (key == "lambda" && fresh("--lambda")) opts.lambdas = value;
    else if (key == "n" && fresh("--n")) opts.n = std::stoi(value);
    else if (key == "p" && fresh("--p")) opts.p = std::stoi(value);
    else if (key == "sigma-noise" && fresh("--sigma-noise")) opts.sigma_noise = std::stod(value);
    else if (key == "seed" && fresh("--seed")) opts.seed = std::stoull(value);
    else if (key == "cap" && fresh("--cap")) opts.cap = std::stod(value);
    else if (key == "max-iter" && fresh("--max-iter")) opts.max_iter = std::stoi(value);
    else if (key == "stop-delta" && fresh("--stop-delta")) opts.stop_delta = std::stod(value);
    else if (key == "rank-rel-tol" && fresh("--rank-rel-tol")) opts.rank_rel_tol = std::stod(value);
    else if (key == "rank-abs-tol" && fresh("--rank-abs-tol")) opts.rank_abs_tol = std::stod(value);
    else if (key == "replicates") {
      if (replicates && fresh("--replicates")) *replicates = std::stoi(value);
    } else if (key == "workers") {
      if (workers && fresh("--workers")) *workers = std::stoi(value);
    } else if (key == "timing") {
      if (timing && fresh("--timing")) *timing = (value == "true" || value == "1");
    } else if (key == "out") {
      if (out_dir && fresh("--out")) *out_dir = value;
    } else if (key == "generator") {
      // informational, written by the echo
    } else {
      throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    }
  }
}

ScenarioSpec make_scenario(const CommonOptions& opts) {
  ScenarioSpec spec;
  spec.fn_id = opts.scenario.at(0);
  spec.covariate_law = parse_covariates(opts.covariates, spec.ar_rho);
  spec.sigma_noise = opts.sigma_noise;
  spec.n = opts.n;
  spec.p = opts.p;
  spec.seed = opts.seed;
  return spec;
}

PgdConfig make_pgd(const CommonOptions& opts) {
  PgdConfig pgd;
  pgd.max_iter = opts.max_iter;
  pgd.stop_delta = opts.stop_delta;
  if (opts.cap > 0.0) pgd.cap = opts.cap;
  return pgd;
}

void print_record(const RunRecord& rec) {
  std::printf("scenario %s  kernel %s  lambda %g  n %d  p %d  seed %llu\n", rec.scenario.c_str(),
              rec.kernel.c_str(), rec.lambda, rec.n, rec.p,
              static_cast<unsigned long long>(rec.seed));
  std::printf("  status      %s (%d iterations, %.3f s)\n", rec.status.c_str(), rec.iterations,
              rec.wall_time_s);
  std::printf("  rank        %d (dim S* = %d)\n", rec.rank, rec.dim_s_star);
  std::printf("  dist        %.6g (Frobenius, learned vs S* projector)\n", rec.subspace_dist_fro);
  std::printf("  objective   %.10g\n", rec.objective_final);
  if (rec.sharpness_rho_hat) {
    std::printf("  rho_hat     %.6g %s\n", *rec.sharpness_rho_hat,
                *rec.sharpness_rho_hat > 0 ? paint("(sharp)", "32").c_str() : "");
  }
}

void echo_effective_config(const std::string& command, const CommonOptions& opts,
                           const std::vector<double>& lambdas, const int* replicates,
                           const int* workers, const bool* timing,
                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "config_used.toml");
  out << "# effective configuration (" << command << ")\n";
  out << "generator = \"" << kGeneratorId << "\"\n";
  out << "scenario = \"" << opts.scenario << "\"\n";
  out << "covariates = \"" << opts.covariates << "\"\n";
  out << "kernel = \"" << opts.kernel << "\"\n";
  out << "lambda = \"";
  for (std::size_t i = 0; i < lambdas.size(); ++i) out << (i ? "," : "") << lambdas[i];
  out << "\"\n";
  out << "n = " << opts.n << "\n";
  out << "p = " << opts.p << "\n";
  out << "sigma-noise = " << opts.sigma_noise << "\n";
  out << "seed = " << opts.seed << "\n";
  if (opts.cap > 0.0) out << "cap = " << format_double(opts.cap) << "\n";
  out << "max-iter = " << opts.max_iter << "\n";
  out << "stop-delta = " << format_double(opts.stop_delta) << "\n";
  out << "rank-rel-tol = " << format_double(opts.rank_rel_tol) << "\n";
  out << "rank-abs-tol = " << format_double(opts.rank_abs_tol) << "\n";
  if (replicates) out << "replicates = " << *replicates << "\n";
  if (workers) out << "workers = " << *workers << "\n";
  if (timing) out << "timing = " << (*timing ? "true" : "false") << "\n";
}

int run_command(const CommonOptions& opts, const std::string& out_dir) {
  const ScenarioSpec scenario = make_scenario(opts);
  const std::vector<double> lambdas = parse_lambdas(opts.lambdas.empty() ? "1.0" : opts.lambdas);
  if (lambdas.size() != 1) {
    throw CLI::ValidationError("--lambda", "run takes a single lambda; use sweep for grids");
  }
  const RunRecord rec =
      run_single(scenario, parse_kernel(opts.kernel), lambdas.front(), make_pgd(opts),
                 {opts.rank_rel_tol, opts.rank_abs_tol});
  print_record(rec);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_records({rec}, std::filesystem::path(out_dir) / "records.csv");
    echo_effective_config("run", opts, {lambdas.front()}, nullptr, nullptr, nullptr, out_dir);
    std::printf("wrote %s/records.csv\n", out_dir.c_str());
  }
  return 0;
}

int sweep_command(const CommonOptions& opts, int replicates, int workers, bool timing,
                  const std::string& out_dir) {
  SweepConfig config;
  config.scenario = make_scenario(opts);
  config.kernel = parse_kernel(opts.kernel);
  config.lambdas = parse_lambdas(opts.lambdas);
  config.replicates = replicates;
  config.pgd = make_pgd(opts);
  config.rank_tolerances = {opts.rank_rel_tol, opts.rank_abs_tol};
  config.workers = workers;
  config.record_timing = timing;

  const std::vector<RunRecord> records = sweep(config);

  const ReportSummary summary = summarize(records);
  std::printf("%-10s %-6s %-14s %-14s %s\n", "lambda", "runs", "P(rank<=d)", "P(rank=d)",
              "mean dist");
  for (const LambdaSummary& s : summary.per_lambda) {
    std::printf("%-10g %-6d %-14g %-14g %g\n", s.lambda, s.count, s.prob_rank_le_dim,
                s.prob_rank_eq_dim, s.mean_subspace_dist);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_records(records, std::filesystem::path(out_dir) / "records.csv");
    echo_effective_config("sweep", opts, config.lambdas, &replicates, &workers, &timing, out_dir);
    std::printf("wrote %s/records.csv\n", out_dir.c_str());
  }
  return 0;
}

int gradcheck_command(const CommonOptions& opts, double step) {
  CommonOptions local = opts;
  if (local.n == 300 && local.p == 50) {
    // The experiment-scale default is wastefully large for a derivative probe.
    local.n = 40;
    local.p = 5;
  }
  const ScenarioSpec scenario = make_scenario(local);
  const Dataset data = sample(scenario);
  Rng rng(mix64(scenario.seed ^ 0x67e2a4c5u));
  Eigen::MatrixXd a(scenario.p, scenario.p);
  for (int i = 0; i < scenario.p; ++i) {
    for (int j = 0; j < scenario.p; ++j) a(i, j) = rng.next_normal();
  }
  const SymMatrix sigma(Eigen::MatrixXd::Identity(scenario.p, scenario.p) / scenario.p +
                        0.1 * (a * a.transpose()) / scenario.p);
  const double lambda = parse_lambdas(local.lambdas.empty() ? "0.5" : local.lambdas).front();
  const double err =
      gradient_check(parse_kernel(local.kernel), data, sigma, lambda, step);
  const bool ok = err <= 1e-5;
  std::printf("gradient check: n=%d p=%d kernel=%s lambda=%g step=%g\n", scenario.n, scenario.p,
              local.kernel.c_str(), lambda, step);
  std::printf("max relative error %.3e %s\n", err,
              ok ? paint("OK", "32").c_str() : paint("HIGH", "31").c_str());
  return ok ? 0 : 1;
}

int report_command(const std::string& in_path, const std::string& out_dir,
                   const std::string& scenario_filter, const std::string& kernel_filter) {
  std::vector<RunRecord> records = read_records(in_path);
  if (!scenario_filter.empty() || !kernel_filter.empty()) {
    std::vector<RunRecord> kept;
    for (RunRecord& r : records) {
      if (!scenario_filter.empty() && r.scenario != scenario_filter) continue;
      if (!kernel_filter.empty() && r.kernel != kernel_filter) continue;
      kept.push_back(std::move(r));
    }
    records = std::move(kept);
  }
  if (records.empty()) {
    std::fprintf(stderr, "no records after filtering\n");
    return 1;
  }
  const ReportSummary summary = render_report(records, out_dir);
  std::printf("report for scenario %s, kernel %s (dim S* = %d): %zu lambdas, %zu traces\n",
              summary.scenario.c_str(), summary.kernel.c_str(), summary.dim_s_star,
              summary.per_lambda.size(), summary.traces.size());
  std::printf("wrote %s/prob_lowrank.svg, rank_traces.svg, summary.csv\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kmlearn: metric learning inside kernel ridge regression"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, grad_opts;
  std::string run_out, sweep_out = "out";
  int replicates = 20;
  int workers = 1;
  bool timing = false;
  double grad_step = 1e-5;
  std::string report_in, report_out = "out", report_scenario, report_kernel;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one (scenario, kernel, lambda) cell");
  add_common_options(run_cmd, run_opts);
  run_cmd->add_option("--out", run_out, "Directory for records.csv and the effective config");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a replicate x lambda grid");
  add_common_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--replicates", replicates, "Repeated samples of (X, y)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--timing", timing,
                      "Record wall times (breaks byte-identical output across runs)");
  sweep_cmd->add_option("--out", sweep_out, "Output directory");

  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "Compare the gradient against finite differences");
  add_common_options(grad_cmd, grad_opts);
  grad_cmd->add_option("--step", grad_step, "Finite-difference step")->check(CLI::PositiveNumber);

  CLI::App* report_cmd = app.add_subcommand("report", "Render SVG plots from a records CSV");
  report_cmd->add_option("--in", report_in, "records.csv produced by sweep")->required();
  report_cmd->add_option("--out", report_out, "Output directory");
  report_cmd->add_option("--scenario-id", report_scenario, "Keep only this scenario id");
  report_cmd->add_option("--kernel-id", report_kernel, "Keep only this kernel id");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      apply_flat_config(run_cmd, run_opts, nullptr, nullptr, nullptr, &run_out);
      return run_command(run_opts, run_out);
    }
    if (sweep_cmd->parsed()) {
      apply_flat_config(sweep_cmd, sweep_opts, &replicates, &workers, &timing, &sweep_out);
      return sweep_command(sweep_opts, replicates, workers, timing, sweep_out);
    }
    if (grad_cmd->parsed()) {
      apply_flat_config(grad_cmd, grad_opts, nullptr, nullptr, nullptr, nullptr);
      return gradcheck_command(grad_opts, grad_step);
    }
    if (report_cmd->parsed()) {
      return report_command(report_in, report_out, report_scenario, report_kernel);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
