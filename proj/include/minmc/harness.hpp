#pragma once
/**
 * @file harness.hpp
 * @brief Config-driven replication of the case studies.
 *
 * A case study is a grid over (lambda, M) with `reps` repetitions per cell.
 * Every cell draws a fresh budget-audited sample set, fits the configured
 * estimator and records the grid MSE against the benchmark surface
 * (analytic for Black-Scholes, Monte Carlo otherwise). Quantile summaries,
 * a price curve (1-d) and a heatmap (2-d) can be exported as CSV plus a
 * full JSON report. Identical config + seed reproduces identical bytes.
 */

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minmc/estimators.hpp"
#include "minmc/models.hpp"
#include "minmc/sampling.hpp"

namespace minmc {

struct EstimatorSpec {
  enum class Kind { Krr, RfRidge, Mlp };
  Kind kind = Kind::RfRidge;

  // Krr
  std::optional<Kernel> kernel;

  // RfRidge
  int feature_count = 512;
  NodeDistribution node_distribution = NodeDistribution::gaussian();
  std::uint64_t node_seed = 2024;

  // Mlp
  TrainConfig train;

  void validate() const;
  nlohmann::json to_json() const;
  static EstimatorSpec from_json(const nlohmann::json& j);
};

struct BenchmarkSpec {
  enum class Kind { Analytic, MonteCarlo };
  Kind kind = Kind::Analytic;
  long n_sims = 100000;

  nlohmann::json to_json() const;
  static BenchmarkSpec from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
  ModelSpec model = ModelSpec::black_scholes(BsSpec{});
  ParamSpace space = ParamSpace::interval(0.0, 1.0, 100);
  EstimatorSpec estimator;
  std::vector<double> lambdas = {0.0};
  std::vector<int> ms = {1};
  /// Fixed per-fit sample count; ignored when budget > 0.
  long n = 1000;
  /// Fixed total budget M*N per cell; every M must divide it.
  long budget = 0;
  int reps = 1;
  BenchmarkSpec benchmark;
  std::uint64_t seed = 1;
  /// When > 0 and the model is 1-d analytic, exports an equidistant price
  /// curve with this many points (first lambda, first M, rep 0).
  int curve_points = 0;
  /// When true and the space is 2-d, exports fit-vs-benchmark on the grid.
  bool heatmap = false;

  long samples_for(int m) const;
  void validate() const;
  nlohmann::json to_json() const;
  /// Strict parser: unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Benchmark surface on a parameter grid with per-point standard errors
/// (zero for the analytic benchmark, NaN when n_sims == 1).
struct BenchmarkGrid {
  Eigen::MatrixXd points;
  Eigen::VectorXd values;
  Eigen::VectorXd std_errors;
};

/// Per grid point, the mean of n_sims i.i.d. payoffs under P_theta.
/// Grid points own derived streams, so results are thread-count invariant.
BenchmarkGrid mc_benchmark_grid(const ModelSpec& model,
                                const Eigen::MatrixXd& grid, long n_sims,
                                RngStream& rng, int threads = 1);

/// Analytic benchmark (Black-Scholes only).
BenchmarkGrid analytic_benchmark_grid(const ModelSpec& model,
                                      const Eigen::MatrixXd& grid);

/// Mean over grid points of (predict - benchmark)^2.
double grid_mse(const EstimatorFit& fit, const BenchmarkGrid& benchmark);

/// The classical per-theta Monte Carlo baseline: per_point_samples draws at
/// every grid point, grid MSE of the resulting point estimates.
double mc_baseline_mse(const ModelSpec& model, const BenchmarkGrid& benchmark,
                       long per_point_samples, RngStream& rng);

struct ExperimentCell {
  double lambda = 0.0;
  int m = 1;
  int rep = 0;
  double mse = 0.0;
  std::uint64_t payoff_draws = 0;
  bool ok = false;
  std::string error;
};

struct SummaryRow {
  double lambda = 0.0;
  int m = 1;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  int completed = 0;
};

struct ExperimentReport {
  nlohmann::json config_echo;
  std::vector<ExperimentCell> raw;
  std::vector<SummaryRow> summary;
  BenchmarkGrid benchmark;
  /// Optional curve (theta, fit, reference), row-per-point.
  std::vector<std::array<double, 3>> curve;
  /// Optional heatmap rows (theta_1, theta_2, fit, benchmark).
  std::vector<std::array<double, 4>> heatmap;

  /// Recomputes summary rows from raw cells (bit-stable).
  void compute_summaries(const std::vector<double>& lambdas,
                         const std::vector<int>& ms);
  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

ExperimentReport run_case_study(const ExperimentConfig& config,
                                int threads = 1);

enum class ExportFormat { Csv, Json };

/// CSV: mse_raw.csv, mse_summary.csv, optional curve.csv / heatmap.csv.
/// JSON: report.json (full nested report). Byte-stable given the report.
void export_report(const ExperimentReport& report,
                   const std::filesystem::path& out_dir, ExportFormat format);

}  // namespace minmc
