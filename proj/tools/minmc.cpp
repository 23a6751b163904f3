// Command-line front end: fit surfaces, run case studies, build benchmark
// grids, run the theory-check suite and export price curves.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "minmc/harness.hpp"
#include "minmc/stats.hpp"
#include "minmc/theory_checks.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  nlohmann::json j;
  is >> j;
  return j;
}

minmc::ExperimentConfig load_config(const std::string& path,
                                    std::uint64_t seed_override,
                                    bool has_seed_override) {
  auto config = minmc::ExperimentConfig::from_json(load_json(path));
  if (has_seed_override) {
    config.seed = seed_override;
  }
  return config;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MinMC: parameter-dependent Monte Carlo via regularized "
               "quadratic minimization"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  std::string out_dir = ".";
  std::string format = "csv";
  app.add_option("--seed", seed, "Override the config seed")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--threads", threads, "Worker threads (default: hardware)");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--format", format, "Export format")
      ->check(CLI::IsMember({"csv", "json"}));

  // --- fit ---
  auto* fit_cmd = app.add_subcommand("fit", "Run one fit and save the artifact");
  std::string fit_config_path;
  std::string fit_out = "fit.json";
  double fit_lambda = -1.0;
  long fit_n = 0;
  int fit_m = 0;
  fit_cmd->add_option("--config", fit_config_path, "Experiment config JSON")
      ->required();
  fit_cmd->add_option("--out", fit_out, "Artifact path");
  fit_cmd->add_option("--lambda", fit_lambda,
                      "Ridge level (default: first config lambda)");
  fit_cmd->add_option("--n", fit_n, "Sample count (default: config n)");
  fit_cmd->add_option("--m", fit_m, "Pre-average width (default: first config M)");

  // --- case-study ---
  auto* study_cmd =
      app.add_subcommand("case-study", "Run a full case study from config");
  std::string study_config_path;
  study_cmd->add_option("--config", study_config_path, "Experiment config JSON")
      ->required();

  // --- benchmark ---
  auto* bench_cmd =
      app.add_subcommand("benchmark", "Monte Carlo benchmark grid to CSV");
  std::string bench_config_path;
  long bench_sims = 0;
  bench_cmd->add_option("--config", bench_config_path, "Experiment config JSON")
      ->required();
  bench_cmd->add_option("--n-sims", bench_sims,
                        "Simulations per grid point (default: config)");

  // --- theory-check ---
  auto* theory_cmd =
      app.add_subcommand("theory-check", "Run the theory-check suite");
  int fuzz_instances = 100;
  std::uint64_t theory_seed = 20240901;
  theory_cmd->add_option("--instances", fuzz_instances,
                         "Fuzz instances per check");
  theory_cmd->add_option("--check-seed", theory_seed, "Suite seed");

  // --- curve ---
  auto* curve_cmd =
      app.add_subcommand("curve", "Price curve for a saved fit artifact");
  std::string curve_fit_path;
  std::string curve_config_path;
  int curve_points = 500;
  double curve_lo = 0.0, curve_hi = 1.0;
  bool curve_range_given = false;
  curve_cmd->add_option("--fit", curve_fit_path, "Fit artifact")->required();
  curve_cmd->add_option("--config", curve_config_path,
                        "Config supplying the reference model (optional)");
  curve_cmd->add_option("--points", curve_points, "Curve resolution");
  curve_cmd->add_option("--lo", curve_lo, "Lower theta bound")
      ->each([&](const std::string&) { curve_range_given = true; });
  curve_cmd->add_option("--hi", curve_hi, "Upper theta bound");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads < 1) threads = 1;
    const std::filesystem::path out_path(out_dir);

    if (*fit_cmd) {
      auto config = load_config(fit_config_path, seed, seed_given);
      const double lambda =
          fit_lambda >= 0.0 ? fit_lambda : config.lambdas.front();
      const int m = fit_m > 0 ? fit_m : config.ms.front();
      const long n = fit_n > 0 ? fit_n : config.samples_for(m);

      minmc::RngStream rng(config.seed);
      minmc::RngStream theta_rng = rng.substream(0);
      minmc::RngStream payoff_rng = rng.substream(1);
      const Eigen::MatrixXd thetas =
          minmc::draw_thetas(config.space, static_cast<int>(n), theta_rng);
      const minmc::SampleSet samples =
          minmc::build_samples(config.model, thetas, m, payoff_rng);

      minmc::FitArtifact artifact;
      artifact.n = n;
      artifact.m = m;
      artifact.lambda = lambda;
      artifact.seed = config.seed;
      switch (config.estimator.kind) {
        case minmc::EstimatorSpec::Kind::Krr:
          artifact.fit =
              minmc::krr_fit(*config.estimator.kernel, samples, lambda);
          break;
        case minmc::EstimatorSpec::Kind::RfRidge: {
          const auto nodes = minmc::FeatureNodes::generate(
              config.model.param_dim(), config.estimator.feature_count,
              config.estimator.node_distribution, config.estimator.node_seed);
          artifact.fit = minmc::rf_ridge_fit(nodes, samples, lambda);
          break;
        }
        case minmc::EstimatorSpec::Kind::Mlp: {
          minmc::TrainConfig train = config.estimator.train;
          train.lambda = lambda;
          minmc::RngStream init_rng = rng.substream(2);
          artifact.fit = minmc::mlp_fit(samples, train, init_rng);
          break;
        }
      }
      std::filesystem::create_directories(out_path);
      minmc::save_fit(artifact, out_path / fit_out);
      std::cout << "saved " << (out_path / fit_out).string() << "\n";
      return 0;
    }

    if (*study_cmd) {
      auto config = load_config(study_config_path, seed, seed_given);
      const auto report = minmc::run_case_study(config, threads);
      minmc::export_report(report, out_path,
                           format == "json" ? minmc::ExportFormat::Json
                                            : minmc::ExportFormat::Csv);
      // report.json always accompanies the CSVs for reproducibility.
      if (format == "csv") {
        minmc::export_report(report, out_path, minmc::ExportFormat::Json);
      }
      for (const auto& row : report.summary) {
        std::cout << "lambda=" << row.lambda << " M=" << row.m
                  << " median=" << row.median << " q25=" << row.q25
                  << " q75=" << row.q75 << " (" << row.completed << " reps)\n";
      }
      return 0;
    }

    if (*bench_cmd) {
      auto config = load_config(bench_config_path, seed, seed_given);
      const long sims = bench_sims > 0 ? bench_sims : config.benchmark.n_sims;
      minmc::RngStream rng(config.seed, 0xB0B0ULL);
      const auto grid = config.space.grid();
      const auto bench =
          minmc::mc_benchmark_grid(config.model, grid, sims, rng, threads);

      std::filesystem::create_directories(out_path);
      std::ofstream os(out_path / "benchmark.csv");
      for (Eigen::Index c = 0; c < grid.cols(); ++c) {
        os << "theta_" << (c + 1) << ",";
      }
      os << "value,std_error\n";
      for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index c = 0; c < grid.cols(); ++c) {
          os << fmt17(bench.points(i, c)) << ",";
        }
        os << fmt17(bench.values[i]) << "," << fmt17(bench.std_errors[i])
           << "\n";
      }
      std::cout << "wrote " << (out_path / "benchmark.csv").string() << "\n";
      return 0;
    }

    if (*theory_cmd) {
      const auto suite = minmc::run_appendix_suite(
          fuzz_instances, seed_given ? seed : theory_seed);
      std::cout << suite.to_json().dump(2) << "\n";
      return suite.all_pass() ? 0 : 1;
    }

    if (*curve_cmd) {
      const auto artifact = minmc::load_fit(curve_fit_path);
      std::optional<minmc::ModelSpec> model;
      if (!curve_config_path.empty()) {
        const auto config = load_config(curve_config_path, seed, seed_given);
        model = config.model;
        if (!curve_range_given) {
          curve_lo = config.space.bounds[0].first;
          curve_hi = config.space.bounds[0].second;
        }
      }
      std::filesystem::create_directories(out_path);
      std::ofstream os(out_path / "curve.csv");
      os << "theta_1,price_fit,price_ref\n";
      const auto line = minmc::linspace(curve_lo, curve_hi, curve_points);
      for (double t : line) {
        Eigen::VectorXd theta(1);
        theta[0] = t;
        const double ref = model && model->has_analytic_price()
                               ? model->analytic_price(theta)
                               : std::numeric_limits<double>::quiet_NaN();
        os << fmt17(t) << "," << fmt17(minmc::predict(artifact.fit, theta))
           << "," << fmt17(ref) << "\n";
      }
      std::cout << "wrote " << (out_path / "curve.csv").string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
