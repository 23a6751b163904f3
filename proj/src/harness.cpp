#include "minmc/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "minmc/parallel.hpp"
#include "minmc/stats.hpp"

namespace minmc {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double num_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument("unknown key \"" + it.key() + "\" in " +
                                  where);
    }
  }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd();
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = j.at(static_cast<std::size_t>(i))
                    .at(static_cast<std::size_t>(c))
                    .get<double>();
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num_or_null(v[i]));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = num_from(j.at(static_cast<std::size_t>(i)));
  }
  return v;
}

}  // namespace

void EstimatorSpec::validate() const {
  switch (kind) {
    case Kind::Krr:
      if (!kernel) {
        throw std::invalid_argument("EstimatorSpec: krr requires a kernel");
      }
      break;
    case Kind::RfRidge:
      if (feature_count < 1) {
        throw std::invalid_argument(
            "EstimatorSpec: feature_count must be >= 1");
      }
      break;
    case Kind::Mlp:
      train.validate();
      break;
  }
}

nlohmann::json EstimatorSpec::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::Krr:
      j["kind"] = "krr";
      j["kernel"] = kernel->to_json();
      break;
    case Kind::RfRidge:
      j["kind"] = "rf_ridge";
      j["feature_count"] = feature_count;
      j["node_distribution"] = node_distribution.to_json();
      j["node_seed"] = node_seed;
      break;
    case Kind::Mlp:
      j["kind"] = "mlp";
      j["train"] = train.to_json();
      break;
  }
  return j;
}

EstimatorSpec EstimatorSpec::from_json(const nlohmann::json& j) {
  EstimatorSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "krr") {
    check_keys(j, {"kind", "kernel"}, "estimator");
    spec.kind = Kind::Krr;
    spec.kernel = Kernel::from_json(j.at("kernel"));
  } else if (kind == "rf_ridge") {
    check_keys(j, {"kind", "feature_count", "node_distribution", "node_seed"},
               "estimator");
    spec.kind = Kind::RfRidge;
    spec.feature_count = j.value("feature_count", spec.feature_count);
    if (j.contains("node_distribution")) {
      spec.node_distribution =
          NodeDistribution::from_json(j.at("node_distribution"));
    }
    spec.node_seed = j.value("node_seed", spec.node_seed);
  } else if (kind == "mlp") {
    check_keys(j, {"kind", "train"}, "estimator");
    spec.kind = Kind::Mlp;
    if (j.contains("train")) {
      spec.train = TrainConfig::from_json(j.at("train"));
    }
  } else {
    throw std::invalid_argument("unknown estimator kind: " + kind);
  }
  spec.validate();
  return spec;
}

nlohmann::json BenchmarkSpec::to_json() const {
  if (kind == Kind::Analytic) {
    return {{"kind", "analytic"}};
  }
  return {{"kind", "mc"}, {"n_sims", n_sims}};
}

BenchmarkSpec BenchmarkSpec::from_json(const nlohmann::json& j) {
  BenchmarkSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "analytic") {
    check_keys(j, {"kind"}, "benchmark");
    spec.kind = Kind::Analytic;
  } else if (kind == "mc") {
    check_keys(j, {"kind", "n_sims"}, "benchmark");
    spec.kind = Kind::MonteCarlo;
    spec.n_sims = j.at("n_sims").get<long>();
    if (spec.n_sims < 1) {
      throw std::invalid_argument("benchmark: n_sims must be >= 1");
    }
  } else {
    throw std::invalid_argument("unknown benchmark kind: " + kind);
  }
  return spec;
}

long ExperimentConfig::samples_for(int m) const {
  if (budget > 0) {
    return budget / m;
  }
  return n;
}

void ExperimentConfig::validate() const {
  space.validate();
  estimator.validate();
  if (lambdas.empty()) {
    throw std::invalid_argument("ExperimentConfig: lambdas must be non-empty");
  }
  for (double l : lambdas) {
    if (l < 0.0) {
      throw std::invalid_argument("ExperimentConfig: lambdas must be >= 0");
    }
  }
  if (ms.empty()) {
    throw std::invalid_argument("ExperimentConfig: ms must be non-empty");
  }
  for (int m : ms) {
    if (m < 1) {
      throw std::invalid_argument("ExperimentConfig: M values must be >= 1");
    }
    if (budget > 0 && budget % m != 0) {
      throw std::invalid_argument(
          "ExperimentConfig: budget must be divisible by every M");
    }
  }
  if (budget == 0 && n < 1) {
    throw std::invalid_argument("ExperimentConfig: n must be >= 1");
  }
  if (budget < 0) {
    throw std::invalid_argument("ExperimentConfig: budget must be >= 0");
  }
  if (reps < 1) {
    throw std::invalid_argument("ExperimentConfig: reps must be >= 1");
  }
  if (space.dims() != model.param_dim()) {
    throw std::invalid_argument("ExperimentConfig: space/model dim mismatch");
  }
  if (benchmark.kind == BenchmarkSpec::Kind::Analytic &&
      !model.has_analytic_price()) {
    throw std::invalid_argument(
        "ExperimentConfig: analytic benchmark requires an analytic model");
  }
  if (curve_points > 0 &&
      (space.dims() != 1 || !model.has_analytic_price())) {
    throw std::invalid_argument(
        "ExperimentConfig: curve export needs a 1-d analytic model");
  }
  if (heatmap && space.dims() != 2) {
    throw std::invalid_argument(
        "ExperimentConfig: heatmap export needs a 2-d space");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"model", model.to_json()},
          {"space", space.to_json()},
          {"estimator", estimator.to_json()},
          {"lambdas", lambdas},
          {"ms", ms},
          {"n", n},
          {"budget", budget},
          {"reps", reps},
          {"benchmark", benchmark.to_json()},
          {"seed", seed},
          {"curve_points", curve_points},
          {"heatmap", heatmap}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  check_keys(j,
             {"model", "space", "estimator", "lambdas", "ms", "n", "budget",
              "reps", "benchmark", "seed", "curve_points", "heatmap"},
             "experiment config");
  ExperimentConfig config;
  config.model = ModelSpec::from_json(j.at("model"));
  config.space = ParamSpace::from_json(j.at("space"));
  config.estimator = EstimatorSpec::from_json(j.at("estimator"));
  config.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (j.contains("ms")) config.ms = j.at("ms").get<std::vector<int>>();
  config.n = j.value("n", config.n);
  config.budget = j.value("budget", config.budget);
  config.reps = j.value("reps", config.reps);
  if (j.contains("benchmark")) {
    config.benchmark = BenchmarkSpec::from_json(j.at("benchmark"));
  }
  config.seed = j.value("seed", config.seed);
  config.curve_points = j.value("curve_points", config.curve_points);
  config.heatmap = j.value("heatmap", config.heatmap);
  config.validate();
  return config;
}

BenchmarkGrid mc_benchmark_grid(const ModelSpec& model,
                                const Eigen::MatrixXd& grid, long n_sims,
                                RngStream& rng, int threads) {
  if (n_sims < 1) {
    throw std::invalid_argument("mc_benchmark_grid: n_sims must be >= 1");
  }
  BenchmarkGrid out;
  out.points = grid;
  out.values.resize(grid.rows());
  out.std_errors.resize(grid.rows());

  const RngStream base = rng;
  parallel_for_index(grid.rows(), threads, [&](std::int64_t i) {
    RngStream point_rng = base.substream(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd theta = grid.row(i).transpose();
    double m1 = 0.0, m2 = 0.0;
    for (long k = 0; k < n_sims; ++k) {
      const double y = model.sample_payoff(theta, point_rng);
      m1 += y;
      m2 += y * y;
    }
    const double nd = static_cast<double>(n_sims);
    m1 /= nd;
    m2 /= nd;
    out.values[i] = m1;
    out.std_errors[i] =
        n_sims > 1 ? std::sqrt(std::max(m2 - m1 * m1, 0.0) / (nd - 1.0))
                   : std::numeric_limits<double>::quiet_NaN();
  });
  return out;
}

BenchmarkGrid analytic_benchmark_grid(const ModelSpec& model,
                                      const Eigen::MatrixXd& grid) {
  if (!model.has_analytic_price()) {
    throw std::invalid_argument(
        "analytic_benchmark_grid: model has no closed form");
  }
  BenchmarkGrid out;
  out.points = grid;
  out.values.resize(grid.rows());
  out.std_errors = Eigen::VectorXd::Zero(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    out.values[i] = model.analytic_price(grid.row(i).transpose());
  }
  return out;
}

double grid_mse(const EstimatorFit& fit, const BenchmarkGrid& benchmark) {
  if (benchmark.points.rows() != benchmark.values.size() ||
      benchmark.values.size() == 0) {
    throw std::invalid_argument("grid_mse: malformed benchmark grid");
  }
  const Eigen::VectorXd fitted = predict_many(fit, benchmark.points);
  return (fitted - benchmark.values).squaredNorm() /
         static_cast<double>(benchmark.values.size());
}

double mc_baseline_mse(const ModelSpec& model, const BenchmarkGrid& benchmark,
                       long per_point_samples, RngStream& rng) {
  if (per_point_samples < 1) {
    throw std::invalid_argument(
        "mc_baseline_mse: per_point_samples must be >= 1");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < benchmark.points.rows(); ++i) {
    RngStream point_rng = rng.substream(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd theta = benchmark.points.row(i).transpose();
    double m1 = 0.0;
    for (long k = 0; k < per_point_samples; ++k) {
      m1 += model.sample_payoff(theta, point_rng);
    }
    m1 /= static_cast<double>(per_point_samples);
    const double diff = m1 - benchmark.values[i];
    acc += diff * diff;
  }
  return acc / static_cast<double>(benchmark.points.rows());
}

void ExperimentReport::compute_summaries(const std::vector<double>& lambdas,
                                         const std::vector<int>& ms) {
  summary.clear();
  for (double lambda : lambdas) {
    for (int m : ms) {
      std::vector<double> mses;
      for (const auto& cell : raw) {
        if (cell.ok && cell.lambda == lambda && cell.m == m) {
          mses.push_back(cell.mse);
        }
      }
      SummaryRow row;
      row.lambda = lambda;
      row.m = m;
      row.completed = static_cast<int>(mses.size());
      if (!mses.empty()) {
        row.q25 = quantile(mses, 0.25);
        row.median = quantile(mses, 0.5);
        row.q75 = quantile(mses, 0.75);
      } else {
        row.q25 = row.median = row.q75 =
            std::numeric_limits<double>::quiet_NaN();
      }
      summary.push_back(row);
    }
  }
}

ExperimentReport run_case_study(const ExperimentConfig& config, int threads) {
  config.validate();

  ExperimentReport report;
  report.config_echo = config.to_json();

  const RngStream base(config.seed);

  // Benchmark surface.
  const Eigen::MatrixXd grid = config.space.grid();
  if (config.benchmark.kind == BenchmarkSpec::Kind::Analytic) {
    report.benchmark = analytic_benchmark_grid(config.model, grid);
  } else {
    RngStream bench_rng = base.substream(0xB0B0ULL);
    report.benchmark = mc_benchmark_grid(config.model, grid,
                                         config.benchmark.n_sims, bench_rng,
                                         threads);
  }

  // Shared estimator state.
  std::optional<FeatureNodes> rf_nodes;
  if (config.estimator.kind == EstimatorSpec::Kind::RfRidge) {
    rf_nodes = FeatureNodes::generate(
        config.model.param_dim(), config.estimator.feature_count,
        config.estimator.node_distribution, config.estimator.node_seed);
  }

  const auto n_lambdas = config.lambdas.size();
  const auto n_ms = config.ms.size();
  const auto cells =
      static_cast<std::int64_t>(n_lambdas) * static_cast<std::int64_t>(n_ms) *
      config.reps;
  report.raw.resize(static_cast<std::size_t>(cells));

  parallel_for_index(cells, threads, [&](std::int64_t index) {
    const auto rep = static_cast<int>(index % config.reps);
    const auto mi = static_cast<std::size_t>((index / config.reps) %
                                             static_cast<std::int64_t>(n_ms));
    const auto li = static_cast<std::size_t>(
        index / (config.reps * static_cast<std::int64_t>(n_ms)));

    ExperimentCell cell;
    cell.lambda = config.lambdas[li];
    cell.m = config.ms[mi];
    cell.rep = rep;

    try {
      const long n_samples = config.samples_for(cell.m);
      RngStream cell_rng = base.substream(0xCE11ULL + static_cast<std::uint64_t>(index));
      RngStream theta_rng = cell_rng.substream(0);
      RngStream payoff_rng = cell_rng.substream(1);

      const Eigen::MatrixXd thetas =
          draw_thetas(config.space, static_cast<int>(n_samples), theta_rng);
      const SampleSet samples =
          build_samples(config.model, thetas, cell.m, payoff_rng);
      cell.payoff_draws = samples.payoff_draws;
      if (cell.payoff_draws !=
          static_cast<std::uint64_t>(cell.m) *
              static_cast<std::uint64_t>(n_samples)) {
        throw std::logic_error("budget audit failed: draws != M*N");
      }

      EstimatorFit fit = [&]() -> EstimatorFit {
        switch (config.estimator.kind) {
          case EstimatorSpec::Kind::Krr:
            return krr_fit(*config.estimator.kernel, samples, cell.lambda);
          case EstimatorSpec::Kind::RfRidge:
            return rf_ridge_fit(*rf_nodes, samples, cell.lambda);
          case EstimatorSpec::Kind::Mlp: {
            TrainConfig train = config.estimator.train;
            train.lambda = cell.lambda;
            train.shuffle_seed = cell_rng.substream(3).next_u64();
            RngStream init_rng = cell_rng.substream(2);
            return mlp_fit(samples, train, init_rng);
          }
        }
        throw std::logic_error("unknown estimator kind");
      }();

      cell.mse = grid_mse(fit, report.benchmark);
      cell.ok = true;

      // First cell exports the curve / heatmap surfaces.
      if (li == 0 && mi == 0 && rep == 0) {
        if (config.curve_points > 0) {
          const auto& [lo, hi] = config.space.bounds[0];
          const std::vector<double> line =
              linspace(lo, hi, config.curve_points);
          for (double t : line) {
            Eigen::VectorXd theta(1);
            theta[0] = t;
            report.curve.push_back(
                {t, predict(fit, theta), config.model.analytic_price(theta)});
          }
        }
        if (config.heatmap) {
          const Eigen::VectorXd fitted =
              predict_many(fit, report.benchmark.points);
          for (Eigen::Index g = 0; g < report.benchmark.points.rows(); ++g) {
            report.heatmap.push_back({report.benchmark.points(g, 0),
                                      report.benchmark.points(g, 1), fitted[g],
                                      report.benchmark.values[g]});
          }
        }
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      cell.mse = std::numeric_limits<double>::quiet_NaN();
    }
    report.raw[static_cast<std::size_t>(index)] = std::move(cell);
  });

  report.compute_summaries(config.lambdas, config.ms);
  return report;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = config_echo;

  nlohmann::json raw_json = nlohmann::json::array();
  for (const auto& cell : raw) {
    raw_json.push_back({{"lambda", cell.lambda},
                        {"m", cell.m},
                        {"rep", cell.rep},
                        {"mse", num_or_null(cell.mse)},
                        {"payoff_draws", cell.payoff_draws},
                        {"ok", cell.ok},
                        {"error", cell.error}});
  }
  j["raw"] = std::move(raw_json);

  nlohmann::json summary_json = nlohmann::json::array();
  for (const auto& row : summary) {
    summary_json.push_back({{"lambda", row.lambda},
                            {"m", row.m},
                            {"q25", num_or_null(row.q25)},
                            {"median", num_or_null(row.median)},
                            {"q75", num_or_null(row.q75)},
                            {"completed", row.completed}});
  }
  j["summary"] = std::move(summary_json);

  j["benchmark"] = {{"points", matrix_to_json(benchmark.points)},
                    {"values", vector_to_json(benchmark.values)},
                    {"std_errors", vector_to_json(benchmark.std_errors)}};

  nlohmann::json curve_json = nlohmann::json::array();
  for (const auto& row : curve) {
    curve_json.push_back({row[0], row[1], row[2]});
  }
  j["curve"] = std::move(curve_json);

  nlohmann::json heatmap_json = nlohmann::json::array();
  for (const auto& row : heatmap) {
    heatmap_json.push_back({row[0], row[1], row[2], row[3]});
  }
  j["heatmap"] = std::move(heatmap_json);
  return j;
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  ExperimentReport report;
  report.config_echo = j.at("config");
  for (const auto& cj : j.at("raw")) {
    ExperimentCell cell;
    cell.lambda = cj.at("lambda").get<double>();
    cell.m = cj.at("m").get<int>();
    cell.rep = cj.at("rep").get<int>();
    cell.mse = num_from(cj.at("mse"));
    cell.payoff_draws = cj.at("payoff_draws").get<std::uint64_t>();
    cell.ok = cj.at("ok").get<bool>();
    cell.error = cj.at("error").get<std::string>();
    report.raw.push_back(std::move(cell));
  }
  for (const auto& sj : j.at("summary")) {
    SummaryRow row;
    row.lambda = sj.at("lambda").get<double>();
    row.m = sj.at("m").get<int>();
    row.q25 = num_from(sj.at("q25"));
    row.median = num_from(sj.at("median"));
    row.q75 = num_from(sj.at("q75"));
    row.completed = sj.at("completed").get<int>();
    report.summary.push_back(row);
  }
  const auto& bj = j.at("benchmark");
  report.benchmark.points = matrix_from_json(bj.at("points"));
  report.benchmark.values = vector_from_json(bj.at("values"));
  report.benchmark.std_errors = vector_from_json(bj.at("std_errors"));
  for (const auto& cj : j.at("curve")) {
    report.curve.push_back({cj.at(0).get<double>(), cj.at(1).get<double>(),
                            cj.at(2).get<double>()});
  }
  for (const auto& hj : j.at("heatmap")) {
    report.heatmap.push_back({hj.at(0).get<double>(), hj.at(1).get<double>(),
                              hj.at(2).get<double>(), hj.at(3).get<double>()});
  }
  return report;
}

void export_report(const ExperimentReport& report,
                   const std::filesystem::path& out_dir, ExportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("export_report: cannot create directory " +
                             out_dir.string() + ": " + ec.message());
  }

  auto open = [&](const char* name) {
    std::ofstream os(out_dir / name);
    if (!os) {
      throw std::runtime_error("export_report: cannot open " +
                               (out_dir / name).string());
    }
    return os;
  };

  if (format == ExportFormat::Json) {
    auto os = open("report.json");
    os << report.to_json().dump(2) << "\n";
    return;
  }

  {
    auto os = open("mse_raw.csv");
    os << "lambda,m,rep,mse\n";
    for (const auto& cell : report.raw) {
      os << fmt17(cell.lambda) << "," << cell.m << "," << cell.rep << ","
         << fmt17(cell.mse) << "\n";
    }
  }
  {
    auto os = open("mse_summary.csv");
    os << "lambda,m,q25,median,q75\n";
    for (const auto& row : report.summary) {
      os << fmt17(row.lambda) << "," << row.m << "," << fmt17(row.q25) << ","
         << fmt17(row.median) << "," << fmt17(row.q75) << "\n";
    }
  }
  if (!report.curve.empty()) {
    auto os = open("curve.csv");
    os << "theta_1,price_fit,price_ref\n";
    for (const auto& row : report.curve) {
      os << fmt17(row[0]) << "," << fmt17(row[1]) << "," << fmt17(row[2])
         << "\n";
    }
  }
  if (!report.heatmap.empty()) {
    auto os = open("heatmap.csv");
    os << "theta_1,theta_2,price_fit,price_benchmark\n";
    for (const auto& row : report.heatmap) {
      os << fmt17(row[0]) << "," << fmt17(row[1]) << "," << fmt17(row[2])
         << "," << fmt17(row[3]) << "\n";
    }
  }
}

}  // namespace minmc
