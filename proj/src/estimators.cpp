#include "minmc/estimators.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace minmc {

namespace {
constexpr Eigen::Index kRowChunk = 4096;
}

double KrrFit::predict(const Eigen::VectorXd& theta) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    acc += alpha[i] * kernel.eval(anchors.row(i).transpose(), theta);
  }
  return acc;
}

double krr_predict(const KrrFit& fit, const Eigen::VectorXd& theta) {
  return fit.predict(theta);
}

KrrFit krr_fit(const Kernel& kernel, const SampleSet& samples, double lambda) {
  samples.validate();
  if (lambda < 0.0) {
    throw std::invalid_argument("krr_fit: lambda must be >= 0");
  }
  const Eigen::Index n = samples.size();
  Eigen::MatrixXd system = kernel.gram(samples.thetas).entries();
  system.diagonal().array() += static_cast<double>(n) * lambda;

  Eigen::VectorXd alpha;
  try {
    alpha = solve_spd(system, samples.xs);
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError(
        "krr_fit: Gram system is singular; add a positive ridge (lambda > 0)");
  }

  KrrFit fit{kernel, samples.thetas, std::move(alpha), lambda};
  return fit;
}

double RfFit::predict(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd pt(1, theta.size());
  pt.row(0) = theta.transpose();
  return (feature_matrix(nodes, pt) * weights)(0);
}

Eigen::VectorXd RfFit::predict_many(const Eigen::MatrixXd& points) const {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index start = 0; start < points.rows(); start += kRowChunk) {
    const Eigen::Index rows = std::min(kRowChunk, points.rows() - start);
    out.segment(start, rows) =
        feature_matrix(nodes, points.middleRows(start, rows)) * weights;
  }
  return out;
}

RfFit rf_ridge_fit(const FeatureNodes& nodes, const SampleSet& samples,
                   double lambda) {
  return detail::rf_ridge_fit_with(nodes, samples, lambda,
                                   [](double v) { return std::tanh(v); });
}

namespace detail {

RfFit rf_ridge_fit_with(const FeatureNodes& nodes, const SampleSet& samples,
                        double lambda, double (*activation)(double)) {
  samples.validate();
  if (lambda < 0.0) {
    throw std::invalid_argument("rf_ridge_fit: lambda must be >= 0");
  }
  const Eigen::Index n = samples.size();
  const Eigen::Index d_eff =
      static_cast<Eigen::Index>(nodes.count()) * nodes.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Normal equations assembled in row chunks to bound memory:
  //   (A^T A / N + (lambda/D) I) g = A^T x / N.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d_eff, d_eff);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d_eff);
  for (Eigen::Index start = 0; start < n; start += kRowChunk) {
    const Eigen::Index rows = std::min(kRowChunk, n - start);
    const Eigen::MatrixXd chunk = feature_matrix_with(
        nodes, samples.thetas.middleRows(start, rows), activation);
    s.selfadjointView<Eigen::Lower>().rankUpdate(chunk.transpose(), inv_n);
    rhs.noalias() += chunk.transpose() * samples.xs.segment(start, rows) * inv_n;
  }
  s = s.selfadjointView<Eigen::Lower>();
  s.diagonal().array() += lambda / static_cast<double>(nodes.count());

  RfFit fit{nodes, solve_spd(s, rhs), lambda};
  fit.jitter_fallback = lambda == 0.0 && d_eff > n;
  fit.h_norm_sq =
      fit.weights.squaredNorm() / static_cast<double>(nodes.count());
  return fit;
}

}  // namespace detail

double predict(const EstimatorFit& fit, const Eigen::VectorXd& theta) {
  return std::visit([&](const auto& f) { return f.predict(theta); }, fit);
}

Eigen::VectorXd predict_many(const EstimatorFit& fit,
                             const Eigen::MatrixXd& points) {
  if (const auto* rf = std::get_if<RfFit>(&fit)) {
    return rf->predict_many(points);
  }
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[i] = predict(fit, points.row(i).transpose());
  }
  return out;
}

double empirical_loss(const EstimatorFit& fit, const SampleSet& samples) {
  samples.validate();
  const Eigen::VectorXd predictions = predict_many(fit, samples.thetas);
  return (predictions - samples.xs).squaredNorm() /
         static_cast<double>(samples.size());
}

nlohmann::json KrrFit::to_json() const {
  nlohmann::json j;
  j["estimator"] = "krr";
  j["kernel"] = kernel.to_json();
  j["lambda"] = lambda;
  nlohmann::json ja = nlohmann::json::array();
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ja.push_back(alpha[i]);
  j["alpha"] = std::move(ja);
  nlohmann::json jt = nlohmann::json::array();
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < anchors.cols(); ++c) {
      row.push_back(anchors(i, c));
    }
    jt.push_back(std::move(row));
  }
  j["anchors"] = std::move(jt);
  return j;
}

KrrFit KrrFit::from_json(const nlohmann::json& j) {
  Kernel kernel = Kernel::from_json(j.at("kernel"));
  const auto& ja = j.at("alpha");
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(ja.size()));
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    alpha[i] = ja.at(static_cast<std::size_t>(i)).get<double>();
  }
  const auto& jt = j.at("anchors");
  const auto rows = static_cast<Eigen::Index>(jt.size());
  const auto cols = static_cast<Eigen::Index>(jt.at(0).size());
  Eigen::MatrixXd anchors(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      anchors(i, c) = jt.at(static_cast<std::size_t>(i))
                          .at(static_cast<std::size_t>(c))
                          .get<double>();
    }
  }
  return KrrFit{std::move(kernel), std::move(anchors), std::move(alpha),
                j.at("lambda").get<double>()};
}

nlohmann::json RfFit::to_json() const {
  nlohmann::json j;
  j["estimator"] = "rf_ridge";
  j["nodes"] = nodes.to_json();
  j["lambda"] = lambda;
  j["h_norm_sq"] = h_norm_sq;
  j["jitter_fallback"] = jitter_fallback;
  nlohmann::json jw = nlohmann::json::array();
  for (Eigen::Index i = 0; i < weights.size(); ++i) jw.push_back(weights[i]);
  j["weights"] = std::move(jw);
  return j;
}

RfFit RfFit::from_json(const nlohmann::json& j) {
  FeatureNodes nodes = FeatureNodes::from_json(j.at("nodes"));
  const auto& jw = j.at("weights");
  Eigen::VectorXd weights(static_cast<Eigen::Index>(jw.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    weights[i] = jw.at(static_cast<std::size_t>(i)).get<double>();
  }
  RfFit fit{std::move(nodes), std::move(weights), j.at("lambda").get<double>()};
  fit.h_norm_sq = j.at("h_norm_sq").get<double>();
  fit.jitter_fallback = j.at("jitter_fallback").get<bool>();
  return fit;
}

void save_fit(const FitArtifact& artifact, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["metadata"] = {{"n", artifact.n},
                   {"m", artifact.m},
                   {"lambda", artifact.lambda},
                   {"seed", artifact.seed}};
  if (const auto* krr = std::get_if<KrrFit>(&artifact.fit)) {
    j["fit"] = krr->to_json();
  } else if (const auto* rf = std::get_if<RfFit>(&artifact.fit)) {
    j["fit"] = rf->to_json();
  } else {
    const auto& mlp = std::get<MlpFit>(artifact.fit);
    j["fit"] = {{"estimator", "mlp"},
                {"input_dim", mlp.input_dim},
                {"lambda", mlp.config.lambda},
                {"weights", mlp.weights.to_json()}};
  }
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("save_fit: cannot open " + path.string());
  }
  os << j.dump(2) << "\n";
}

FitArtifact load_fit(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("load_fit: cannot open " + path.string());
  }
  nlohmann::json j;
  is >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw std::runtime_error("load_fit: unsupported format version");
  }
  FitArtifact artifact;
  const auto& meta = j.at("metadata");
  artifact.n = meta.at("n").get<Eigen::Index>();
  artifact.m = meta.at("m").get<int>();
  artifact.lambda = meta.at("lambda").get<double>();
  artifact.seed = meta.at("seed").get<std::uint64_t>();

  const auto& jf = j.at("fit");
  const std::string kind = jf.at("estimator").get<std::string>();
  if (kind == "krr") {
    artifact.fit = KrrFit::from_json(jf);
  } else if (kind == "rf_ridge") {
    artifact.fit = RfFit::from_json(jf);
  } else if (kind == "mlp") {
    MlpFit mlp;
    mlp.weights = MlpWeights::from_json(jf.at("weights"));
    mlp.input_dim = jf.at("input_dim").get<int>();
    artifact.fit = std::move(mlp);
  } else {
    throw std::runtime_error("load_fit: unknown estimator kind " + kind);
  }
  return artifact;
}

}  // namespace minmc
