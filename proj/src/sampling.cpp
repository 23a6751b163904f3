#include "minmc/sampling.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace minmc {

void ParamSpace::validate() const {
  if (bounds.empty()) {
    throw std::invalid_argument("ParamSpace: at least one dimension required");
  }
  if (grid_points.size() != bounds.size()) {
    throw std::invalid_argument("ParamSpace: grid spec must match dims");
  }
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) {
      throw std::invalid_argument("ParamSpace: need lower < upper per dim");
    }
  }
  for (int g : grid_points) {
    if (g < 1) {
      throw std::invalid_argument("ParamSpace: grid points must be >= 1");
    }
  }
}

ParamSpace ParamSpace::interval(double lo, double hi, int grid) {
  ParamSpace s;
  s.bounds = {{lo, hi}};
  s.grid_points = {grid};
  s.validate();
  return s;
}

ParamSpace ParamSpace::box(std::vector<std::pair<double, double>> bounds,
                           std::vector<int> grid) {
  ParamSpace s;
  s.bounds = std::move(bounds);
  s.grid_points = std::move(grid);
  s.validate();
  return s;
}

Eigen::MatrixXd ParamSpace::grid() const {
  validate();
  const int d = dims();
  Eigen::Index total = 1;
  for (int g : grid_points) total *= g;

  Eigen::MatrixXd pts(total, d);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (int c = d - 1; c >= 0; --c) {
      const int g = grid_points[static_cast<std::size_t>(c)];
      const Eigen::Index idx = rem % g;
      rem /= g;
      const auto& [lo, hi] = bounds[static_cast<std::size_t>(c)];
      pts(row, c) =
          g == 1 ? lo
                 : lo + (hi - lo) * static_cast<double>(idx) /
                            static_cast<double>(g - 1);
    }
  }
  return pts;
}

double ParamSpace::volume() const {
  double v = 1.0;
  for (const auto& [lo, hi] : bounds) v *= hi - lo;
  return v;
}

nlohmann::json ParamSpace::to_json() const {
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& [lo, hi] : bounds) jb.push_back({lo, hi});
  return {{"bounds", jb}, {"grid_points", grid_points}};
}

ParamSpace ParamSpace::from_json(const nlohmann::json& j) {
  ParamSpace s;
  for (const auto& b : j.at("bounds")) {
    s.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
  }
  s.grid_points = j.at("grid_points").get<std::vector<int>>();
  s.validate();
  return s;
}

Eigen::MatrixXd draw_thetas(const ParamSpace& space, int n, RngStream& rng) {
  space.validate();
  if (n < 1) {
    throw std::invalid_argument("draw_thetas: n must be >= 1");
  }
  const int d = space.dims();
  Eigen::MatrixXd thetas(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      const auto& [lo, hi] = space.bounds[static_cast<std::size_t>(c)];
      thetas(i, c) = rng.uniform(lo, hi);
    }
  }
  return thetas;
}

void SampleSet::validate() const {
  if (thetas.rows() != xs.size() || xs.size() < 1) {
    throw std::invalid_argument("SampleSet: thetas/xs size mismatch or empty");
  }
  if (pre_average_width < 1) {
    throw std::invalid_argument("SampleSet: pre-average width must be >= 1");
  }
}

SampleSet build_samples(const ModelSpec& model, const Eigen::MatrixXd& thetas,
                        int m, RngStream& rng) {
  if (m < 1) {
    throw std::invalid_argument("build_samples: m must be >= 1");
  }
  if (thetas.rows() < 1 || thetas.cols() != model.param_dim()) {
    throw std::invalid_argument("build_samples: theta matrix shape mismatch");
  }
  const Eigen::Index n = thetas.rows();

  SampleSet out;
  out.thetas = thetas;
  out.xs.resize(n);
  out.pre_average_width = m;
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();

  std::uint64_t draws = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    RngStream row_rng = rng.substream(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd theta = thetas.row(i).transpose();
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += model.sample_payoff(theta, row_rng);
      ++draws;
    }
    out.xs[i] = acc / static_cast<double>(m);
  }
  out.payoff_draws = draws;
  return out;
}

void write_samples_csv(const SampleSet& samples,
                       const std::filesystem::path& path) {
  samples.validate();
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("write_samples_csv: cannot open " + path.string());
  }
  const Eigen::Index d = samples.thetas.cols();
  for (Eigen::Index c = 0; c < d; ++c) {
    os << "theta_" << (c + 1) << ",";
  }
  os << "x,m\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string_view(buf, static_cast<std::size_t>(len));
  };
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      os << fmt(samples.thetas(i, c)) << ",";
    }
    os << fmt(samples.xs[i]) << "," << samples.pre_average_width << "\n";
  }
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("read_samples_csv: cannot open " + path.string());
  }
  std::string header;
  if (!std::getline(is, header)) {
    throw std::runtime_error("read_samples_csv: empty file");
  }
  Eigen::Index d = 0;
  {
    std::stringstream ss(header);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 3 || cols[cols.size() - 2] != "x" ||
        cols.back() != "m") {
      throw std::runtime_error("read_samples_csv: unexpected header");
    }
    d = static_cast<Eigen::Index>(cols.size()) - 2;
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  int m = 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    if (row.size() != static_cast<std::size_t>(d) + 2) {
      throw std::runtime_error("read_samples_csv: ragged row");
    }
    m = static_cast<int>(row.back());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::runtime_error("read_samples_csv: no data rows");
  }

  SampleSet out;
  out.thetas.resize(static_cast<Eigen::Index>(rows.size()), d);
  out.xs.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      out.thetas(static_cast<Eigen::Index>(i), c) =
          rows[i][static_cast<std::size_t>(c)];
    }
    out.xs[static_cast<Eigen::Index>(i)] = rows[i][static_cast<std::size_t>(d)];
  }
  out.pre_average_width = m;
  out.validate();
  return out;
}

}  // namespace minmc
