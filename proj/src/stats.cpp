#include "minmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minmc {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile: empty input");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("quantile: p must be in [0, 1]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  if (n == 1) {
    return sorted[0];
  }
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo >= n - 1) {
    return sorted[n - 1];
  }
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double trapezoid(std::span<const double> f_values,
                 std::span<const double> grid) {
  if (f_values.size() != grid.size()) {
    throw std::invalid_argument("trapezoid: length mismatch");
  }
  if (grid.size() < 2) {
    throw std::invalid_argument("trapezoid: need at least two points");
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    if (!(h > 0.0)) {
      throw std::invalid_argument("trapezoid: grid must be strictly increasing");
    }
    total += 0.5 * h * (f_values[i] + f_values[i + 1]);
  }
  return total;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) {
    throw std::invalid_argument("linspace: count must be positive");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = lo + step * static_cast<double>(i);
  }
  out.back() = hi;
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("mean: empty input");
  }
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("sample_variance: need at least two values");
  }
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size() - 1);
}

}  // namespace minmc
