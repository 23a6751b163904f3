#pragma once
/// @file stats.hpp
/// @brief Order statistics and quadrature helpers shared across modules.

#include <span>
#include <vector>

namespace minmc {

/// Linear-interpolation quantile: the k-th order statistic (1-based) sits at
/// probability (k-1)/(n-1). Sorts a copy; the input is untouched.
/// Throws std::invalid_argument for empty input or p outside [0, 1].
double quantile(std::span<const double> values, double p);

/// Composite trapezoid rule of f over the (strictly increasing) grid.
/// Throws std::invalid_argument on length mismatch, length < 2, or a
/// non-increasing grid.
double trapezoid(std::span<const double> f_values,
                 std::span<const double> grid);

/// Equidistant grid with `count` points spanning [lo, hi].
std::vector<double> linspace(double lo, double hi, int count);

double mean(std::span<const double> values);
double sample_variance(std::span<const double> values);

}  // namespace minmc
