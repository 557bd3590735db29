#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cshift {

/// Classifier accuracy on one shifted test set.
struct EvalPoint {
  double shift_param = 0.0;  // theta or R
  double nn_distance = 0.0;
  double accuracy = 0.0;
  std::uint64_t n_test = 0;
};

enum class XAxis : std::uint8_t { shift_param = 0, nn_distance = 1 };

const char* to_string(XAxis axis);
XAxis parse_x_axis(const std::string& name);

/// Least-squares line y = intercept + slope * x.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double stderr_slope = 0.0;
  XAxis x_axis = XAxis::shift_param;
  std::size_t n_points = 0;
};

/// acc_shift - acc_train; negative values are degradation.
double delta_accuracy(double acc_shift, double acc_train);

/// Weighted or unweighted OLS on raw (x, y) pairs. Points are sorted before
/// accumulation, so the result does not depend on their order. R^2 is 1 when
/// y is constant. The slope standard error is sqrt(SS_res / (n - 2) / Sxx)
/// and 0 for two points.
SlopeFit fit_line(std::span<const double> x, std::span<const double> y,
                  std::span<const double> weights = {});

struct SlopeFitOptions {
  XAxis x_axis = XAxis::shift_param;
  bool weighted = false;  // weight each point by its n_test
};

/// Robustness slope: Δ-accuracy relative to `baseline_accuracy` regressed on
/// the chosen x axis. Throws DegenerateFit for fewer than two distinct x.
SlopeFit fit_robustness_slope(std::span<const EvalPoint> points, double baseline_accuracy,
                              const SlopeFitOptions& options = {});

/// Pearson correlation of two equally long samples.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace cshift
