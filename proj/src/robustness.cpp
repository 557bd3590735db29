#include "cshift/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "cshift/error.hpp"

namespace cshift {

const char* to_string(XAxis axis) {
  return axis == XAxis::shift_param ? "shift_param" : "nn_distance";
}

XAxis parse_x_axis(const std::string& name) {
  if (name == "shift_param") return XAxis::shift_param;
  if (name == "nn_distance") return XAxis::nn_distance;
  throw InvalidArgument("unknown x axis '" + name + "'");
}

double delta_accuracy(double acc_shift, double acc_train) {
  if (!(acc_shift >= 0.0 && acc_shift <= 1.0) || !(acc_train >= 0.0 && acc_train <= 1.0)) {
    throw InvalidArgument("accuracies must lie in [0, 1]");
  }
  return acc_shift - acc_train;
}

SlopeFit fit_line(std::span<const double> x, std::span<const double> y,
                  std::span<const double> weights) {
  if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size())) {
    throw InvalidArgument("fit_line inputs differ in length");
  }
  if (x.size() < 2) throw DegenerateFit("a line fit needs at least two points");

  std::vector<std::tuple<double, double, double>> pts(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !(w > 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("fit_line needs finite points and positive weights");
    }
    pts[i] = {x[i], y[i], w};
  }
  std::sort(pts.begin(), pts.end());

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& [xi, yi, wi] : pts) {
    sw += wi;
    sx += wi * xi;
    sy += wi * yi;
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [xi, yi, wi] : pts) {
    sxx += wi * (xi - mx) * (xi - mx);
    sxy += wi * (xi - mx) * (yi - my);
    syy += wi * (yi - my) * (yi - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("all x values are identical");

  SlopeFit fit;
  fit.n_points = pts.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [xi, yi, wi] : pts) {
    const double r = yi - (fit.intercept + fit.slope * xi);
    ss_res += wi * r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.stderr_slope =
      pts.size() > 2 ? std::sqrt(ss_res / static_cast<double>(pts.size() - 2) / sxx) : 0.0;
  return fit;
}

SlopeFit fit_robustness_slope(std::span<const EvalPoint> points, double baseline_accuracy,
                              const SlopeFitOptions& options) {
  std::vector<double> x, y, w;
  x.reserve(points.size());
  y.reserve(points.size());
  for (const auto& p : points) {
    x.push_back(options.x_axis == XAxis::shift_param ? p.shift_param : p.nn_distance);
    y.push_back(delta_accuracy(p.accuracy, baseline_accuracy));
    if (options.weighted) {
      if (p.n_test == 0) throw InvalidArgument("weighted fit needs n_test > 0 on every point");
      w.push_back(static_cast<double>(p.n_test));
    }
  }
  SlopeFit fit = fit_line(x, y, w);
  fit.x_axis = options.x_axis;
  return fit;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("correlation needs two samples of equal length >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateFit("correlation of a constant sample");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace cshift
