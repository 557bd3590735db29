#include "cshift/shift.hpp"

#include <cmath>
#include <numbers>

#include "cshift/error.hpp"
#include "cshift/intensity.hpp"
#include "cshift/rng.hpp"

namespace cshift {
namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kSphereNormTolerance = 1e-6;
constexpr double kAngleTolerance = 1e-9;
constexpr double kBallRelativeTolerance = 1e-12;
constexpr int kMaxTruncationRedraws = 10000;

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= kHalfPi)) {
    throw InvalidArgument("shift angle theta must lie in [0, pi/2], got " + std::to_string(theta));
  }
}

}  // namespace

const char* to_string(ShiftFamily family) {
  switch (family) {
    case ShiftFamily::prior: return "prior";
    case ShiftFamily::extend: return "extend";
    case ShiftFamily::overlap: return "overlap";
    case ShiftFamily::truncation: return "truncation";
  }
  return "unknown";
}

ShiftFamily parse_shift_family(const std::string& name) {
  if (name == "prior") return ShiftFamily::prior;
  if (name == "extend") return ShiftFamily::extend;
  if (name == "overlap") return ShiftFamily::overlap;
  if (name == "truncation") return ShiftFamily::truncation;
  throw InvalidArgument("unknown shift family '" + name + "'");
}

const char* to_string(ExtendTau tau) {
  return tau == ExtendTau::corrected ? "corrected" : "printed";
}

ExtendTau parse_extend_tau(const std::string& name) {
  if (name == "corrected") return ExtendTau::corrected;
  if (name == "printed") return ExtendTau::printed;
  throw InvalidArgument("unknown extend tau convention '" + name + "'");
}

double TargetPair::angle() const { return angle_between(t1, t2); }

TargetPair TargetPair::from_vectors(std::vector<double> t1, std::vector<double> t2,
                                    std::uint64_t seed) {
  if (t1.size() < 2 || t1.size() != t2.size()) {
    throw InvalidArgument("targets must share a dimension of at least 2");
  }
  if (!is_unit(t1) || !is_unit(t2)) throw InvalidArgument("targets must be unit-norm");
  const double a = angle_between(t1, t2);
  if (!(a > 0.0) || a >= std::numbers::pi - kAntipodalMargin) {
    throw DegenerateGeometry("target angle must lie strictly inside (0, pi)");
  }
  return TargetPair{std::move(t1), std::move(t2), seed};
}

TargetPair derive_targets(std::uint64_t seed, std::size_t dim) {
  if (dim < 2) throw InvalidArgument("target dimension must be at least 2");
  std::vector<double> t1(dim);
  std::vector<double> t2(dim);
  // Redraw only in the probability-zero event of a degenerate pair.
  for (std::uint64_t attempt = 0;; attempt += 2) {
    fill_standard_normal(t1, seed, streams::kTargets, attempt);
    fill_standard_normal(t2, seed, streams::kTargets, attempt + 1);
    try {
      return TargetPair::from_vectors(normalized(t1), normalized(t2), seed);
    } catch (const Error&) {
      if (attempt > 64) throw;
    }
  }
}

ShiftSpec ShiftSpec::prior(std::size_t dim) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  ShiftSpec s;
  s.family_ = ShiftFamily::prior;
  s.dim_ = dim;
  s.support_radius_ = ball99_radius(dim);
  return s;
}

ShiftSpec ShiftSpec::extend(double theta, TargetPair targets, ExtendTau tau) {
  check_theta(theta);
  ShiftSpec s;
  s.family_ = ShiftFamily::extend;
  s.dim_ = targets.dim();
  s.theta_ = theta;
  s.tau_ = tau;
  s.axis_ = targets.t1;
  s.targets_ = std::move(targets);
  return s;
}

ShiftSpec ShiftSpec::overlap(double theta, TargetPair targets) {
  check_theta(theta);
  ShiftSpec s;
  s.family_ = ShiftFamily::overlap;
  s.dim_ = targets.dim();
  s.theta_ = theta;
  s.axis_ = slerp(targets.t1, targets.t2, 2.0 * theta / std::numbers::pi);
  s.targets_ = std::move(targets);
  return s;
}

ShiftSpec ShiftSpec::truncation(double radius, std::size_t dim) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("truncation radius must be positive and finite");
  }
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  ShiftSpec s;
  s.family_ = ShiftFamily::truncation;
  s.dim_ = dim;
  s.radius_ = radius;
  s.support_radius_ = radius * ball99_radius(dim);
  return s;
}

double ShiftSpec::theta() const {
  if (family_ != ShiftFamily::extend && family_ != ShiftFamily::overlap) {
    throw InvalidArgument(std::string("theta is not a parameter of the ") + to_string(family_) + " family");
  }
  return theta_;
}

double ShiftSpec::radius() const {
  if (family_ != ShiftFamily::truncation) {
    throw InvalidArgument(std::string("R is not a parameter of the ") + to_string(family_) + " family");
  }
  return radius_;
}

const TargetPair& ShiftSpec::targets() const {
  if (!targets_) {
    throw InvalidArgument(std::string("the ") + to_string(family_) + " family carries no targets");
  }
  return *targets_;
}

double ShiftSpec::parameter() const noexcept {
  switch (family_) {
    case ShiftFamily::extend:
    case ShiftFamily::overlap: return theta_;
    case ShiftFamily::truncation: return radius_;
    case ShiftFamily::prior: return 0.0;
  }
  return 0.0;
}

std::span<const double> ShiftSpec::cap_axis() const {
  if (axis_.empty()) throw InvalidArgument("only extend and overlap supports are caps");
  return axis_;
}

double ShiftSpec::cap_radius() const {
  switch (family_) {
    case ShiftFamily::extend:
      return tau_ == ExtendTau::corrected ? kHalfPi + theta_ : kHalfPi - theta_;
    case ShiftFamily::overlap: return kHalfPi;
    default: throw InvalidArgument("only extend and overlap supports are caps");
  }
}

double ShiftSpec::extend_tau_value() const {
  if (family_ != ShiftFamily::extend) throw InvalidArgument("tau is defined for extend shifts only");
  return tau_ == ExtendTau::corrected ? (kHalfPi - theta_) / std::numbers::pi
                                      : (theta_ + kHalfPi) / std::numbers::pi;
}

ShiftSpec ShiftSpec::with_parameter(double parameter) const {
  switch (family_) {
    case ShiftFamily::prior: return prior(dim_);
    case ShiftFamily::extend: return extend(parameter, *targets_, tau_);
    case ShiftFamily::overlap: return overlap(parameter, *targets_);
    case ShiftFamily::truncation: return truncation(parameter, dim_);
  }
  return *this;
}

std::vector<double> apply_shift(std::span<const double> z, const ShiftSpec& spec) {
  if (z.size() != spec.dim()) throw InvalidArgument("latent dimension does not match the shift spec");
  for (double v : z) {
    if (!std::isfinite(v)) throw InvalidArgument("latent code contains a non-finite value");
  }
  switch (spec.family()) {
    case ShiftFamily::prior: return {z.begin(), z.end()};
    case ShiftFamily::truncation: {
      std::vector<double> out(z.begin(), z.end());
      for (double& v : out) v *= spec.radius();
      return out;
    }
    case ShiftFamily::extend: return slerp(normalized(z), spec.cap_axis(), spec.extend_tau_value());
    case ShiftFamily::overlap: return slerp(normalized(z), spec.cap_axis(), 0.5);
  }
  return {};
}

bool in_support(std::span<const double> x, const ShiftSpec& spec) {
  if (x.size() != spec.dim()) return false;
  switch (spec.family()) {
    case ShiftFamily::prior: return true;
    case ShiftFamily::truncation:
      return norm(x) <= spec.support_radius() * (1.0 + kBallRelativeTolerance);
    case ShiftFamily::extend:
      if (std::abs(norm(x) - 1.0) > kSphereNormTolerance) return false;
      return angle_between(x, spec.cap_axis()) <= spec.cap_radius() + kAngleTolerance;
    case ShiftFamily::overlap:
      if (std::abs(norm(x) - 1.0) > kSphereNormTolerance) return false;
      return dot(x, spec.cap_axis()) >= -kAngleTolerance;
  }
  return false;
}

ShiftedBatch sample_shifted_batch(const ShiftSpec& spec, std::size_t count, std::uint64_t seed,
                                  std::uint64_t stream_id, LabelRule labels) {
  if (spec.family() != ShiftFamily::truncation) {
    LatentBatch batch = sample_prior(spec.dim(), count, seed, stream_id, labels);
    if (spec.family() != ShiftFamily::prior) {
      for (std::size_t i = 0; i < count; ++i) {
        auto code = batch.code(i);
        const auto shifted = apply_shift(code, spec);
        std::copy(shifted.begin(), shifted.end(), code.begin());
      }
    }
    return ShiftedBatch{spec, std::move(batch), seed};
  }

  if (spec.dim() < 2) throw InvalidArgument("latent dimension must be at least 2");
  if (count == 0) throw InvalidArgument("sample count must be positive");
  const double ball = ball99_radius(spec.dim());
  LatentBatch batch(spec.dim(), count, seed, stream_id);
  for (std::size_t i = 0; i < count; ++i) {
    CounterStream rng(seed, stream_id, i);
    auto code = batch.code(i);
    int attempts = 0;
    do {
      if (++attempts > kMaxTruncationRedraws) {
        throw InfeasibleGeometry("could not draw a prior sample inside the 99% ball");
      }
      for (double& v : code) v = rng.next_normal();
    } while (norm(code) > ball);
    for (double& v : code) v *= spec.radius();
    batch.set_label(i, labels.label_for(i));
  }
  return ShiftedBatch{spec, std::move(batch), seed};
}

std::vector<double> default_theta_grid() {
  constexpr double pi = std::numbers::pi;
  return {0.0, pi / 12, pi / 6, pi / 4, pi / 3, 5 * pi / 12, pi / 2};
}

std::vector<double> default_radius_grid() { return {0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1}; }

}  // namespace cshift
