#include "cshift/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cshift/error.hpp"
#include "cshift/rng.hpp"

namespace cshift {

LabelRule LabelRule::round_robin(std::uint32_t classes) {
  if (classes == 0 || classes > 65536) {
    throw InvalidArgument("label rule needs between 1 and 65536 classes");
  }
  return LabelRule{Kind::round_robin, classes, 0};
}

LabelRule LabelRule::fixed(Label label) { return LabelRule{Kind::fixed, 1, label}; }

Label LabelRule::label_for(std::uint64_t index) const {
  if (kind == Kind::fixed) return fixed_label;
  return static_cast<Label>(index % classes);
}

LatentBatch::LatentBatch(std::size_t dim, std::size_t count, std::uint64_t seed,
                         std::uint64_t stream_id)
    : dim_(dim), seed_(seed), stream_id_(stream_id), values_(dim * count), labels_(count) {}

LatentCode LatentBatch::at(std::size_t i) const {
  auto c = code(i);
  return LatentCode{{c.begin(), c.end()}, labels_[i]};
}

void fill_standard_normal(std::span<double> out, std::uint64_t seed, std::uint64_t stream_id,
                          std::uint64_t index) {
  CounterStream rng(seed, stream_id, index);
  for (double& v : out) v = rng.next_normal();
}

LatentBatch sample_prior(std::size_t dim, std::size_t count, std::uint64_t seed,
                         std::uint64_t stream_id, LabelRule labels) {
  if (dim < 2) throw InvalidArgument("latent dimension must be at least 2, got " + std::to_string(dim));
  if (count == 0) throw InvalidArgument("sample count must be positive");
  LatentBatch batch(dim, count, seed, stream_id);
  for (std::size_t i = 0; i < count; ++i) {
    fill_standard_normal(batch.code(i), seed, stream_id, i);
    batch.set_label(i, labels.label_for(i));
  }
  return batch;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dimension mismatch in dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> normalized(std::span<const double> a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
  std::vector<double> out(a.begin(), a.end());
  for (double& v : out) v /= n;
  return out;
}

bool is_unit(std::span<const double> a, double tolerance) {
  return std::abs(norm(a) - 1.0) <= tolerance;
}

double angle_between(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dimension mismatch in angle_between");
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("angle_between of a zero vector");
  const double c = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

std::vector<double> slerp(std::span<const double> a, std::span<const double> b, double tau) {
  if (a.size() != b.size()) throw InvalidArgument("dimension mismatch in slerp");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("slerp parameter must lie in [0, 1]");
  if (!is_unit(a) || !is_unit(b)) throw InvalidArgument("slerp requires unit-norm inputs");

  // Chord form; acos(a.b) loses half the digits for small angles.
  double minus = 0.0, plus = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    minus += (a[i] - b[i]) * (a[i] - b[i]);
    plus += (a[i] + b[i]) * (a[i] + b[i]);
  }
  const double omega = 2.0 * std::atan2(std::sqrt(minus), std::sqrt(plus));
  if (omega >= std::numbers::pi - kAntipodalMargin) {
    throw DegenerateGeometry("slerp between antipodal points has no unique great circle");
  }

  std::vector<double> out(a.size());
  if (omega < kSlerpLinearThreshold) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - tau) * a[i] + tau * b[i];
    const double n = norm(out);
    for (double& v : out) v /= n;
    return out;
  }
  const double s = std::sin(omega);
  const double wa = std::sin((1.0 - tau) * omega) / s;
  const double wb = std::sin(tau * omega) / s;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + wb * b[i];
  return out;
}

}  // namespace cshift
