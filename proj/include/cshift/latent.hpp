#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cshift {

using Label = std::uint16_t;

/// One point of the latent space with its class label.
struct LatentCode {
  std::vector<double> values;
  Label label = 0;
};

/// How class labels are attached to a freshly sampled batch.
struct LabelRule {
  enum class Kind { round_robin, fixed };

  Kind kind = Kind::round_robin;
  std::uint32_t classes = 1;
  Label fixed_label = 0;

  static LabelRule round_robin(std::uint32_t classes);
  static LabelRule fixed(Label label);

  Label label_for(std::uint64_t index) const;
};

/// n latent codes of dimension d stored row-major. Code i is a pure function
/// of (seed, stream_id, i).
class LatentBatch {
 public:
  LatentBatch() = default;
  LatentBatch(std::size_t dim, std::size_t count, std::uint64_t seed, std::uint64_t stream_id);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::span<double> code(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  std::span<const double> code(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  Label label(std::size_t i) const { return labels_[i]; }
  void set_label(std::size_t i, Label label) { labels_[i] = label; }

  LatentCode at(std::size_t i) const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const Label> labels() const noexcept { return labels_; }
  std::span<Label> labels() noexcept { return labels_; }

  friend bool operator==(const LatentBatch&, const LatentBatch&) = default;

 private:
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::vector<double> values_;
  std::vector<Label> labels_;
};

/// Fills `out` with i.i.d. N(0,1) draws from the counter stream of code
/// `index`. Calling it again with a larger span continues the same sequence.
void fill_standard_normal(std::span<double> out, std::uint64_t seed, std::uint64_t stream_id,
                          std::uint64_t index);

/// n i.i.d. draws from N(0, I_d). Throws InvalidArgument for d < 2 or n = 0.
LatentBatch sample_prior(std::size_t dim, std::size_t count, std::uint64_t seed,
                         std::uint64_t stream_id = 0,
                         LabelRule labels = LabelRule::round_robin(1));

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
std::vector<double> normalized(std::span<const double> a);
bool is_unit(std::span<const double> a, double tolerance = 1e-9);

/// Angle in [0, pi] between two nonzero vectors; cosine is clamped before acos.
double angle_between(std::span<const double> a, std::span<const double> b);

/// Spherical linear interpolation between unit vectors. Antipodal inputs are
/// rejected with DegenerateGeometry; for angles below 1e-7 the normalized
/// chord interpolation is returned instead.
std::vector<double> slerp(std::span<const double> a, std::span<const double> b, double tau);

inline constexpr double kAntipodalMargin = 1e-6;
inline constexpr double kSlerpLinearThreshold = 1e-7;

}  // namespace cshift
