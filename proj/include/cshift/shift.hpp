#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cshift/latent.hpp"

namespace cshift {

enum class ShiftFamily : std::uint8_t { prior = 0, extend = 1, overlap = 2, truncation = 3 };

const char* to_string(ShiftFamily family);
ShiftFamily parse_shift_family(const std::string& name);

/// Interpolation parameter used by the extend shift.
///  - corrected: tau = (pi/2 - theta) / pi. theta = 0 gives the t1
///    hemisphere and theta = pi/2 the whole sphere.
///  - printed: tau = (theta + pi/2) / pi. Shrinks the cap towards t1 as
///    theta grows; kept for compatibility with the literal formula.
enum class ExtendTau : std::uint8_t { corrected = 0, printed = 1 };

const char* to_string(ExtendTau tau);
ExtendTau parse_extend_tau(const std::string& name);

/// Two fixed unit-norm anchor directions shared by every extend/overlap spec.
struct TargetPair {
  std::vector<double> t1;
  std::vector<double> t2;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return t1.size(); }
  double angle() const;

  /// Validates unit norm and a well-defined (non-antipodal) great circle.
  static TargetPair from_vectors(std::vector<double> t1, std::vector<double> t2,
                                 std::uint64_t seed = 0);

  friend bool operator==(const TargetPair&, const TargetPair&) = default;
};

/// Two independent N(0, I_d) draws from the target stream of `seed`, normalized.
TargetPair derive_targets(std::uint64_t seed, std::size_t dim);

/// A validated description of one latent subset. Construct through the
/// named factories; each carries exactly the parameters of its family.
class ShiftSpec {
 public:
  static ShiftSpec prior(std::size_t dim);
  static ShiftSpec extend(double theta, TargetPair targets, ExtendTau tau = ExtendTau::corrected);
  static ShiftSpec overlap(double theta, TargetPair targets);
  static ShiftSpec truncation(double radius, std::size_t dim);

  ShiftFamily family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return dim_; }
  double theta() const;
  double radius() const;
  const TargetPair& targets() const;
  ExtendTau extend_tau() const noexcept { return tau_; }

  /// theta for extend/overlap, R for truncation, 0 for prior.
  double parameter() const noexcept;

  /// Axis of the support cap: t1 for extend, the rotated axis for overlap.
  std::span<const double> cap_axis() const;
  /// Angular radius of the support cap (extend/overlap).
  double cap_radius() const;
  /// R * ball99(d) for truncation; ball99(d) for prior.
  double support_radius() const noexcept { return support_radius_; }

  /// Interpolation parameter of the extend slerp.
  double extend_tau_value() const;

  /// Same family, targets and dimension with a different theta / R.
  ShiftSpec with_parameter(double parameter) const;

  friend bool operator==(const ShiftSpec&, const ShiftSpec&) = default;

 private:
  ShiftSpec() = default;

  ShiftFamily family_ = ShiftFamily::prior;
  std::size_t dim_ = 0;
  double theta_ = 0.0;
  double radius_ = 1.0;
  ExtendTau tau_ = ExtendTau::corrected;
  std::optional<TargetPair> targets_;
  std::vector<double> axis_;
  double support_radius_ = 0.0;
};

/// Deterministic transform of one prior draw into the spec's subset.
std::vector<double> apply_shift(std::span<const double> z, const ShiftSpec& spec);

/// Membership predicate for the spec's support set.
bool in_support(std::span<const double> x, const ShiftSpec& spec);

struct ShiftedBatch {
  ShiftSpec spec;
  LatentBatch batch;
  std::uint64_t source_seed = 0;
};

/// Prior draws pushed through apply_shift. For truncation, draws outside the
/// 99% ball are redrawn from the same per-code stream before scaling, so
/// every code satisfies in_support.
ShiftedBatch sample_shifted_batch(const ShiftSpec& spec, std::size_t count, std::uint64_t seed,
                                  std::uint64_t stream_id = 0,
                                  LabelRule labels = LabelRule::round_robin(1));

/// Default parameter grids for sweeps.
std::vector<double> default_theta_grid();
std::vector<double> default_radius_grid();
inline constexpr double kDefaultTruncationTrainRadius = 0.8;

}  // namespace cshift
