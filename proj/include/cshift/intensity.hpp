#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cshift/rng.hpp"
#include "cshift/shift.hpp"

namespace cshift {

/// Radius of the centered ball holding 99% of N(0, I_d):
/// sqrt(chi-square quantile(d, 0.99)). Memoized per dimension.
double ball99_radius(std::size_t dim);

/// Normalized surface measure of a hyperspherical cap of angular radius
/// `alpha` on S^{d-1}.
double cap_fraction(double alpha, std::size_t dim);

/// Shift intensity 1 - |supp(train) ∩ supp(shift)| / |supp(shift)| from the
/// closed-form cap / lune / ball geometry. Both specs must belong to the same
/// family and share targets and dimension.
double intensity_analytic(const ShiftSpec& train, const ShiftSpec& shift);

struct IntensityReport {
  IntensityReport(ShiftSpec train, ShiftSpec shift)
      : spec_train(std::move(train)), spec_shift(std::move(shift)) {}

  std::optional<double> analytic;
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  std::uint64_t mc_samples = 0;
  std::uint64_t mc_hits = 0;
  double acceptance_rate = 1.0;
  ShiftSpec spec_train;
  ShiftSpec spec_shift;

  /// |analytic - mc| <= 4 * stderr + 1e-3; true when no analytic value exists.
  bool consistent() const;
};

struct MonteCarloOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  double acceptance_floor = 1e-4;
};

/// One point drawn uniformly from supp(spec). Caps are sampled by rejection
/// from the uniform sphere; balls by a radius transform of a uniform direction.
/// `attempts` receives the number of candidate draws consumed.
std::vector<double> sample_uniform_support(const ShiftSpec& spec, CounterStream& rng,
                                           std::uint64_t* attempts = nullptr);

/// Monte Carlo estimate of the intensity: n uniform draws from supp(shift),
/// 1 - (fraction inside supp(train)). Sample j uses its own counter stream,
/// so the estimate does not depend on the thread count.
IntensityReport intensity_mc(const ShiftSpec& train, const ShiftSpec& shift, std::uint64_t n,
                             std::uint64_t seed, const MonteCarloOptions& options = {});

}  // namespace cshift
