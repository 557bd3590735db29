#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cshift/dataset.hpp"
#include "cshift/latent.hpp"

namespace cshift {

/// Analytic renderer used as an injective stand-in for a generative model.
///
/// Latent factors (all passed through `squash`):
///   z1, z2  archetype center (x, y) in unit image coordinates
///   z3..z5  RGB color
///   z6      scale = 0.1 + 0.2 * squash(z6)
/// Class archetypes: 0 filled blob, 1 ring, 2 horizontal bar.
struct ToyDecoderConfig {
  std::size_t latent_dim = 6;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 3;
  std::size_t classes = 2;
  /// squash(x) = 1 / (1 + exp(-gain * x)); maps 0 to 0.5.
  double squash_gain = 1.0;

  std::size_t pixels() const noexcept { return height * width * channels; }
  void validate() const;
};

inline constexpr std::size_t kMaxToyClasses = 3;

double squash(double x, double gain = 1.0);

/// Renders one HWC image with continuous values in [0, 1].
std::vector<float> toy_decode(std::span<const double> z, Label label, const ToyDecoderConfig& cfg);

/// Decodes every code of the batch, keeping order and labels.
Dataset toy_decode_batch(const LatentBatch& batch, const ToyDecoderConfig& cfg);

}  // namespace cshift
