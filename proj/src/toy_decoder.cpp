#include "cshift/toy_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cshift/error.hpp"

namespace cshift {

void ToyDecoderConfig::validate() const {
  if (latent_dim != 6) throw InvalidArgument("toy decoder expects 6 latent factors");
  if (height == 0 || width == 0 || channels != 3) {
    throw InvalidArgument("toy decoder needs a nonempty RGB image shape");
  }
  if (classes < 2 || classes > kMaxToyClasses) {
    throw InvalidArgument("toy decoder supports 2 to " + std::to_string(kMaxToyClasses) + " classes");
  }
  if (!(squash_gain > 0.0) || !std::isfinite(squash_gain)) {
    throw InvalidArgument("squash gain must be positive");
  }
}

double squash(double x, double gain) { return 1.0 / (1.0 + std::exp(-gain * x)); }

std::vector<float> toy_decode(std::span<const double> z, Label label, const ToyDecoderConfig& cfg) {
  cfg.validate();
  if (z.size() != cfg.latent_dim) {
    throw InvalidArgument("toy decoder got a latent of dimension " + std::to_string(z.size()));
  }
  if (label >= cfg.classes) throw InvalidArgument("class index outside the archetype set");

  const double g = cfg.squash_gain;
  const double cx = squash(z[0], g);
  const double cy = squash(z[1], g);
  const double color[3] = {squash(z[2], g), squash(z[3], g), squash(z[4], g)};
  const double scale = 0.1 + 0.2 * squash(z[5], g);

  std::vector<float> img(cfg.pixels());
  for (std::size_t row = 0; row < cfg.height; ++row) {
    const double py = (static_cast<double>(row) + 0.5) / static_cast<double>(cfg.height);
    for (std::size_t col = 0; col < cfg.width; ++col) {
      const double px = (static_cast<double>(col) + 0.5) / static_cast<double>(cfg.width);
      const double dx = px - cx;
      const double dy = py - cy;
      double alpha = 0.0;
      switch (label) {
        case 0: {  // blob
          alpha = std::exp(-(dx * dx + dy * dy) / (2.0 * scale * scale));
          break;
        }
        case 1: {  // ring of radius `scale`
          const double r = std::sqrt(dx * dx + dy * dy);
          const double width = 0.35 * scale;
          alpha = std::exp(-(r - scale) * (r - scale) / (2.0 * width * width));
          break;
        }
        default: {  // horizontal bar
          const double half_height = 0.3 * scale;
          alpha = std::exp(-(dx * dx) / (2.0 * 4.0 * scale * scale) -
                           (dy * dy) / (2.0 * half_height * half_height));
          break;
        }
      }
      float* px_out = img.data() + (row * cfg.width + col) * cfg.channels;
      for (std::size_t c = 0; c < 3; ++c) {
        px_out[c] = static_cast<float>(std::clamp(color[c] * alpha, 0.0, 1.0));
      }
    }
  }
  return img;
}

Dataset toy_decode_batch(const LatentBatch& batch, const ToyDecoderConfig& cfg) {
  cfg.validate();
  if (batch.dim() != cfg.latent_dim) throw InvalidArgument("batch dimension does not match the decoder");
  std::vector<float> data;
  data.reserve(batch.size() * cfg.pixels());
  std::vector<Label> labels(batch.labels().begin(), batch.labels().end());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto img = toy_decode(batch.code(i), batch.label(i), cfg);
    data.insert(data.end(), img.begin(), img.end());
  }
  return Dataset({cfg.height, cfg.width, cfg.channels}, std::move(data), std::move(labels));
}

}  // namespace cshift
