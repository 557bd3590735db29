#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cshift/latent.hpp"

namespace cshift {

/// n fixed-shape float32 samples (images or latents), flattened row-major,
/// with one class label per sample.
class Dataset {
 public:
  Dataset() = default;
  /// Throws InvalidData when the payload does not match shape * labels.size()
  /// or contains a non-finite value.
  Dataset(std::vector<std::size_t> sample_shape, std::vector<float> data, std::vector<Label> labels);

  static Dataset from_latents(const LatentBatch& batch);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t row_dim() const noexcept { return row_dim_; }
  const std::vector<std::size_t>& sample_shape() const noexcept { return shape_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * row_dim_, row_dim_}; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const Label> labels() const noexcept { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }

  /// Squared row norms, computed on construction with the same kernel as the
  /// 1-NN panels.
  const std::vector<double>& squared_norms() const noexcept { return norms_; }

  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
  /// Rows of `other` appended; shapes must match.
  void append(const Dataset& other);

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::size_t row_dim_ = 0;
  std::vector<float> data_;
  std::vector<Label> labels_;
  std::vector<double> norms_;
};

}  // namespace cshift
