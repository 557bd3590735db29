#include "cshift/dataset.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "cshift/error.hpp"
#include "cshift/set_distance.hpp"

namespace cshift {
namespace {

std::vector<double> compute_norms(const std::vector<float>& data, std::size_t n, std::size_t d) {
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* r = data.data() + i * d;
    norms[i] = kernels::lane_dot(r, r, d);
  }
  return norms;
}

}  // namespace

Dataset::Dataset(std::vector<std::size_t> sample_shape, std::vector<float> data,
                 std::vector<Label> labels)
    : shape_(std::move(sample_shape)), data_(std::move(data)), labels_(std::move(labels)) {
  if (shape_.empty()) throw InvalidData("dataset sample shape is empty");
  row_dim_ = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  if (row_dim_ == 0) throw InvalidData("dataset sample shape has a zero extent");
  if (data_.size() != row_dim_ * labels_.size()) {
    throw InvalidData("dataset payload holds " + std::to_string(data_.size()) + " values, expected " +
                      std::to_string(row_dim_ * labels_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InvalidData("dataset row " + std::to_string(i / row_dim_) + " contains a non-finite value");
    }
  }
  norms_ = compute_norms(data_, labels_.size(), row_dim_);
}

Dataset Dataset::from_latents(const LatentBatch& batch) {
  std::vector<float> data(batch.values().begin(), batch.values().end());
  std::vector<Label> labels(batch.labels().begin(), batch.labels().end());
  return Dataset({batch.dim()}, std::move(data), std::move(labels));
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw InvalidArgument("dataset slice out of range");
  std::vector<float> data(data_.begin() + static_cast<std::ptrdiff_t>(begin * row_dim_),
                          data_.begin() + static_cast<std::ptrdiff_t>(end * row_dim_));
  std::vector<Label> labels(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                            labels_.begin() + static_cast<std::ptrdiff_t>(end));
  return Dataset(shape_, std::move(data), std::move(labels));
}

void Dataset::append(const Dataset& other) {
  if (empty() && shape_.empty()) {
    *this = other;
    return;
  }
  if (other.shape_ != shape_) throw InvalidData("cannot append datasets of different sample shapes");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  norms_.insert(norms_.end(), other.norms_.begin(), other.norms_.end());
}

}  // namespace cshift
