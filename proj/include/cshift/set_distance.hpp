#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cshift/dataset.hpp"

namespace cshift {

enum class Metric : std::uint8_t { euclidean = 0, cosine = 1 };

const char* to_string(Metric metric);
Metric parse_metric(const std::string& name);

struct NNOptions {
  Metric metric = Metric::euclidean;
  unsigned threads = 0;                         // 0 = hardware concurrency
  std::size_t memory_budget_bytes = 1ull << 30;  // train rows resident at once when streaming
};

struct NNResult {
  double mean_distance = 0.0;
  std::vector<float> per_point;
  std::vector<std::size_t> argmin_indices;
  Metric metric = Metric::euclidean;
};

namespace kernels {

inline constexpr int kLanes = 8;

/// Dot product of two float rows accumulated in double over kLanes
/// interleaved lanes, combined by a fixed tree. Squared norms and panel dot
/// products both go through this function so that x.x - 2 x.x + x.x == 0
/// holds exactly.
inline double lane_dot(const float* a, const float* b, std::size_t d) noexcept {
  double acc[kLanes] = {};
  std::size_t k = 0;
  for (; k + kLanes <= d; k += kLanes) {
    for (int l = 0; l < kLanes; ++l) {
      acc[l] += static_cast<double>(a[k + l]) * static_cast<double>(b[k + l]);
    }
  }
  for (int l = 0; k + l < d; ++l) {
    acc[l] += static_cast<double>(a[k + l]) * static_cast<double>(b[k + l]);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

/// Deterministic pairwise (tree) summation in double.
double pairwise_sum(std::span<const float> values) noexcept;

}  // namespace kernels

/// Exact 1-NN dataset distance: mean over shift rows of the distance to the
/// closest train row. Euclidean distances use |x|^2 + |y|^2 - 2 x.y over
/// cache-sized panels with negative round-off clamped to zero; cosine
/// distance is 1 - cos(x, y). Shift rows are sharded across threads; the
/// per-point results do not depend on the thread count.
NNResult one_nn_distance(const Dataset& train, const Dataset& shift, const NNOptions& options = {});

/// Reference double loop evaluating d(x, y) directly.
NNResult one_nn_distance_naive(const Dataset& train, const Dataset& shift,
                               Metric metric = Metric::euclidean, unsigned threads = 1);

/// Sequential access to train rows that may not fit in memory.
class RowSource {
 public:
  virtual ~RowSource() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t row_dim() const = 0;
  /// Copies rows [begin, begin + count) into `out` (count * row_dim floats).
  virtual void read_rows(std::size_t begin, std::size_t count, std::span<float> out) = 0;
};

/// Adapter exposing an in-memory dataset as a RowSource.
class DatasetRowSource final : public RowSource {
 public:
  explicit DatasetRowSource(const Dataset& dataset) : dataset_(dataset) {}
  std::size_t rows() const override { return dataset_.size(); }
  std::size_t row_dim() const override { return dataset_.row_dim(); }
  void read_rows(std::size_t begin, std::size_t count, std::span<float> out) override;

 private:
  const Dataset& dataset_;
};

/// Same result as one_nn_distance, reading the train set in chunks that fit
/// options.memory_budget_bytes.
NNResult one_nn_distance_streaming(RowSource& train, const Dataset& shift,
                                   const NNOptions& options = {});

}  // namespace cshift
