#include "cshift/set_distance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "cshift/error.hpp"

namespace cshift {
namespace {

constexpr std::size_t kShiftTileRows = 16;
constexpr std::size_t kTrainTileBytes = 256 * 1024;

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(begin, end) over [0, n) split into `threads` contiguous ranges.
template <typename Fn>
void parallel_ranges(std::size_t n, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          fn(n * t / threads, n * (t + 1) / threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_inputs(std::size_t train_rows, std::size_t train_dim, const Dataset& shift) {
  if (train_rows == 0 || shift.empty()) throw InvalidArgument("1-NN distance needs nonempty datasets");
  if (train_dim != shift.row_dim()) {
    throw InvalidData("train rows have " + std::to_string(train_dim) + " values, shift rows " +
                      std::to_string(shift.row_dim()));
  }
}

void check_nonzero_norms(std::span<const double> norms, const char* which) {
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0)) {
      throw InvalidData(std::string("cosine distance is undefined for the zero row ") +
                        std::to_string(i) + " of the " + which + " set");
    }
  }
}

// Running minimum of the panel distance for every shift row.
class NearestAccumulator {
 public:
  NearestAccumulator(const Dataset& shift, Metric metric, unsigned threads)
      : shift_(shift),
        metric_(metric),
        threads_(threads),
        best_(shift.size(), std::numeric_limits<double>::infinity()),
        argmin_(shift.size(), 0) {
    if (metric_ == Metric::cosine) check_nonzero_norms(shift.squared_norms(), "shift");
  }

  void consume(const float* rows, const double* norms, std::size_t count, std::size_t first_index) {
    const std::size_t d = shift_.row_dim();
    if (metric_ == Metric::cosine) check_nonzero_norms({norms, count}, "train");
    const std::size_t train_tile = std::max<std::size_t>(4, kTrainTileBytes / (d * sizeof(float)));
    const std::size_t shift_tiles = (shift_.size() + kShiftTileRows - 1) / kShiftTileRows;
    const auto& shift_norms = shift_.squared_norms();
    const float* shift_data = shift_.data().data();

    parallel_ranges(shift_tiles, threads_, [&](std::size_t tile_begin, std::size_t tile_end) {
      for (std::size_t st = tile_begin; st < tile_end; ++st) {
        const std::size_t j0 = st * kShiftTileRows;
        const std::size_t j1 = std::min(shift_.size(), j0 + kShiftTileRows);
        for (std::size_t i0 = 0; i0 < count; i0 += train_tile) {
          const std::size_t i1 = std::min(count, i0 + train_tile);
          for (std::size_t j = j0; j < j1; ++j) {
            const float* x = shift_data + j * d;
            const double nx = shift_norms[j];
            double best = best_[j];
            std::size_t arg = argmin_[j];
            for (std::size_t i = i0; i < i1; ++i) {
              const double xy = kernels::lane_dot(x, rows + i * d, d);
              double value;
              if (metric_ == Metric::euclidean) {
                value = std::max(0.0, nx + norms[i] - 2.0 * xy);
              } else {
                value = std::clamp(1.0 - xy / (std::sqrt(nx) * std::sqrt(norms[i])), 0.0, 2.0);
              }
              if (value < best) {
                best = value;
                arg = first_index + i;
              }
            }
            best_[j] = best;
            argmin_[j] = arg;
          }
        }
      }
    });
  }

  NNResult finish() const {
    NNResult result;
    result.metric = metric_;
    result.per_point.resize(best_.size());
    for (std::size_t j = 0; j < best_.size(); ++j) {
      const double v = metric_ == Metric::euclidean ? std::sqrt(best_[j]) : best_[j];
      result.per_point[j] = static_cast<float>(v);
    }
    result.argmin_indices = argmin_;
    result.mean_distance =
        kernels::pairwise_sum(result.per_point) / static_cast<double>(result.per_point.size());
    return result;
  }

 private:
  const Dataset& shift_;
  Metric metric_;
  unsigned threads_;
  std::vector<double> best_;
  std::vector<std::size_t> argmin_;
};

}  // namespace

const char* to_string(Metric metric) {
  return metric == Metric::euclidean ? "euclidean" : "cosine";
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw InvalidArgument("unknown metric '" + name + "'");
}

double kernels::pairwise_sum(std::span<const float> values) noexcept {
  if (values.size() <= 8) {
    double s = 0.0;
    for (float v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

NNResult one_nn_distance(const Dataset& train, const Dataset& shift, const NNOptions& options) {
  check_inputs(train.size(), train.row_dim(), shift);
  NearestAccumulator acc(shift, options.metric, resolve_threads(options.threads));
  acc.consume(train.data().data(), train.squared_norms().data(), train.size(), 0);
  return acc.finish();
}

NNResult one_nn_distance_naive(const Dataset& train, const Dataset& shift, Metric metric,
                               unsigned threads) {
  check_inputs(train.size(), train.row_dim(), shift);
  const std::size_t d = shift.row_dim();
  NNResult result;
  result.metric = metric;
  result.per_point.resize(shift.size());
  result.argmin_indices.resize(shift.size());

  parallel_ranges(shift.size(), resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto x = shift.row(j);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        const auto y = train.row(i);
        double value;
        if (metric == Metric::euclidean) {
          double lanes[kernels::kLanes] = {};
          std::size_t k = 0;
          for (; k + kernels::kLanes <= d; k += kernels::kLanes) {
            for (int l = 0; l < kernels::kLanes; ++l) {
              const double diff = static_cast<double>(x[k + l]) - static_cast<double>(y[k + l]);
              lanes[l] += diff * diff;
            }
          }
          for (; k < d; ++k) {
            const double diff = static_cast<double>(x[k]) - static_cast<double>(y[k]);
            lanes[0] += diff * diff;
          }
          double s = 0.0;
          for (double l : lanes) s += l;
          value = std::sqrt(s);
        } else {
          double xy = 0.0, xx = 0.0, yy = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            xy += static_cast<double>(x[k]) * y[k];
            xx += static_cast<double>(x[k]) * x[k];
            yy += static_cast<double>(y[k]) * y[k];
          }
          if (!(xx > 0.0) || !(yy > 0.0)) throw InvalidData("cosine distance is undefined for zero rows");
          value = std::clamp(1.0 - xy / std::sqrt(xx * yy), 0.0, 2.0);
        }
        if (value < best) {
          best = value;
          arg = i;
        }
      }
      result.per_point[j] = static_cast<float>(best);
      result.argmin_indices[j] = arg;
    }
  });
  result.mean_distance =
      kernels::pairwise_sum(result.per_point) / static_cast<double>(result.per_point.size());
  return result;
}

void DatasetRowSource::read_rows(std::size_t begin, std::size_t count, std::span<float> out) {
  if (begin + count > dataset_.size() || out.size() < count * dataset_.row_dim()) {
    throw InvalidArgument("row range outside the dataset");
  }
  const auto src = dataset_.data().subspan(begin * dataset_.row_dim(), count * dataset_.row_dim());
  std::copy(src.begin(), src.end(), out.begin());
}

NNResult one_nn_distance_streaming(RowSource& train, const Dataset& shift, const NNOptions& options) {
  check_inputs(train.rows(), train.row_dim(), shift);
  const std::size_t d = shift.row_dim();
  const std::size_t row_bytes = d * sizeof(float) + sizeof(double);
  const std::size_t resident = shift.size() * row_bytes + shift.size() * 2 * sizeof(double);
  const std::size_t available =
      options.memory_budget_bytes > resident ? options.memory_budget_bytes - resident : 0;
  const std::size_t chunk_rows = std::clamp<std::size_t>(available / row_bytes, 1, train.rows());

  NearestAccumulator acc(shift, options.metric, resolve_threads(options.threads));
  std::vector<float> rows(chunk_rows * d);
  std::vector<double> norms(chunk_rows);
  for (std::size_t begin = 0; begin < train.rows(); begin += chunk_rows) {
    const std::size_t count = std::min(chunk_rows, train.rows() - begin);
    train.read_rows(begin, count, rows);
    for (std::size_t i = 0; i < count; ++i) {
      const float* r = rows.data() + i * d;
      norms[i] = kernels::lane_dot(r, r, d);
      if (!std::isfinite(norms[i])) {
        throw InvalidData("train row " + std::to_string(begin + i) + " contains a non-finite value");
      }
    }
    acc.consume(rows.data(), norms.data(), count, begin);
  }
  return acc.finish();
}

}  // namespace cshift
