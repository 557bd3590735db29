#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cshift/dataset.hpp"

namespace cshift {

struct TrainHyperparameters {
  /// Step size; 0 selects 1 / L for a power-iteration estimate of the
  /// gradient Lipschitz constant, which keeps the loss non-increasing.
  double learning_rate = 0.0;
  std::size_t epochs = 300;
  double l2 = 1e-4;
  double init_scale = 1e-3;
  std::uint64_t seed = 0;
};

/// Mean multinomial cross-entropy of a linear softmax model plus
/// (l2 / 2) * |W|^2. Parameters are packed as [W (classes x features), b].
class SoftmaxObjective {
 public:
  SoftmaxObjective(const Dataset& data, std::size_t classes, double l2);

  std::size_t parameter_count() const noexcept { return classes_ * (features_ + 1); }
  /// Returns the loss; writes the gradient when `gradient` is nonempty.
  double evaluate(std::span<const double> params, std::span<double> gradient) const;

 private:
  const Dataset& data_;
  std::size_t classes_;
  std::size_t features_;
  double l2_;
};

class ToyClassifier {
 public:
  ToyClassifier(std::size_t classes, std::size_t features, std::vector<double> params,
                TrainHyperparameters hp, std::vector<double> loss_history);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t features() const noexcept { return features_; }
  std::span<const double> weights() const { return {params_.data(), classes_ * features_}; }
  std::span<const double> bias() const { return {params_.data() + classes_ * features_, classes_}; }
  std::span<const double> parameters() const noexcept { return params_; }
  const TrainHyperparameters& hyperparameters() const noexcept { return hp_; }
  double learning_rate_used() const noexcept { return hp_.learning_rate; }

  /// Loss before every epoch, followed by the loss after the last one.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  Label predict(std::span<const float> x) const;
  double accuracy(const Dataset& data) const;

 private:
  std::size_t classes_;
  std::size_t features_;
  std::vector<double> params_;
  TrainHyperparameters hp_;
  std::vector<double> loss_history_;
};

/// Full-batch gradient descent on SoftmaxObjective. `classes` = 0 infers
/// max label + 1. Throws InvalidArgument when fewer than two classes occur.
ToyClassifier train_classifier(const Dataset& train, const TrainHyperparameters& hp,
                               std::size_t classes = 0);

}  // namespace cshift
