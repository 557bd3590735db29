#include "cshift/toy_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cshift/error.hpp"
#include "cshift/rng.hpp"

namespace cshift {
namespace {

constexpr int kPowerIterations = 50;
constexpr double kLipschitzSafety = 1.1;

double row_dot(const float* x, const double* w, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += static_cast<double>(x[k]) * w[k];
  return s;
}

// Largest eigenvalue of (1/n) X~^T X~ with X~ = [X, 1], by power iteration.
double gram_top_eigenvalue(const Dataset& data) {
  const std::size_t d = data.row_dim();
  const std::size_t n = data.size();
  std::vector<double> v(d + 1, 1.0 / std::sqrt(static_cast<double>(d + 1)));
  std::vector<double> next(d + 1);
  double lambda = 0.0;
  for (int it = 0; it < kPowerIterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = data.row(i).data();
      const double proj = row_dot(x, v.data(), d) + v[d];
      for (std::size_t k = 0; k < d; ++k) next[k] += proj * x[k];
      next[d] += proj;
    }
    double nn = 0.0;
    for (double& e : next) {
      e /= static_cast<double>(n);
      nn += e * e;
    }
    lambda = std::sqrt(nn);
    if (!(lambda > 0.0)) return 0.0;
    for (std::size_t k = 0; k <= d; ++k) v[k] = next[k] / lambda;
  }
  return lambda;
}

}  // namespace

SoftmaxObjective::SoftmaxObjective(const Dataset& data, std::size_t classes, double l2)
    : data_(data), classes_(classes), features_(data.row_dim()), l2_(l2) {
  if (classes_ < 2) throw InvalidArgument("softmax objective needs at least two classes");
  if (data_.empty()) throw InvalidArgument("softmax objective needs data");
  for (Label y : data_.labels()) {
    if (y >= classes_) throw InvalidData("label " + std::to_string(y) + " outside the class range");
  }
}

double SoftmaxObjective::evaluate(std::span<const double> params, std::span<double> gradient) const {
  if (params.size() != parameter_count()) throw InvalidArgument("parameter vector has the wrong size");
  const bool want_grad = !gradient.empty();
  if (want_grad && gradient.size() != parameter_count()) {
    throw InvalidArgument("gradient vector has the wrong size");
  }
  const std::size_t d = features_;
  const std::size_t c = classes_;
  const double* w = params.data();
  const double* b = params.data() + c * d;
  if (want_grad) std::fill(gradient.begin(), gradient.end(), 0.0);

  std::vector<double> logits(c);
  double loss = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float* x = data_.row(i).data();
    double max_logit = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      logits[k] = row_dot(x, w + k * d, d) + b[k];
      max_logit = std::max(max_logit, logits[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) z += std::exp(logits[k] - max_logit);
    const double log_z = max_logit + std::log(z);
    const Label y = data_.label(i);
    loss += log_z - logits[y];
    if (want_grad) {
      for (std::size_t k = 0; k < c; ++k) {
        const double residual = std::exp(logits[k] - log_z) - (k == y ? 1.0 : 0.0);
        double* gw = gradient.data() + k * d;
        for (std::size_t f = 0; f < d; ++f) gw[f] += residual * x[f];
        gradient[c * d + k] += residual;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data_.size());
  loss *= inv_n;
  double w2 = 0.0;
  for (std::size_t k = 0; k < c * d; ++k) w2 += w[k] * w[k];
  loss += 0.5 * l2_ * w2;
  if (want_grad) {
    for (std::size_t k = 0; k < c * d; ++k) gradient[k] = gradient[k] * inv_n + l2_ * w[k];
    for (std::size_t k = 0; k < c; ++k) gradient[c * d + k] *= inv_n;
  }
  return loss;
}

ToyClassifier::ToyClassifier(std::size_t classes, std::size_t features, std::vector<double> params,
                             TrainHyperparameters hp, std::vector<double> loss_history)
    : classes_(classes),
      features_(features),
      params_(std::move(params)),
      hp_(hp),
      loss_history_(std::move(loss_history)) {
  if (params_.size() != classes_ * (features_ + 1)) {
    throw InvalidArgument("classifier parameter vector has the wrong size");
  }
}

Label ToyClassifier::predict(std::span<const float> x) const {
  if (x.size() != features_) throw InvalidArgument("sample has the wrong number of features");
  const auto w = weights();
  const auto b = bias();
  std::size_t best = 0;
  double best_logit = -INFINITY;
  for (std::size_t k = 0; k < classes_; ++k) {
    const double logit = row_dot(x.data(), w.data() + k * features_, features_) + b[k];
    if (logit > best_logit) {
      best_logit = logit;
      best = k;
    }
  }
  return static_cast<Label>(best);
}

double ToyClassifier::accuracy(const Dataset& data) const {
  if (data.empty()) throw InvalidArgument("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(data.row(i)) == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

ToyClassifier train_classifier(const Dataset& train, const TrainHyperparameters& hp,
                               std::size_t classes) {
  if (train.empty()) throw InvalidArgument("cannot train on an empty dataset");
  const std::set<Label> present(train.labels().begin(), train.labels().end());
  if (present.size() < 2) throw InvalidArgument("training data must contain at least two classes");
  if (classes == 0) classes = static_cast<std::size_t>(*present.rbegin()) + 1;
  if (hp.l2 < 0.0 || hp.learning_rate < 0.0) {
    throw InvalidArgument("learning rate and l2 must be non-negative");
  }

  const SoftmaxObjective objective(train, classes, hp.l2);
  TrainHyperparameters used = hp;
  if (used.learning_rate == 0.0) {
    const double lipschitz = 0.5 * kLipschitzSafety * gram_top_eigenvalue(train) + hp.l2;
    used.learning_rate = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  }

  std::vector<double> params(objective.parameter_count());
  CounterStream rng(hp.seed, streams::kClassifierInit, 0);
  for (std::size_t k = 0; k < classes * train.row_dim(); ++k) params[k] = hp.init_scale * rng.next_normal();

  std::vector<double> grad(params.size());
  std::vector<double> history;
  history.reserve(hp.epochs + 1);
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    history.push_back(objective.evaluate(params, grad));
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= used.learning_rate * grad[k];
  }
  history.push_back(objective.evaluate(params, {}));
  return ToyClassifier(classes, train.row_dim(), std::move(params), used, std::move(history));
}

}  // namespace cshift
