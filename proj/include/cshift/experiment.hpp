#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cshift/dataset.hpp"
#include "cshift/manifest.hpp"
#include "cshift/robustness.hpp"
#include "cshift/set_distance.hpp"
#include "cshift/shift.hpp"
#include "cshift/toy_classifier.hpp"
#include "cshift/toy_decoder.hpp"

namespace cshift {

/// Desk-scale robustness experiment on the toy decoder: train on one latent
/// subset, evaluate on a grid of shifted subsets of the same family.
struct ExperimentConfig {
  ShiftFamily family = ShiftFamily::overlap;
  /// theta (extend/overlap) or R (truncation) of the training subset.
  double train_param = 0.0;
  /// Train on the full support instead: the whole unit sphere for extend and
  /// overlap, the unrestricted prior for truncation.
  bool train_on_prior = false;
  std::vector<double> grid;
  std::size_t n_train = 5000;
  std::size_t n_test = 1000;
  std::uint64_t seed = 1;
  std::uint64_t target_seed = 0;
  ExtendTau extend_tau = ExtendTau::corrected;
  ToyDecoderConfig decoder;
  TrainHyperparameters training;
  Metric metric = Metric::euclidean;
  unsigned threads = 0;
  /// Images per grid point written as CSIM previews (0 disables).
  std::size_t dump_images = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; an empty grid gets the family default.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Stream ids used by run_experiment.
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kBaselineTestStream = 2;
inline constexpr std::uint64_t kGridStreamBase = 16;

struct ExperimentReport {
  ExperimentReport(ExperimentConfig c, ShiftSpec train)
      : config(std::move(c)), train_spec(std::move(train)) {}

  ExperimentConfig config;
  ShiftSpec train_spec;
  double train_accuracy = 0.0;
  /// Accuracy on fresh samples from the training subset.
  double baseline_accuracy = 0.0;
  std::vector<EvalPoint> points;
  /// Analytic latent intensity of each grid spec relative to the training
  /// spec; absent when training on the prior.
  std::vector<std::optional<double>> intensities;
  SlopeFit fit_shift_param;
  SlopeFit fit_nn_distance;
  /// Pearson correlation of Δ-accuracy with the 1-NN distance.
  std::optional<double> delta_nn_correlation;
  std::vector<double> loss_history;
  /// First `dump_images` test images per grid point.
  std::vector<Dataset> previews;

  std::vector<double> delta_accuracies() const;
  nlohmann::json to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes points.csv, slopes.json, report.json, optional preview CSIM files
/// and manifest.json into `dir`; returns the manifest.
RunManifest write_experiment_outputs(const ExperimentReport& report, const std::filesystem::path& dir);

nlohmann::json to_json(const SlopeFit& fit);
nlohmann::json to_json(const ShiftSpec& spec);

}  // namespace cshift
