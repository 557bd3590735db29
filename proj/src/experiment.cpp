#include "cshift/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "cshift/error.hpp"
#include "cshift/formats.hpp"
#include "cshift/intensity.hpp"

namespace cshift {
namespace {

ShiftSpec family_spec(const ExperimentConfig& c, double param, const std::optional<TargetPair>& targets) {
  switch (c.family) {
    case ShiftFamily::extend: return ShiftSpec::extend(param, *targets, c.extend_tau);
    case ShiftFamily::overlap: return ShiftSpec::overlap(param, *targets);
    case ShiftFamily::truncation: return ShiftSpec::truncation(param, c.decoder.latent_dim);
    case ShiftFamily::prior: return ShiftSpec::prior(c.decoder.latent_dim);
  }
  return ShiftSpec::prior(c.decoder.latent_dim);
}

// Extend and overlap codes live on the unit sphere, so their full support is
// the whole sphere (normalized prior draws), not the raw Gaussian.
ShiftSpec full_support_spec(const ExperimentConfig& c, const std::optional<TargetPair>& targets) {
  if (targets) return ShiftSpec::extend(std::numbers::pi / 2, *targets, ExtendTau::corrected);
  return ShiftSpec::prior(c.decoder.latent_dim);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  decoder.validate();
  if (family == ShiftFamily::prior) throw InvalidArgument("experiment family must be extend, overlap or truncation");
  if (grid.size() < 2) throw InvalidArgument("experiment grid needs at least two shift values");
  if (n_train == 0 || n_test == 0) throw InvalidArgument("experiment sizes must be positive");
  if (n_train < decoder.classes) throw InvalidArgument("n_train must cover every class");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"family", cshift::to_string(family)},
          {"train_param", train_param},
          {"train_on_prior", train_on_prior},
          {"grid", grid},
          {"n_train", n_train},
          {"n_test", n_test},
          {"seed", seed},
          {"target_seed", target_seed},
          {"extend_tau", cshift::to_string(extend_tau)},
          {"classes", decoder.classes},
          {"squash_gain", decoder.squash_gain},
          {"learning_rate", training.learning_rate},
          {"epochs", training.epochs},
          {"l2", training.l2},
          {"init_scale", training.init_scale},
          {"train_seed", training.seed},
          {"metric", cshift::to_string(metric)},
          {"threads", threads},
          {"dump_images", dump_images}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.family = parse_shift_family(j.value("family", std::string("overlap")));
    c.train_param = j.value("train_param", c.family == ShiftFamily::truncation
                                                ? kDefaultTruncationTrainRadius
                                                : 0.0);
    c.train_on_prior = j.value("train_on_prior", false);
    c.grid = j.value("grid", std::vector<double>{});
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    c.seed = j.value("seed", c.seed);
    c.target_seed = j.value("target_seed", c.target_seed);
    c.extend_tau = parse_extend_tau(j.value("extend_tau", std::string("corrected")));
    c.decoder.classes = j.value("classes", c.decoder.classes);
    c.decoder.squash_gain = j.value("squash_gain", c.decoder.squash_gain);
    c.training.learning_rate = j.value("learning_rate", c.training.learning_rate);
    c.training.epochs = j.value("epochs", c.training.epochs);
    c.training.l2 = j.value("l2", c.training.l2);
    c.training.init_scale = j.value("init_scale", c.training.init_scale);
    c.training.seed = j.value("train_seed", c.training.seed);
    c.metric = parse_metric(j.value("metric", std::string("euclidean")));
    c.threads = j.value("threads", c.threads);
    c.dump_images = j.value("dump_images", c.dump_images);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config value: ") + e.what());
  }
  if (c.grid.empty()) {
    c.grid = c.family == ShiftFamily::truncation ? default_radius_grid() : default_theta_grid();
  }
  return c;
}

std::vector<double> ExperimentReport::delta_accuracies() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(delta_accuracy(p.accuracy, baseline_accuracy));
  return out;
}

nlohmann::json to_json(const SlopeFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"r_squared", fit.r_squared},
          {"stderr_slope", fit.stderr_slope},
          {"x_axis", to_string(fit.x_axis)},
          {"n_points", fit.n_points}};
}

nlohmann::json to_json(const ShiftSpec& spec) {
  nlohmann::json j = {{"family", to_string(spec.family())}, {"dim", spec.dim()}};
  switch (spec.family()) {
    case ShiftFamily::extend:
      j["theta"] = spec.theta();
      j["extend_tau"] = to_string(spec.extend_tau());
      j["target_seed"] = spec.targets().seed;
      break;
    case ShiftFamily::overlap:
      j["theta"] = spec.theta();
      j["target_seed"] = spec.targets().seed;
      j["target_angle"] = spec.targets().angle();
      break;
    case ShiftFamily::truncation:
      j["radius"] = spec.radius();
      j["support_radius"] = spec.support_radius();
      break;
    case ShiftFamily::prior: break;
  }
  return j;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  const auto deltas = delta_accuracies();
  for (std::size_t k = 0; k < points.size(); ++k) {
    nlohmann::json p = {{"shift_param", points[k].shift_param},
                        {"nn_distance", points[k].nn_distance},
                        {"accuracy", points[k].accuracy},
                        {"n_test", points[k].n_test},
                        {"delta_accuracy", deltas[k]}};
    p["intensity"] = intensities[k] ? nlohmann::json(*intensities[k]) : nlohmann::json(nullptr);
    pts.push_back(std::move(p));
  }
  return {{"config", config.to_json()},
          {"train_spec", cshift::to_json(train_spec)},
          {"train_accuracy", train_accuracy},
          {"baseline_accuracy", baseline_accuracy},
          {"points", pts},
          {"fit_shift_param", cshift::to_json(fit_shift_param)},
          {"fit_nn_distance", cshift::to_json(fit_nn_distance)},
          {"delta_nn_correlation",
           delta_nn_correlation ? nlohmann::json(*delta_nn_correlation) : nlohmann::json(nullptr)},
          {"final_training_loss", loss_history.empty() ? 0.0 : loss_history.back()}};
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto labels = LabelRule::round_robin(static_cast<std::uint32_t>(config.decoder.classes));
  std::optional<TargetPair> targets;
  if (config.family == ShiftFamily::extend || config.family == ShiftFamily::overlap) {
    targets = derive_targets(config.target_seed, config.decoder.latent_dim);
  }
  const ShiftSpec train_spec = config.train_on_prior ? full_support_spec(config, targets)
                                                     : family_spec(config, config.train_param, targets);

  ExperimentReport report(config, train_spec);

  const auto train_latents = sample_shifted_batch(train_spec, config.n_train, config.seed, kTrainStream, labels);
  const Dataset train = toy_decode_batch(train_latents.batch, config.decoder);
  const ToyClassifier model = train_classifier(train, config.training, config.decoder.classes);
  report.loss_history = model.loss_history();
  report.train_accuracy = model.accuracy(train);

  const auto baseline_latents =
      sample_shifted_batch(train_spec, config.n_test, config.seed, kBaselineTestStream, labels);
  report.baseline_accuracy = model.accuracy(toy_decode_batch(baseline_latents.batch, config.decoder));

  NNOptions nn;
  nn.metric = config.metric;
  nn.threads = config.threads;
  for (std::size_t k = 0; k < config.grid.size(); ++k) {
    const ShiftSpec spec = family_spec(config, config.grid[k], targets);
    const auto latents = sample_shifted_batch(spec, config.n_test, config.seed, kGridStreamBase + k, labels);
    const Dataset test = toy_decode_batch(latents.batch, config.decoder);
    EvalPoint p;
    p.shift_param = config.grid[k];
    p.accuracy = model.accuracy(test);
    p.n_test = config.n_test;
    p.nn_distance = one_nn_distance(train, test, nn).mean_distance;
    report.points.push_back(p);
    report.intensities.push_back(config.train_on_prior ? std::nullopt
                                                       : std::optional(intensity_analytic(train_spec, spec)));
    if (config.dump_images > 0) {
      report.previews.push_back(test.slice(0, std::min(config.dump_images, test.size())));
    }
  }

  report.fit_shift_param = fit_robustness_slope(report.points, report.baseline_accuracy, {XAxis::shift_param});
  report.fit_nn_distance = fit_robustness_slope(report.points, report.baseline_accuracy, {XAxis::nn_distance});
  std::vector<double> nn_values;
  for (const auto& p : report.points) nn_values.push_back(p.nn_distance);
  try {
    report.delta_nn_correlation = pearson_correlation(report.delta_accuracies(), nn_values);
  } catch (const DegenerateFit&) {
    report.delta_nn_correlation.reset();
  }
  return report;
}

RunManifest write_experiment_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RunManifest manifest;
  manifest.command = "toy-run";
  manifest.config = report.config.to_json();
  manifest.config["stream_ids"] = {{"train", kTrainStream},
                                   {"baseline_test", kBaselineTestStream},
                                   {"grid_base", kGridStreamBase}};
  manifest.config["train_spec"] = to_json(report.train_spec);
  manifest.created_at = utc_timestamp();

  {
    const auto path = dir / "points.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "shift_param,nn_distance,accuracy,n_test\n";
    for (const auto& p : report.points) {
      out << format_double(p.shift_param) << ',' << format_double(p.nn_distance) << ','
          << format_double(p.accuracy) << ',' << p.n_test << '\n';
    }
    out.close();
    manifest.add_file(dir, path, "csv");
  }
  {
    const auto path = dir / "slopes.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << nlohmann::json{{"shift_param", to_json(report.fit_shift_param)},
                          {"nn_distance", to_json(report.fit_nn_distance)}}
               .dump(2)
        << '\n';
    out.close();
    manifest.add_file(dir, path, "json");
  }
  {
    const auto path = dir / "report.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << report.to_json().dump(2) << '\n';
    out.close();
    manifest.add_file(dir, path, "json");
  }
  for (std::size_t k = 0; k < report.previews.size(); ++k) {
    const auto path = dir / ("preview_" + std::to_string(k) + ".csim");
    const auto stats = write_images(report.previews[k], path);
    manifest.add_file(dir, path, "CSIM", stats.clamped_values);
  }
  manifest.write(dir / "manifest.json");
  return manifest;
}

}  // namespace cshift
