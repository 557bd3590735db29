#include "cshift/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cshift/experiment.hpp"
#include "cshift/formats.hpp"
#include "cshift/hash.hpp"
#include "cshift/intensity.hpp"
#include "cshift/manifest.hpp"
#include "cshift/robustness.hpp"
#include "cshift/set_distance.hpp"
#include "cshift/shift.hpp"
#include "cshift/toy_decoder.hpp"

namespace cshift {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return kExitUsage;
    case ErrorKind::invalid_data:
    case ErrorKind::parse:
    case ErrorKind::io: return kExitData;
    case ErrorKind::degenerate_geometry:
    case ErrorKind::infeasible_geometry:
    case ErrorKind::degenerate_fit: return kExitNumeric;
  }
  return kExitData;
}

namespace {

constexpr const char* kPointsHeader = "shift_param,nn_distance,accuracy,n_test";
constexpr const char* kPerPointHeader = "shift_index,distance,argmin_train_index";

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidData(path.string() + " is not valid JSON: " + e.what());
  }
}

/// Flag value if given, else config key, else default.
class Settings {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    config_ = load_json_file(path);
    if (!config_.is_object()) throw InvalidData("config " + path + " must be a JSON object");
  }

  template <class T>
  T get(const std::optional<T>& flag, const char* key, T fallback) const {
    if (flag) return *flag;
    if (!config_.contains(key)) return fallback;
    try {
      return config_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
    }
  }

  template <class T>
  T require(const std::optional<T>& flag, const char* key) const {
    if (flag) return *flag;
    if (!config_.contains(key)) throw InvalidArgument(std::string("missing required setting '") + key + "'");
    return get<T>(std::nullopt, key, T{});
  }

  bool has(const char* key) const { return config_.contains(key); }
  const json& raw() const { return config_; }

 private:
  json config_ = json::object();
};

struct SpecOptions {
  std::optional<std::string> family;
  std::optional<double> theta;
  std::optional<double> radius;
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> target_seed;
  std::optional<std::string> tau;
};

void add_spec_flags(CLI::App* app, SpecOptions& s, bool with_dim) {
  app->add_option("--family", s.family, "prior, extend, overlap or truncation");
  app->add_option("--theta", s.theta, "angle of extend/overlap shifts in radians");
  app->add_option("--radius", s.radius, "truncation factor R");
  if (with_dim) app->add_option("--d", s.dim, "latent dimension");
  app->add_option("--target-seed", s.target_seed, "seed of the target pair t1, t2");
  app->add_option("--tau", s.tau, "extend interpolation convention: corrected or printed");
}

ShiftSpec build_spec(ShiftFamily family, double param, std::size_t dim, std::uint64_t target_seed,
                     ExtendTau tau) {
  switch (family) {
    case ShiftFamily::prior: return ShiftSpec::prior(dim);
    case ShiftFamily::extend: return ShiftSpec::extend(param, derive_targets(target_seed, dim), tau);
    case ShiftFamily::overlap: return ShiftSpec::overlap(param, derive_targets(target_seed, dim));
    case ShiftFamily::truncation: return ShiftSpec::truncation(param, dim);
  }
  throw InvalidArgument("unknown family");
}

ShiftSpec resolve_spec(const SpecOptions& s, const Settings& cfg, std::size_t dim) {
  const ShiftFamily family = parse_shift_family(cfg.get(s.family, "family", std::string("prior")));
  const ExtendTau tau = parse_extend_tau(cfg.get(s.tau, "extend_tau", std::string("corrected")));
  const std::uint64_t target_seed = cfg.get(s.target_seed, "target_seed", std::uint64_t{0});
  const double param = family == ShiftFamily::truncation ? cfg.get(s.radius, "radius", 1.0)
                                                         : cfg.get(s.theta, "theta", 0.0);
  return build_spec(family, param, dim, target_seed, tau);
}

json spec_json_with_targets(const ShiftSpec& spec) {
  json j = to_json(spec);
  if (spec.family() == ShiftFamily::extend || spec.family() == ShiftFamily::overlap) {
    j["t1"] = spec.targets().t1;
    j["t2"] = spec.targets().t2;
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

/// Writes the JSON result to `out_path` (if any) and records it in a manifest.
void emit_json(const json& result, const std::optional<std::string>& out_path, RunManifest& manifest,
               std::ostream& out) {
  out << result.dump() << '\n';
  if (!out_path) return;
  const fs::path path = *out_path;
  write_text(path, result.dump(2) + "\n");
  manifest.add_file(fs::absolute(path).parent_path(), path, "json");
  manifest.write(manifest_path_for(path));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const std::string& where) {
  std::size_t b = text.find_first_not_of(" \t\r");
  std::size_t e = text.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw InvalidData(where + ": empty field");
  const char* first = text.data() + b;
  const char* last = text.data() + e + 1;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InvalidData(where + ": '" + text + "' is not a number");
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<EvalPoint> read_points_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kPointsHeader) {
    throw InvalidData(path.string() + ": expected header '" + kPointsHeader + "'");
  }
  std::vector<EvalPoint> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 4) throw InvalidData(where + ": expected 4 fields");
    EvalPoint p;
    p.shift_param = parse_number(fields[0], where);
    p.nn_distance = parse_number(fields[1], where);
    p.accuracy = parse_number(fields[2], where);
    const double n = parse_number(fields[3], where);
    if (!std::isfinite(p.shift_param) || !std::isfinite(p.nn_distance) || p.nn_distance < 0.0) {
      throw InvalidData(where + ": shift_param and nn_distance must be finite, nn_distance >= 0");
    }
    if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) throw InvalidData(where + ": accuracy outside [0, 1]");
    if (!(n >= 0.0) || n != std::floor(n)) throw InvalidData(where + ": n_test must be a count");
    p.n_test = static_cast<std::uint64_t>(n);
    points.push_back(p);
  }
  return points;
}

json intensity_report_json(const IntensityReport& r, bool with_mc) {
  json j;
  j["analytic"] = r.analytic ? json(*r.analytic) : json(nullptr);
  if (with_mc) {
    j["mc_estimate"] = r.mc_estimate;
    j["mc_stderr"] = r.mc_stderr;
    j["mc_samples"] = r.mc_samples;
    j["mc_hits"] = r.mc_hits;
    j["acceptance_rate"] = r.acceptance_rate;
    j["consistent"] = r.consistent();
  } else {
    j["mc_estimate"] = nullptr;
    j["mc_stderr"] = nullptr;
    j["mc_samples"] = 0;
    j["mc_hits"] = 0;
    j["acceptance_rate"] = nullptr;
    j["consistent"] = nullptr;
  }
  j["spec_train"] = to_json(r.spec_train);
  j["spec_shift"] = to_json(r.spec_shift);
  return j;
}

// ---------------------------------------------------------------------------

struct GenLatentsArgs {
  std::string config;
  SpecOptions spec;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> stream;
  std::optional<std::uint32_t> classes;
  std::optional<std::string> out;
};

int run_gen_latents(const GenLatentsArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  const std::size_t dim = cfg.get(a.spec.dim, "d", std::size_t{6});
  const ShiftSpec spec = resolve_spec(a.spec, cfg, dim);
  const std::size_t n = cfg.get(a.n, "n", std::size_t{1000});
  const std::uint64_t seed = cfg.get(a.seed, "seed", std::uint64_t{0});
  const std::uint64_t stream = cfg.get(a.stream, "stream_id", std::uint64_t{0});
  const std::uint32_t classes = cfg.get(a.classes, "classes", std::uint32_t{1});
  const fs::path path = cfg.require(a.out, "out");

  const ShiftedBatch batch = sample_shifted_batch(spec, n, seed, stream, LabelRule::round_robin(classes));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const WriteStats stats = write_latents(batch, path);

  RunManifest m;
  m.command = "gen-latents";
  m.config = {{"spec", spec_json_with_targets(spec)},
              {"n", n},
              {"seed", seed},
              {"stream_id", stream},
              {"classes", classes},
              {"label_rule", "round_robin"}};
  m.created_at = utc_timestamp();
  m.add_file(fs::absolute(path).parent_path(), path, "CSLT");
  const fs::path mpath = manifest_path_for(path);
  m.write(mpath);
  out << json{{"out", path.string()},
              {"bytes", stats.bytes},
              {"hash", hash_to_hex(stats.hash)},
              {"manifest", mpath.string()}}
             .dump()
      << '\n';
  return kExitOk;
}

struct IntensityArgs {
  std::string config;
  std::optional<std::string> family;
  std::optional<double> train_param;
  std::optional<double> shift_param;
  std::optional<std::size_t> dim;
  std::optional<std::uint64_t> target_seed;
  std::optional<std::string> tau;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

int run_intensity(const IntensityArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  const ShiftFamily family = parse_shift_family(cfg.get(a.family, "family", std::string("overlap")));
  if (family == ShiftFamily::prior) throw InvalidArgument("intensity needs extend, overlap or truncation");
  const ExtendTau tau = parse_extend_tau(cfg.get(a.tau, "extend_tau", std::string("corrected")));
  const std::size_t dim = cfg.get(a.dim, "d", std::size_t{6});
  const std::uint64_t target_seed = cfg.get(a.target_seed, "target_seed", std::uint64_t{0});
  const double default_train = family == ShiftFamily::truncation ? kDefaultTruncationTrainRadius : 0.0;
  const double train_param = cfg.get(a.train_param, "train_param", default_train);
  const double shift_param = cfg.require(a.shift_param, "shift_param");
  const std::uint64_t samples = cfg.get(a.samples, "mc_samples", std::uint64_t{1000000});
  const std::uint64_t seed = cfg.get(a.seed, "seed", std::uint64_t{0});
  MonteCarloOptions mc;
  mc.threads = cfg.get(a.threads, "threads", 0u);

  // Truncation in one dimension has no targets; build specs directly.
  const ShiftSpec train = build_spec(family, train_param, dim, target_seed, tau);
  const ShiftSpec shift = train.with_parameter(shift_param);
  IntensityReport report(train, shift);
  if (samples > 0) {
    report = intensity_mc(train, shift, samples, seed, mc);
  } else {
    report.analytic = intensity_analytic(train, shift);
  }
  json result = intensity_report_json(report, samples > 0);
  result["seed"] = seed;

  RunManifest m;
  m.command = "intensity";
  m.config = {{"spec_train", spec_json_with_targets(train)},
              {"spec_shift", to_json(shift)},
              {"mc_samples", samples},
              {"seed", seed},
              {"stream_ids", {{"mc", streams::kIntensityMc}, {"pilot", streams::kIntensityPilot}}}};
  m.created_at = utc_timestamp();
  emit_json(result, a.out, m, out);
  return kExitOk;
}

struct NNArgs {
  std::string config;
  std::optional<std::string> train;
  std::optional<std::string> shift;
  std::optional<std::string> metric;
  std::optional<unsigned> threads;
  std::optional<std::string> per_point;
  std::optional<std::uint64_t> memory_budget;
  std::optional<std::string> out;
};

int run_nn_dist(const NNArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  const fs::path train_path = cfg.require(a.train, "train");
  const fs::path shift_path = cfg.require(a.shift, "shift");
  NNOptions opts;
  opts.metric = parse_metric(cfg.get(a.metric, "metric", std::string("euclidean")));
  opts.threads = cfg.get(a.threads, "threads", 0u);
  opts.memory_budget_bytes = cfg.get(a.memory_budget, "memory_budget_bytes", std::uint64_t{1} << 30);
  if (opts.memory_budget_bytes == 0) throw InvalidArgument("memory budget must be positive");
  const std::optional<std::string> per_point =
      a.per_point ? a.per_point
                  : (cfg.has("per_point") ? std::optional(cfg.get<std::string>(std::nullopt, "per_point", ""))
                                          : std::nullopt);
  const std::optional<std::string> out_path =
      a.out ? a.out : (cfg.has("out") ? std::optional(cfg.get<std::string>(std::nullopt, "out", "")) : std::nullopt);

  const Dataset shift = read_dataset(shift_path);
  ArrayFileReader reader(train_path);
  const bool streamed = reader.payload_bytes() > opts.memory_budget_bytes;
  if (reader.row_dim() != shift.row_dim()) {
    throw InvalidData("train rows have " + std::to_string(reader.row_dim()) + " values, shift rows have " +
                      std::to_string(shift.row_dim()));
  }
  NNResult r;
  std::size_t n_train = reader.rows();
  if (streamed) {
    r = one_nn_distance_streaming(reader, shift, opts);
  } else {
    const Dataset train = read_dataset(train_path);
    r = one_nn_distance(train, shift, opts);
  }

  RunManifest m;
  m.command = "nn-dist";
  m.config = {{"train", train_path.string()},
              {"shift", shift_path.string()},
              {"train_hash", hash_to_hex(hash_file(train_path))},
              {"shift_hash", hash_to_hex(hash_file(shift_path))},
              {"metric", to_string(opts.metric)},
              {"memory_budget_bytes", opts.memory_budget_bytes}};
  m.created_at = utc_timestamp();

  if (per_point) {
    std::ostringstream csv;
    csv << kPerPointHeader << '\n' << std::setprecision(9);
    for (std::size_t j = 0; j < r.per_point.size(); ++j) {
      csv << j << ',' << r.per_point[j] << ',' << r.argmin_indices[j] << '\n';
    }
    const fs::path path = *per_point;
    write_text(path, csv.str());
    if (!out_path) {
      m.add_file(fs::absolute(path).parent_path(), path, "csv");
      m.write(manifest_path_for(path));
    } else {
      const fs::path out_dir = fs::absolute(fs::path(*out_path)).parent_path();
      m.add_file(out_dir, path, "csv");
    }
  }
  const json result = {{"mean_distance", r.mean_distance},
                       {"metric", to_string(r.metric)},
                       {"n_train", n_train},
                       {"n_shift", shift.size()},
                       {"row_dim", shift.row_dim()},
                       {"streamed", streamed}};
  emit_json(result, out_path, m, out);
  return kExitOk;
}

struct SlopeArgs {
  std::string config;
  std::optional<std::string> points;
  std::optional<double> baseline;
  std::optional<std::string> x_axis;
  std::optional<bool> weighted;
  std::optional<std::string> out;
};

int run_slope(const SlopeArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  const fs::path path = cfg.require(a.points, "points");
  const auto points = read_points_csv(path);
  if (points.empty()) throw InvalidData(path.string() + ": no data rows");
  double baseline;
  if (a.baseline || cfg.has("baseline_accuracy")) {
    baseline = cfg.get(a.baseline, "baseline_accuracy", 0.0);
  } else {
    // The least-shifted row stands in for the unshifted split.
    const auto it = std::min_element(points.begin(), points.end(), [](const EvalPoint& p, const EvalPoint& q) {
      return p.shift_param < q.shift_param;
    });
    baseline = it->accuracy;
  }
  SlopeFitOptions opts;
  opts.x_axis = parse_x_axis(cfg.get(a.x_axis, "x_axis", std::string("shift_param")));
  opts.weighted = cfg.get(a.weighted, "weighted", false);
  const SlopeFit fit = fit_robustness_slope(points, baseline, opts);
  json result = to_json(fit);
  result["baseline_accuracy"] = baseline;
  result["weighted"] = opts.weighted;

  RunManifest m;
  m.command = "slope";
  m.config = {{"points", path.string()},
              {"points_hash", hash_to_hex(hash_file(path))},
              {"baseline_accuracy", baseline},
              {"x_axis", to_string(opts.x_axis)},
              {"weighted", opts.weighted}};
  m.created_at = utc_timestamp();
  emit_json(result, a.out, m, out);
  return kExitOk;
}

struct ToyGenArgs {
  std::string config;
  SpecOptions spec;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> stream;
  std::optional<std::size_t> classes;
  std::optional<double> gain;
  std::optional<std::string> latents;
  std::optional<std::string> latents_out;
  std::optional<std::string> out;
};

int run_toy_gen(const ToyGenArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  ToyDecoderConfig dec;
  dec.classes = cfg.get(a.classes, "classes", dec.classes);
  dec.squash_gain = cfg.get(a.gain, "squash_gain", dec.squash_gain);
  dec.validate();
  const fs::path path = cfg.require(a.out, "out");
  const std::optional<std::string> latents_in =
      a.latents ? a.latents
                : (cfg.has("latents") ? std::optional(cfg.get<std::string>(std::nullopt, "latents", "")) : std::nullopt);
  const std::optional<std::string> latents_out =
      a.latents_out ? a.latents_out
                    : (cfg.has("latents_out") ? std::optional(cfg.get<std::string>(std::nullopt, "latents_out", ""))
                                              : std::nullopt);

  RunManifest m;
  m.command = "toy-gen";
  m.created_at = utc_timestamp();
  LatentBatch batch;
  std::optional<ShiftedBatch> sampled;
  if (latents_in) {
    LatentFile file = read_latents(*latents_in);
    if (file.header.dim != dec.latent_dim) {
      throw InvalidData("toy decoder expects " + std::to_string(dec.latent_dim) + "-dimensional latents, file has " +
                        std::to_string(file.header.dim));
    }
    batch = std::move(file.batch);
    m.config = {{"latents", *latents_in}, {"latents_hash", hash_to_hex(hash_file(*latents_in))}};
  } else {
    const ShiftSpec spec = resolve_spec(a.spec, cfg, dec.latent_dim);
    const std::size_t n = cfg.get(a.n, "n", std::size_t{1000});
    const std::uint64_t seed = cfg.get(a.seed, "seed", std::uint64_t{0});
    const std::uint64_t stream = cfg.get(a.stream, "stream_id", std::uint64_t{0});
    sampled = sample_shifted_batch(spec, n, seed, stream,
                                   LabelRule::round_robin(static_cast<std::uint32_t>(dec.classes)));
    batch = sampled->batch;
    m.config = {{"spec", spec_json_with_targets(spec)},
                {"n", n},
                {"seed", seed},
                {"stream_id", stream},
                {"label_rule", "round_robin"}};
  }
  m.config["classes"] = dec.classes;
  m.config["squash_gain"] = dec.squash_gain;
  m.config["image_shape"] = {dec.height, dec.width, dec.channels};

  const Dataset images = toy_decode_batch(batch, dec);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const WriteStats stats = write_images(images, path);
  const fs::path dir = fs::absolute(path).parent_path();
  m.add_file(dir, path, "CSIM", stats.clamped_values);
  if (latents_out) {
    if (!sampled) throw InvalidArgument("--latents-out needs sampled latents, not --latents");
    write_latents(*sampled, *latents_out);
    m.add_file(dir, *latents_out, "CSLT");
  }
  const fs::path mpath = manifest_path_for(path);
  m.write(mpath);
  out << json{{"out", path.string()},
              {"n", images.size()},
              {"bytes", stats.bytes},
              {"hash", hash_to_hex(stats.hash)},
              {"clamped_values", stats.clamped_values},
              {"manifest", mpath.string()}}
             .dump()
      << '\n';
  return kExitOk;
}

struct ToyRunArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> family;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_test;
  std::optional<unsigned> threads;
  std::optional<std::string> metric;
  std::optional<std::size_t> dump_images;
  std::optional<bool> train_prior;
};

int run_toy_run(const ToyRunArgs& a, std::ostream& out) {
  Settings cfg;
  cfg.load(a.config);
  json merged = cfg.raw();
  if (a.family) merged["family"] = *a.family;
  if (a.seed) merged["seed"] = *a.seed;
  if (a.n_train) merged["n_train"] = *a.n_train;
  if (a.n_test) merged["n_test"] = *a.n_test;
  if (a.threads) merged["threads"] = *a.threads;
  if (a.metric) merged["metric"] = *a.metric;
  if (a.dump_images) merged["dump_images"] = *a.dump_images;
  if (a.train_prior) merged["train_on_prior"] = *a.train_prior;
  merged.erase("out");
  const fs::path dir = cfg.require(a.out, "out");
  const ExperimentConfig exp = ExperimentConfig::from_json(merged);
  const ExperimentReport report = run_experiment(exp);
  write_experiment_outputs(report, dir);
  json summary = {{"out", dir.string()},
                  {"baseline_accuracy", report.baseline_accuracy},
                  {"slope_shift_param", report.fit_shift_param.slope},
                  {"slope_nn_distance", report.fit_nn_distance.slope},
                  {"r_squared_nn_distance", report.fit_nn_distance.r_squared}};
  summary["delta_nn_correlation"] =
      report.delta_nn_correlation ? json(*report.delta_nn_correlation) : json(nullptr);
  out << summary.dump() << '\n';
  return kExitOk;
}

/// Checks one CSV against the known report headers.
void validate_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  header = strip_cr(header);
  std::size_t width = 0;
  if (header == kPointsHeader) {
    read_points_csv(path);
    return;
  }
  if (header == kPerPointHeader) width = 3;
  if (width == 0) throw InvalidData(path.string() + ": unrecognized CSV header '" + header + "'");
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != width) throw InvalidData(where + ": expected " + std::to_string(width) + " fields");
    for (const auto& f : fields) parse_number(f, where);
  }
}

json validate_one(const fs::path& path) {
  json j = {{"path", path.string()}};
  const auto bytes = read_file_bytes(path);
  const bool binary = bytes.size() >= 4 && bytes[0] == 'C' && bytes[1] == 'S';
  if (binary || (path.extension() != ".json" && path.extension() != ".csv")) {
    const FileFormat fmt = detect_format(bytes);
    j["format"] = to_string(fmt);
    if (fmt == FileFormat::latents) {
      const LatentFile f = decode_latents(bytes);
      j["n"] = f.header.count;
      j["d"] = f.header.dim;
      j["family"] = to_string(f.header.family);
    } else {
      const Dataset d = decode_images(bytes);
      j["n"] = d.size();
      j["shape"] = d.sample_shape();
    }
  } else if (path.extension() == ".csv") {
    validate_csv(path);
    j["format"] = "csv";
  } else {
    const json doc = load_json_file(path);
    if (!doc.is_object()) throw InvalidData(path.string() + ": JSON outputs must be objects");
    if (doc.contains("tool_version") && doc.contains("files")) {
      const auto problems = verify_manifest(path);
      if (!problems.empty()) {
        std::string msg = path.string() + ": manifest does not verify:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw InvalidData(msg);
      }
      j["format"] = "manifest";
      j["files"] = RunManifest::read(path).files.size();
    } else {
      j["format"] = "json";
    }
  }
  j["hash"] = hash_to_hex(fnv1a64(bytes));
  const fs::path mpath = manifest_path_for(path);
  if (fs::exists(mpath)) {
    const auto problems = verify_manifest(mpath);
    if (!problems.empty()) throw InvalidData(path.string() + ": does not match " + mpath.string());
    j["manifest"] = mpath.string();
  }
  j["ok"] = true;
  return j;
}

struct ValidateArgs {
  std::vector<std::string> files;
  std::vector<std::string> manifests;
};

int run_validate(const ValidateArgs& a, std::ostream& out) {
  if (a.files.empty() && a.manifests.empty()) throw InvalidArgument("validate needs a file or --manifest");
  for (const auto& f : a.files) out << validate_one(f).dump() << '\n';
  for (const auto& m : a.manifests) {
    const auto problems = verify_manifest(m);
    if (!problems.empty()) {
      std::string msg = m + ": manifest does not verify:";
      for (const auto& p : problems) msg += " " + p + ";";
      throw InvalidData(msg);
    }
    out << json{{"path", m}, {"format", "manifest"}, {"ok", true}}.dump() << '\n';
  }
  return kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& message, int code,
                  const ParseError* parse = nullptr) {
  json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (parse) {
    j["rule"] = parse->rule();
    j["offset"] = parse->offset();
  }
  err << j.dump() << '\n';
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Controllable distribution shifts in latent space", "cshift"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenLatentsArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-latents", "sample a shifted latent batch into a CSLT file");
  gen_cmd->add_option("--config", gen.config, "JSON config with the flag names as keys");
  add_spec_flags(gen_cmd, gen.spec, true);
  gen_cmd->add_option("--n", gen.n, "number of codes");
  gen_cmd->add_option("--seed", gen.seed, "sampling seed");
  gen_cmd->add_option("--stream", gen.stream, "stream id");
  gen_cmd->add_option("--classes", gen.classes, "round-robin label count");
  gen_cmd->add_option("--out", gen.out, "output CSLT path");

  IntensityArgs inten;
  auto* int_cmd = app.add_subcommand("intensity", "analytic and Monte Carlo shift intensity");
  int_cmd->add_option("--config", inten.config, "JSON config");
  int_cmd->add_option("--family", inten.family, "extend, overlap or truncation");
  int_cmd->add_option("--train-param", inten.train_param, "theta or R of the training subset");
  int_cmd->add_option("--shift-param", inten.shift_param, "theta or R of the shifted subset");
  int_cmd->add_option("--d", inten.dim, "latent dimension");
  int_cmd->add_option("--target-seed", inten.target_seed, "seed of the target pair");
  int_cmd->add_option("--tau", inten.tau, "extend interpolation convention");
  int_cmd->add_option("--samples", inten.samples, "Monte Carlo samples (0 for analytic only)");
  int_cmd->add_option("--seed", inten.seed, "Monte Carlo seed");
  int_cmd->add_option("--threads", inten.threads, "worker threads (0 = all cores)");
  int_cmd->add_option("--out", inten.out, "also write the report to this JSON file");

  NNArgs nn;
  auto* nn_cmd = app.add_subcommand("nn-dist", "1-NN dataset distance between two files");
  nn_cmd->add_option("--config", nn.config, "JSON config");
  nn_cmd->add_option("--train", nn.train, "train set (CSIM or CSLT)");
  nn_cmd->add_option("--shift", nn.shift, "shifted set (CSIM or CSLT)");
  nn_cmd->add_option("--metric", nn.metric, "euclidean or cosine");
  nn_cmd->add_option("--threads", nn.threads, "worker threads (0 = all cores)");
  nn_cmd->add_option("--per-point", nn.per_point, "CSV of per-point distances");
  nn_cmd->add_option("--memory-budget", nn.memory_budget, "bytes of train rows held in memory");
  nn_cmd->add_option("--out", nn.out, "also write the result to this JSON file");

  SlopeArgs slope;
  auto* slope_cmd = app.add_subcommand("slope", "fit the robustness slope to a points CSV");
  slope_cmd->add_option("--config", slope.config, "JSON config");
  slope_cmd->add_option("--points", slope.points, "CSV with shift_param,nn_distance,accuracy,n_test");
  slope_cmd->add_option("--baseline", slope.baseline, "accuracy on the unshifted split");
  slope_cmd->add_option("--x-axis", slope.x_axis, "shift_param or nn_distance");
  slope_cmd->add_flag("--weighted", slope.weighted, "weight points by n_test");
  slope_cmd->add_option("--out", slope.out, "also write the fit to this JSON file");

  ToyGenArgs toy;
  auto* toy_cmd = app.add_subcommand("toy-gen", "render toy images of a shifted latent batch into CSIM");
  toy_cmd->add_option("--config", toy.config, "JSON config");
  add_spec_flags(toy_cmd, toy.spec, false);
  toy_cmd->add_option("--n", toy.n, "number of images");
  toy_cmd->add_option("--seed", toy.seed, "sampling seed");
  toy_cmd->add_option("--stream", toy.stream, "stream id");
  toy_cmd->add_option("--classes", toy.classes, "number of archetypes (2 or 3)");
  toy_cmd->add_option("--gain", toy.gain, "squash gain");
  toy_cmd->add_option("--latents", toy.latents, "decode this CSLT file instead of sampling");
  toy_cmd->add_option("--latents-out", toy.latents_out, "also write the sampled latents");
  toy_cmd->add_option("--out", toy.out, "output CSIM path");

  ToyRunArgs run;
  auto* run_cmd = app.add_subcommand("toy-run", "train and evaluate the toy robustness experiment");
  run_cmd->add_option("--config", run.config, "experiment JSON config");
  run_cmd->add_option("--out", run.out, "report directory");
  run_cmd->add_option("--family", run.family, "extend, overlap or truncation");
  run_cmd->add_option("--seed", run.seed, "experiment seed");
  run_cmd->add_option("--n-train", run.n_train, "training images");
  run_cmd->add_option("--n-test", run.n_test, "test images per grid point");
  run_cmd->add_option("--threads", run.threads, "worker threads (0 = all cores)");
  run_cmd->add_option("--metric", run.metric, "euclidean or cosine");
  run_cmd->add_option("--dump-images", run.dump_images, "preview images per grid point");
  run_cmd->add_flag("--train-prior", run.train_prior, "train on the full prior support");

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "check files and manifests written by this tool");
  val_cmd->add_option("files", val.files, "CSLT, CSIM, CSV or JSON files");
  val_cmd->add_option("--manifest", val.manifests, "manifest to verify");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("cshift");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen_latents(gen, out);
    if (*int_cmd) return run_intensity(inten, out);
    if (*nn_cmd) return run_nn_dist(nn, out);
    if (*slope_cmd) return run_slope(slope, out);
    if (*toy_cmd) return run_toy_gen(toy, out);
    if (*run_cmd) return run_toy_run(run, out);
    if (*val_cmd) return run_validate(val, out);
  } catch (const ParseError& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, to_string(e.kind()), e.what(), code, &e);
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(err, to_string(ErrorKind::io), e.what(), kExitData);
    return kExitData;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), kExitData);
    return kExitData;
  }
  report_error(err, "usage", "no subcommand given", kExitUsage);
  return kExitUsage;
}

}  // namespace cshift
