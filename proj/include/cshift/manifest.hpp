#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace cshift {

inline constexpr const char* kToolVersion = "0.3.0";

struct ManifestFile {
  std::string path;  // relative to the manifest's directory
  std::string format;
  std::uint64_t bytes = 0;
  std::uint64_t hash = 0;
  std::uint64_t clamped_values = 0;
};

/// Provenance record written next to every output. `config` echoes the fully
/// resolved configuration (seeds, stream ids, grids, metric, specs) so a
/// re-run reproduces files with identical hashes.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ManifestFile> files;
  std::string created_at;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void add_file(const std::filesystem::path& manifest_dir, const std::filesystem::path& file,
                const std::string& format, std::uint64_t clamped_values = 0);
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// Conventional manifest path for a single-file output: "<file>.manifest.json".
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

/// Files whose current hash or size differs from the manifest (or that are
/// missing). Empty means the manifest verifies.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

std::string utc_timestamp();

}  // namespace cshift
