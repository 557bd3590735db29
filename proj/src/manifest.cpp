#include "cshift/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "cshift/error.hpp"
#include "cshift/formats.hpp"
#include "cshift/hash.hpp"

namespace cshift {

std::uint64_t hash_file(const std::filesystem::path& path) { return fnv1a64(read_file_bytes(path)); }

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json files_json = nlohmann::json::array();
  for (const auto& f : files) {
    files_json.push_back({{"path", f.path},
                          {"format", f.format},
                          {"bytes", f.bytes},
                          {"hash", hash_to_hex(f.hash)},
                          {"clamped_values", f.clamped_values}});
  }
  return {{"tool_version", tool_version},
          {"command", command},
          {"config", config},
          {"files", files_json},
          {"created_at", created_at}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.created_at = j.value("created_at", "");
    for (const auto& f : j.at("files")) {
      ManifestFile file;
      file.path = f.at("path").get<std::string>();
      file.format = f.at("format").get<std::string>();
      file.bytes = f.at("bytes").get<std::uint64_t>();
      file.hash = std::stoull(f.at("hash").get<std::string>(), nullptr, 16);
      file.clamped_values = f.value("clamped_values", std::uint64_t{0});
      m.files.push_back(std::move(file));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidData(std::string("malformed manifest: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InvalidData(std::string("malformed manifest hash: ") + e.what());
  }
  return m;
}

void RunManifest::add_file(const std::filesystem::path& manifest_dir,
                           const std::filesystem::path& file, const std::string& format,
                           std::uint64_t clamped_values) {
  const auto bytes = read_file_bytes(file);
  ManifestFile entry;
  entry.path = std::filesystem::relative(std::filesystem::absolute(file),
                                         std::filesystem::absolute(manifest_dir))
                   .generic_string();
  entry.format = format;
  entry.bytes = bytes.size();
  entry.hash = fnv1a64(bytes);
  entry.clamped_values = clamped_values;
  files.push_back(std::move(entry));
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidData("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path) {
  const RunManifest m = RunManifest::read(manifest_path);
  const auto dir = std::filesystem::absolute(manifest_path).parent_path();
  std::vector<std::string> problems;
  for (const auto& f : m.files) {
    const auto p = dir / f.path;
    if (!std::filesystem::exists(p)) {
      problems.push_back(f.path + ": missing");
      continue;
    }
    const auto bytes = read_file_bytes(p);
    if (bytes.size() != f.bytes || fnv1a64(bytes) != f.hash) {
      problems.push_back(f.path + ": hash mismatch");
    }
  }
  return problems;
}

}  // namespace cshift
