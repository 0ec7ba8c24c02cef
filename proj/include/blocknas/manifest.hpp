#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace blocknas {

inline constexpr const char* kVersion = "0.1.0";

// Provenance record written next to every output artifact. Two runs with equal
// manifests (ignoring wall_seconds) produce identical outputs.
struct RunManifest {
  std::string version = kVersion;
  std::string subcommand;
  nlohmann::json options = nlohmann::json::object();
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex
  std::map<std::string, std::uint64_t> seeds;       // label -> derived seed
  double wall_seconds = 0.0;

  void hash_input(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
  // "<artifact>.manifest.json".
  static std::filesystem::path path_for(const std::filesystem::path& artifact);
  void write_for(const std::filesystem::path& artifact) const;
};

std::string hash_file(const std::filesystem::path& path);

}  // namespace blocknas
