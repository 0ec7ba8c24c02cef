#include "blocknas/manifest.hpp"

#include <fstream>
#include <sstream>

#include "blocknas/error.hpp"
#include "blocknas/hashing.hpp"

namespace blocknas {

using nlohmann::json;

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

void RunManifest::hash_input(const std::filesystem::path& path) {
  input_hashes[path.string()] = hash_file(path);
}

json RunManifest::to_json() const {
  return json{{"version", version},         {"subcommand", subcommand},
              {"options", options},         {"input_hashes", input_hashes},
              {"seeds", seeds},             {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const json& doc) {
  RunManifest m;
  m.version = doc.at("version").get<std::string>();
  m.subcommand = doc.at("subcommand").get<std::string>();
  m.options = doc.at("options");
  m.input_hashes = doc.at("input_hashes").get<std::map<std::string, std::string>>();
  m.seeds = doc.at("seeds").get<std::map<std::string, std::uint64_t>>();
  m.wall_seconds = doc.at("wall_seconds").get<double>();
  return m;
}

std::filesystem::path RunManifest::path_for(const std::filesystem::path& artifact) {
  return std::filesystem::path(artifact.string() + ".manifest.json");
}

void RunManifest::write_for(const std::filesystem::path& artifact) const {
  const auto path = path_for(artifact);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace blocknas
