#pragma once

// Sidecar records `<artifact>.provenance.json` describing how an artifact
// was produced: subcommand, resolved config, seed, and content hashes of
// every input and output. Sidecars hold no wall-clock data, so a rerun with
// the same inputs reproduces them byte for byte.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tcgen {

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ull);

/// FNV-1a of a file's bytes, as 16 lowercase hex digits.
std::string file_hash(const std::filesystem::path& path);

struct Provenance {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  nlohmann::json to_json() const;
};

std::filesystem::path provenance_path(const std::filesystem::path& artifact);

/// Writes the sidecar next to `artifact` and returns its path.
std::filesystem::path write_provenance(const std::filesystem::path& artifact, const Provenance& p);

}  // namespace tcgen
