#include "tcgen/provenance.hpp"

#include <cstdio>
#include <fstream>

#include "tcgen/error.hpp"

namespace tcgen {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (const unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

nlohmann::json Provenance::to_json() const {
  auto describe = [](const std::vector<std::filesystem::path>& files) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : files) {
      nlohmann::json entry{{"path", f.generic_string()}};
      std::error_code ec;
      if (std::filesystem::is_regular_file(f, ec))
        entry["fnv1a64"] = file_hash(f);
      else if (std::filesystem::is_directory(f, ec))
        entry["kind"] = "directory";
      else
        entry["missing"] = true;
      out.push_back(std::move(entry));
    }
    return out;
  };
  return {{"subcommand", subcommand}, {"seed", seed},           {"config", config},
          {"inputs", describe(inputs)}, {"outputs", describe(outputs)}};
}

std::filesystem::path provenance_path(const std::filesystem::path& artifact) {
  std::filesystem::path p = artifact;
  p += ".provenance.json";
  return p;
}

std::filesystem::path write_provenance(const std::filesystem::path& artifact, const Provenance& p) {
  const auto path = provenance_path(artifact);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << p.to_json().dump(2) << '\n';
  return path;
}

}  // namespace tcgen
