#include "tcgen/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tcgen/error.hpp"

namespace tcgen {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const DiTModel& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["config"] = model.config().to_json();
  header["metadata"] = metadata;
  auto& params = header["params"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : model.parameters().items()) {
    params.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write("TCKP", 4);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [_, t] : model.parameters().items())
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

DiTModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "TCKP", 4) != 0)
    throw Error(ErrorCode::kFormat, path.string() + ": not a checkpoint");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 4, sizeof len);
  if (12 + len > bytes.size()) throw Error(ErrorCode::kFormat, path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<long>(len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": bad header: " + e.what());
  }
  DiTModel model(DiTConfig::from_json(header.at("config")));
  const char* data = bytes.data() + 12 + len;
  const std::size_t payload = bytes.size() - 12 - len;
  const std::size_t available = payload / sizeof(double);
  auto& items = model.parameters().items();
  const auto& params = header.at("params");
  if (params.size() != items.size())
    throw Error(ErrorCode::kFormat, path.string() + ": parameter count does not match config");
  std::size_t total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& [name, t] = items[i];
    const auto& p = params[i];
    if (p.at("name").get<std::string>() != name || p.at("shape").get<ad::Shape>() != t.shape())
      throw Error(ErrorCode::kFormat, path.string() + ": parameter " + std::to_string(i) +
                                          " does not match '" + name + "'");
    const auto offset = p.at("offset").get<std::size_t>();
    if (offset + t.size() > available)
      throw Error(ErrorCode::kFormat, path.string() + ": truncated data for '" + name + "'");
    std::memcpy(t.mutable_values().data(), data + offset * sizeof(double), t.size() * sizeof(double));
    total += t.size();
  }
  if (total * sizeof(double) != payload)
    throw Error(ErrorCode::kFormat, path.string() + ": trailing data after parameters");
  if (metadata != nullptr) *metadata = header.value("metadata", nlohmann::json::object());
  return model;
}

}  // namespace tcgen
