#pragma once

// Checkpoint file: "TCKP", uint64 header length, a JSON header holding the
// model config and {name, shape, offset} per parameter, then the parameter
// values as little-endian float64 in registration order.

#include <filesystem>

#include <json.hpp>

#include "tcgen/dit.hpp"

namespace tcgen {

void save_checkpoint(const DiTModel& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Rebuilds the model from the stored config and overwrites every parameter.
DiTModel load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace tcgen
