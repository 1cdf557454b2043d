#pragma once

// Versioned binary checkpoint: an 8-byte magic, a u32 version, a u64 length,
// a JSON header (architecture tag, shape, tensor names and shapes, Adam
// hyper-parameters), then every tensor as little-endian float64 in header
// order, followed by the Adam moments when present.

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "dualnav/neuralnet.hpp"

namespace dualnav::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  std::optional<AdamState> adam;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json shape_to_json(const NetworkShape& s);
NetworkShape shape_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     const AdamState* adam = nullptr,
                     const nlohmann::json& meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dualnav::nn
