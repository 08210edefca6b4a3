#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tnn/model.hpp"

namespace tnn {

/// Checkpoint layout (version 1):
///   8 bytes   magic "TNNCKPT1"
///   uint32    format version, little endian
///   uint64    header length in bytes, little endian
///   header    UTF-8 JSON: dims, networks, seed, parameter_count, extra
///   uint64    parameter count, little endian
///   float64[] flat parameters (flatten_params order), little endian
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  TnnModel model;
  nlohmann::json extra = nlohmann::json::object();  // caller-defined run state
};

nlohmann::json dims_to_json(const std::vector<DimensionSpec>& dims);
std::vector<DimensionSpec> dims_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const TnnModel& model,
                     const nlohmann::json& extra = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads and checks that dims and architectures match `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const TnnModel& expected);

}  // namespace tnn
