#pragma once

#include "neuroplan/nn/net.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace neuroplan::nn {

/// Parameter checkpoint file layout:
///   line 1   : UTF-8 JSON header terminated by '\n'
///              {"format": "neuroplan-params", "version": 1, "spec": {...},
///               "created": "<ISO-8601 UTC>", "seed": <uint>, "count": <n>, "encoding": "f64le"}
///   remainder: exactly n IEEE-754 binary64 values, little-endian, in the flat
///              NetParams layout (per layer: row-major n_out x n_in weights, then biases).
struct Checkpoint
{
    NetSpec spec;
    NetParams params;
    std::uint64_t seed = 0;
    std::string created;
};

[[nodiscard]] nlohmann::json spec_to_json(const NetSpec& spec);
[[nodiscard]] NetSpec spec_from_json(const nlohmann::json& j);

/// Writes a checkpoint; `created` defaults to the current UTC time.
void save_checkpoint(const std::filesystem::path& file, const NetSpec& spec, const NetParams& params,
                     std::uint64_t seed, std::string created = {});

/// Throws std::runtime_error on malformed headers, unknown versions or truncated data.
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& file);

} // namespace neuroplan::nn
