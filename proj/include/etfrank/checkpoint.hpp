#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "etfrank/features.hpp"
#include "etfrank/nn.hpp"

namespace etfrank {

/// Everything needed to score with a trained model.
struct CheckpointFile {
    nn::Checkpoint checkpoint;
    nn::TrainConfig train_config;
    FeatureContext features;
    std::string config_hash;
};

/// Hex FNV-1a 64 of the canonical JSON form of the training config and seed.
std::string train_config_hash(const nn::TrainConfig& cfg, std::uint64_t seed);

/// JSON container. Doubles round-trip exactly.
void save_checkpoint(const std::string& path, const CheckpointFile& file);

/// Validates every shape; when `expected_features` is given the stored
/// feature count must match it (ShapeError otherwise).
CheckpointFile load_checkpoint(const std::string& path, std::optional<std::size_t> expected_features = std::nullopt);

}  // namespace etfrank
