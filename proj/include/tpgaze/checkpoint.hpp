#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "tpgaze/model.hpp"

namespace tpgaze {

inline constexpr int kCheckpointFormatVersion = 1;

/// A checkpoint is a directory holding `manifest.json` and one raw blob of
/// little-endian float32 values (row-major) per parameter, named
/// `<parameter id>.bin`. The manifest lists the model config, the seeds that
/// produced the weights, the parameter partition, and every tensor in
/// canonical order (theta first, then prompts) with its shape and file.
struct Checkpoint {
  ModelConfig config;
  Weights<float> weights;
  /// Free-form provenance, e.g. {"root", 1}, {"pretrain", ...}.
  std::map<std::string, std::uint64_t> seeds;
  /// Stage that wrote the checkpoint ("pretrain", "meta", "personalize").
  std::string stage;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);

/// Throws IoError naming the missing or malformed file, and DimensionError
/// when a blob's size disagrees with its declared shape.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Loads and checks that the stored architecture equals `expected`; a
/// mismatch throws ConfigError naming the checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig& expected);

}  // namespace tpgaze
