#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpgaze/meta.hpp"
#include "tpgaze/model.hpp"
#include "tpgaze/personalize.hpp"
#include "tpgaze/synthgaze.hpp"
#include "tpgaze/training.hpp"

namespace tpgaze {

struct AblateConfig {
  /// Root seeds; each one gets its own run directory and full pipeline.
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> sample_counts = {1, 5, 10, 15};

  friend bool operator==(const AblateConfig&, const AblateConfig&) = default;
};

/// Seeds of the individual stages, all split from the root seed.
struct StageSeeds {
  std::uint64_t data = 0;
  std::uint64_t model_init = 0;
  std::uint64_t pretrain = 0;
  std::uint64_t meta = 0;
  std::uint64_t personalize = 0;

  friend bool operator==(const StageSeeds&, const StageSeeds&) = default;
};

StageSeeds derive_stage_seeds(std::uint64_t root);

/// Everything a pipeline command needs. The per-stage `seed` members of the
/// nested configs are ignored on input and filled from the root seed by
/// `resolve`.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "runs/desk";
  BenchmarkConfig data;
  ModelConfig model;
  TrainConfig train;
  MetaConfig meta;
  PersonalizeConfig personalize;
  AblateConfig ablate;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Defaults used by every command when no file is given.
RunConfig default_run_config();

/// Fills stage seeds from the root seed and validates every section.
/// Throws ConfigError naming the section and field.
void resolve(RunConfig& config);

/// Strict JSON: unknown keys and wrong types throw ConfigError with the
/// dotted key path. Missing keys keep the value already in `base`. Cross-
/// section checks are left to `resolve`, so flags can still override.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = default_run_config());
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = default_run_config());

/// Resolved-config echo. Feeding it back through run_config_from_json and
/// `resolve` reproduces `config` exactly.
nlohmann::json to_json(const RunConfig& config);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace tpgaze
