#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tpgaze/gaze.hpp"
#include "tpgaze/model.hpp"
#include "tpgaze/synthgaze.hpp"

namespace tpgaze {

enum class Strategy {
  prompt_only,     // tune prompts from the meta initialization, theta frozen
  update_all,      // tune theta and prompts together
  no_meta_prompt,  // tune prompts from a fresh N(0,1) draw
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

struct PersonalizeConfig {
  int num_images = 5;  // first-K adaptation images, no sampling
  double lr = 0.01;
  int steps = 50;
  int update_all_steps = 5;
  Strategy strategy = Strategy::prompt_only;
  std::uint64_t seed = 1;

  friend bool operator==(const PersonalizeConfig&, const PersonalizeConfig&) = default;
};

void validate(const PersonalizeConfig& config);

/// Minimizes the symmetry loss on the first `num_images` adaptation images
/// with Adam(lr, beta 0.5/0.95). Only the split's images are visible here.
/// Throws ConfigError naming the person if too few images exist.
Weights<float> personalize(const ModelConfig& model, const Weights<float>& start, const AdaptationSplit& adapt,
                           int person_id, const PersonalizeConfig& config);

/// Mean angular error (degrees) over a person's labeled split.
double person_error(const ModelConfig& model, const Weights<float>& w, const PersonDataset& person);

struct EvalRow {
  int person_id = 0;
  int n_adapt = 0;
  std::string strategy;
  double error_deg = 0.0;
};

struct EvalReport {
  std::string strategy;
  int n_adapt = 0;
  std::uint64_t seed = 0;
  std::vector<EvalRow> rows;
  double mean_error = 0.0;  // arithmetic mean of the per-person errors
};

/// Per-person error of `weights[i]` on `persons[i]`; one weight set may be
/// shared by passing a single entry. Persons run on up to `threads` workers
/// and are reduced in index order.
EvalReport evaluate(const ModelConfig& model, std::span<const Weights<float>> weights,
                    std::span<const PersonDataset> persons, const std::string& strategy, int n_adapt,
                    std::uint64_t seed, int threads = 1);

}  // namespace tpgaze
