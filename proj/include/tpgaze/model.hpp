#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tpgaze/autodiff.hpp"
#include "tpgaze/tensor.hpp"

namespace tpgaze {

struct ConvSpec {
  int out_channels = 8;
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Architecture of the gaze regressor: a stack of conv+ReLU layers, global
/// average pooling, and a linear head producing (pitch, yaw).
struct ModelConfig {
  int input_channels = 1;
  int input_size = 32;
  std::vector<ConvSpec> convs = {{8, 3, 1, 1}, {16, 3, 2, 1}, {16, 3, 1, 1},
                                 {32, 3, 2, 1}, {32, 3, 1, 1}, {32, 3, 1, 1}};
  /// Width of the pooled feature vector; must equal the last conv's channels.
  int head_dim = 32;
  /// Number of leading conv layers whose padding is a trainable prompt.
  int prompted_layers = 3;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Input geometry of one conv layer before padding.
struct LayerGeometry {
  int channels = 0;
  int height = 0;
  int width = 0;
  int pad = 0;

  std::size_t border_count() const { return ops::border_count(channels, height, width, pad); }
  friend bool operator==(const LayerGeometry&, const LayerGeometry&) = default;
};

/// Throws ConfigError naming the first offending layer.
void validate(const ModelConfig& config);

/// Per-layer input geometry derived from the config.
std::vector<LayerGeometry> layer_geometry(const ModelConfig& config);

/// Sum of border sizes over the first `prefix` layers.
std::int64_t count_prompt_params(std::span<const LayerGeometry> geometry, int prefix);

/// Main-path padded convs of ResNet-18 at 224x224 input (downsample 1x1
/// convs have no padding and are omitted).
std::vector<LayerGeometry> resnet18_geometry();

/// Trainable parameter count of torchvision's ResNet-18 with a 1000-way head.
inline constexpr std::int64_t kResNet18Params = 11'689'512;
/// Backbone-only count (no fully connected head).
inline constexpr std::int64_t kResNet18BackboneParams = 11'176'512;

/// Network parameters theta (canonical order: conv{i}.weight, conv{i}.bias,
/// ..., head.weight, head.bias) and prompts p (one flat block per prompted
/// layer, named prompt{i}).
template <class T>
struct Weights {
  std::vector<Tensor<T>> theta;
  std::vector<Tensor<T>> prompts;

  friend bool operator==(const Weights&, const Weights&) = default;
};

template <class To, class From>
Weights<To> weights_cast(const Weights<From>& w) {
  Weights<To> out;
  for (const auto& t : w.theta) out.theta.push_back(tensor_cast<To>(t));
  for (const auto& t : w.prompts) out.prompts.push_back(tensor_cast<To>(t));
  return out;
}

std::vector<std::string> theta_names(const ModelConfig& config);
std::vector<std::string> prompt_names(const ModelConfig& config);

struct ParamPartition {
  std::set<std::string> frozen_ids;
  std::set<std::string> prompt_ids;
};

ParamPartition make_partition(const ModelConfig& config);

struct Model {
  ModelConfig config;
  Weights<float> weights;
  ParamPartition partition;
};

/// Fan-in uniform init of theta, zero prompts. Deterministic per seed.
Model build_model(const ModelConfig& config, std::uint64_t seed);

/// All-zero prompt blocks matching the config.
Weights<float> zero_prompts_like(const ModelConfig& config, const Weights<float>& w);

/// Fills every prompt with i.i.d. N(0, 1) draws.
void gaussian_prompts(Weights<float>& w, std::uint64_t seed);

/// Total number of prompt scalars.
std::size_t prompt_count(const Weights<float>& w);

/// Leaves for a full weight set.
struct BoundWeights {
  std::vector<Var> theta;
  std::vector<Var> prompts;
};

template <class T>
BoundWeights bind_weights(Tape<T>& tape, const Weights<T>& w, bool theta_grad, bool prompt_grad) {
  BoundWeights b;
  for (const auto& t : w.theta) b.theta.push_back(tape.leaf(t, theta_grad));
  for (const auto& t : w.prompts) b.prompts.push_back(tape.leaf(t, prompt_grad));
  return b;
}

/// f_{theta,p}(x): x is [N,C,S,S]; returns [N,2] rows of (pitch, yaw).
/// Prompted layers pad with their prompt block, the rest pad with zeros.
template <class T>
Var forward(Tape<T>& tape, const ModelConfig& config, const BoundWeights& w, Var x);

/// Same network with every layer zero-padded; prompts are ignored.
template <class T>
Var forward_zero_padded(Tape<T>& tape, const ModelConfig& config, const BoundWeights& w, Var x);

/// Inference helper on float weights, no gradients.
Tensor<float> predict(const ModelConfig& config, const Weights<float>& w, const Tensor<float>& images);

}  // namespace tpgaze
