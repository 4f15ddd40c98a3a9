#include "tpgaze/model.hpp"

#include <cmath>
#include <random>

namespace tpgaze {

void validate(const ModelConfig& config) {
  if (config.input_channels < 1) throw ConfigError("model: input_channels must be >= 1");
  if (config.input_size < 1) throw ConfigError("model: input_size must be >= 1");
  if (config.convs.empty()) throw ConfigError("model: at least one conv layer is required");
  if (config.prompted_layers < 0 || config.prompted_layers > static_cast<int>(config.convs.size())) {
    throw ConfigError("model: prompted_layers " + std::to_string(config.prompted_layers) +
                      " outside [0, " + std::to_string(config.convs.size()) + "]");
  }
  int size = config.input_size;
  for (std::size_t i = 0; i < config.convs.size(); ++i) {
    const ConvSpec& c = config.convs[i];
    const std::string where = "model: conv layer " + std::to_string(i);
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1 || c.pad < 0) {
      throw ConfigError(where + " has a non-positive channel/kernel/stride or negative pad");
    }
    if (static_cast<int>(i) < config.prompted_layers && c.pad < 1) {
      throw ConfigError(where + " is prompted but has pad width 0");
    }
    const int padded = size + 2 * c.pad;
    if (padded < c.kernel) {
      throw ConfigError(where + " spatial size " + std::to_string(padded) + " is below kernel " +
                        std::to_string(c.kernel));
    }
    size = (padded - c.kernel) / c.stride + 1;
  }
  if (config.head_dim != config.convs.back().out_channels) {
    throw ConfigError("model: head_dim " + std::to_string(config.head_dim) +
                      " must equal the last conv's channels " +
                      std::to_string(config.convs.back().out_channels));
  }
}

std::vector<LayerGeometry> layer_geometry(const ModelConfig& config) {
  validate(config);
  std::vector<LayerGeometry> geo;
  int channels = config.input_channels;
  int size = config.input_size;
  for (const ConvSpec& c : config.convs) {
    geo.push_back({channels, size, size, c.pad});
    size = (size + 2 * c.pad - c.kernel) / c.stride + 1;
    channels = c.out_channels;
  }
  return geo;
}

std::int64_t count_prompt_params(std::span<const LayerGeometry> geometry, int prefix) {
  if (prefix < 0 || prefix > static_cast<int>(geometry.size())) {
    throw ConfigError("count_prompt_params: prefix " + std::to_string(prefix) + " outside [0, " +
                      std::to_string(geometry.size()) + "]");
  }
  std::int64_t total = 0;
  for (int i = 0; i < prefix; ++i) total += static_cast<std::int64_t>(geometry[static_cast<std::size_t>(i)].border_count());
  return total;
}

std::vector<LayerGeometry> resnet18_geometry() {
  std::vector<LayerGeometry> g;
  g.push_back({3, 224, 224, 3});  // conv1 7x7/2
  // After the stride-2 max pool the maps are 56x56.
  for (int i = 0; i < 4; ++i) g.push_back({64, 56, 56, 1});  // layer1
  g.push_back({64, 56, 56, 1});                               // layer2.0.conv1 (stride 2)
  for (int i = 0; i < 3; ++i) g.push_back({128, 28, 28, 1});
  g.push_back({128, 28, 28, 1});                              // layer3.0.conv1
  for (int i = 0; i < 3; ++i) g.push_back({256, 14, 14, 1});
  g.push_back({256, 14, 14, 1});                              // layer4.0.conv1
  for (int i = 0; i < 3; ++i) g.push_back({512, 7, 7, 1});
  return g;
}

std::vector<std::string> theta_names(const ModelConfig& config) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < config.convs.size(); ++i) {
    names.push_back("conv" + std::to_string(i) + ".weight");
    names.push_back("conv" + std::to_string(i) + ".bias");
  }
  names.emplace_back("head.weight");
  names.emplace_back("head.bias");
  return names;
}

std::vector<std::string> prompt_names(const ModelConfig& config) {
  std::vector<std::string> names;
  for (int i = 0; i < config.prompted_layers; ++i) names.push_back("prompt" + std::to_string(i));
  return names;
}

ParamPartition make_partition(const ModelConfig& config) {
  ParamPartition p;
  for (auto& n : theta_names(config)) p.frozen_ids.insert(std::move(n));
  for (auto& n : prompt_names(config)) p.prompt_ids.insert(std::move(n));
  return p;
}

Model build_model(const ModelConfig& config, std::uint64_t seed) {
  const auto geo = layer_geometry(config);
  std::mt19937_64 rng(seed);
  Model m{config, {}, make_partition(config)};
  auto uniform_fill = [&rng](Tensor<float>& t, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : t.data()) v = static_cast<float>(dist(rng));
  };
  for (std::size_t i = 0; i < config.convs.size(); ++i) {
    const ConvSpec& c = config.convs[i];
    const int fan_in = geo[i].channels * c.kernel * c.kernel;
    const double bound = std::sqrt(6.0 / fan_in);  // He-uniform for ReLU
    Tensor<float> w({c.out_channels, geo[i].channels, c.kernel, c.kernel});
    uniform_fill(w, bound);
    m.weights.theta.push_back(std::move(w));
    m.weights.theta.emplace_back(Shape{c.out_channels});
  }
  Tensor<float> hw({2, config.head_dim});
  uniform_fill(hw, std::sqrt(1.0 / config.head_dim));
  m.weights.theta.push_back(std::move(hw));
  m.weights.theta.emplace_back(Shape{2});
  for (int i = 0; i < config.prompted_layers; ++i) {
    m.weights.prompts.emplace_back(Shape{static_cast<int>(geo[static_cast<std::size_t>(i)].border_count())});
  }
  return m;
}

Weights<float> zero_prompts_like(const ModelConfig& config, const Weights<float>& w) {
  Weights<float> out{w.theta, {}};
  const auto geo = layer_geometry(config);
  for (int i = 0; i < config.prompted_layers; ++i) {
    out.prompts.emplace_back(Shape{static_cast<int>(geo[static_cast<std::size_t>(i)].border_count())});
  }
  return out;
}

void gaussian_prompts(Weights<float>& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& block : w.prompts) {
    for (float& v : block.data()) v = static_cast<float>(dist(rng));
  }
}

std::size_t prompt_count(const Weights<float>& w) {
  std::size_t n = 0;
  for (const auto& b : w.prompts) n += b.size();
  return n;
}

namespace {

template <class T>
Var forward_impl(Tape<T>& tape, const ModelConfig& config, const BoundWeights& w, Var x, bool use_prompts) {
  const Shape& in = tape.value(x).shape();
  const Shape expected{in.empty() ? 0 : in[0], config.input_channels, config.input_size, config.input_size};
  if (in.size() != 4 || in != expected) {
    throw DimensionError("forward: input " + shape_str(in) + " does not match model geometry [N," +
                         std::to_string(config.input_channels) + "," + std::to_string(config.input_size) +
                         "," + std::to_string(config.input_size) + "]");
  }
  if (w.theta.size() != 2 * config.convs.size() + 2) {
    throw ConfigError("forward: expected " + std::to_string(2 * config.convs.size() + 2) +
                      " theta tensors, got " + std::to_string(w.theta.size()));
  }
  if (use_prompts && static_cast<int>(w.prompts.size()) != config.prompted_layers) {
    throw ConfigError("forward: expected " + std::to_string(config.prompted_layers) +
                      " prompt blocks, got " + std::to_string(w.prompts.size()));
  }
  Var h = x;
  for (std::size_t i = 0; i < config.convs.size(); ++i) {
    const ConvSpec& c = config.convs[i];
    if (use_prompts && static_cast<int>(i) < config.prompted_layers) {
      h = ops::pad_with_prompt(tape, h, w.prompts[i], c.pad);
    } else if (c.pad > 0) {
      h = ops::pad_zero(tape, h, c.pad);
    }
    h = ops::conv2d(tape, h, w.theta[2 * i], w.theta[2 * i + 1], c.stride);
    h = ops::relu(tape, h);
  }
  h = ops::global_avg_pool(tape, h);
  return ops::linear(tape, h, w.theta[w.theta.size() - 2], w.theta.back());
}

}  // namespace

template <class T>
Var forward(Tape<T>& tape, const ModelConfig& config, const BoundWeights& w, Var x) {
  return forward_impl(tape, config, w, x, true);
}

template <class T>
Var forward_zero_padded(Tape<T>& tape, const ModelConfig& config, const BoundWeights& w, Var x) {
  return forward_impl(tape, config, w, x, false);
}

template Var forward<float>(Tape<float>&, const ModelConfig&, const BoundWeights&, Var);
template Var forward<double>(Tape<double>&, const ModelConfig&, const BoundWeights&, Var);
template Var forward<Dual<float>>(Tape<Dual<float>>&, const ModelConfig&, const BoundWeights&, Var);
template Var forward<Dual<double>>(Tape<Dual<double>>&, const ModelConfig&, const BoundWeights&, Var);
template Var forward_zero_padded<float>(Tape<float>&, const ModelConfig&, const BoundWeights&, Var);
template Var forward_zero_padded<double>(Tape<double>&, const ModelConfig&, const BoundWeights&, Var);

Tensor<float> predict(const ModelConfig& config, const Weights<float>& w, const Tensor<float>& images) {
  Tape<float> tape;
  const BoundWeights b = bind_weights(tape, w, false, false);
  const Var x = tape.constant(images);
  return tape.value(forward(tape, config, b, x));
}

}  // namespace tpgaze
