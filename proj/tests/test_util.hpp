#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tpgaze/autodiff.hpp"
#include "tpgaze/model.hpp"

namespace tpgaze::testing {

template <class T = double>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

/// Small random architecture with at most a few hundred parameters.
inline ModelConfig random_micro_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(5, 7), ch(1, 3), stride(1, 2), layers(1, 2);
  ModelConfig c;
  c.input_channels = ch(rng);
  c.input_size = size(rng);
  c.convs.clear();
  const int n = 2;
  for (int i = 0; i < n; ++i) c.convs.push_back({ch(rng) + 1, 3, i == 0 ? 1 : stride(rng), 1});
  c.head_dim = c.convs.back().out_channels;
  c.prompted_layers = layers(rng);
  return c;
}

/// Random theta and prompts (prompts nonzero so border paths matter).
inline Weights<double> random_weights(const ModelConfig& c, std::mt19937_64& rng) {
  Weights<double> w = weights_cast<double>(build_model(c, rng()).weights);
  for (auto& t : w.theta) t = random_tensor<double>(t.shape(), rng, -0.8, 0.8);
  for (auto& t : w.prompts) t = random_tensor<double>(t.shape(), rng, -1.0, 1.0);
  return w;
}

inline std::size_t param_count(const Weights<double>& w) {
  std::size_t n = 0;
  for (const auto& t : w.theta) n += t.size();
  for (const auto& t : w.prompts) n += t.size();
  return n;
}

/// Binds `w` as constants except block `index` of theta (or of the prompts),
/// which is replaced by the variable `x`.
inline BoundWeights bind_with(Tape<double>& tape, const Weights<double>& w, bool prompt_block, std::size_t index,
                              Var x) {
  BoundWeights b;
  for (std::size_t i = 0; i < w.theta.size(); ++i) {
    b.theta.push_back(!prompt_block && i == index ? x : tape.constant(w.theta[i]));
  }
  for (std::size_t i = 0; i < w.prompts.size(); ++i) {
    b.prompts.push_back(prompt_block && i == index ? x : tape.constant(w.prompts[i]));
  }
  return b;
}

/// Direct nested-sum cross-correlation on an already padded input.
inline Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                                 int stride) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), k = w.dim(2);
  const int oh = (h - k) / stride + 1, ow = (wd - k) / stride + 1;
  Tensor<double> y({n, cout, oh, ow});
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = b[static_cast<std::size_t>(o)];
          for (int c = 0; c < cin; ++c)
            for (int u = 0; u < k; ++u)
              for (int v = 0; v < k; ++v) {
                acc += x[static_cast<std::size_t>(((s * cin + c) * h + i * stride + u) * wd + j * stride + v)] *
                       w[static_cast<std::size_t>(((o * cin + c) * k + u) * k + v)];
              }
          y[static_cast<std::size_t>(((s * cout + o) * oh + i) * ow + j)] = acc;
        }
  return y;
}

}  // namespace tpgaze::testing
