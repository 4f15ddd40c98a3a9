#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tpgaze/tensor.hpp"

namespace tpgaze {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.95;
  double eps = 1e-8;
};

/// Moment buffers for a fixed list of parameters.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::int64_t step_count() const { return step_; }
  const std::vector<Tensor<float>>& first_moments() const { return m_; }
  const std::vector<Tensor<float>>& second_moments() const { return v_; }

  /// One bias-corrected Adam update of `params` in place. Buffers are created
  /// on first use and must keep matching shapes afterwards. A non-finite
  /// gradient throws NumericError naming the parameter and leaves everything
  /// untouched.
  void step(std::span<Tensor<float>* const> params, std::span<const Tensor<float>> grads,
            std::span<const std::string> ids);

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Tensor<float>> m_;
  std::vector<Tensor<float>> v_;
};

}  // namespace tpgaze
