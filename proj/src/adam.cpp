#include "tpgaze/adam.hpp"

#include <cmath>

namespace tpgaze {

void AdamState::step(std::span<Tensor<float>* const> params, std::span<const Tensor<float>> grads,
                     std::span<const std::string> ids) {
  if (params.size() != grads.size() || params.size() != ids.size()) {
    throw ContractError("adam: params, grads and ids must have equal length");
  }
  if (m_.empty()) {
    for (const Tensor<float>* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) throw ContractError("adam: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != m_[i].shape() || grads[i].shape() != m_[i].shape()) {
      throw DimensionError("adam: shape of '" + ids[i] + "' does not match its moment buffer");
    }
    for (float g : grads[i].data()) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient for '" + ids[i] + "'");
    }
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = config_.lr * (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
      p[j] = static_cast<float>(p[j] - update);
    }
  }
}

}  // namespace tpgaze
