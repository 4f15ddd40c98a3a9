#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tpgaze/adam.hpp"
#include "tpgaze/model.hpp"
#include "tpgaze/synthgaze.hpp"

namespace tpgaze {

enum class MetaMode { first_order, exact };
enum class PromptInit { gaussian, zeros };

struct MetaConfig {
  double inner_lr = 1e-4;  // step on the symmetry loss
  double outer_lr = 1e-4;  // step on the post-adaptation L1 loss
  int iterations = 500;
  int batch_size = 20;
  MetaMode mode = MetaMode::first_order;
  PromptInit prompt_init = PromptInit::gaussian;
  /// Use Adam (beta 0.5/0.95) for the outer update instead of plain descent.
  bool outer_adam = false;
  std::uint64_t seed = 1;

  friend bool operator==(const MetaConfig&, const MetaConfig&) = default;
};

void validate(const MetaConfig& config);

/// Gradient of the personalization (symmetry) loss w.r.t. every prompt block.
/// Theta is treated as constant. `loss` receives the loss value if non-null.
template <class T>
std::vector<Tensor<T>> personalization_grad(const ModelConfig& config, const Weights<T>& w,
                                            const Tensor<T>& images, double* loss = nullptr);

/// One plain gradient step of the prompts on the symmetry loss:
/// p_hat = p - inner_lr * grad_p L_per(x).
template <class T>
std::vector<Tensor<T>> inner_update(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                                    double inner_lr, double* loss = nullptr);

/// Hessian of the personalization loss w.r.t. the prompts, applied to
/// `direction`. Exact, via forward-over-reverse dual numbers.
template <class T>
std::vector<Tensor<T>> personalization_hvp(const ModelConfig& config, const Weights<T>& w,
                                           const Tensor<T>& images, const std::vector<Tensor<T>>& direction);

template <class T>
struct MetaGradient {
  std::vector<Tensor<T>> grad;  // d/dp L1(f_{theta, p_hat(p)}(x), y)
  double inner_sym = 0.0;       // L_per at p
  double post_l1 = 0.0;         // L1 at p_hat
};

/// Meta-gradient for one labeled sample (or micro-batch). In first-order mode
/// dp_hat/dp is taken as the identity; exact mode includes the
/// -inner_lr * Hessian term.
template <class T>
MetaGradient<T> meta_gradient(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                              const Tensor<T>& labels, double inner_lr, MetaMode mode);

/// L1(f_{theta, p_hat(p)}(x), y): the composed objective the meta-gradient
/// differentiates.
template <class T>
double meta_objective(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                      const Tensor<T>& labels, double inner_lr);

struct MetaStepStats {
  double inner_sym = 0.0;  // batch mean
  double post_l1 = 0.0;    // batch mean
};

/// Per-sample inner adaptation and meta-gradient, batch mean, one outer
/// update of the prompts (plain descent, or `adam` when non-null).
MetaStepStats outer_step(const ModelConfig& config, Weights<float>& w, const Tensor<float>& images,
                         const Tensor<float>& labels, const MetaConfig& meta, AdamState* adam = nullptr);

struct MetaLog {
  int iteration = 0;
  double inner_sym = 0.0;
  double post_l1 = 0.0;
};

/// Learns the prompt initialization on the labeled source data with theta
/// frozen. Prompts are first reset per `config.prompt_init`. Throws
/// NumericError naming the last healthy iteration on divergence.
std::vector<MetaLog> meta_train(Model& model, const LabeledSplit& source, const MetaConfig& config,
                                const std::function<void(const MetaLog&)>& on_iteration = {});

}  // namespace tpgaze
