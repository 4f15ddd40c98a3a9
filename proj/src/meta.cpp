#include "tpgaze/meta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tpgaze/losses.hpp"
#include "tpgaze/seed.hpp"

namespace tpgaze {

void validate(const MetaConfig& c) {
  if (!(c.inner_lr >= 0)) throw ConfigError("meta: inner_lr must be >= 0");
  if (!(c.outer_lr > 0)) throw ConfigError("meta: outer_lr must be > 0");
  if (c.iterations < 0) throw ConfigError("meta: iterations must be >= 0");
  if (c.batch_size < 1) throw ConfigError("meta: batch_size must be >= 1");
}

namespace {

template <class T>
void require_finite(const std::vector<Tensor<T>>& grads, const char* what) {
  for (std::size_t b = 0; b < grads.size(); ++b) {
    for (const T& v : grads[b].data()) {
      if (!is_finite_scalar(v)) throw NumericError(std::string(what) + ": non-finite gradient in prompt" + std::to_string(b));
    }
  }
}

}  // namespace

template <class T>
std::vector<Tensor<T>> personalization_grad(const ModelConfig& config, const Weights<T>& w,
                                            const Tensor<T>& images, double* loss) {
  Tape<T> tape;
  const BoundWeights b = bind_weights(tape, w, false, true);
  const Var x = tape.constant(images);
  const Var l = personalization_loss(tape, [&](Var in) { return forward(tape, config, b, in); }, x);
  tape.backward(l);
  if (loss) *loss = primal(tape.value(l)[0]);
  std::vector<Tensor<T>> grads;
  for (Var p : b.prompts) grads.push_back(tape.grad(p));
  return grads;
}

template <class T>
std::vector<Tensor<T>> inner_update(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                                    double inner_lr, double* loss) {
  auto grads = personalization_grad(config, w, images, loss);
  require_finite(grads, "inner_update");
  const T lr(inner_lr);
  std::vector<Tensor<T>> out = w.prompts;
  for (std::size_t b = 0; b < out.size(); ++b) {
    for (std::size_t i = 0; i < out[b].size(); ++i) out[b][i] = out[b][i] - lr * grads[b][i];
  }
  return out;
}

template <class T>
std::vector<Tensor<T>> personalization_hvp(const ModelConfig& config, const Weights<T>& w,
                                           const Tensor<T>& images, const std::vector<Tensor<T>>& direction) {
  if (direction.size() != w.prompts.size()) throw DimensionError("personalization_hvp: direction block count");
  using D = Dual<T>;
  Weights<D> lifted = weights_cast<D>(w);
  for (std::size_t b = 0; b < direction.size(); ++b) {
    require_same_shape(direction[b], w.prompts[b], "personalization_hvp");
    for (std::size_t i = 0; i < direction[b].size(); ++i) lifted.prompts[b][i].d = direction[b][i];
  }
  const auto dual_grads = personalization_grad<D>(config, lifted, tensor_cast<D>(images));
  std::vector<Tensor<T>> out;
  for (const auto& g : dual_grads) {
    Tensor<T> hv(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) hv[i] = g[i].d;
    out.push_back(std::move(hv));
  }
  return out;
}

template <class T>
MetaGradient<T> meta_gradient(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                              const Tensor<T>& labels, double inner_lr, MetaMode mode) {
  MetaGradient<T> r;
  Weights<T> adapted{w.theta, inner_update(config, w, images, inner_lr, &r.inner_sym)};

  Tape<T> tape;
  const BoundWeights b = bind_weights(tape, adapted, false, true);
  const Var pred = forward(tape, config, b, tape.constant(images));
  const Var l1 = l1_gaze_loss(tape, pred, tape.constant(labels));
  tape.backward(l1);
  r.post_l1 = primal(tape.value(l1)[0]);
  for (Var p : b.prompts) r.grad.push_back(tape.grad(p));

  if (mode == MetaMode::exact && inner_lr != 0.0) {
    // d p_hat / d p = I - inner_lr * H, and H is symmetric.
    const auto hv = personalization_hvp(config, w, images, r.grad);
    const T lr(inner_lr);
    for (std::size_t blk = 0; blk < r.grad.size(); ++blk) {
      for (std::size_t i = 0; i < r.grad[blk].size(); ++i) r.grad[blk][i] = r.grad[blk][i] - lr * hv[blk][i];
    }
  }
  require_finite(r.grad, "meta_gradient");
  return r;
}

template <class T>
double meta_objective(const ModelConfig& config, const Weights<T>& w, const Tensor<T>& images,
                      const Tensor<T>& labels, double inner_lr) {
  Weights<T> adapted{w.theta, inner_update(config, w, images, inner_lr)};
  Tape<T> tape;
  const BoundWeights b = bind_weights(tape, adapted, false, false);
  const Var pred = forward(tape, config, b, tape.constant(images));
  return primal(tape.value(l1_gaze_loss(tape, pred, tape.constant(labels)))[0]);
}

template std::vector<Tensor<float>> personalization_grad<float>(const ModelConfig&, const Weights<float>&,
                                                                const Tensor<float>&, double*);
template std::vector<Tensor<double>> personalization_grad<double>(const ModelConfig&, const Weights<double>&,
                                                                  const Tensor<double>&, double*);
template std::vector<Tensor<float>> inner_update<float>(const ModelConfig&, const Weights<float>&,
                                                        const Tensor<float>&, double, double*);
template std::vector<Tensor<double>> inner_update<double>(const ModelConfig&, const Weights<double>&,
                                                          const Tensor<double>&, double, double*);
template std::vector<Tensor<float>> personalization_hvp<float>(const ModelConfig&, const Weights<float>&,
                                                               const Tensor<float>&,
                                                               const std::vector<Tensor<float>>&);
template std::vector<Tensor<double>> personalization_hvp<double>(const ModelConfig&, const Weights<double>&,
                                                                 const Tensor<double>&,
                                                                 const std::vector<Tensor<double>>&);
template MetaGradient<float> meta_gradient<float>(const ModelConfig&, const Weights<float>&, const Tensor<float>&,
                                                  const Tensor<float>&, double, MetaMode);
template MetaGradient<double> meta_gradient<double>(const ModelConfig&, const Weights<double>&,
                                                    const Tensor<double>&, const Tensor<double>&, double, MetaMode);
template double meta_objective<float>(const ModelConfig&, const Weights<float>&, const Tensor<float>&,
                                      const Tensor<float>&, double);
template double meta_objective<double>(const ModelConfig&, const Weights<double>&, const Tensor<double>&,
                                       const Tensor<double>&, double);

MetaStepStats outer_step(const ModelConfig& config, Weights<float>& w, const Tensor<float>& images,
                         const Tensor<float>& labels, const MetaConfig& meta, AdamState* adam) {
  const int n = images.dim(0);
  if (labels.shape() != Shape{n, 2}) throw DimensionError("outer_step: labels must be [batch,2]");
  const std::size_t per_image = images.size() / static_cast<std::size_t>(n);
  Shape one = images.shape();
  one[0] = 1;

  std::vector<Tensor<double>> sum;
  for (const auto& p : w.prompts) sum.emplace_back(p.shape());
  MetaStepStats stats;
  // Index-ordered reduction keeps the result independent of scheduling.
  for (int i = 0; i < n; ++i) {
    const auto first = images.data().begin() + static_cast<std::ptrdiff_t>(i * per_image);
    Tensor<float> xi(one, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(per_image)));
    Tensor<float> yi({1, 2}, {labels[static_cast<std::size_t>(2 * i)], labels[static_cast<std::size_t>(2 * i + 1)]});
    const MetaGradient<float> g = meta_gradient(config, w, xi, yi, meta.inner_lr, meta.mode);
    for (std::size_t b = 0; b < sum.size(); ++b) {
      for (std::size_t k = 0; k < sum[b].size(); ++k) sum[b][k] += g.grad[b][k];
    }
    stats.inner_sym += g.inner_sym / n;
    stats.post_l1 += g.post_l1 / n;
  }

  std::vector<Tensor<float>> mean_grad;
  for (const auto& s : sum) {
    Tensor<float> m(s.shape());
    for (std::size_t k = 0; k < s.size(); ++k) m[k] = static_cast<float>(s[k] / n);
    mean_grad.push_back(std::move(m));
  }
  if (adam) {
    std::vector<Tensor<float>*> params;
    for (auto& p : w.prompts) params.push_back(&p);
    adam->step(params, mean_grad, prompt_names(config));
  } else {
    for (std::size_t b = 0; b < w.prompts.size(); ++b) {
      for (std::size_t k = 0; k < w.prompts[b].size(); ++k) {
        w.prompts[b][k] = static_cast<float>(w.prompts[b][k] - meta.outer_lr * mean_grad[b][k]);
      }
    }
  }
  return stats;
}

std::vector<MetaLog> meta_train(Model& model, const LabeledSplit& source, const MetaConfig& config,
                                const std::function<void(const MetaLog&)>& on_iteration) {
  validate(config);
  const int n = source.images.count();
  if (n < 1) throw ConfigError("meta_train: source split is empty");
  const int batch = std::min(config.batch_size, n);

  for (auto& p : model.weights.prompts) std::fill(p.data().begin(), p.data().end(), 0.0f);
  if (config.prompt_init == PromptInit::gaussian) gaussian_prompts(model.weights, derive_seed(config.seed, "prompt_init"));

  AdamState adam(AdamConfig{config.outer_lr, 0.5, 0.95, 1e-8});
  std::mt19937_64 rng(derive_seed(config.seed, "batches"));
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);

  std::vector<MetaLog> logs;
  for (int it = 0; it < config.iterations; ++it) {
    // Partial Fisher-Yates: the first `batch` entries become the mini-batch.
    for (int k = 0; k < batch; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    const std::span<const int> idx(pool.data(), static_cast<std::size_t>(batch));
    MetaStepStats s;
    try {
      s = outer_step(model.config, model.weights, source.images.gather(idx), source.label_gather(idx), config,
                     config.outer_adam ? &adam : nullptr);
    } catch (const NumericError& e) {
      throw NumericError("meta_train: diverged at iteration " + std::to_string(it + 1) +
                         " (last healthy iteration " + std::to_string(it) + "): " + e.what());
    }
    if (!std::isfinite(s.inner_sym) || !std::isfinite(s.post_l1)) {
      throw NumericError("meta_train: diverged at iteration " + std::to_string(it + 1) +
                         " (last healthy iteration " + std::to_string(it) + ")");
    }
    logs.push_back({it + 1, s.inner_sym, s.post_l1});
    if (on_iteration) on_iteration(logs.back());
  }
  return logs;
}

}  // namespace tpgaze
