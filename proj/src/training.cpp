#include "tpgaze/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tpgaze/losses.hpp"

namespace tpgaze {

void validate(const TrainConfig& c) {
  if (c.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (c.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(c.lr > 0)) throw ConfigError("train: lr must be > 0");
  if (c.lr_decay_epoch < 0 || c.lr_decay_epoch > std::max(c.epochs, 0)) {
    throw ConfigError("train: lr_decay_epoch must lie in [0, epochs]");
  }
  if (!(c.lr_decay_factor > 0)) throw ConfigError("train: lr_decay_factor must be > 0");
  if (c.l1_weight < 0 || c.sym_weight < 0) throw ConfigError("train: loss weights must be >= 0");
}

double scheduled_lr(const TrainConfig& c, int epoch) {
  return epoch < c.lr_decay_epoch ? c.lr : c.lr * c.lr_decay_factor;
}

std::vector<EpochLog> pretrain(Model& model, const LabeledSplit& source, const TrainConfig& config,
                               const std::function<void(const EpochLog&)>& on_epoch) {
  validate(config);
  const int n = source.images.count();
  if (n < 1) throw ConfigError("pretrain: source split is empty");

  const std::vector<std::string> ids = theta_names(model.config);
  AdamState adam(AdamConfig{config.lr, config.beta1, config.beta2, 1e-8});
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochLog> logs;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = scheduled_lr(config, epoch);
    adam.set_lr(lr);
    std::shuffle(order.begin(), order.end(), rng);
    double l1_sum = 0.0;
    double sym_sum = 0.0;
    int step = 0;
    for (int begin = 0; begin < n; begin += config.batch_size, ++step) {
      const int end = std::min(n, begin + config.batch_size);
      const std::span<const int> idx(order.data() + begin, static_cast<std::size_t>(end - begin));

      Tape<float> tape;
      const BoundWeights b = bind_weights(tape, model.weights, true, false);
      const Var x = tape.constant(source.images.gather(idx));
      const Var y = tape.constant(source.label_gather(idx));
      auto fwd = [&](Var in) { return forward(tape, model.config, b, in); };
      const Var pred = fwd(x);
      const Var l1 = l1_gaze_loss(tape, pred, y);
      const Var sym = symmetry_loss(tape, pred, fwd(ops::flip_horizontal(tape, x)));
      const Var loss = ops::add(tape, ops::scalar_mul(tape, l1, config.l1_weight),
                                ops::scalar_mul(tape, sym, config.sym_weight));
      const float lv = tape.value(loss)[0];
      if (!std::isfinite(lv)) {
        throw NumericError("pretrain: loss is not finite at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step));
      }
      tape.backward(loss);
      std::vector<Tensor<float>> grads;
      std::vector<Tensor<float>*> params;
      for (std::size_t i = 0; i < b.theta.size(); ++i) {
        grads.push_back(tape.grad(b.theta[i]));
        params.push_back(&model.weights.theta[i]);
      }
      adam.step(params, grads, ids);
      l1_sum += static_cast<double>(tape.value(l1)[0]) * (end - begin);
      sym_sum += static_cast<double>(tape.value(sym)[0]) * (end - begin);
    }
    logs.push_back({epoch + 1, l1_sum / n, sym_sum / n, lr});
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

double mean_l1(const ModelConfig& config, const Weights<float>& w, const LabeledSplit& split) {
  const int n = split.images.count();
  if (n < 1) throw ConfigError("mean_l1: split is empty");
  constexpr int kChunk = 256;
  double total = 0.0;
  for (int begin = 0; begin < n; begin += kChunk) {
    const int end = std::min(n, begin + kChunk);
    const Tensor<float> pred = predict(config, w, split.images.slice(begin, end));
    const Tensor<float> lab = split.label_slice(begin, end);
    for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(static_cast<double>(pred[i]) - lab[i]);
  }
  return total / (2.0 * n);
}

}  // namespace tpgaze
