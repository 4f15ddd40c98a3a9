#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "tpgaze/errors.hpp"
#include "tpgaze/gradcheck.hpp"
#include "tpgaze/meta.hpp"
#include "tpgaze/synthgaze.hpp"

using namespace tpgaze;
using tpgaze::testing::random_micro_config;
using tpgaze::testing::random_tensor;
using tpgaze::testing::random_weights;

namespace {

struct Toy {
  ModelConfig config;
  Weights<double> weights;
  Tensor<double> images;
  Tensor<double> labels;
};

/// A micro-net with every layer prompted and nonzero prompts, a few inputs
/// and labels far enough from the predictions to keep the L1 loss smooth.
Toy make_toy(std::uint64_t seed, int batch = 2) {
  std::mt19937_64 rng(seed);
  Toy t;
  t.config = random_micro_config(rng);
  t.config.prompted_layers = static_cast<int>(t.config.convs.size());
  t.weights = random_weights(t.config, rng);
  t.images = random_tensor<double>({batch, t.config.input_channels, t.config.input_size, t.config.input_size}, rng,
                                   0.0, 1.0);
  t.labels = random_tensor<double>({batch, 2}, rng, 3.0, 4.0);
  return t;
}

std::vector<double> flatten(const std::vector<Tensor<double>>& blocks) {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.data().begin(), b.data().end());
  return out;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Worst finite-difference error of the exact meta-gradient over every
/// prompt block, skipping coordinates with a kink inside the stencil. A ReLU
/// kink crossed inside the inner step bends the composed objective by only
/// inner_lr times the slope jump, hence the tighter kink tolerance.
GradCheckResult check_meta_gradient(const Toy& t, double inner_lr) {
  const auto exact = meta_gradient(t.config, t.weights, t.images, t.labels, inner_lr, MetaMode::exact).grad;
  GradCheckResult worst;
  for (std::size_t b = 0; b < exact.size(); ++b) {
    const auto objective = [&](const Tensor<double>& block) {
      Weights<double> w = t.weights;
      w.prompts[b] = block;
      return meta_objective(t.config, w, t.images, t.labels, inner_lr);
    };
    const GradCheckResult r = fd_check(objective, exact[b], t.weights.prompts[b], 1e-4, 1e-3);
    worst.checked += r.checked;
    worst.excluded.insert(worst.excluded.end(), r.excluded.begin(), r.excluded.end());
    worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
  }
  return worst;
}

BenchmarkConfig tiny_benchmark() {
  BenchmarkConfig b;
  b.n_source_persons = 2;
  b.n_samples_each = 12;
  b.n_val_each = 2;
  b.n_target_persons = 1;
  b.n_adapt = 2;
  b.n_test = 2;
  return b;
}

}  // namespace

TEST_CASE("inner update is one plain gradient step") {
  const Toy t = make_toy(1);
  const auto g = personalization_grad(t.config, t.weights, t.images);
  const auto updated = inner_update(t.config, t.weights, t.images, 0.1);
  REQUIRE(updated.size() == t.weights.prompts.size());
  for (std::size_t b = 0; b < updated.size(); ++b)
    for (std::size_t i = 0; i < updated[b].size(); ++i)
      CHECK(updated[b][i] == t.weights.prompts[b][i] - 0.1 * g[b][i]);
}

TEST_CASE("inner update is the identity at a zero-gradient point") {
  // A network whose output ignores its input has zero symmetry loss and
  // zero prompt gradient when the yaw output is zero.
  Toy t = make_toy(2);
  for (auto& th : t.weights.theta)
    for (auto& v : th.data()) v = 0.0;
  const auto updated = inner_update(t.config, t.weights, t.images, 0.5);
  CHECK(updated == t.weights.prompts);
}

TEST_CASE("inner update descends the symmetry loss for small steps") {
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    const Toy t = make_toy(seed);
    double before = 0.0;
    personalization_grad(t.config, t.weights, t.images, &before);
    bool descended = false;
    for (double lr : {1e-1, 1e-2, 1e-3, 1e-4}) {
      Weights<double> w = t.weights;
      w.prompts = inner_update(t.config, t.weights, t.images, lr);
      double after = 0.0;
      personalization_grad(t.config, w, t.images, &after);
      if (after <= before) {
        descended = true;
        break;
      }
    }
    CAPTURE(seed);
    CHECK(descended);
  }
}

TEST_CASE("Hessian-vector product matches differences of gradients") {
  const Toy t = make_toy(9);
  std::mt19937_64 rng(10);
  std::vector<Tensor<double>> dir;
  for (const auto& p : t.weights.prompts) dir.push_back(random_tensor<double>(p.shape(), rng));
  const auto hv = flatten(personalization_hvp(t.config, t.weights, t.images, dir));
  const double h = 1e-5;
  Weights<double> up = t.weights, down = t.weights;
  for (std::size_t b = 0; b < dir.size(); ++b)
    for (std::size_t i = 0; i < dir[b].size(); ++i) {
      up.prompts[b][i] += h * dir[b][i];
      down.prompts[b][i] -= h * dir[b][i];
    }
  const auto gu = flatten(personalization_grad(t.config, up, t.images));
  const auto gd = flatten(personalization_grad(t.config, down, t.images));
  std::vector<double> fd(gu.size());
  for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (gu[i] - gd[i]) / (2 * h);
  CHECK(rel_diff(hv, fd) < 1e-5);
}

TEST_CASE("exact meta-gradient matches finite differences of the composed objective") {
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const Toy t = make_toy(seed);
    std::size_t params = 0;
    for (const auto& th : t.weights.theta) params += th.size();
    for (const auto& p : t.weights.prompts) params += p.size();
    REQUIRE(params <= 500);
    for (double inner_lr : {1e-2, 1e-1}) {
      const GradCheckResult r = check_meta_gradient(t, inner_lr);
      CAPTURE(seed);
      CAPTURE(inner_lr);
      CHECK(r.checked > r.excluded.size());
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("first-order and exact meta-gradients") {
  const Toy t = make_toy(30);
  auto both = [&](double inner_lr) {
    const auto fo = flatten(meta_gradient(t.config, t.weights, t.images, t.labels, inner_lr, MetaMode::first_order).grad);
    const auto ex = flatten(meta_gradient(t.config, t.weights, t.images, t.labels, inner_lr, MetaMode::exact).grad);
    return std::pair{fo, ex};
  };
  SUBCASE("coincide exactly without an inner step") {
    const auto [fo, ex] = both(0.0);
    CHECK(fo == ex);
  }
  SUBCASE("converge as the inner step shrinks") {
    double previous = 1e300;
    for (double lr : {1e-2, 1e-4, 1e-6}) {
      const auto [fo, ex] = both(lr);
      const double d = rel_diff(fo, ex);
      CAPTURE(lr);
      CHECK(d <= previous);
      previous = d;
    }
    const auto [fo, ex] = both(1e-6);
    CHECK(rel_diff(fo, ex) < 1e-3);
  }
}

TEST_CASE("outer step without an inner step is a plain L1 step in both modes") {
  const Benchmark bench = make_benchmark(tiny_benchmark(), 5);
  const LabeledSplit source = flatten_labeled(bench.source_train);
  const ModelConfig c;
  Model m = build_model(c, 6);
  std::mt19937_64 rng(7);
  for (auto& p : m.weights.prompts) p = random_tensor<float>(p.shape(), rng);
  const Tensor<float> x = source.images.slice(0, 4), y = source.label_slice(0, 4);
  MetaConfig meta;
  meta.inner_lr = 0.0;
  meta.outer_lr = 0.05;
  Weights<float> fo = m.weights, ex = m.weights;
  meta.mode = MetaMode::first_order;
  outer_step(c, fo, x, y, meta);
  meta.mode = MetaMode::exact;
  outer_step(c, ex, x, y, meta);
  CHECK(fo == ex);
  CHECK(fo.theta == m.weights.theta);
  CHECK_FALSE(fo.prompts == m.weights.prompts);
}

TEST_CASE("meta config validation") {
  MetaConfig c;
  c.inner_lr = -1e-4;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = MetaConfig{};
  c.outer_lr = -1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = MetaConfig{};
  c.iterations = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("meta training freezes theta and is deterministic") {
  const Benchmark bench = make_benchmark(tiny_benchmark(), 8);
  const LabeledSplit source = flatten_labeled(bench.source_train);
  MetaConfig meta;
  meta.iterations = 4;
  meta.batch_size = 3;
  meta.seed = 9;

  SUBCASE("zero iterations return the initial prompt") {
    meta.iterations = 0;
    Model m = build_model(ModelConfig{}, 2);
    const Weights<float> before = m.weights;
    meta_train(m, source, meta);
    CHECK(m.weights.theta == before.theta);
    Model again = build_model(ModelConfig{}, 2);
    meta_train(again, source, meta);
    CHECK(m.weights == again.weights);
    meta.prompt_init = PromptInit::zeros;
    Model zeros = build_model(ModelConfig{}, 2);
    meta_train(zeros, source, meta);
    CHECK(zeros.weights == before);
  }
  SUBCASE("theta frozen, prompts deterministic") {
    for (MetaMode mode : {MetaMode::first_order, MetaMode::exact}) {
      meta.mode = mode;
      Model a = build_model(ModelConfig{}, 2), b = build_model(ModelConfig{}, 2);
      const Weights<float> before = a.weights;
      int calls = 0;
      const auto logs = meta_train(a, source, meta, [&](const MetaLog&) { ++calls; });
      meta_train(b, source, meta);
      CHECK(logs.size() == 4);
      CHECK(calls == 4);
      CHECK(a.weights.theta == before.theta);
      CHECK(a.weights == b.weights);
    }
  }
}
