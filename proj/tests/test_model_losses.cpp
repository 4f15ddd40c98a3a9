#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "tpgaze/errors.hpp"
#include "tpgaze/gradcheck.hpp"
#include "tpgaze/losses.hpp"
#include "tpgaze/model.hpp"

using namespace tpgaze;
using tpgaze::testing::bind_with;
using tpgaze::testing::random_micro_config;
using tpgaze::testing::random_tensor;
using tpgaze::testing::random_weights;

TEST_CASE("default micro-net prompt count") {
  const ModelConfig c;
  const auto geo = layer_geometry(c);
  CHECK(geo[0].border_count() == 1 * (34 * 34 - 32 * 32));
  CHECK(geo[1].border_count() == 8 * (34 * 34 - 32 * 32));
  CHECK(geo[2].border_count() == 16 * (18 * 18 - 16 * 16));
  CHECK(count_prompt_params(geo, c.prompted_layers) == 132 + 1056 + 1088);
  CHECK(prompt_count(build_model(c, 1).weights) == 2276);

  ModelConfig none = c;
  none.prompted_layers = 0;
  const Model m = build_model(none, 1);
  CHECK(m.weights.prompts.empty());
  CHECK(prompt_count(m.weights) == 0);
  CHECK_THROWS_AS(count_prompt_params(geo, 7), ConfigError);
}

TEST_CASE("ResNet-18 border arithmetic") {
  const auto geo = resnet18_geometry();
  CHECK(count_prompt_params(geo, 1) == 8172);
  CHECK(count_prompt_params(geo, 5) == 66540);
  CHECK(count_prompt_params(geo, 9) == 8172 + 4 * 14592 + 14592 + 3 * 14848);
  CHECK(count_prompt_params(geo, 9) == 125676);
  CHECK(count_prompt_params(geo, 13) == 186604);
  CHECK(count_prompt_params(geo, 17) == 251116);
  const double fraction = static_cast<double>(count_prompt_params(geo, 9)) / kResNet18BackboneParams;
  CHECK(fraction < 0.012);
}

TEST_CASE("model config validation names the layer") {
  ModelConfig c;
  c.convs[1].pad = 0;
  c.prompted_layers = 3;
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
  ModelConfig too_many;
  too_many.prompted_layers = 7;
  CHECK_THROWS_AS(validate(too_many), ConfigError);
  ModelConfig tiny;
  tiny.input_size = 0;
  CHECK_THROWS_AS(validate(tiny), ConfigError);
  ModelConfig head;
  head.head_dim = 16;
  CHECK_THROWS_AS(validate(head), ConfigError);
}

TEST_CASE("build_model determinism and partition") {
  const ModelConfig c;
  const Model a = build_model(c, 11), b = build_model(c, 11), other = build_model(c, 12);
  CHECK(a.weights == b.weights);
  CHECK_FALSE(a.weights.theta == other.weights.theta);
  for (const auto& p : a.weights.prompts)
    for (float v : p.data()) CHECK(v == 0.0f);

  std::set<std::string> all;
  for (const auto& id : theta_names(c)) all.insert(id);
  for (const auto& id : prompt_names(c)) all.insert(id);
  std::set<std::string> both;
  for (const auto& id : a.partition.frozen_ids) CHECK(a.partition.prompt_ids.count(id) == 0);
  both.insert(a.partition.frozen_ids.begin(), a.partition.frozen_ids.end());
  both.insert(a.partition.prompt_ids.begin(), a.partition.prompt_ids.end());
  CHECK(both == all);
}

TEST_CASE("forward shape, zero-prompt equivalence, border sensitivity") {
  const ModelConfig c;
  Model m = build_model(c, 5);
  std::mt19937_64 rng(6);
  const auto x = random_tensor<float>({5, 1, 32, 32}, rng, 0.0, 1.0);

  Tape<float> t;
  const BoundWeights b = bind_weights(t, m.weights, false, false);
  const auto& prompted = t.value(forward(t, c, b, t.constant(x)));
  const auto& plain = t.value(forward_zero_padded(t, c, b, t.constant(x)));
  CHECK(prompted.shape() == Shape{5, 2});
  for (std::size_t i = 0; i < prompted.size(); ++i) CHECK(std::abs(prompted[i] - plain[i]) < 1e-6);

  Weights<float> bumped = m.weights;
  bumped.prompts[0][0] = 0.5f;
  const auto before = predict(c, m.weights, x);
  const auto after = predict(c, bumped, x);
  CHECK_FALSE(before == after);

  Tape<float> bad;
  CHECK_THROWS_AS(forward(bad, c, bind_weights(bad, m.weights, false, false),
                          bad.constant(Tensor<float>({1, 1, 30, 30}))),
                  DimensionError);
}

TEST_CASE("L1 gaze loss examples") {
  Tape<double> t;
  CHECK(t.value(l1_gaze_loss(t, t.constant(Tensor<double>({1, 2}, {0.2, 0.1})), t.constant(Tensor<double>({1, 2}))))[0] ==
        doctest::Approx(0.15));
  const Tensor<double> p({3, 2}, {0.1, -0.2, 0.3, 0.0, -0.5, 0.25});
  const Tensor<double> y({3, 2}, {0.0, 0.1, 0.2, 0.2, -0.4, 0.0});
  Tensor<double> p2 = p;
  for (std::size_t i = 0; i < p.size(); ++i) p2[i] = y[i] + 2 * (p[i] - y[i]);
  const double l = t.value(l1_gaze_loss(t, t.constant(p), t.constant(y)))[0];
  CHECK(t.value(l1_gaze_loss(t, t.constant(p2), t.constant(y)))[0] == doctest::Approx(2 * l));
  CHECK(t.value(l1_gaze_loss(t, t.constant(y), t.constant(y)))[0] == 0.0);
  CHECK_THROWS_AS(l1_gaze_loss(t, t.constant(p), t.constant(Tensor<double>({2, 2}))), DimensionError);
}

TEST_CASE("symmetry loss examples and properties") {
  Tape<double> t;
  auto sym = [&](std::vector<double> a, std::vector<double> b) {
    const int n = static_cast<int>(a.size() / 2);
    return t.value(symmetry_loss(t, t.constant(Tensor<double>({n, 2}, a)), t.constant(Tensor<double>({n, 2}, b))))[0];
  };
  CHECK(sym({0.3, 0.2}, {0.3, -0.2}) == 0.0);
  CHECK(sym({0.1, 0.2}, {0.1, 0.1}) == doctest::Approx(0.15));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_tensor<double>({4, 2}, rng), b = random_tensor<double>({4, 2}, rng);
    const std::vector<double> av(a.data().begin(), a.data().end()), bv(b.data().begin(), b.data().end());
    const double l = sym(av, bv);
    CHECK(l >= 0.0);
    CHECK(l == doctest::Approx(sym(bv, av)));
  }
  CHECK_THROWS_AS(symmetry_loss(t, t.constant(Tensor<double>({2, 2})), t.constant(Tensor<double>({3, 2}))),
                  DimensionError);
}

TEST_CASE("personalization loss on constant networks") {
  const Tensor<double> x({3, 1, 4, 4}, 0.5);
  Tape<double> t;
  const Var xv = t.constant(x);
  auto constant_net = [&](double pitch, double yaw) {
    return [&t, pitch, yaw](Var in) {
      const int n = t.value(in).dim(0);
      Tensor<double> out({n, 2});
      for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(2 * i)] = pitch;
        out[static_cast<std::size_t>(2 * i + 1)] = yaw;
      }
      return t.constant(out);
    };
  };
  CHECK(t.value(personalization_loss(t, constant_net(0.0, 0.0), xv))[0] == 0.0);
  CHECK(t.value(personalization_loss(t, constant_net(0.7, 0.0), xv))[0] == 0.0);
  CHECK(t.value(personalization_loss(t, constant_net(0.0, 0.3), xv))[0] == doctest::Approx(0.3));
  CHECK(t.value(personalization_loss(t, constant_net(0.0, -0.45), xv))[0] == doctest::Approx(0.45));
}

TEST_CASE("personalization loss is unchanged by flipping its input") {
  std::mt19937_64 rng(21);
  const ModelConfig c = random_micro_config(rng);
  const Weights<double> w = random_weights(c, rng);
  const auto x = random_tensor<double>({3, c.input_channels, c.input_size, c.input_size}, rng, 0.0, 1.0);
  Tape<double> t;
  const BoundWeights b = bind_weights(t, w, false, false);
  auto fwd = [&](Var in) { return forward(t, c, b, in); };
  const Var xv = t.constant(x);
  const double direct = t.value(personalization_loss(t, fwd, xv))[0];
  const double flipped = t.value(personalization_loss(t, fwd, ops::flip_horizontal(t, xv)))[0];
  CHECK(direct == doctest::Approx(flipped).epsilon(1e-12));
}

TEST_CASE("prompt gradient of the personalization loss matches finite differences") {
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const ModelConfig c = random_micro_config(rng);
    const Weights<double> w = random_weights(c, rng);
    const auto x = random_tensor<double>({2, c.input_channels, c.input_size, c.input_size}, rng, 0.0, 1.0);
    for (std::size_t blk = 0; blk < w.prompts.size(); ++blk) {
      const auto r = grad_check(
          [&](Tape<double>& t, Var p) {
            const BoundWeights b = bind_with(t, w, true, blk, p);
            return personalization_loss(t, [&](Var in) { return forward(t, c, b, in); }, t.constant(x));
          },
          w.prompts[blk]);
      CAPTURE(seed);
      CHECK(r.max_rel_error < 1e-5);
    }
  }
}
