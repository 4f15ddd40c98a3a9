#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tpgaze/errors.hpp"
#include "tpgaze/gaze.hpp"
#include "tpgaze/personalize.hpp"

using namespace tpgaze;

namespace {

BenchmarkConfig tiny_benchmark() {
  BenchmarkConfig b;
  b.n_source_persons = 1;
  b.n_samples_each = 4;
  b.n_val_each = 2;
  b.n_target_persons = 3;
  b.n_adapt = 6;
  b.n_test = 5;
  return b;
}

Weights<float> gaussian_start(const Model& m, std::uint64_t seed) {
  Weights<float> w = m.weights;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& p : w.prompts)
    for (auto& v : p.data()) v = n(rng);
  return w;
}

/// Angle between two gaze directions from the spherical law of cosines.
double spherical_angle_deg(const GazeLabel& a, const GazeLabel& b) {
  const double c = std::cos(a.pitch) * std::cos(b.pitch) * std::cos(a.yaw - b.yaw) + std::sin(a.pitch) * std::sin(b.pitch);
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST_CASE("gaze vector convention") {
  const auto forward = gaze_to_vector({0.0, 0.0});
  CHECK(forward[0] == 0.0);
  CHECK(forward[1] == 0.0);
  CHECK(forward[2] == -1.0);
  const auto side = gaze_to_vector({0.0, std::numbers::pi / 2});
  CHECK(side[0] == doctest::Approx(-1.0));
  CHECK(std::abs(side[1]) < 1e-15);
  CHECK(std::abs(side[2]) < 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto v = gaze_to_vector({u(rng), u(rng)});
    CHECK(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("angular error") {
  CHECK(angular_error({0.2, -0.3}, {0.2, -0.3}) == 0.0);
  CHECK(angular_error({0.0, 0.0}, {0.0, std::numbers::pi / 2}) == doctest::Approx(90.0));
  const GazeLabel a{0.1, 0.2}, b{0.1, 0.201};
  const double e = angular_error(a, b);
  CHECK(e > 0.0);
  CHECK(e == doctest::Approx(spherical_angle_deg(a, b)).epsilon(1e-6));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int i = 0; i < 100; ++i) {
    const GazeLabel p{u(rng), u(rng)}, q{u(rng), u(rng)};
    CHECK(angular_error(p, q) == angular_error(q, p));
    CHECK(angular_error(p, q) == doctest::Approx(spherical_angle_deg(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("strategy names") {
  for (Strategy s : {Strategy::prompt_only, Strategy::update_all, Strategy::no_meta_prompt})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK(to_string(Strategy::prompt_only) == "prompt_only");
  CHECK_THROWS_AS(strategy_from_string("everything"), ConfigError);
}

TEST_CASE("personalize config validation") {
  PersonalizeConfig c;
  c.num_images = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = PersonalizeConfig{};
  c.lr = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("personalization contracts") {
  const Benchmark bench = make_benchmark(tiny_benchmark(), 4);
  const ModelConfig mc;
  const Model m = build_model(mc, 5);
  const Weights<float> start = gaussian_start(m, 6);
  const PersonDataset& person = bench.target.persons[0];
  PersonalizeConfig c;
  c.steps = 5;
  c.update_all_steps = 3;
  c.seed = 7;

  SUBCASE("zero steps return the start") {
    c.steps = 0;
    CHECK(personalize(mc, start, person.adapt, 0, c) == start);
  }
  SUBCASE("prompt_only leaves theta bit-identical and moves the prompts") {
    const Weights<float> w = personalize(mc, start, person.adapt, 0, c);
    CHECK(w.theta == start.theta);
    CHECK_FALSE(w.prompts == start.prompts);
    CHECK(personalize(mc, start, person.adapt, 0, c) == w);
  }
  SUBCASE("update_all mutates every parameter") {
    c.strategy = Strategy::update_all;
    const Weights<float> w = personalize(mc, start, person.adapt, 0, c);
    for (std::size_t i = 0; i < w.theta.size(); ++i) CHECK_FALSE(w.theta[i] == start.theta[i]);
    for (std::size_t i = 0; i < w.prompts.size(); ++i) CHECK_FALSE(w.prompts[i] == start.prompts[i]);
  }
  SUBCASE("no_meta_prompt ignores the start prompts") {
    c.strategy = Strategy::no_meta_prompt;
    Weights<float> other = start;
    for (auto& p : other.prompts)
      for (auto& v : p.data()) v += 1.0f;
    const Weights<float> a = personalize(mc, start, person.adapt, 0, c);
    const Weights<float> b = personalize(mc, other, person.adapt, 0, c);
    CHECK(a == b);
    CHECK(a.theta == start.theta);
  }
  SUBCASE("only the first images are used") {
    c.num_images = 2;
    AdaptationSplit truncated;
    truncated.images = ImageBatch(person.adapt.images.channels(), person.adapt.images.size());
    truncated.images.push(person.adapt.images.slice(0, 1).reshaped({1, 32, 32}));
    truncated.images.push(person.adapt.images.slice(1, 2).reshaped({1, 32, 32}));
    CHECK(personalize(mc, start, person.adapt, 0, c) == personalize(mc, start, truncated, 0, c));
  }
  SUBCASE("too few images names the person") {
    c.num_images = 7;
    try {
      personalize(mc, start, person.adapt, 42, c);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("person 42") != std::string::npos);
    }
  }
}

TEST_CASE("evaluation reports") {
  const Benchmark bench = make_benchmark(tiny_benchmark(), 8);
  const ModelConfig mc;
  const Model m = build_model(mc, 9);
  const std::vector<Weights<float>> one = {gaussian_start(m, 1)};

  SUBCASE("mean is the average of per-person errors") {
    const EvalReport r = evaluate(mc, one, bench.target.persons, "none", 5, 3);
    REQUIRE(r.rows.size() == 3);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      CHECK(r.rows[i].person_id == bench.target.persons[i].person.person_id);
      CHECK(r.rows[i].error_deg >= 0.0);
      CHECK(r.rows[i].error_deg == person_error(mc, one[0], bench.target.persons[i]));
      sum += r.rows[i].error_deg;
    }
    CHECK(r.mean_error == doctest::Approx(sum / 3.0).epsilon(1e-15));
    CHECK(r.strategy == "none");
    CHECK(r.n_adapt == 5);
    CHECK(r.seed == 3);
    const EvalReport threaded = evaluate(mc, one, bench.target.persons, "none", 5, 3, 3);
    CHECK(threaded.mean_error == r.mean_error);
  }
  SUBCASE("a perfect predictor has zero error") {
    std::vector<PersonDataset> persons = bench.target.persons;
    for (auto& p : persons) {
      const Tensor<float> pred = predict(mc, one[0], p.labeled.images.slice(0, p.labeled.images.count()));
      for (std::size_t i = 0; i < p.labeled.labels.size(); ++i)
        p.labeled.labels[i] = {pred[2 * i], pred[2 * i + 1]};
    }
    const EvalReport r = evaluate(mc, one, persons, "perfect", 5, 1);
    for (const auto& row : r.rows) CHECK(row.error_deg < 1e-3);
  }
  SUBCASE("an empty test split is an error") {
    std::vector<PersonDataset> persons = bench.target.persons;
    persons[1].labeled = LabeledSplit{};
    CHECK_THROWS_AS(evaluate(mc, one, persons, "none", 5, 1), ConfigError);
  }
  SUBCASE("weight count must match") {
    const std::vector<Weights<float>> two = {one[0], one[0]};
    CHECK_THROWS_AS(evaluate(mc, two, bench.target.persons, "none", 5, 1), ConfigError);
  }
}
