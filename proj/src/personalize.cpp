#include "tpgaze/personalize.hpp"

#include <cmath>

#include "tpgaze/adam.hpp"
#include "tpgaze/losses.hpp"
#include "tpgaze/parallel.hpp"
#include "tpgaze/seed.hpp"

namespace tpgaze {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::prompt_only: return "prompt_only";
    case Strategy::update_all: return "update_all";
    case Strategy::no_meta_prompt: return "no_meta_prompt";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "prompt_only") return Strategy::prompt_only;
  if (name == "update_all") return Strategy::update_all;
  if (name == "no_meta_prompt") return Strategy::no_meta_prompt;
  throw ConfigError("unknown personalization strategy '" + name +
                    "' (expected prompt_only, update_all or no_meta_prompt)");
}

void validate(const PersonalizeConfig& c) {
  if (c.num_images < 1) throw ConfigError("personalize: num_images must be >= 1");
  if (!(c.lr > 0)) throw ConfigError("personalize: lr must be > 0");
  if (c.steps < 0 || c.update_all_steps < 0) throw ConfigError("personalize: steps must be >= 0");
}

Weights<float> personalize(const ModelConfig& model, const Weights<float>& start, const AdaptationSplit& adapt,
                           int person_id, const PersonalizeConfig& config) {
  validate(config);
  if (adapt.images.count() < config.num_images) {
    throw ConfigError("personalize: person " + std::to_string(person_id) + " has " +
                      std::to_string(adapt.images.count()) + " adaptation images, " +
                      std::to_string(config.num_images) + " requested");
  }
  Weights<float> w = start;
  if (config.strategy == Strategy::no_meta_prompt) {
    gaussian_prompts(w, derive_seed(config.seed, "no_meta_prompt", static_cast<std::uint64_t>(person_id)));
  }
  const bool tune_theta = config.strategy == Strategy::update_all;
  const int steps = tune_theta ? config.update_all_steps : config.steps;

  std::vector<std::string> ids = prompt_names(model);
  if (tune_theta) {
    const auto t = theta_names(model);
    ids.insert(ids.begin(), t.begin(), t.end());
  }
  AdamState adam(AdamConfig{config.lr, 0.5, 0.95, 1e-8});
  const Tensor<float> images = adapt.images.slice(0, config.num_images);

  for (int step = 0; step < steps; ++step) {
    Tape<float> tape;
    const BoundWeights b = bind_weights(tape, w, tune_theta, true);
    const Var x = tape.constant(images);
    const Var loss = personalization_loss(tape, [&](Var in) { return forward(tape, model, b, in); }, x);
    if (!std::isfinite(tape.value(loss)[0])) {
      throw NumericError("personalize: loss is not finite for person " + std::to_string(person_id) +
                         " at step " + std::to_string(step));
    }
    tape.backward(loss);
    std::vector<Tensor<float>> grads;
    std::vector<Tensor<float>*> params;
    if (tune_theta) {
      for (std::size_t i = 0; i < b.theta.size(); ++i) {
        grads.push_back(tape.grad(b.theta[i]));
        params.push_back(&w.theta[i]);
      }
    }
    for (std::size_t i = 0; i < b.prompts.size(); ++i) {
      grads.push_back(tape.grad(b.prompts[i]));
      params.push_back(&w.prompts[i]);
    }
    adam.step(params, grads, ids);
  }
  return w;
}

double person_error(const ModelConfig& model, const Weights<float>& w, const PersonDataset& person) {
  const int n = person.labeled.images.count();
  if (n < 1) throw ConfigError("evaluate: person " + std::to_string(person.person.person_id) + " has an empty test split");
  const Tensor<float> pred = predict(model, w, person.labeled.images.slice(0, n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const GazeLabel p{pred[static_cast<std::size_t>(2 * i)], pred[static_cast<std::size_t>(2 * i + 1)]};
    total += angular_error(p, person.labeled.labels[static_cast<std::size_t>(i)]);
  }
  return total / n;
}

EvalReport evaluate(const ModelConfig& model, std::span<const Weights<float>> weights,
                    std::span<const PersonDataset> persons, const std::string& strategy, int n_adapt,
                    std::uint64_t seed, int threads) {
  if (weights.size() != 1 && weights.size() != persons.size()) {
    throw ConfigError("evaluate: need one weight set or one per person");
  }
  if (persons.empty()) throw ConfigError("evaluate: no persons");
  EvalReport r{strategy, n_adapt, seed, std::vector<EvalRow>(persons.size()), 0.0};
  parallel_for(static_cast<int>(persons.size()), threads, [&](int i) {
    const auto& w = weights.size() == 1 ? weights[0] : weights[static_cast<std::size_t>(i)];
    const auto& p = persons[static_cast<std::size_t>(i)];
    r.rows[static_cast<std::size_t>(i)] = {p.person.person_id, n_adapt, strategy, person_error(model, w, p)};
  });
  for (const auto& row : r.rows) r.mean_error += row.error_deg;
  r.mean_error /= static_cast<double>(r.rows.size());
  return r;
}

}  // namespace tpgaze
