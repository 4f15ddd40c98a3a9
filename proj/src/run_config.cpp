#include "tpgaze/run_config.hpp"

#include <fstream>
#include <set>

#include "tpgaze/errors.hpp"
#include "tpgaze/seed.hpp"

namespace tpgaze {

using json = nlohmann::json;

namespace {

/// Parsed text yields unsigned values; programmatic JSON may hold signed ones.
bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads the members of one JSON object into typed fields and rejects any
// key that no field claimed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  void field(const char* key, int& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw type_error(key, "an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(at(key) + " is out of range");
      dst = static_cast<int>(x);
    }
  }
  void field(const char* key, std::uint64_t& dst) {
    if (const json* v = take(key)) {
      if (!is_non_negative_integer(*v)) throw type_error(key, "a non-negative integer");
      dst = v->get<std::uint64_t>();
    }
  }
  void field(const char* key, double& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw type_error(key, "a number");
      dst = v->get<double>();
    }
  }
  void field(const char* key, bool& dst) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw type_error(key, "true or false");
      dst = v->get<bool>();
    }
  }
  void field(const char* key, std::string& dst) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw type_error(key, "a string");
      dst = v->get<std::string>();
    }
  }
  void field(const char* key, std::vector<int>& dst) {
    if (const json* v = array(key)) {
      std::vector<int> out;
      for (const auto& x : *v) {
        if (!x.is_number_integer()) throw type_error(key, "an array of integers");
        out.push_back(x.get<int>());
      }
      dst = std::move(out);
    }
  }
  void field(const char* key, std::vector<std::uint64_t>& dst) {
    if (const json* v = array(key)) {
      std::vector<std::uint64_t> out;
      for (const auto& x : *v) {
        if (!is_non_negative_integer(x)) throw type_error(key, "an array of non-negative integers");
        out.push_back(x.get<std::uint64_t>());
      }
      dst = std::move(out);
    }
  }
  /// Array member, or nullptr when absent.
  const json* array(const char* key) {
    const json* v = take(key);
    if (v && !v->is_array()) throw type_error(key, "an array");
    return v;
  }
  /// Nested object, or nullptr when absent.
  const json* child(const char* key) {
    const json* v = take(key);
    if (v && !v->is_object()) throw type_error(key, "an object");
    return v;
  }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown config key '" + at(key.c_str()) + "'");
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  ConfigError type_error(const char* key, const char* expected) const {
    return ConfigError("config key '" + at(key) + "' must be " + expected);
  }
  std::string label() const { return path_.empty() ? "config" : "config section '" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json to_json(const AppearanceRange& a) {
  return {{"aspect_min", a.aspect_min},       {"aspect_max", a.aspect_max},
          {"iris_min", a.iris_min},           {"iris_max", a.iris_max},
          {"pupil_min", a.pupil_min},         {"pupil_max", a.pupil_max},
          {"intensity_min", a.intensity_min}, {"intensity_max", a.intensity_max},
          {"bias_min", a.bias_min},           {"bias_max", a.bias_max}};
}

void read(const json& j, const std::string& path, AppearanceRange& a) {
  Section s(j, path);
  s.field("aspect_min", a.aspect_min);
  s.field("aspect_max", a.aspect_max);
  s.field("iris_min", a.iris_min);
  s.field("iris_max", a.iris_max);
  s.field("pupil_min", a.pupil_min);
  s.field("pupil_max", a.pupil_max);
  s.field("intensity_min", a.intensity_min);
  s.field("intensity_max", a.intensity_max);
  s.field("bias_min", a.bias_min);
  s.field("bias_max", a.bias_max);
  s.finish();
}

json to_json(const DomainSpec& d) {
  return {{"brightness_shift", d.brightness_shift},
          {"contrast_scale", d.contrast_scale},
          {"additive_noise_sigma", d.additive_noise_sigma},
          {"blur_radius", d.blur_radius}};
}

void read(const json& j, const std::string& path, DomainSpec& d) {
  Section s(j, path);
  s.field("brightness_shift", d.brightness_shift);
  s.field("contrast_scale", d.contrast_scale);
  s.field("additive_noise_sigma", d.additive_noise_sigma);
  s.field("blur_radius", d.blur_radius);
  s.finish();
}

json to_json(const BenchmarkConfig& b) {
  return {{"n_source_persons", b.n_source_persons},
          {"n_samples_each", b.n_samples_each},
          {"n_val_each", b.n_val_each},
          {"n_target_persons", b.n_target_persons},
          {"n_adapt", b.n_adapt},
          {"n_test", b.n_test},
          {"pitch_max", b.pitch_max},
          {"yaw_max", b.yaw_max},
          {"source_appearance", to_json(b.source_appearance)},
          {"target_appearance", to_json(b.target_appearance)},
          {"source_domain", to_json(b.source_domain)},
          {"target_domain", to_json(b.target_domain)}};
}

void read(const json& j, const std::string& path, BenchmarkConfig& b) {
  Section s(j, path);
  s.field("n_source_persons", b.n_source_persons);
  s.field("n_samples_each", b.n_samples_each);
  s.field("n_val_each", b.n_val_each);
  s.field("n_target_persons", b.n_target_persons);
  s.field("n_adapt", b.n_adapt);
  s.field("n_test", b.n_test);
  s.field("pitch_max", b.pitch_max);
  s.field("yaw_max", b.yaw_max);
  if (const json* c = s.child("source_appearance")) read(*c, s.at("source_appearance"), b.source_appearance);
  if (const json* c = s.child("target_appearance")) read(*c, s.at("target_appearance"), b.target_appearance);
  if (const json* c = s.child("source_domain")) read(*c, s.at("source_domain"), b.source_domain);
  if (const json* c = s.child("target_domain")) read(*c, s.at("target_domain"), b.target_domain);
  s.finish();
}

void read(const json& j, const std::string& path, ModelConfig& m) {
  Section s(j, path);
  s.field("input_channels", m.input_channels);
  s.field("input_size", m.input_size);
  if (const json* v = s.array("convs")) {
    std::vector<ConvSpec> convs;
    for (std::size_t i = 0; i < v->size(); ++i) {
      Section c((*v)[i], s.at("convs") + "[" + std::to_string(i) + "]");
      ConvSpec spec;
      c.field("out_channels", spec.out_channels);
      c.field("kernel", spec.kernel);
      c.field("stride", spec.stride);
      c.field("pad", spec.pad);
      c.finish();
      convs.push_back(spec);
    }
    m.convs = std::move(convs);
  }
  s.field("head_dim", m.head_dim);
  s.field("prompted_layers", m.prompted_layers);
  s.finish();
}

json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"lr_decay_epoch", t.lr_decay_epoch},
          {"lr_decay_factor", t.lr_decay_factor},
          {"l1_weight", t.l1_weight},
          {"sym_weight", t.sym_weight},
          {"beta1", t.beta1},
          {"beta2", t.beta2}};
}

void read(const json& j, const std::string& path, TrainConfig& t) {
  Section s(j, path);
  s.field("epochs", t.epochs);
  s.field("batch_size", t.batch_size);
  s.field("lr", t.lr);
  s.field("lr_decay_epoch", t.lr_decay_epoch);
  s.field("lr_decay_factor", t.lr_decay_factor);
  s.field("l1_weight", t.l1_weight);
  s.field("sym_weight", t.sym_weight);
  s.field("beta1", t.beta1);
  s.field("beta2", t.beta2);
  s.finish();
}

json to_json(const MetaConfig& m) {
  return {{"inner_lr", m.inner_lr},
          {"outer_lr", m.outer_lr},
          {"iterations", m.iterations},
          {"batch_size", m.batch_size},
          {"mode", m.mode == MetaMode::exact ? "exact" : "first_order"},
          {"prompt_init", m.prompt_init == PromptInit::zeros ? "zeros" : "gaussian"},
          {"outer_adam", m.outer_adam}};
}

void read(const json& j, const std::string& path, MetaConfig& m) {
  Section s(j, path);
  s.field("inner_lr", m.inner_lr);
  s.field("outer_lr", m.outer_lr);
  s.field("iterations", m.iterations);
  s.field("batch_size", m.batch_size);
  std::string mode = m.mode == MetaMode::exact ? "exact" : "first_order";
  s.field("mode", mode);
  if (mode == "exact") {
    m.mode = MetaMode::exact;
  } else if (mode == "first_order") {
    m.mode = MetaMode::first_order;
  } else {
    throw ConfigError("config key '" + s.at("mode") + "' must be \"first_order\" or \"exact\", got \"" + mode + "\"");
  }
  std::string init = m.prompt_init == PromptInit::zeros ? "zeros" : "gaussian";
  s.field("prompt_init", init);
  if (init == "zeros") {
    m.prompt_init = PromptInit::zeros;
  } else if (init == "gaussian") {
    m.prompt_init = PromptInit::gaussian;
  } else {
    throw ConfigError("config key '" + s.at("prompt_init") + "' must be \"gaussian\" or \"zeros\", got \"" + init + "\"");
  }
  s.field("outer_adam", m.outer_adam);
  s.finish();
}

json to_json(const PersonalizeConfig& p) {
  return {{"num_images", p.num_images},
          {"lr", p.lr},
          {"steps", p.steps},
          {"update_all_steps", p.update_all_steps},
          {"strategy", to_string(p.strategy)}};
}

void read(const json& j, const std::string& path, PersonalizeConfig& p) {
  Section s(j, path);
  s.field("num_images", p.num_images);
  s.field("lr", p.lr);
  s.field("steps", p.steps);
  s.field("update_all_steps", p.update_all_steps);
  std::string strategy = to_string(p.strategy);
  s.field("strategy", strategy);
  p.strategy = strategy_from_string(strategy);
  s.finish();
}

json to_json(const AblateConfig& a) { return {{"seeds", a.seeds}, {"sample_counts", a.sample_counts}}; }

void read(const json& j, const std::string& path, AblateConfig& a) {
  Section s(j, path);
  s.field("seeds", a.seeds);
  s.field("sample_counts", a.sample_counts);
  s.finish();
}

json to_json(const StageSeeds& s) {
  return {{"data", s.data},
          {"model_init", s.model_init},
          {"pretrain", s.pretrain},
          {"meta", s.meta},
          {"personalize", s.personalize}};
}

}  // namespace

StageSeeds derive_stage_seeds(std::uint64_t root) {
  return {derive_seed(root, "data"), derive_seed(root, "model_init"), derive_seed(root, "pretrain"),
          derive_seed(root, "meta"), derive_seed(root, "personalize")};
}

RunConfig default_run_config() {
  RunConfig c;
  // Desk benchmark. The first conv downsamples so every prompted border
  // feeds a stride-2 window that sees one pad column but not the other,
  // which gives the prompts a handle on left/right asymmetry.
  c.model.convs = {{8, 3, 2, 1}, {16, 3, 1, 1}, {16, 3, 2, 1}, {32, 3, 1, 1}, {32, 3, 1, 1}, {32, 3, 1, 1}};
  c.model.prompted_layers = 6;
  // Target shift in appearance and lighting only. A per-person gaze bias is
  // mirror-symmetric across persons and invisible to the symmetry loss.
  c.data.target_appearance.bias_min = 0.0;
  c.data.target_appearance.bias_max = 0.0;
  c.data.target_domain = {0.2, 1.0, 0.04, 0.0};
  // Second-order meta-gradient with an inner step large enough to move the
  // prompts as far as test-time adaptation does.
  c.meta.mode = MetaMode::exact;
  c.meta.inner_lr = 30.0;
  c.meta.outer_lr = 0.01;
  c.meta.outer_adam = true;
  c.meta.iterations = 1200;
  resolve(c);
  return c;
}

void resolve(RunConfig& c) {
  if (c.threads < 1) throw ConfigError("config key 'threads' must be >= 1");
  if (c.out.empty()) throw ConfigError("config key 'out' must not be empty");
  const StageSeeds s = derive_stage_seeds(c.seed);
  c.train.seed = s.pretrain;
  c.meta.seed = s.meta;
  c.personalize.seed = s.personalize;
  validate(c.model);
  validate(c.train);
  validate(c.meta);
  validate(c.personalize);
  if (c.ablate.seeds.empty()) throw ConfigError("config key 'ablate.seeds' must not be empty");
  if (c.ablate.sample_counts.empty()) throw ConfigError("config key 'ablate.sample_counts' must not be empty");
  for (int k : c.ablate.sample_counts) {
    if (k < 1 || k > c.data.n_adapt) {
      throw ConfigError("config key 'ablate.sample_counts' entry " + std::to_string(k) + " outside [1, data.n_adapt=" +
                        std::to_string(c.data.n_adapt) + "]");
    }
  }
  if (c.personalize.num_images > c.data.n_adapt) {
    throw ConfigError("config key 'personalize.num_images' = " + std::to_string(c.personalize.num_images) +
                      " exceeds data.n_adapt = " + std::to_string(c.data.n_adapt));
  }
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
  Section s(j, "");
  s.field("seed", base.seed);
  s.field("threads", base.threads);
  s.field("out", base.out);
  if (const json* c = s.child("data")) read(*c, "data", base.data);
  if (const json* c = s.child("model")) read(*c, "model", base.model);
  if (const json* c = s.child("train")) read(*c, "train", base.train);
  if (const json* c = s.child("meta")) read(*c, "meta", base.meta);
  if (const json* c = s.child("personalize")) read(*c, "personalize", base.personalize);
  if (const json* c = s.child("ablate")) read(*c, "ablate", base.ablate);
  // The echo carries the derived seeds for reference; they must agree.
  const json* echoed = s.child("stage_seeds");
  s.finish();
  if (echoed && *echoed != to_json(derive_stage_seeds(base.seed))) {
    throw ConfigError("config key 'stage_seeds' does not match the seeds derived from 'seed'");
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

json to_json(const ModelConfig& m) {
  json convs = json::array();
  for (const auto& c : m.convs) {
    convs.push_back({{"out_channels", c.out_channels}, {"kernel", c.kernel}, {"stride", c.stride}, {"pad", c.pad}});
  }
  return {{"input_channels", m.input_channels},
          {"input_size", m.input_size},
          {"convs", convs},
          {"head_dim", m.head_dim},
          {"prompted_layers", m.prompted_layers}};
}

ModelConfig model_config_from_json(const json& j, const std::string& where) {
  ModelConfig m;
  read(j, where, m);
  return m;
}

json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"out", c.out},
          {"data", to_json(c.data)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"meta", to_json(c.meta)},
          {"personalize", to_json(c.personalize)},
          {"ablate", to_json(c.ablate)},
          {"stage_seeds", to_json(derive_stage_seeds(c.seed))}};
}

}  // namespace tpgaze
