#include "tpgaze/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "tpgaze/errors.hpp"
#include "tpgaze/meta.hpp"
#include "tpgaze/parallel.hpp"
#include "tpgaze/synthgaze.hpp"
#include "tpgaze/training.hpp"

namespace tpgaze {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::map<std::string, std::uint64_t> provenance(const RunConfig& c) {
  const StageSeeds s = derive_stage_seeds(c.seed);
  return {{"root", c.seed},
          {"data", s.data},
          {"model_init", s.model_init},
          {"pretrain", s.pretrain},
          {"meta", s.meta},
          {"personalize", s.personalize}};
}

GazeDataset load_split(const RunPaths& paths, const std::string& split) {
  fs::path manifest = paths.data(split);
  manifest += ".json";
  if (!fs::exists(manifest)) {
    throw IoError("missing dataset " + manifest.string() + " (run gen-data first)");
  }
  return load_dataset(paths.data(split));
}

Checkpoint load_stage(const fs::path& dir, const ModelConfig& model, const char* producer) {
  if (!fs::exists(dir / "manifest.json")) {
    throw IoError("missing checkpoint " + (dir / "manifest.json").string() + " (run " + producer + " first)");
  }
  return load_checkpoint(dir, model);
}

std::vector<Weights<float>> personalize_all(const ModelConfig& model, const Weights<float>& start,
                                            const GazeDataset& target, const PersonalizeConfig& pc, int threads) {
  std::vector<Weights<float>> out(target.persons.size());
  parallel_for(static_cast<int>(target.persons.size()), threads, [&](int i) {
    const auto& p = target.persons[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = personalize(model, start, p.adapt, p.person.person_id, pc);
  });
  return out;
}

void write_report(const EvalReport& r, const fs::path& csv_path) {
  auto csv = open_out(csv_path);
  csv << "person_id,n_adapt,strategy,error_deg\n";
  for (const auto& row : r.rows) {
    csv << row.person_id << ',' << row.n_adapt << ',' << row.strategy << ',' << num(row.error_deg) << '\n';
  }
  if (!csv) throw IoError("write failed for " + csv_path.string());
  json per_person = json::array();
  for (const auto& row : r.rows) per_person.push_back({{"person_id", row.person_id}, {"error_deg", row.error_deg}});
  fs::path json_path = csv_path;
  json_path.replace_extension(".json");
  write_json(json_path, {{"strategy", r.strategy},
                         {"n_adapt", r.n_adapt},
                         {"seed", r.seed},
                         {"n_persons", r.rows.size()},
                         {"mean_error_deg", r.mean_error},
                         {"persons", per_person}});
}

bool stage_done(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }

bool data_done(const RunPaths& paths) {
  for (const char* split : {"source_train", "source_val", "target"}) {
    fs::path m = paths.data(split);
    m += ".json";
    if (!fs::exists(m)) return false;
  }
  return true;
}

}  // namespace

fs::path RunPaths::personalized(const std::string& strategy, int n_images, int person_id) const {
  return root / "personalized" / strategy / ("k" + std::to_string(n_images)) / ("person-" + std::to_string(person_id));
}

fs::path RunPaths::report(const std::string& strategy, int n_images) const {
  return root / "reports" / ("eval_" + strategy + "_k" + std::to_string(n_images) + ".csv");
}

std::vector<std::string> eval_strategies() {
  return {"baseline", "none", "prompt_only", "update_all", "no_meta_prompt"};
}

void write_resolved_config(const RunConfig& config, const RunPaths& paths, std::ostream& log) {
  const json echo = to_json(config);
  write_json(paths.resolved_config(), echo);
  log << "resolved config:\n" << echo.dump(2) << '\n';
}

void run_gen_data(const RunConfig& config, const RunPaths& paths, std::ostream& log) {
  const StageSeeds seeds = derive_stage_seeds(config.seed);
  const Benchmark b = make_benchmark(config.data, seeds.data);
  fs::create_directories(paths.data("x").parent_path());
  save_dataset(b.source_train, paths.data("source_train"));
  save_dataset(b.source_val, paths.data("source_val"));
  save_dataset(b.target, paths.data("target"));
  auto count = [](const GazeDataset& d, bool adapt) {
    int n = 0;
    for (const auto& p : d.persons) n += adapt ? p.adapt.images.count() : p.labeled.images.count();
    return n;
  };
  log << "[gen-data] source_train: " << b.source_train.persons.size() << " persons, "
      << count(b.source_train, false) << " labeled images\n"
      << "[gen-data] source_val: " << b.source_val.persons.size() << " persons, " << count(b.source_val, false)
      << " labeled images\n"
      << "[gen-data] target: " << b.target.persons.size() << " persons, " << count(b.target, true)
      << " adaptation images, " << count(b.target, false) << " test images\n";
}

void run_pretrain(const RunConfig& config, const RunPaths& paths, std::ostream& log) {
  const GazeDataset source = load_split(paths, "source_train");
  const LabeledSplit train = flatten_labeled(source);
  Model model = build_model(config.model, derive_stage_seeds(config.seed).model_init);

  auto csv = open_out(paths.pretrain_log());
  csv << "epoch,train_l1,train_sym,lr\n";
  pretrain(model, train, config.train, [&](const EpochLog& e) {
    csv << e.epoch << ',' << num(e.train_l1) << ',' << num(e.train_sym) << ',' << num(e.lr) << '\n';
    log << "[pretrain] epoch " << e.epoch << '/' << config.train.epochs << " train_l1=" << num(e.train_l1)
        << " train_sym=" << num(e.train_sym) << " lr=" << num(e.lr) << '\n';
  });
  if (!csv) throw IoError("write failed for " + paths.pretrain_log().string());
  save_checkpoint({config.model, model.weights, provenance(config), "pretrain"}, paths.pretrained());

  const GazeDataset val = load_split(paths, "source_val");
  const std::vector<Weights<float>> w{model.weights};
  const double err = evaluate(config.model, w, val.persons, "baseline", 0, config.seed, config.threads).mean_error;
  log << "[pretrain] source validation error " << num(err) << " deg; checkpoint " << paths.pretrained().string()
      << '\n';
}

void run_meta_train(const RunConfig& config, const RunPaths& paths, std::ostream& log) {
  const Checkpoint pre = load_stage(paths.pretrained(), config.model, "pretrain");
  const GazeDataset source = load_split(paths, "source_train");
  Model model{config.model, pre.weights, make_partition(config.model)};

  auto csv = open_out(paths.meta_log());
  csv << "iteration,mean_inner_sym_loss,mean_post_inner_l1\n";
  const int every = std::max(1, config.meta.iterations / 10);
  meta_train(model, flatten_labeled(source), config.meta, [&](const MetaLog& m) {
    csv << m.iteration << ',' << num(m.inner_sym) << ',' << num(m.post_l1) << '\n';
    if (m.iteration % every == 0 || m.iteration == config.meta.iterations) {
      log << "[meta-train] iteration " << m.iteration << '/' << config.meta.iterations
          << " inner_sym=" << num(m.inner_sym) << " post_inner_l1=" << num(m.post_l1) << '\n';
    }
  });
  if (!csv) throw IoError("write failed for " + paths.meta_log().string());
  save_checkpoint({config.model, model.weights, provenance(config), "meta"}, paths.meta());
  log << "[meta-train] checkpoint " << paths.meta().string() << '\n';
}

void run_personalize(const RunConfig& config, const RunPaths& paths, std::ostream& log) {
  const Checkpoint meta = load_stage(paths.meta(), config.model, "meta-train");
  const GazeDataset target = load_split(paths, "target");
  const auto& pc = config.personalize;
  const auto adapted = personalize_all(config.model, meta.weights, target, pc, config.threads);
  for (std::size_t i = 0; i < adapted.size(); ++i) {
    const int id = target.persons[i].person.person_id;
    save_checkpoint({config.model, adapted[i], provenance(config), "personalize"},
                    paths.personalized(to_string(pc.strategy), pc.num_images, id));
  }
  log << "[personalize] " << to_string(pc.strategy) << " with " << pc.num_images << " images, " << adapted.size()
      << " persons -> " << (paths.root / "personalized" / to_string(pc.strategy)).string() << '\n';
}

EvalReport run_eval(const RunConfig& config, const RunPaths& paths, const std::string& strategy, std::ostream& log) {
  const auto known = eval_strategies();
  if (std::find(known.begin(), known.end(), strategy) == known.end()) {
    throw ConfigError("unknown eval strategy '" + strategy +
                      "' (expected baseline, none, prompt_only, update_all or no_meta_prompt)");
  }
  const GazeDataset target = load_split(paths, "target");
  std::vector<Weights<float>> weights;
  int n_adapt = 0;
  if (strategy == "baseline") {
    const Checkpoint pre = load_stage(paths.pretrained(), config.model, "pretrain");
    weights.push_back(zero_prompts_like(config.model, pre.weights));
  } else if (strategy == "none") {
    weights.push_back(load_stage(paths.meta(), config.model, "meta-train").weights);
  } else {
    n_adapt = config.personalize.num_images;
    for (const auto& p : target.persons) {
      weights.push_back(
          load_stage(paths.personalized(strategy, n_adapt, p.person.person_id), config.model, "personalize").weights);
    }
  }
  EvalReport r = evaluate(config.model, weights, target.persons, strategy, n_adapt, config.seed, config.threads);
  write_report(r, paths.report(strategy, n_adapt));
  log << "[eval] " << strategy << " n_adapt=" << n_adapt << " mean error " << num(r.mean_error) << " deg over "
      << r.rows.size() << " persons -> " << paths.report(strategy, n_adapt).string() << '\n';
  return r;
}

std::vector<std::string> ablation_strategies() { return {"Baseline", "Update-All", "No-Meta", "TPGaze"}; }

double summary_error(const AblationResult& result, const std::string& strategy, int n_samples) {
  for (const auto& row : result.summary) {
    if (row.strategy == strategy && row.n_samples == n_samples) return row.mean_error;
  }
  throw ConfigError("ablation summary has no entry for " + strategy + " with " + std::to_string(n_samples) + " samples");
}

AblationResult run_ablate(const RunConfig& config, const fs::path& root, std::ostream& log) {
  AblationResult result;
  for (const std::uint64_t seed : config.ablate.seeds) {
    RunConfig c = config;
    c.seed = seed;
    resolve(c);
    const RunPaths paths{root / ("seed-" + std::to_string(seed))};
    log << "[ablate] seed " << seed << " in " << paths.root.string() << '\n';
    write_resolved_config(c, paths, log);
    if (!data_done(paths)) run_gen_data(c, paths, log);
    if (!stage_done(paths.pretrained())) run_pretrain(c, paths, log);
    if (!stage_done(paths.meta())) run_meta_train(c, paths, log);

    const Checkpoint pre = load_stage(paths.pretrained(), c.model, "pretrain");
    const Checkpoint meta = load_stage(paths.meta(), c.model, "meta-train");
    const GazeDataset target = load_split(paths, "target");

    const std::vector<Weights<float>> baseline{zero_prompts_like(c.model, pre.weights)};
    const double baseline_error = evaluate(c.model, baseline, target.persons, "Baseline", 0, seed, c.threads).mean_error;

    for (const int k : c.ablate.sample_counts) {
      result.rows.push_back({"Baseline", k, seed, baseline_error});
      const std::pair<const char*, Strategy> runs[] = {
          {"Update-All", Strategy::update_all}, {"No-Meta", Strategy::no_meta_prompt}, {"TPGaze", Strategy::prompt_only}};
      for (const auto& [name, strategy] : runs) {
        PersonalizeConfig pc = c.personalize;
        pc.strategy = strategy;
        pc.num_images = k;
        const auto adapted = personalize_all(c.model, meta.weights, target, pc, c.threads);
        const double err = evaluate(c.model, adapted, target.persons, name, k, seed, c.threads).mean_error;
        result.rows.push_back({name, k, seed, err});
      }
      log << "[ablate] seed " << seed << " k=" << k;
      for (auto it = result.rows.end() - 4; it != result.rows.end(); ++it) log << ' ' << it->strategy << '=' << num(it->mean_error);
      log << '\n';
    }
  }

  const auto names = ablation_strategies();
  for (const auto& name : names) {
    for (const int k : config.ablate.sample_counts) {
      double total = 0.0;
      int n = 0;
      for (const auto& row : result.rows) {
        if (row.strategy == name && row.n_samples == k) {
          total += row.mean_error;
          ++n;
        }
      }
      result.summary.push_back({name, k, 0, total / n});
    }
  }

  auto csv = open_out(root / "ablation.csv");
  csv << "strategy,n_samples,seed,mean_error_deg\n";
  for (const auto& r : result.rows) csv << r.strategy << ',' << r.n_samples << ',' << r.seed << ',' << num(r.mean_error) << '\n';
  if (!csv) throw IoError("write failed for " + (root / "ablation.csv").string());

  // Best strategy per sample-count column, ties go to the earlier row.
  std::map<int, std::string> best;
  for (const int k : config.ablate.sample_counts) {
    double lowest = 0.0;
    for (const auto& name : names) {
      const double e = summary_error(result, name, k);
      if (!best.count(k) || e < lowest) {
        best[k] = name;
        lowest = e;
      }
    }
  }
  auto sum_csv = open_out(root / "ablation_summary.csv");
  sum_csv << "strategy,n_samples,n_seeds,mean_error_deg,best\n";
  json cells = json::array();
  for (const auto& r : result.summary) {
    const bool is_best = best[r.n_samples] == r.strategy;
    sum_csv << r.strategy << ',' << r.n_samples << ',' << config.ablate.seeds.size() << ',' << num(r.mean_error) << ','
            << (is_best ? 1 : 0) << '\n';
    cells.push_back({{"strategy", r.strategy}, {"n_samples", r.n_samples}, {"mean_error_deg", r.mean_error}, {"best", is_best}});
  }
  if (!sum_csv) throw IoError("write failed for " + (root / "ablation_summary.csv").string());
  json best_json = json::object();
  for (const auto& [k, name] : best) best_json[std::to_string(k)] = name;
  write_json(root / "ablation_summary.json",
             {{"seeds", config.ablate.seeds}, {"sample_counts", config.ablate.sample_counts}, {"cells", cells},
              {"best_per_sample_count", best_json}});

  // Human-readable table: strategies as rows, sample counts as columns.
  log << "\nseed-averaged mean angular error (deg), * marks the best per column\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-12s", "strategy");
  log << line;
  for (const int k : config.ablate.sample_counts) {
    std::snprintf(line, sizeof line, " %9s", ("k=" + std::to_string(k)).c_str());
    log << line;
  }
  log << '\n';
  for (const auto& name : names) {
    std::snprintf(line, sizeof line, "%-12s", name.c_str());
    log << line;
    for (const int k : config.ablate.sample_counts) {
      std::snprintf(line, sizeof line, " %8.3f%c", summary_error(result, name, k), best[k] == name ? '*' : ' ');
      log << line;
    }
    log << '\n';
  }
  return result;
}

}  // namespace tpgaze
