#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tpgaze/checkpoint.hpp"
#include "tpgaze/personalize.hpp"
#include "tpgaze/run_config.hpp"

namespace tpgaze {

/// File layout of one run directory.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path resolved_config() const { return root / "config.resolved.json"; }
  std::filesystem::path data(const std::string& split) const { return root / "data" / split; }
  std::filesystem::path pretrained() const { return root / "checkpoints" / "pretrained"; }
  std::filesystem::path meta() const { return root / "checkpoints" / "meta"; }
  std::filesystem::path personalized(const std::string& strategy, int n_images, int person_id) const;
  std::filesystem::path pretrain_log() const { return root / "logs" / "pretrain.csv"; }
  std::filesystem::path meta_log() const { return root / "logs" / "meta_train.csv"; }
  std::filesystem::path report(const std::string& strategy, int n_images) const;
};

/// Strategies accepted by `run_eval`: "baseline" (zero prompts), "none"
/// (meta prompt, no adaptation) and the three personalization strategies.
std::vector<std::string> eval_strategies();

/// Writes the resolved config echo into the run directory and to `log`.
void write_resolved_config(const RunConfig& config, const RunPaths& paths, std::ostream& log);

/// Source training, source validation and target datasets.
void run_gen_data(const RunConfig& config, const RunPaths& paths, std::ostream& log);

/// Pre-trains theta on the source split; writes the checkpoint and the
/// per-epoch CSV (epoch,train_l1,train_sym,lr).
void run_pretrain(const RunConfig& config, const RunPaths& paths, std::ostream& log);

/// Meta-trains the prompt from the pre-trained checkpoint; writes the meta
/// checkpoint and the CSV (iteration,mean_inner_sym_loss,mean_post_inner_l1).
void run_meta_train(const RunConfig& config, const RunPaths& paths, std::ostream& log);

/// Personalizes every target person with `config.personalize` and writes one
/// checkpoint per person.
void run_personalize(const RunConfig& config, const RunPaths& paths, std::ostream& log);

/// Evaluates one strategy on the target persons and writes the CSV report
/// (person_id,n_adapt,strategy,error_deg) plus its JSON summary.
EvalReport run_eval(const RunConfig& config, const RunPaths& paths, const std::string& strategy, std::ostream& log);

struct AblationRow {
  std::string strategy;  // Baseline, Update-All, No-Meta, TPGaze
  int n_samples = 0;
  std::uint64_t seed = 0;
  double mean_error = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  /// Seed-averaged errors, one entry per (strategy, n_samples).
  std::vector<AblationRow> summary;
};

/// Display names in table order.
std::vector<std::string> ablation_strategies();

/// Seed-averaged error of one (strategy, n_samples) cell; throws if absent.
double summary_error(const AblationResult& result, const std::string& strategy, int n_samples);

/// For every root seed in `config.ablate.seeds`, prepares the run directory
/// `<root>/seed-<s>` (running any missing upstream stage), then evaluates all
/// strategies for every sample count. Writes ablation.csv
/// (strategy,n_samples,seed,mean_error_deg), ablation_summary.csv and
/// ablation_summary.json under `root`.
AblationResult run_ablate(const RunConfig& config, const std::filesystem::path& root, std::ostream& log);

}  // namespace tpgaze
