#pragma once
// Seeded experiment runner: split, optional contrastive pretraining,
// fine-tuning and evaluation, with manifests and CSV traces.
//
// Run config (JSON object, unknown keys rejected; every key optional):
//   mode              "hetero" | "homo" | "intra_only" | "inter_only"
//   pretrain          bool
//   hidden_dim, hbn_layers, sgc_k, K, mlp_hidden (list)
//   dropout, dropout_pretrain
//   lr_pretrain, lr_finetune, l2, lr_decay_multiplier, decay_every, decay_after
//   epochs_pretrain, epochs_finetune, batch_size, threads
//   train_ratio       fraction of subjects in the training pool
//   train_fraction    fraction of the training pool actually used (sweeps)
//   seeds             list of unsigned integers
//   dataset           path to a dataset directory, or
//   synthetic         generator config object

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hebrain/datagen.hpp"
#include "hebrain/encoders.hpp"
#include "hebrain/model.hpp"
#include "hebrain/prediction.hpp"
#include "json.hpp"

namespace hebrain {

inline constexpr int kRunSchemaVersion = 1;

struct RunConfig {
  AblationMode mode = AblationMode::Hetero;
  bool pretrain = true;
  std::size_t hidden_dim = 64;
  std::size_t hbn_layers = 2;
  std::size_t sgc_k = 2;
  std::size_t negatives = 2;
  std::vector<std::size_t> mlp_hidden;
  double dropout = 0.7;
  double dropout_pretrain = 0.0;
  double lr_pretrain = 1e-4;
  double lr_finetune = 2.5e-4;
  double l2 = 1e-5;
  double lr_decay_multiplier = 0.25;
  std::size_t decay_every = 5;
  std::size_t decay_after = 35;
  std::size_t epochs_pretrain = 20;
  std::size_t epochs_finetune = 40;
  std::size_t batch_size = 128;
  std::size_t threads = 1;
  double train_ratio = 0.8;
  double train_fraction = 1.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string dataset;
  std::optional<GenConfig> synthetic;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Reads a run config, or the "config" member of a run manifest. A relative
// dataset path is resolved against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

// The dataset named by the config: loaded from disk or generated.
Dataset resolve_dataset(const RunConfig& cfg);

struct SeedResult {
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<double> ssl_trace;
  std::optional<double> discriminator_auc;
  FinetuneResult finetune;
  ModelParams model;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  nlohmann::json manifest;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
};
MeanStd mean_std(std::span<const double> values);

// Runs every seed of cfg on ds. With out_dir set, writes manifest.json plus
// seed_<s>/{ssl_trace,metrics_trace,ems_trace}.csv and seed_<s>/model.json.
RunResult run_experiment(const RunConfig& cfg, const Dataset& ds,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct SweepPoint {
  double fraction = 0.0;
  RunResult pretrained;
  RunResult scratch;
  double f1_pretrained = 0.0;
  double f1_scratch = 0.0;
  // (pretrained - scratch) / scratch on mean F1; 0 when scratch F1 is 0.
  double relative_improvement = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  nlohmann::json summary;
};

// For each training fraction runs pretrained and scratch variants with the
// test split of every seed left unchanged. With out_dir set, writes
// fraction_<f>/{pretrained,scratch}/ run directories and sweep.json.
SweepResult run_sweep(const RunConfig& base, const Dataset& ds, std::span<const double> fractions,
                      const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Model parameters by name.
nlohmann::json model_to_json(ModelParams& model);
ModelParams model_from_json(const nlohmann::json& j);

// One CSV row per subject: subject_id followed by the 2N graph vector.
void export_embeddings(const Dataset& ds, ModelParams& model, const std::filesystem::path& csv);

void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace hebrain
