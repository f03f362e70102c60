#pragma once
// Synthetic lateralized connectomes, graph-file ingestion and dataset splits.
//
// Graph file (JSON, one subject per file):
//   {
//     "schema": "hebrain.graph",   optional; must match when present
//     "version": 1,                optional; must be 1 when present
//     "id": "subject_0000",        optional
//     "n": 20,
//     "hemisphere": ["L", ..., "R"],
//     "sc": [[...], ...],          n x n, symmetric, zero diagonal, >= 0
//     "fc": [[...], ...],          n x F node features
//     "label": 0 | 1
//   }
// Instead of "sc" a file may carry "intra" and "inter" matrices directly; the
// hemisphere placement of their entries is then validated. Unknown keys are
// rejected.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hebrain/graph.hpp"
#include "json.hpp"

namespace hebrain {

inline constexpr int kGraphSchemaVersion = 1;
inline constexpr int kDatasetSchemaVersion = 1;

struct Subject {
  std::string id;
  HeteroBrainGraph graph;
  int label = 0;
};

struct Dataset {
  std::vector<Subject> subjects;
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return subjects.size(); }
  std::size_t n_nodes() const;
  std::size_t feature_dim() const;
  // Shared shapes and both labels present.
  void validate() const;
};

struct GenConfig {
  std::size_t n_nodes = 20;
  std::size_t n_subjects = 200;
  double intra_density = 0.4;
  double inter_density = 0.15;
  double mu_intra = 1.0;
  double mu_inter = 0.4;
  double sigma_w = 0.2;
  double signal_strength = 0.6;
  double feature_noise = 0.3;
  // Fraction of left-right node pairs carrying the class signal.
  double signal_fraction = 0.1;
  // Feature-side class signal relative to signal_strength.
  double feature_signal_ratio = 0.1;
  // Re-draw feature noise per subject copy (plumbing only; off by default).
  bool augment_feature_noise = false;
  std::uint64_t seed = 7;

  void validate() const;
};

nlohmann::json to_json(const GenConfig& cfg);
// Rejects unknown keys; missing keys keep their defaults.
GenConfig gen_config_from_json(const nlohmann::json& j);

Dataset generate_dataset(const GenConfig& cfg);

// Graph-file codec.
nlohmann::json graph_to_json(const Subject& s);
Subject graph_from_json(const nlohmann::json& j, const std::string& source);

// Reads and validates graph files. max_normalize divides each subject's SC
// weights by their maximum.
Dataset ingest(std::span<const std::filesystem::path> files, bool max_normalize = false);

// Dataset directory: manifest.json plus one graph file per subject.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by label; train receives round(ratio * class count) per class.
SplitIndices split(const Dataset& ds, double train_ratio, std::uint64_t seed);

// Stratified subsample of a training pool; fraction 1 keeps the whole pool.
std::vector<std::size_t> stratified_subsample(const Dataset& ds,
                                              std::span<const std::size_t> pool,
                                              double fraction, std::uint64_t seed);

}  // namespace hebrain
