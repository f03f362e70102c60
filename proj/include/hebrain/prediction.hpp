#pragma once
// Graph readout, MLP prediction, cross-entropy, metrics and the supervised
// fine-tuning loop.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hebrain/analysis.hpp"
#include "hebrain/autodiff.hpp"
#include "hebrain/model.hpp"

namespace hebrain {

// gh[i] = H[i] . w + b over the stacked rows H = [z_1..z_N, h_1..h_N];
// returned as a 1 x 2N row. Dropout is applied when opts.training.
ad::Var readout(const NodeEmbeddings& emb, ad::Var w, ad::Var b, const ForwardOptions& opts);
ad::Var readout(const NodeEmbeddings& emb, const ReadoutParams& p, ParamBinder& binder,
                const ForwardOptions& opts);

// Softmax of the MLP output: 1 x 2 class probabilities.
ad::Var predict(ad::Var gh, const MLPParams& mlp, ParamBinder& binder);

// Per-subject cross-entropy -(y log p1 + (1 - y) log p0) with floored logs.
ad::Var subject_ce_loss(ad::Var probs, int label);

// Batch cross-entropy over class-1 probabilities.
double ce_loss(std::span<const double> prob_class1, std::span<const int> labels);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double sensitivity = 0.0;
};

// Class 1 (patient) is positive; a score above 0.5 predicts class 1.
// AUC is the Mann-Whitney statistic with ties counted one half.
// Throws ValidationError for an empty set or a single-class label set.
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels);

// Exact Mann-Whitney count in half units: 2 * (#pos>neg) + (#ties).
std::uint64_t mann_whitney_half_units(std::span<const double> scores, std::span<const int> labels);

struct FinetuneConfig {
  std::size_t epochs = 40;
  double lr = 2.5e-4;
  double l2 = 1e-5;
  std::size_t batch_size = 128;
  double dropout = 0.7;
  double lr_decay_multiplier = 0.25;
  std::size_t decay_every = 5;
  std::size_t decay_after = 35;
  std::size_t threads = 1;
};

// Learning rate for 0-based epoch e: base * multiplier^c with
// c = 0 before decay_after and 1 + (e - decay_after) / decay_every after.
double scheduled_lr(const FinetuneConfig& cfg, std::size_t epoch);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  std::string split;      // "train" or "test"
  Metrics metrics;
  double ce_loss = 0.0;
};

struct FinetuneResult {
  std::vector<EpochMetrics> trace;
  std::vector<EMSRecord> ems_trace;
  Metrics final_test;
  Metrics final_train;
};

// Evaluation-mode outputs for one subject.
struct SubjectPrediction {
  double prob_class1 = 0.0;
  Matrix graph_vector;                     // 1 x 2N
  std::vector<LayerCapture> captures;      // per layer, per edge type
};

SubjectPrediction evaluate_subject(const PreparedSubject& subject, ModelParams& model,
                                   bool capture = false);

// Minibatch Adam on the mean cross-entropy, updating encoders, readout and
// MLP. After every epoch both splits are evaluated without dropout; EMS
// values per layer are computed over the union of both splits.
FinetuneResult finetune(std::span<const PreparedSubject> train,
                        std::span<const PreparedSubject> test, ModelParams& model,
                        const FinetuneConfig& cfg, std::uint64_t seed);

}  // namespace hebrain
