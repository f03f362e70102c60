#include "hebrain/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hebrain/errors.hpp"
#include "hebrain/pretraining.hpp"

namespace hebrain {

ad::Var readout(const NodeEmbeddings& emb, ad::Var w, ad::Var b, const ForwardOptions& opts) {
  ad::Var stacked = ad::vstack(emb.z, emb.h_phi);
  if (w.rows() != stacked.cols() || w.cols() != 1)
    throw ShapeError("readout: embeddings " + stacked.value().shape_string() + " vs weight " +
                     w.value().shape_string());
  ad::Var gh = ad::transpose(ad::add_scalar(ad::matmul(stacked, w), b));
  if (opts.training && opts.dropout > 0.0) {
    if (opts.rng == nullptr) throw ContractError("readout: dropout requires an rng");
    gh = ad::hadamard(gh, gh.tape->constant(
                              dropout_mask(gh.rows(), gh.cols(), opts.dropout, *opts.rng)));
  }
  return gh;
}

ad::Var readout(const NodeEmbeddings& emb, const ReadoutParams& p, ParamBinder& binder,
                const ForwardOptions& opts) {
  return readout(emb, binder.bind(p.w), binder.bind(p.b), opts);
}

ad::Var predict(ad::Var gh, const MLPParams& mlp, ParamBinder& binder) {
  if (mlp.weights.empty()) throw ContractError("predict: MLP has no layers");
  if (gh.cols() != mlp.in_dim())
    throw ShapeError("predict: graph vector " + gh.value().shape_string() +
                     " vs MLP input width " + std::to_string(mlp.in_dim()));
  ad::Var x = gh;
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    x = ad::add_row(ad::matmul(x, binder.bind(mlp.weights[i])), binder.bind(mlp.biases[i]));
    if (i + 1 < mlp.weights.size()) x = ad::relu(x);
  }
  if (x.cols() != 2) throw ShapeError("predict: MLP must end in 2 outputs");
  return ad::softmax_rows(x);
}

ad::Var subject_ce_loss(ad::Var probs, int label) {
  if (label != 0 && label != 1)
    throw ValidationError("label must be 0 or 1, got " + std::to_string(label));
  return ad::scale(ad::log_clamped(ad::element(probs, 0, static_cast<std::size_t>(label)),
                                   kLogFloor),
                   -1.0);
}

double ce_loss(std::span<const double> prob_class1, std::span<const int> labels) {
  if (prob_class1.size() != labels.size())
    throw ShapeError("ce_loss: " + std::to_string(prob_class1.size()) + " probabilities for " +
                     std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw ValidationError("ce_loss: empty batch");
  double total = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int y = labels[t];
    if (y != 0 && y != 1) throw ValidationError("label must be 0 or 1, got " + std::to_string(y));
    const double p = prob_class1[t];
    total += y == 1 ? std::log(std::max(p, kLogFloor)) : std::log(std::max(1.0 - p, kLogFloor));
  }
  return -total / static_cast<double>(labels.size());
}

std::uint64_t mann_whitney_half_units(std::span<const double> scores,
                                      std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t neg_below = 0;
  std::uint64_t half_units = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::uint64_t pos_here = 0;
    std::uint64_t neg_here = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      (labels[order[end]] == 1 ? pos_here : neg_here) += 1;
      ++end;
    }
    half_units += pos_here * (2 * neg_below + neg_here);
    neg_below += neg_here;
    start = end;
  }
  return half_units;
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("compute_metrics: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw ValidationError("compute_metrics: empty evaluation set");
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("label must be 0 or 1, got " + std::to_string(labels[i]));
    const bool predicted = scores[i] > 0.5;
    if (labels[i] == 1)
      (predicted ? tp : fn) += 1;
    else
      (predicted ? fp : tn) += 1;
  }
  const std::uint64_t n_pos = tp + fn;
  const std::uint64_t n_neg = tn + fp;
  if (n_pos == 0 || n_neg == 0)
    throw ValidationError("AUC undefined: evaluation labels contain a single class");
  Metrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  m.sensitivity = static_cast<double>(tp) / static_cast<double>(n_pos);
  const std::uint64_t f1_den = 2 * tp + fp + fn;
  m.f1 = f1_den == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(f1_den);
  m.auc = static_cast<double>(mann_whitney_half_units(scores, labels)) /
          static_cast<double>(2 * n_pos * n_neg);
  return m;
}

double scheduled_lr(const FinetuneConfig& cfg, std::size_t epoch) {
  if (epoch < cfg.decay_after || cfg.decay_every == 0) return cfg.lr;
  const std::size_t decays = 1 + (epoch - cfg.decay_after) / cfg.decay_every;
  return cfg.lr * std::pow(cfg.lr_decay_multiplier, static_cast<double>(decays));
}

SubjectPrediction evaluate_subject(const PreparedSubject& subject, ModelParams& model,
                                   bool capture) {
  SubjectPrediction out;
  ad::Tape tape;
  ParamBinder binder(tape, {});
  ForwardOptions opts;
  opts.capture = capture ? &out.captures : nullptr;
  NodeEmbeddings emb = encode(subject.ops, model, binder, opts);
  ad::Var gh = readout(emb, model.readout, binder, opts);
  ad::Var probs = predict(gh, model.mlp, binder);
  out.prob_class1 = probs.value()(0, 1);
  out.graph_vector = gh.value();
  return out;
}

namespace {

constexpr std::uint64_t kFinetuneTag = 2;

struct SplitEvaluation {
  Metrics metrics;
  double ce = 0.0;
};

SplitEvaluation evaluate_split(std::span<const PreparedSubject> subjects, ModelParams& model,
                               std::vector<std::vector<LayerCapture>>* captures) {
  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& s : subjects) {
    SubjectPrediction p = evaluate_subject(s, model, captures != nullptr);
    probs.push_back(p.prob_class1);
    labels.push_back(s.label);
    if (captures) captures->push_back(std::move(p.captures));
  }
  return {compute_metrics(probs, labels), ce_loss(probs, labels)};
}

}  // namespace

FinetuneResult finetune(std::span<const PreparedSubject> train,
                        std::span<const PreparedSubject> test, ModelParams& model,
                        const FinetuneConfig& cfg, std::uint64_t seed) {
  if (train.empty() || test.empty()) throw ContractError("finetune: empty train or test split");
  if (cfg.lr < 0.0) throw ConfigError("fine-tuning learning rate must be non-negative");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    throw ConfigError("dropout must lie in [0, 1)");

  const auto params = model.finetune_params();
  const std::size_t batch_size = std::min(cfg.batch_size, train.size());
  const std::size_t n_nodes = train.front().ops.n_nodes;
  FinetuneResult result;
  std::vector<std::size_t> order(train.size());

  auto record = [&](std::size_t epoch) {
    std::vector<std::vector<LayerCapture>> captures;
    const SplitEvaluation tr = evaluate_split(train, model, &captures);
    const SplitEvaluation te = evaluate_split(test, model, &captures);
    result.trace.push_back({epoch, "train", tr.metrics, tr.ce});
    result.trace.push_back({epoch, "test", te.metrics, te.ce});
    result.final_train = tr.metrics;
    result.final_test = te.metrics;
    for (std::size_t layer = 0; layer < model.hbn.size(); ++layer) {
      std::vector<LayerCapture> per_subject;
      per_subject.reserve(captures.size());
      for (auto& c : captures) per_subject.push_back(std::move(c.at(layer)));
      const EMSPair e = ems(per_subject, n_nodes, per_subject.size());
      result.ems_trace.push_back({epoch, layer + 1, e.intra, e.inter});
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = Rng::derive(seed, StreamPurpose::Shuffle, epoch, kFinetuneTag);
    shuffle_rng.shuffle(order);
    const AdamConfig adam{scheduled_lr(cfg, epoch), 0.9, 0.999, 1e-8, cfg.l2};
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      batch_gradients(
          batch, params,
          [&](std::size_t s, ParamBinder& binder) {
            Rng dropout_rng = Rng::derive(seed, StreamPurpose::Dropout, epoch, s, kFinetuneTag);
            ForwardOptions opts{true, cfg.dropout, &dropout_rng, nullptr};
            NodeEmbeddings emb = encode(train[s].ops, model, binder, opts);
            ad::Var gh = readout(emb, model.readout, binder, opts);
            return subject_ce_loss(predict(gh, model.mlp, binder), train[s].label);
          },
          cfg.threads);
      if (adam.lr > 0.0) adam_step(params, adam);
    }
    record(epoch + 1);
  }
  if (cfg.epochs == 0) record(0);
  return result;
}

}  // namespace hebrain
