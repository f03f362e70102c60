#include "hebrain/pretraining.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "hebrain/errors.hpp"
#include "hebrain/kernels.hpp"

namespace hebrain {

double discriminate(std::span<const double> z, std::span<const double> h,
                    const Discriminator& disc) {
  const Matrix& w = disc.w_d.value;
  if (z.size() != w.rows() || h.size() != w.cols())
    throw ShapeError("discriminate: vectors of length " + std::to_string(z.size()) + " and " +
                     std::to_string(h.size()) + " vs W_D " + w.shape_string());
  const auto& k = kernels::active();
  double score = 0.0;
  for (std::size_t a = 0; a < w.rows(); ++a) {
    if (z[a] == 0.0) continue;
    score += z[a] * k.dot(w.row(a).data(), h.data(), h.size());
  }
  return sigmoid(score);
}

std::vector<std::size_t> sample_negatives(Rng& rng, std::size_t i,
                                          std::span<const std::size_t> same_type_nodes,
                                          std::size_t k) {
  std::vector<std::size_t> pool;
  pool.reserve(same_type_nodes.size());
  for (std::size_t v : same_type_nodes)
    if (v != i) pool.push_back(v);
  if (k == 0) throw ConfigError("number of negatives K must be at least 1");
  if (pool.size() < k)
    throw ConfigError("cannot draw K=" + std::to_string(k) + " negatives from " +
                      std::to_string(pool.size()) + " candidates");
  // Partial Fisher-Yates.
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t j = s + static_cast<std::size_t>(rng.uniform_index(pool.size() - s));
    std::swap(pool[s], pool[j]);
  }
  pool.resize(k);
  return pool;
}

NegativePairs draw_negative_pairs(const GraphOperators& ops, Rng& rng, std::size_t k) {
  NegativePairs pairs;
  for (const UCNOperator& u : ops.ucn) {
    if (u.node_ids.size() <= k)
      throw ConfigError("hemisphere " + std::string(1, hemisphere_code(u.hemisphere)) +
                        " has " + std::to_string(u.node_ids.size()) +
                        " nodes; need more than K=" + std::to_string(k));
    std::vector<std::vector<std::size_t>> per_node;
    per_node.reserve(u.node_ids.size());
    for (std::size_t i : u.node_ids) per_node.push_back(sample_negatives(rng, i, u.node_ids, k));
    pairs.negatives.push_back(std::move(per_node));
  }
  return pairs;
}

ad::Var ssl_loss(ad::Var z, ad::Var h_phi, const GraphOperators& ops, ad::Var w_d,
                 const NegativePairs& pairs, std::size_t k) {
  if (ops.ucn.size() != 2 || pairs.negatives.size() != ops.ucn.size())
    throw ContractError("ssl_loss: expected negatives for both hemispheres");
  if (!z.value().same_shape(h_phi.value()))
    throw ShapeError("ssl_loss: z " + z.value().shape_string() + " vs h_phi " +
                     h_phi.value().shape_string());
  ad::Var zw = ad::matmul(z, w_d);
  std::optional<ad::Var> objective;
  for (std::size_t m = 0; m < ops.ucn.size(); ++m) {
    const auto& nodes = ops.ucn[m].node_ids;
    std::vector<std::size_t> anchor;
    std::vector<std::size_t> other;
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      if (pairs.negatives[m][p].size() != k)
        throw ContractError("ssl_loss: negative list does not hold K entries");
      for (std::size_t j : pairs.negatives[m][p]) {
        anchor.push_back(nodes[p]);
        other.push_back(j);
      }
    }
    ad::Var pos = ad::rowwise_dot(ad::gather_rows(zw, nodes), ad::gather_rows(h_phi, nodes));
    ad::Var neg = ad::rowwise_dot(ad::gather_rows(zw, anchor), ad::gather_rows(h_phi, other));
    ad::Var pos_term = ad::sum(ad::log_clamped(ad::sigmoid(pos), kLogFloor));
    ad::Var neg_term =
        ad::sum(ad::log_clamped(ad::affine(ad::sigmoid(neg), -1.0, 1.0), kLogFloor));
    ad::Var per_type = ad::scale(ad::add(ad::scale(pos_term, static_cast<double>(k)), neg_term),
                                 1.0 / static_cast<double>(nodes.size()));
    objective = objective ? ad::add(*objective, per_type) : per_type;
  }
  return ad::scale(*objective, -0.5);
}

ad::Var ssl_loss(ad::Var z, ad::Var h_phi, const GraphOperators& ops, ad::Var w_d, Rng& rng,
                 std::size_t k) {
  return ssl_loss(z, h_phi, ops, w_d, draw_negative_pairs(ops, rng, k), k);
}

namespace {

constexpr std::uint64_t kPretrainTag = 1;

void check_config(const SSLConfig& cfg) {
  if (cfg.negatives == 0) throw ConfigError("K must be at least 1");
  if (cfg.lr < 0.0) throw ConfigError("pretraining learning rate must be non-negative");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
}

}  // namespace

double evaluate_ssl_loss(std::span<const PreparedSubject> subjects, ModelParams& model,
                         std::size_t k, std::uint64_t seed) {
  if (subjects.empty()) throw ContractError("evaluate_ssl_loss: no subjects");
  double total = 0.0;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    ad::Tape tape;
    ParamBinder binder(tape, {});
    NodeEmbeddings emb = encode(subjects[s].ops, model, binder, ForwardOptions{});
    Rng rng = Rng::derive(seed, StreamPurpose::Evaluation, s, kPretrainTag);
    total += ssl_loss(emb.z, emb.h_phi, subjects[s].ops, binder.bind(model.disc.w_d), rng, k)
                 .value()(0, 0);
  }
  return total / static_cast<double>(subjects.size());
}

PretrainResult pretrain(std::span<const PreparedSubject> subjects, ModelParams& model,
                        const SSLConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  if (subjects.empty()) throw ContractError("pretrain: no subjects");
  const auto params = model.pretrain_params();
  const std::size_t batch_size = std::min(cfg.batch_size, subjects.size());
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.l2};

  PretrainResult result;
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = Rng::derive(seed, StreamPurpose::Shuffle, epoch, kPretrainTag);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      batch_gradients(
          batch, params,
          [&](std::size_t s, ParamBinder& binder) {
            Rng dropout_rng = Rng::derive(seed, StreamPurpose::Dropout, epoch, s, kPretrainTag);
            Rng neg_rng = Rng::derive(seed, StreamPurpose::NegativeSampling, epoch, s);
            ForwardOptions opts{true, cfg.dropout, &dropout_rng, nullptr};
            NodeEmbeddings emb = encode(subjects[s].ops, model, binder, opts);
            return ssl_loss(emb.z, emb.h_phi, subjects[s].ops, binder.bind(model.disc.w_d),
                            neg_rng, cfg.negatives);
          },
          cfg.threads);
      if (cfg.lr > 0.0) adam_step(params, adam);
    }
    result.loss_trace.push_back(evaluate_ssl_loss(subjects, model, cfg.negatives, seed));
  }
  return result;
}

PairScores discriminator_scores(std::span<const PreparedSubject> subjects, ModelParams& model,
                                std::size_t k, std::uint64_t seed) {
  PairScores scores;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    ad::Tape tape;
    ParamBinder binder(tape, {});
    NodeEmbeddings emb = encode(subjects[s].ops, model, binder, ForwardOptions{});
    const Matrix& z = emb.z.value();
    const Matrix& h = emb.h_phi.value();
    Rng rng = Rng::derive(seed, StreamPurpose::Evaluation, s, kPretrainTag + 1);
    const NegativePairs pairs = draw_negative_pairs(subjects[s].ops, rng, k);
    for (std::size_t m = 0; m < subjects[s].ops.ucn.size(); ++m) {
      const auto& nodes = subjects[s].ops.ucn[m].node_ids;
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        scores.positive.push_back(discriminate(z.row(nodes[p]), h.row(nodes[p]), model.disc));
        for (std::size_t j : pairs.negatives[m][p])
          scores.negative.push_back(discriminate(z.row(nodes[p]), h.row(j), model.disc));
      }
    }
  }
  return scores;
}

}  // namespace hebrain
