#pragma once
// Contrastive pretraining: a bilinear discriminator separates (z_i, h_i)
// pairs taken from the same node from pairs (z_i, h_j) with j drawn from the
// same subject and hemisphere.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hebrain/autodiff.hpp"
#include "hebrain/model.hpp"
#include "hebrain/rng.hpp"

namespace hebrain {

// Floor applied inside every log() of the training losses.
inline constexpr double kLogFloor = 1e-7;

struct SSLConfig {
  std::size_t negatives = 2;  // K
  std::size_t epochs = 20;
  double lr = 1e-4;
  double l2 = 1e-5;
  std::size_t batch_size = 128;
  double dropout = 0.0;
  std::size_t threads = 1;
};

// sigma(z^T W_D h) for single vectors.
double discriminate(std::span<const double> z, std::span<const double> h,
                    const Discriminator& disc);

// K distinct members of same_type_nodes other than i, uniformly without
// replacement.
std::vector<std::size_t> sample_negatives(Rng& rng, std::size_t i,
                                          std::span<const std::size_t> same_type_nodes,
                                          std::size_t k);

// Explicit pair list used by the loss: for every node of every hemisphere,
// its K negatives (in node order within each hemisphere).
struct NegativePairs {
  // hemisphere -> node position -> K negative node ids
  std::vector<std::vector<std::vector<std::size_t>>> negatives;
};

NegativePairs draw_negative_pairs(const GraphOperators& ops, Rng& rng, std::size_t k);

// Loss to minimize:
//   -1/2 sum_m 1/|N_m| sum_{i in N_m} [ K log D(z_i, h_i) + sum_k log(1 - D(z_i, h_jk)) ]
// with every log argument floored at kLogFloor.
ad::Var ssl_loss(ad::Var z, ad::Var h_phi, const GraphOperators& ops, ad::Var w_d,
                 const NegativePairs& pairs, std::size_t k);

// Convenience overload drawing negatives from rng.
ad::Var ssl_loss(ad::Var z, ad::Var h_phi, const GraphOperators& ops, ad::Var w_d, Rng& rng,
                 std::size_t k);

struct PretrainResult {
  std::vector<double> loss_trace;  // mean SSL loss per epoch
};

// Minibatch Adam on the mean SSL loss over subjects. Updates encoders and the
// discriminator only. Negatives and dropout masks are redrawn every epoch
// from streams derived from seed.
PretrainResult pretrain(std::span<const PreparedSubject> subjects, ModelParams& model,
                        const SSLConfig& cfg, std::uint64_t seed);

// Discriminator scores for held-out subjects (no dropout): positives are
// same-node pairs, negatives are sampled as in training.
struct PairScores {
  std::vector<double> positive;
  std::vector<double> negative;
};

PairScores discriminator_scores(std::span<const PreparedSubject> subjects, ModelParams& model,
                                std::size_t k, std::uint64_t seed);

// Mean SSL loss in evaluation mode with negatives drawn from seed.
double evaluate_ssl_loss(std::span<const PreparedSubject> subjects, ModelParams& model,
                         std::size_t k, std::uint64_t seed);

}  // namespace hebrain
