#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hebrain/autodiff.hpp"
#include "hebrain/encoders.hpp"
#include "hebrain/graph.hpp"
#include "hebrain/param.hpp"

namespace hebrain {

struct ModelConfig {
  AblationMode mode = AblationMode::Hetero;
  std::size_t n_nodes = 0;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 64;
  std::size_t hbn_layers = 2;
  std::size_t sgc_k = 2;
  // Hidden widths of the prediction MLP; empty means a single affine layer.
  std::vector<std::size_t> mlp_hidden;
};

// Bilinear scorer sigma(z^T W_D h).
struct Discriminator {
  ParamTensor w_d;  // d x d
};

// Shared per-node projection d -> 1 applied to every row of the stacked
// [Z; H_phi] matrix, giving a 2N-long graph vector.
struct ReadoutParams {
  ParamTensor w;  // d x 1
  ParamTensor b;  // 1 x 1
};

struct MLPParams {
  std::vector<ParamTensor> weights;  // in x out
  std::vector<ParamTensor> biases;   // 1 x out
  std::size_t in_dim() const { return weights.front().value.rows(); }
};

struct ModelParams {
  ModelConfig config;
  std::vector<HBNLayerParams> hbn;
  UCNEncoderParams ucn;
  Discriminator disc;
  ReadoutParams readout;
  MLPParams mlp;

  std::vector<ParamTensor*> encoder_params();
  // Encoders + discriminator.
  std::vector<ParamTensor*> pretrain_params();
  // Encoders + readout + MLP.
  std::vector<ParamTensor*> finetune_params();
  std::vector<ParamTensor*> all_params();
};

// Glorot-uniform weights, zero biases, drawn from the Init stream of seed.
ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

// One subject with its graph already ablated and its operators prepared.
struct PreparedSubject {
  std::string id;
  int label = 0;
  GraphOperators ops;
};

PreparedSubject prepare_subject(const HeteroBrainGraph& g, int label, std::string id,
                                AblationMode mode, std::size_t sgc_k);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
  std::vector<LayerCapture>* capture = nullptr;
};

struct NodeEmbeddings {
  ad::Var z;      // HBN output, n x d
  ad::Var h_phi;  // UCN output, n x d
};

NodeEmbeddings encode(const GraphOperators& ops, const ModelParams& model,
                      ParamBinder& binder, const ForwardOptions& opts);

// Builds one subject's scalar loss on the given binder.
using SubjectLossFn = std::function<ad::Var(std::size_t subject, ParamBinder& binder)>;

// Zeroes the grads of params, then sets them to the batch-mean gradient of
// the per-subject losses; returns the batch-mean loss. Subjects are summed in
// batch order, so the result does not depend on the thread count.
double batch_gradients(std::span<const std::size_t> batch, const std::vector<ParamTensor*>& params,
                       const SubjectLossFn& loss_fn, std::size_t threads = 1);

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// entry of params, using central differences of loss_fn with step eps.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

GradCheckResult gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<ad::Var(ParamBinder&)>& loss_fn,
                               double eps = 1e-5, double floor = 1e-8);

}  // namespace hebrain
