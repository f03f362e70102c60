#pragma once
// HBN encoder (relational message passing with learned edge-weight maps) and
// UCN encoder (SGC over the unilateral cross-hemispheric networks).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hebrain/autodiff.hpp"
#include "hebrain/graph.hpp"
#include "hebrain/param.hpp"
#include "hebrain/rng.hpp"

namespace hebrain {

enum class AblationMode { Hetero, Homo, IntraOnly, InterOnly };

std::string to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view name);
// Number of edge types the HBN encoder distinguishes under a mode.
std::size_t edge_type_count(AblationMode mode);

// homo: both blocks presented as one edge type; intra_only / inter_only: the
// other block is zeroed.
HeteroBrainGraph make_ablation(const HeteroBrainGraph& g, AblationMode mode);

// Per edge type r of one layer: W_r (d_in x d_out) and the edge-weight map
// f_r(e) = e * a_r + b_r with a_r, b_r of shape 1 x d_in. W_o is the self term.
struct HBNLayerParams {
  std::vector<ParamTensor> w_r;
  std::vector<ParamTensor> a_r;
  std::vector<ParamTensor> b_r;
  ParamTensor w_o;

  std::size_t in_dim() const { return w_o.value.rows(); }
  std::size_t out_dim() const { return w_o.value.cols(); }
  std::size_t edge_types() const { return w_r.size(); }
  void collect(std::vector<ParamTensor*>& out);
};

HBNLayerParams init_hbn_layer(std::size_t d_in, std::size_t d_out, std::size_t edge_types,
                              Rng& rng, const std::string& prefix);

struct UCNEncoderParams {
  ParamTensor w_left;   // F x d
  ParamTensor w_right;  // F x d
  ParamTensor w_o;      // F x d, shared by both hemispheres
  std::size_t k = 2;

  void collect(std::vector<ParamTensor*>& out);
};

UCNEncoderParams init_ucn_encoder(std::size_t in_dim, std::size_t out_dim, std::size_t k,
                                  Rng& rng);

// Graph-derived constants used by the encoders. For edge block r,
// weighted(i, j) = e_ij / |N_i^r| and unweighted(i, j) = 1 / |N_i^r| on edges,
// so the mean edge-mapped message over N_i^r is
//   a_r * (weighted Z) + b_r * (unweighted Z)   (row-broadcast products).
struct EdgeBlockOperator {
  Matrix weighted;
  Matrix unweighted;
  std::vector<bool> has_neighbors;
};

struct UCNOperator {
  Hemisphere hemisphere;
  std::vector<std::size_t> node_ids;
  Matrix prop;
  Matrix features;             // X_m
  Matrix propagated_features;  // S^k X_m
};

struct GraphOperators {
  std::size_t n_nodes = 0;
  std::vector<EdgeBlockOperator> blocks;
  // 1 / C(i), or 0 when node i has no edges at all.
  std::vector<double> inv_type_count;
  std::vector<UCNOperator> ucn;  // left, right
  std::size_t sgc_k = 0;
  Matrix features;
};

// Builds the operators for an (already ablated) graph; k is the SGC order.
// with_ucn=false skips the UCNs (single-hemisphere test graphs).
GraphOperators prepare_operators(const HeteroBrainGraph& g, std::size_t k,
                                 bool with_ucn = true);

// Per-edge-type aggregates of one layer, before the 1/C(i) combination and
// the nonlinearity; one n x d_out matrix per edge type.
using LayerCapture = std::vector<Matrix>;

struct LayerOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;                      // required when training with dropout > 0
  std::vector<LayerCapture>* capture = nullptr;
};

ad::Var hbn_layer(const GraphOperators& ops, ad::Var z_prev, const HBNLayerParams& p,
                  ParamBinder& binder, const LayerOptions& opts);

ad::Var hbn_encode(const GraphOperators& ops, ad::Var x,
                   const std::vector<HBNLayerParams>& layers, ParamBinder& binder,
                   const LayerOptions& opts);

ad::Var ucn_encode(const GraphOperators& ops, const UCNEncoderParams& p, ParamBinder& binder);

// Plain (tape-free) evaluation helpers.
Matrix hbn_layer_value(const HeteroBrainGraph& g, const Matrix& z_prev,
                       const HBNLayerParams& p);
Matrix ucn_encode_value(const HeteroBrainGraph& g, const Matrix& x, const UCNEncoderParams& p);

}  // namespace hebrain
