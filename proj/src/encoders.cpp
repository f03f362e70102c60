#include "hebrain/encoders.hpp"

#include "hebrain/errors.hpp"

namespace hebrain {

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::Hetero:
      return "hetero";
    case AblationMode::Homo:
      return "homo";
    case AblationMode::IntraOnly:
      return "intra_only";
    case AblationMode::InterOnly:
      return "inter_only";
  }
  return "hetero";
}

AblationMode parse_ablation_mode(std::string_view name) {
  if (name == "hetero") return AblationMode::Hetero;
  if (name == "homo") return AblationMode::Homo;
  if (name == "intra_only") return AblationMode::IntraOnly;
  if (name == "inter_only") return AblationMode::InterOnly;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected hetero, homo, intra_only or inter_only)");
}

std::size_t edge_type_count(AblationMode mode) { return mode == AblationMode::Homo ? 1 : 2; }

HeteroBrainGraph make_ablation(const HeteroBrainGraph& g, AblationMode mode) {
  HeteroBrainGraph out = g;
  switch (mode) {
    case AblationMode::Hetero:
      out.typing = EdgeTyping::Heterogeneous;
      break;
    case AblationMode::Homo:
      out.typing = EdgeTyping::Homogeneous;
      break;
    case AblationMode::IntraOnly:
      out.typing = EdgeTyping::Heterogeneous;
      out.inter_adj.fill(0.0);
      break;
    case AblationMode::InterOnly:
      out.typing = EdgeTyping::Heterogeneous;
      out.intra_adj.fill(0.0);
      break;
  }
  return out;
}

void HBNLayerParams::collect(std::vector<ParamTensor*>& out) {
  for (std::size_t r = 0; r < w_r.size(); ++r) {
    out.push_back(&w_r[r]);
    out.push_back(&a_r[r]);
    out.push_back(&b_r[r]);
  }
  out.push_back(&w_o);
}

HBNLayerParams init_hbn_layer(std::size_t d_in, std::size_t d_out, std::size_t edge_types,
                              Rng& rng, const std::string& prefix) {
  HBNLayerParams p;
  for (std::size_t r = 0; r < edge_types; ++r) {
    const std::string tag = prefix + ".r" + std::to_string(r);
    p.w_r.emplace_back(tag + ".w", glorot_uniform(d_in, d_out, rng));
    p.a_r.emplace_back(tag + ".a", glorot_uniform(1, d_in, rng));
    p.b_r.emplace_back(tag + ".b", Matrix(1, d_in));
  }
  p.w_o = ParamTensor(prefix + ".w_o", glorot_uniform(d_in, d_out, rng));
  return p;
}

void UCNEncoderParams::collect(std::vector<ParamTensor*>& out) {
  out.push_back(&w_left);
  out.push_back(&w_right);
  out.push_back(&w_o);
}

UCNEncoderParams init_ucn_encoder(std::size_t in_dim, std::size_t out_dim, std::size_t k,
                                  Rng& rng) {
  if (k < 1) throw ConfigError("SGC order k must be at least 1");
  UCNEncoderParams p;
  p.w_left = ParamTensor("ucn.w_left", glorot_uniform(in_dim, out_dim, rng));
  p.w_right = ParamTensor("ucn.w_right", glorot_uniform(in_dim, out_dim, rng));
  p.w_o = ParamTensor("ucn.w_o", glorot_uniform(in_dim, out_dim, rng));
  p.k = k;
  return p;
}

namespace {

EdgeBlockOperator block_operator(const Matrix& adj) {
  const std::size_t n = adj.rows();
  EdgeBlockOperator op{Matrix(n, n), Matrix(n, n), std::vector<bool>(n, false)};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j) > 0.0) ++count;
    if (count == 0) continue;
    op.has_neighbors[i] = true;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < n; ++j) {
      if (adj(i, j) > 0.0) {
        op.weighted(i, j) = adj(i, j) * inv;
        op.unweighted(i, j) = inv;
      }
    }
  }
  return op;
}

Matrix gather(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

GraphOperators prepare_operators(const HeteroBrainGraph& g, std::size_t k, bool with_ucn) {
  if (k < 1) throw ConfigError("SGC order k must be at least 1");
  GraphOperators ops;
  ops.n_nodes = g.n_nodes;
  ops.features = g.features;
  ops.sgc_k = k;
  if (g.typing == EdgeTyping::Homogeneous) {
    ops.blocks.push_back(block_operator(g.structural()));
  } else {
    ops.blocks.push_back(block_operator(g.intra_adj));
    ops.blocks.push_back(block_operator(g.inter_adj));
  }
  ops.inv_type_count.assign(g.n_nodes, 0.0);
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    std::size_t types = 0;
    for (const auto& b : ops.blocks) types += b.has_neighbors[i] ? 1 : 0;
    if (types > 0) ops.inv_type_count[i] = 1.0 / static_cast<double>(types);
  }
  if (!with_ucn) return ops;
  for (Hemisphere m : {Hemisphere::Left, Hemisphere::Right}) {
    UCNGraph ucn = build_ucn(g, m);
    UCNOperator u{m, ucn.node_ids, std::move(ucn.prop), gather(g.features, ucn.node_ids), {}};
    Matrix propagated = u.features;
    for (std::size_t step = 0; step < k; ++step) propagated = matmul(u.prop, propagated);
    u.propagated_features = std::move(propagated);
    ops.ucn.push_back(std::move(u));
  }
  return ops;
}

ad::Var hbn_layer(const GraphOperators& ops, ad::Var z_prev, const HBNLayerParams& p,
                  ParamBinder& binder, const LayerOptions& opts) {
  ad::Tape& tape = binder.tape();
  if (z_prev.rows() != ops.n_nodes || z_prev.cols() != p.in_dim())
    throw ShapeError("hbn_layer: input " + z_prev.value().shape_string() + " vs expected " +
                     std::to_string(ops.n_nodes) + "x" + std::to_string(p.in_dim()));
  if (p.edge_types() != ops.blocks.size())
    throw ShapeError("hbn_layer: parameters for " + std::to_string(p.edge_types()) +
                     " edge types but graph presents " + std::to_string(ops.blocks.size()));

  std::optional<ad::Var> combined;
  LayerCapture capture;
  for (std::size_t r = 0; r < ops.blocks.size(); ++r) {
    const EdgeBlockOperator& block = ops.blocks[r];
    ad::Var weighted_mean = ad::matmul(tape.constant(block.weighted), z_prev);
    ad::Var plain_mean = ad::matmul(tape.constant(block.unweighted), z_prev);
    ad::Var message = ad::add(ad::mul_row(weighted_mean, binder.bind(p.a_r[r])),
                              ad::mul_row(plain_mean, binder.bind(p.b_r[r])));
    ad::Var agg = ad::matmul(message, binder.bind(p.w_r[r]));
    if (opts.capture) capture.push_back(agg.value());
    combined = combined ? ad::add(*combined, agg) : agg;
  }
  ad::Var activated = ad::relu(ad::scale_rows(*combined, ops.inv_type_count));
  ad::Var out = ad::add(activated, ad::matmul(z_prev, binder.bind(p.w_o)));
  if (opts.capture) opts.capture->push_back(std::move(capture));
  if (opts.training && opts.dropout > 0.0) {
    if (opts.rng == nullptr) throw ContractError("hbn_layer: dropout requires an rng");
    out = ad::hadamard(out, tape.constant(dropout_mask(out.rows(), out.cols(), opts.dropout,
                                                       *opts.rng)));
  }
  return out;
}

ad::Var hbn_encode(const GraphOperators& ops, ad::Var x,
                   const std::vector<HBNLayerParams>& layers, ParamBinder& binder,
                   const LayerOptions& opts) {
  ad::Var z = x;
  for (const auto& layer : layers) z = hbn_layer(ops, z, layer, binder, opts);
  return z;
}

ad::Var ucn_encode(const GraphOperators& ops, const UCNEncoderParams& p, ParamBinder& binder) {
  if (p.k < 1) throw ConfigError("SGC order k must be at least 1");
  if (p.k != ops.sgc_k)
    throw ConfigError("ucn_encode: operators prepared for k=" + std::to_string(ops.sgc_k) +
                      " but encoder has k=" + std::to_string(p.k));
  if (ops.ucn.size() != 2) throw ContractError("ucn_encode: operators were built without UCNs");
  ad::Tape& tape = binder.tape();
  if (ops.features.cols() != p.w_o.value.rows())
    throw ShapeError("ucn_encode: features " + ops.features.shape_string() +
                     " vs weight " + p.w_o.value.shape_string());
  ad::Var w_o = binder.bind(p.w_o);
  std::optional<ad::Var> out;
  for (const UCNOperator& u : ops.ucn) {
    const ParamTensor& w_path = u.hemisphere == Hemisphere::Left ? p.w_left : p.w_right;
    ad::Var h = ad::add(ad::matmul(tape.constant(u.propagated_features), binder.bind(w_path)),
                        ad::matmul(tape.constant(u.features), w_o));
    ad::Var placed = ad::scatter_rows(h, u.node_ids, ops.n_nodes);
    out = out ? ad::add(*out, placed) : placed;
  }
  return *out;
}

Matrix hbn_layer_value(const HeteroBrainGraph& g, const Matrix& z_prev,
                       const HBNLayerParams& p) {
  ad::Tape tape;
  ParamBinder binder(tape, {});
  const GraphOperators ops = prepare_operators(g, 1, /*with_ucn=*/false);
  return hbn_layer(ops, tape.constant(z_prev), p, binder, LayerOptions{}).value();
}

Matrix ucn_encode_value(const HeteroBrainGraph& g, const Matrix& x, const UCNEncoderParams& p) {
  if (p.k < 1) throw ConfigError("SGC order k must be at least 1");
  HeteroBrainGraph copy = g;
  copy.features = x;
  const GraphOperators ops = prepare_operators(copy, p.k);
  ad::Tape tape;
  ParamBinder binder(tape, {});
  return ucn_encode(ops, p, binder).value();
}

}  // namespace hebrain
