#include "hebrain/model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "hebrain/errors.hpp"

namespace hebrain {

std::vector<ParamTensor*> ModelParams::encoder_params() {
  std::vector<ParamTensor*> out;
  for (auto& layer : hbn) layer.collect(out);
  ucn.collect(out);
  return out;
}

std::vector<ParamTensor*> ModelParams::pretrain_params() {
  auto out = encoder_params();
  out.push_back(&disc.w_d);
  return out;
}

std::vector<ParamTensor*> ModelParams::finetune_params() {
  auto out = encoder_params();
  out.push_back(&readout.w);
  out.push_back(&readout.b);
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    out.push_back(&mlp.weights[i]);
    out.push_back(&mlp.biases[i]);
  }
  return out;
}

std::vector<ParamTensor*> ModelParams::all_params() {
  auto out = pretrain_params();
  out.push_back(&readout.w);
  out.push_back(&readout.b);
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    out.push_back(&mlp.weights[i]);
    out.push_back(&mlp.biases[i]);
  }
  return out;
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.n_nodes == 0 || cfg.feature_dim == 0 || cfg.hidden_dim == 0)
    throw ConfigError("model dimensions must be positive");
  if (cfg.sgc_k < 1) throw ConfigError("sgc_k must be at least 1");
  Rng rng = Rng::derive(seed, StreamPurpose::Init);
  ModelParams m;
  m.config = cfg;
  const std::size_t types = edge_type_count(cfg.mode);
  std::size_t d_in = cfg.feature_dim;
  for (std::size_t l = 0; l < cfg.hbn_layers; ++l) {
    m.hbn.push_back(init_hbn_layer(d_in, cfg.hidden_dim, types, rng, "hbn" + std::to_string(l)));
    d_in = cfg.hidden_dim;
  }
  // With zero HBN layers z is the raw features; the UCN output must match it.
  const std::size_t d = cfg.hbn_layers == 0 ? cfg.feature_dim : cfg.hidden_dim;
  m.ucn = init_ucn_encoder(cfg.feature_dim, d, cfg.sgc_k, rng);
  m.disc.w_d = ParamTensor("disc.w_d", glorot_uniform(d, d, rng));
  m.readout.w = ParamTensor("readout.w", glorot_uniform(d, 1, rng));
  m.readout.b = ParamTensor("readout.b", Matrix(1, 1));
  std::size_t width = 2 * cfg.n_nodes;
  std::vector<std::size_t> widths = cfg.mlp_hidden;
  widths.push_back(2);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    m.mlp.weights.emplace_back("mlp" + std::to_string(i) + ".w",
                               glorot_uniform(width, widths[i], rng));
    m.mlp.biases.emplace_back("mlp" + std::to_string(i) + ".b", Matrix(1, widths[i]));
    width = widths[i];
  }
  return m;
}

PreparedSubject prepare_subject(const HeteroBrainGraph& g, int label, std::string id,
                                AblationMode mode, std::size_t sgc_k) {
  return PreparedSubject{std::move(id), label, prepare_operators(make_ablation(g, mode), sgc_k)};
}

NodeEmbeddings encode(const GraphOperators& ops, const ModelParams& model,
                      ParamBinder& binder, const ForwardOptions& opts) {
  ad::Tape& tape = binder.tape();
  LayerOptions layer_opts{opts.training, opts.dropout, opts.rng, opts.capture};
  ad::Var z = hbn_encode(ops, tape.constant(ops.features), model.hbn, binder, layer_opts);
  ad::Var h = ucn_encode(ops, model.ucn, binder);
  return {z, h};
}

namespace {

std::vector<const ParamTensor*> as_const(const std::vector<ParamTensor*>& params) {
  return {params.begin(), params.end()};
}

}  // namespace

double batch_gradients(std::span<const std::size_t> batch, const std::vector<ParamTensor*>& params,
                       const SubjectLossFn& loss_fn, std::size_t threads) {
  if (batch.empty()) throw ContractError("batch_gradients: empty batch");
  for (ParamTensor* p : params) p->zero_grad();
  const double weight = 1.0 / static_cast<double>(batch.size());
  const auto cparams = as_const(params);

  std::vector<Matrix> total;
  total.reserve(params.size());
  for (ParamTensor* p : params) total.emplace_back(p->value.rows(), p->value.cols());

  auto run_one = [&](std::size_t subject, std::vector<Matrix>& sink) {
    ad::Tape tape;
    ParamBinder binder(tape, cparams);
    ad::Var loss = loss_fn(subject, binder);
    tape.backward(loss, weight);
    tape.accumulate_param_grads(sink);
    return loss.value()(0, 0);
  };

  double loss_sum = 0.0;
  threads = std::max<std::size_t>(1, std::min(threads, batch.size()));
  if (threads == 1) {
    for (std::size_t s : batch) loss_sum += run_one(s, total);
  } else {
    std::vector<std::vector<Matrix>> per_subject(batch.size());
    std::vector<double> losses(batch.size());
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < batch.size(); i += threads) {
              auto& sink = per_subject[i];
              for (ParamTensor* p : params) sink.emplace_back(p->value.rows(), p->value.cols());
              losses[i] = run_one(batch[i], sink);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t p = 0; p < params.size(); ++p) total[p].add_scaled(per_subject[i][p]);
      loss_sum += losses[i];
    }
  }
  for (std::size_t p = 0; p < params.size(); ++p) params[p]->grad = std::move(total[p]);
  return loss_sum * weight;
}

GradCheckResult gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<ad::Var(ParamBinder&)>& loss_fn,
                               double eps, double floor) {
  const auto cparams = as_const(params);
  std::vector<Matrix> analytic;
  for (ParamTensor* p : params) analytic.emplace_back(p->value.rows(), p->value.cols());
  {
    ad::Tape tape;
    ParamBinder binder(tape, cparams);
    ad::Var loss = loss_fn(binder);
    tape.backward(loss);
    tape.accumulate_param_grads(analytic);
  }
  auto evaluate = [&] {
    ad::Tape tape;
    ParamBinder binder(tape, cparams);
    return loss_fn(binder).value()(0, 0);
  };
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p]->value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double up = evaluate();
      values[i] = original - eps;
      const double down = evaluate();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (result.entries_checked == 1 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = params[p]->name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace hebrain
