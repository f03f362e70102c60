#include "hebrain/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hebrain/errors.hpp"
#include "hebrain/kernels.hpp"
#include "hebrain/pretraining.hpp"

namespace hebrain {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

template <typename T>
T get_field(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("run config key '" + key + "' has the wrong type");
  }
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"auc", m.auc}, {"sensitivity", m.sensitivity}};
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

void RunConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(std::string(key) + " must be positive");
  };
  positive("hidden_dim", static_cast<double>(hidden_dim));
  positive("sgc_k", static_cast<double>(sgc_k));
  positive("K", static_cast<double>(negatives));
  positive("batch_size", static_cast<double>(batch_size));
  positive("threads", static_cast<double>(threads));
  positive("decay_every", static_cast<double>(decay_every));
  if (!(lr_pretrain >= 0.0) || !(lr_finetune >= 0.0))
    throw ConfigError("learning rates must be non-negative");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (!(lr_decay_multiplier > 0.0)) throw ConfigError("lr_decay_multiplier must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(dropout_pretrain >= 0.0 && dropout_pretrain < 1.0))
    throw ConfigError("dropout_pretrain must lie in [0, 1)");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ConfigError("train_ratio must lie in (0, 1)");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train_fraction must lie in (0, 1]");
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  for (std::size_t w : mlp_hidden)
    if (w == 0) throw ConfigError("mlp_hidden widths must be positive");
  if (dataset.empty() == !synthetic.has_value())
    throw ConfigError("run config needs exactly one of 'dataset' or 'synthetic'");
  if (synthetic) synthetic->validate();
}

json to_json(const RunConfig& c) {
  json j{{"mode", to_string(c.mode)},
         {"pretrain", c.pretrain},
         {"hidden_dim", c.hidden_dim},
         {"hbn_layers", c.hbn_layers},
         {"sgc_k", c.sgc_k},
         {"K", c.negatives},
         {"mlp_hidden", c.mlp_hidden},
         {"dropout", c.dropout},
         {"dropout_pretrain", c.dropout_pretrain},
         {"lr_pretrain", c.lr_pretrain},
         {"lr_finetune", c.lr_finetune},
         {"l2", c.l2},
         {"lr_decay_multiplier", c.lr_decay_multiplier},
         {"decay_every", c.decay_every},
         {"decay_after", c.decay_after},
         {"epochs_pretrain", c.epochs_pretrain},
         {"epochs_finetune", c.epochs_finetune},
         {"batch_size", c.batch_size},
         {"threads", c.threads},
         {"train_ratio", c.train_ratio},
         {"train_fraction", c.train_fraction},
         {"seeds", c.seeds}};
  if (c.synthetic)
    j["synthetic"] = to_json(*c.synthetic);
  else
    j["dataset"] = c.dataset;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") c.mode = parse_ablation_mode(get_field<std::string>(v, key));
    else if (key == "pretrain") c.pretrain = get_field<bool>(v, key);
    else if (key == "hidden_dim") c.hidden_dim = get_field<std::size_t>(v, key);
    else if (key == "hbn_layers") c.hbn_layers = get_field<std::size_t>(v, key);
    else if (key == "sgc_k") c.sgc_k = get_field<std::size_t>(v, key);
    else if (key == "K") c.negatives = get_field<std::size_t>(v, key);
    else if (key == "mlp_hidden") c.mlp_hidden = get_field<std::vector<std::size_t>>(v, key);
    else if (key == "dropout") c.dropout = get_field<double>(v, key);
    else if (key == "dropout_pretrain") c.dropout_pretrain = get_field<double>(v, key);
    else if (key == "lr_pretrain") c.lr_pretrain = get_field<double>(v, key);
    else if (key == "lr_finetune") c.lr_finetune = get_field<double>(v, key);
    else if (key == "l2") c.l2 = get_field<double>(v, key);
    else if (key == "lr_decay_multiplier") c.lr_decay_multiplier = get_field<double>(v, key);
    else if (key == "decay_every") c.decay_every = get_field<std::size_t>(v, key);
    else if (key == "decay_after") c.decay_after = get_field<std::size_t>(v, key);
    else if (key == "epochs_pretrain") c.epochs_pretrain = get_field<std::size_t>(v, key);
    else if (key == "epochs_finetune") c.epochs_finetune = get_field<std::size_t>(v, key);
    else if (key == "batch_size") c.batch_size = get_field<std::size_t>(v, key);
    else if (key == "threads") c.threads = get_field<std::size_t>(v, key);
    else if (key == "train_ratio") c.train_ratio = get_field<double>(v, key);
    else if (key == "train_fraction") c.train_fraction = get_field<double>(v, key);
    else if (key == "seeds") c.seeds = get_field<std::vector<std::uint64_t>>(v, key);
    else if (key == "dataset") c.dataset = get_field<std::string>(v, key);
    else if (key == "synthetic") c.synthetic = gen_config_from_json(v);
    else throw ConfigError("unknown run config key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j = read_json(path);
  if (j.is_object() && j.contains("schema") && j.at("schema") == "hebrain.run") {
    if (!j.contains("config")) throw ConfigError(path.string() + ": manifest has no 'config'");
    j = j.at("config");
  }
  RunConfig cfg;
  try {
    cfg = run_config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!cfg.dataset.empty() && std::filesystem::path(cfg.dataset).is_relative())
    cfg.dataset = (path.parent_path() / cfg.dataset).lexically_normal().string();
  return cfg;
}

Dataset resolve_dataset(const RunConfig& cfg) {
  if (cfg.synthetic) return generate_dataset(*cfg.synthetic);
  return load_dataset(cfg.dataset);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

namespace {

std::vector<PreparedSubject> select(const std::vector<PreparedSubject>& all,
                                    std::span<const std::size_t> idx) {
  std::vector<PreparedSubject> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::string ssl_csv(const std::vector<double>& trace) {
  std::string s = "epoch,ssl_loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e)
    s += std::to_string(e + 1) + "," + num(trace[e]) + "\n";
  return s;
}

std::string metrics_csv(const FinetuneResult& r) {
  std::string s = "epoch,split,accuracy,f1,auc,sensitivity,ce_loss\n";
  for (const auto& m : r.trace)
    s += std::to_string(m.epoch) + "," + m.split + "," + num(m.metrics.accuracy) + "," +
         num(m.metrics.f1) + "," + num(m.metrics.auc) + "," + num(m.metrics.sensitivity) + "," +
         num(m.ce_loss) + "\n";
  return s;
}

std::string ems_csv(const FinetuneResult& r) {
  std::string s = "epoch,layer,ems_intra,ems_inter\n";
  for (const auto& e : r.ems_trace)
    s += std::to_string(e.epoch) + "," + std::to_string(e.layer) + "," + num(e.ems_intra) + "," +
         num(e.ems_inter) + "\n";
  return s;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const Dataset& ds,
                         const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  ds.validate();
  std::vector<PreparedSubject> prepared;
  prepared.reserve(ds.size());
  for (const Subject& s : ds.subjects)
    prepared.push_back(prepare_subject(s.graph, s.label, s.id, cfg.mode, cfg.sgc_k));

  ModelConfig mcfg;
  mcfg.mode = cfg.mode;
  mcfg.n_nodes = ds.n_nodes();
  mcfg.feature_dim = ds.feature_dim();
  mcfg.hidden_dim = cfg.hidden_dim;
  mcfg.hbn_layers = cfg.hbn_layers;
  mcfg.sgc_k = cfg.sgc_k;
  mcfg.mlp_hidden = cfg.mlp_hidden;

  SSLConfig ssl;
  ssl.negatives = cfg.negatives;
  ssl.epochs = cfg.epochs_pretrain;
  ssl.lr = cfg.lr_pretrain;
  ssl.l2 = cfg.l2;
  ssl.batch_size = cfg.batch_size;
  ssl.dropout = cfg.dropout_pretrain;
  ssl.threads = cfg.threads;

  FinetuneConfig ft;
  ft.epochs = cfg.epochs_finetune;
  ft.lr = cfg.lr_finetune;
  ft.l2 = cfg.l2;
  ft.batch_size = cfg.batch_size;
  ft.dropout = cfg.dropout;
  ft.lr_decay_multiplier = cfg.lr_decay_multiplier;
  ft.decay_every = cfg.decay_every;
  ft.decay_after = cfg.decay_after;
  ft.threads = cfg.threads;

  RunResult result;
  json per_seed = json::array();
  std::map<std::string, std::vector<double>> columns;
  for (std::uint64_t seed : cfg.seeds) {
    SeedResult sr;
    sr.seed = seed;
    const SplitIndices parts = split(ds, cfg.train_ratio, seed);
    const std::vector<std::size_t> train_idx =
        stratified_subsample(ds, parts.train, cfg.train_fraction, seed);
    const auto train = select(prepared, train_idx);
    const auto test = select(prepared, parts.test);
    sr.n_train = train.size();
    sr.n_test = test.size();
    sr.model = init_model(mcfg, seed);
    if (cfg.pretrain) {
      sr.ssl_trace = pretrain(train, sr.model, ssl, seed).loss_trace;
      const PairScores scores = discriminator_scores(test, sr.model, cfg.negatives, seed);
      std::vector<double> all(scores.positive);
      all.insert(all.end(), scores.negative.begin(), scores.negative.end());
      std::vector<int> labels(scores.positive.size(), 1);
      labels.resize(all.size(), 0);
      sr.discriminator_auc = compute_metrics(all, labels).auc;
    }
    sr.finetune = finetune(train, test, sr.model, ft, seed);

    const Metrics& m = sr.finetune.final_test;
    columns["accuracy"].push_back(m.accuracy);
    columns["f1"].push_back(m.f1);
    columns["auc"].push_back(m.auc);
    columns["sensitivity"].push_back(m.sensitivity);
    json entry{{"seed", seed},
               {"n_train", sr.n_train},
               {"n_test", sr.n_test},
               {"test", metrics_json(sr.finetune.final_test)},
               {"train", metrics_json(sr.finetune.final_train)}};
    if (!sr.ssl_trace.empty()) {
      entry["ssl_loss_first"] = sr.ssl_trace.front();
      entry["ssl_loss_last"] = sr.ssl_trace.back();
    }
    if (sr.discriminator_auc) entry["discriminator_auc"] = *sr.discriminator_auc;
    per_seed.push_back(entry);

    if (out_dir) {
      const auto dir = *out_dir / ("seed_" + std::to_string(seed));
      write_text_file(dir / "ssl_trace.csv", ssl_csv(sr.ssl_trace));
      write_text_file(dir / "metrics_trace.csv", metrics_csv(sr.finetune));
      write_text_file(dir / "ems_trace.csv", ems_csv(sr.finetune));
      write_text_file(dir / "model.json", model_to_json(sr.model).dump() + "\n");
    }
    result.seeds.push_back(std::move(sr));
  }

  json summary = json::object();
  for (const auto& [name, values] : columns) {
    const MeanStd ms = mean_std(values);
    summary[name] = {{"mean", ms.mean}, {"std", ms.std}, {"n", values.size()}};
  }
  result.manifest = json{{"schema", "hebrain.run"},
                         {"version", kRunSchemaVersion},
                         {"variant", cfg.pretrain ? "pretrained" : "scratch"},
                         {"kernels", kernels::active().name},
                         {"config", to_json(cfg)},
                         {"dataset", ds.manifest},
                         {"seeds", per_seed},
                         {"summary", summary}};
  if (out_dir) write_text_file(*out_dir / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

SweepResult run_sweep(const RunConfig& base, const Dataset& ds,
                      std::span<const double> fractions,
                      const std::optional<std::filesystem::path>& out_dir) {
  if (fractions.empty()) throw ConfigError("sweep needs at least one training fraction");
  SweepResult result;
  json points = json::array();
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0))
      throw ConfigError("sweep fraction must lie in (0, 1], got " + num(f));
    SweepPoint p;
    p.fraction = f;
    RunConfig cfg = base;
    cfg.train_fraction = f;
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = *out_dir / ("fraction_" + num(f));
    cfg.pretrain = true;
    p.pretrained = run_experiment(cfg, ds, dir ? std::optional(*dir / "pretrained") : dir);
    cfg.pretrain = false;
    p.scratch = run_experiment(cfg, ds, dir ? std::optional(*dir / "scratch") : dir);
    p.f1_pretrained = p.pretrained.manifest["summary"]["f1"]["mean"].get<double>();
    p.f1_scratch = p.scratch.manifest["summary"]["f1"]["mean"].get<double>();
    p.relative_improvement =
        p.f1_scratch == 0.0 ? 0.0 : (p.f1_pretrained - p.f1_scratch) / p.f1_scratch;
    points.push_back({{"fraction", f},
                      {"f1_pretrained", p.f1_pretrained},
                      {"f1_scratch", p.f1_scratch},
                      {"relative_improvement", p.relative_improvement},
                      {"accuracy_pretrained",
                       p.pretrained.manifest["summary"]["accuracy"]["mean"]},
                      {"accuracy_scratch", p.scratch.manifest["summary"]["accuracy"]["mean"]}});
    result.points.push_back(std::move(p));
  }
  result.summary = json{{"schema", "hebrain.sweep"},
                        {"version", kRunSchemaVersion},
                        {"config", to_json(base)},
                        {"points", points}};
  if (out_dir) write_text_file(*out_dir / "sweep.json", result.summary.dump(2) + "\n");
  return result;
}

json model_to_json(ModelParams& model) {
  const ModelConfig& c = model.config;
  json params = json::object();
  for (ParamTensor* p : model.all_params()) {
    json rows = json::array();
    for (std::size_t r = 0; r < p->value.rows(); ++r) {
      auto row = p->value.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    params[p->name] = rows;
  }
  return json{{"schema", "hebrain.model"},
              {"version", kRunSchemaVersion},
              {"config",
               {{"mode", to_string(c.mode)},
                {"n_nodes", c.n_nodes},
                {"feature_dim", c.feature_dim},
                {"hidden_dim", c.hidden_dim},
                {"hbn_layers", c.hbn_layers},
                {"sgc_k", c.sgc_k},
                {"mlp_hidden", c.mlp_hidden}}},
              {"params", params}};
}

ModelParams model_from_json(const json& j) {
  try {
    if (j.at("schema") != "hebrain.model") throw SchemaError("model: wrong schema tag");
    const json& c = j.at("config");
    ModelConfig cfg;
    cfg.mode = parse_ablation_mode(c.at("mode").get<std::string>());
    cfg.n_nodes = c.at("n_nodes").get<std::size_t>();
    cfg.feature_dim = c.at("feature_dim").get<std::size_t>();
    cfg.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    cfg.hbn_layers = c.at("hbn_layers").get<std::size_t>();
    cfg.sgc_k = c.at("sgc_k").get<std::size_t>();
    cfg.mlp_hidden = c.at("mlp_hidden").get<std::vector<std::size_t>>();
    ModelParams model = init_model(cfg, 0);
    const json& params = j.at("params");
    for (ParamTensor* p : model.all_params()) {
      if (!params.contains(p->name)) throw SchemaError("model: missing parameter " + p->name);
      const json& rows = params.at(p->name);
      if (rows.size() != p->value.rows())
        throw SchemaError("model: parameter " + p->name + " has the wrong row count");
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto values = rows[r].get<std::vector<double>>();
        if (values.size() != p->value.cols())
          throw SchemaError("model: parameter " + p->name + " has the wrong column count");
        std::copy(values.begin(), values.end(), p->value.row(r).begin());
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
}

void export_embeddings(const Dataset& ds, ModelParams& model, const std::filesystem::path& csv) {
  ds.validate();
  if (ds.n_nodes() != model.config.n_nodes || ds.feature_dim() != model.config.feature_dim)
    throw ValidationError("export: dataset shape does not match the model");
  std::string out = "subject_id";
  for (std::size_t i = 0; i < 2 * ds.n_nodes(); ++i) out += ",g" + std::to_string(i);
  out += "\n";
  for (const Subject& s : ds.subjects) {
    const PreparedSubject ps =
        prepare_subject(s.graph, s.label, s.id, model.config.mode, model.config.sgc_k);
    const SubjectPrediction pred = evaluate_subject(ps, model);
    out += s.id;
    for (std::size_t c = 0; c < pred.graph_vector.cols(); ++c)
      out += "," + num(pred.graph_vector(0, c));
    out += "\n";
  }
  write_text_file(csv, out);
}

}  // namespace hebrain
