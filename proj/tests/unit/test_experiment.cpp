#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hebrain/errors.hpp"
#include "hebrain/experiment.hpp"

using namespace hebrain;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  GenConfig g;
  g.n_nodes = 8;
  g.n_subjects = 24;
  c.synthetic = g;
  c.hidden_dim = 4;
  c.epochs_pretrain = 2;
  c.epochs_finetune = 3;
  c.batch_size = 8;
  c.seeds = {1, 2};
  c.lr_pretrain = 1e-2;
  c.lr_finetune = 1e-2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hebrain_exp_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("run config JSON round trip and strictness") {
  const RunConfig c = tiny_config();
  const nlohmann::json j = to_json(c);
  CHECK(to_json(run_config_from_json(j)) == j);
  CHECK(j["K"] == 2);

  nlohmann::json typo = j;
  typo["hiden_dim"] = 3;
  CHECK_THROWS_AS(run_config_from_json(typo), ConfigError);
  nlohmann::json both = j;
  both["dataset"] = "somewhere";
  CHECK_THROWS_AS(run_config_from_json(both), ConfigError);
  nlohmann::json wrong = j;
  wrong["dropout"] = 1.0;
  CHECK_THROWS_AS(run_config_from_json(wrong), ConfigError);
  nlohmann::json mode = j;
  mode["mode"] = "hetro";
  CHECK_THROWS_AS(run_config_from_json(mode), ConfigError);
  nlohmann::json type = j;
  type["seeds"] = "1,2";
  CHECK_THROWS_AS(run_config_from_json(type), ConfigError);

  const RunConfig defaults;
  CHECK(defaults.hidden_dim == 64);
  CHECK(defaults.sgc_k == 2);
  CHECK(defaults.negatives == 2);
  CHECK(defaults.dropout == 0.7);
  CHECK(defaults.lr_pretrain == 1e-4);
  CHECK(defaults.lr_finetune == 2.5e-4);
  CHECK(defaults.l2 == 1e-5);
  CHECK(defaults.epochs_pretrain == 20);
  CHECK(defaults.epochs_finetune == 40);
  CHECK(defaults.batch_size == 128);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{1, 2, 3, 4};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == 2.5);
  CHECK(m.std == doctest::Approx(1.2909944487358056));
  const std::vector<double> one{0.7};
  CHECK(mean_std(one).std == 0.0);
}

TEST_CASE("a run writes its artifacts and reproduces them byte for byte") {
  const RunConfig cfg = tiny_config();
  const Dataset ds = resolve_dataset(cfg);
  const fs::path a = fresh("a"), b = fresh("b");
  const RunResult ra = run_experiment(cfg, ds, a);
  run_experiment(cfg, ds, b);
  for (const char* f : {"manifest.json", "seed_1/ssl_trace.csv", "seed_1/metrics_trace.csv",
                        "seed_1/ems_trace.csv", "seed_2/model.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(ra.manifest["summary"]["accuracy"]["n"] == 2);
  CHECK(ra.manifest["variant"] == "pretrained");
  CHECK(slurp(a / "seed_1/ssl_trace.csv").rfind("epoch,ssl_loss\n", 0) == 0);
  CHECK(slurp(a / "seed_1/metrics_trace.csv").rfind("epoch,split,accuracy,f1,auc,sensitivity,ce_loss\n", 0) == 0);
  CHECK(slurp(a / "seed_1/ems_trace.csv").rfind("epoch,layer,ems_intra,ems_inter\n", 0) == 0);

  // The manifest is itself a valid run config.
  const RunConfig again = load_run_config(a / "manifest.json");
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("scratch runs skip pretraining and five seeds give five results") {
  RunConfig cfg = tiny_config();
  cfg.pretrain = false;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.epochs_finetune = 1;
  const RunResult r = run_experiment(cfg, resolve_dataset(cfg));
  CHECK(r.manifest["variant"] == "scratch");
  CHECK(r.manifest["seeds"].size() == 5);
  CHECK(r.manifest["summary"]["f1"]["n"] == 5);
  for (const auto& s : r.seeds) CHECK(s.ssl_trace.empty());
}

TEST_CASE("sweep produces a pretrained and a scratch run per fraction") {
  RunConfig cfg = tiny_config();
  cfg.seeds = {1};
  cfg.epochs_finetune = 1;
  const std::vector<double> fractions{0.5, 1.0};
  const Dataset ds = resolve_dataset(cfg);
  const fs::path out = fresh("sweep");
  const SweepResult r = run_sweep(cfg, ds, fractions, out);
  CHECK(r.points.size() == 2);
  CHECK(fs::exists(out / "sweep.json"));
  CHECK(fs::exists(out / "fraction_0.5/pretrained/manifest.json"));
  CHECK(fs::exists(out / "fraction_1/scratch/manifest.json"));
  // Fraction 1 keeps the whole training pool; the test split never changes.
  const auto& full = r.points[1].scratch.seeds[0];
  const auto& half = r.points[0].scratch.seeds[0];
  CHECK(full.n_test == half.n_test);
  CHECK(full.n_train == split(ds, cfg.train_ratio, 1).train.size());
  CHECK(half.n_train * 2 == full.n_train);
  const std::vector<double> bad{1.5};
  CHECK_THROWS_AS(run_sweep(cfg, ds, bad), ConfigError);
}

TEST_CASE("model parameters round trip and embeddings export") {
  RunConfig cfg = tiny_config();
  cfg.seeds = {3};
  const Dataset ds = resolve_dataset(cfg);
  RunResult r = run_experiment(cfg, ds);
  ModelParams& model = r.seeds[0].model;
  ModelParams back = model_from_json(model_to_json(model));
  const auto pa = model.all_params();
  const auto pb = back.all_params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);

  const fs::path csv = fresh("emb") / "emb.csv";
  export_embeddings(ds, back, csv);
  std::ifstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.rfind("subject_id,g0,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 16);
  CHECK(row.rfind(ds.subjects[0].id + ",", 0) == 0);

  nlohmann::json broken = model_to_json(model);
  broken["params"].erase("disc.w_d");
  CHECK_THROWS_AS(model_from_json(broken), SchemaError);
}
