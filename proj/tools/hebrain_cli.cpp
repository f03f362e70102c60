#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hebrain/analysis.hpp"
#include "hebrain/datagen.hpp"
#include "hebrain/errors.hpp"
#include "hebrain/experiment.hpp"

namespace fs = std::filesystem;
using namespace hebrain;

namespace {

void print_summary(const nlohmann::json& manifest) {
  std::cout << "variant " << manifest["variant"].get<std::string>() << ", mode "
            << manifest["config"]["mode"].get<std::string>() << "\n";
  for (const auto& [metric, v] : manifest["summary"].items())
    std::cout << "  " << metric << ": " << v["mean"].get<double>() << " +- "
              << v["std"].get<double>() << " (n=" << v["n"].get<std::size_t>() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous brain-network GNN: data, training and analysis"};
  app.require_subcommand(1);

  std::string gen_config;
  std::string out;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset directory");
  generate->add_option("--config", gen_config, "Generator config JSON (defaults if omitted)");
  generate->add_option("--out", out, "Output dataset directory")->required();

  std::vector<std::string> graph_files;
  bool max_normalize = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate graph files into a dataset directory");
  ingest_cmd->add_option("files", graph_files, "Graph JSON files")->required();
  ingest_cmd->add_flag("--max-normalize", max_normalize, "Divide SC weights by their maximum");
  ingest_cmd->add_option("--out", out, "Output dataset directory")->required();

  std::string run_config;
  auto* run = app.add_subcommand("run", "Train and evaluate every seed of a run config");
  run->add_option("config", run_config, "Run config JSON or an earlier manifest.json")
      ->required();
  run->add_option("--out", out, "Run directory")->required();

  std::vector<double> fractions{0.5, 0.6, 0.7, 0.8, 0.9};
  auto* sweep = app.add_subcommand("sweep", "Pretrained vs scratch across training fractions");
  sweep->add_option("config", run_config, "Run config JSON")->required();
  sweep->add_option("--fractions", fractions, "Fractions of the training pool")->delimiter(',');
  sweep->add_option("--out", out, "Sweep directory")->required();

  std::string dataset_dir;
  bool absolute = false;
  auto* stats = app.add_subcommand("stats", "Intra/inter edge-strength statistics");
  stats->add_option("dataset", dataset_dir, "Dataset directory")->required();
  stats->add_flag("--absolute", absolute, "Use absolute edge weights");
  stats->add_option("--out", out, "Directory for stats.json")->required();

  std::string model_file;
  auto* exporter = app.add_subcommand("export-embeddings", "Write graph vectors as CSV");
  exporter->add_option("--model", model_file, "model.json from a run directory")->required();
  exporter->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  exporter->add_option("--out", out, "Output CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      GenConfig cfg;
      if (!gen_config.empty()) cfg = gen_config_from_json(read_json(gen_config));
      const Dataset ds = generate_dataset(cfg);
      save_dataset(ds, out);
      std::cout << "wrote " << ds.size() << " subjects to " << out << "\n";
    } else if (*ingest_cmd) {
      std::vector<fs::path> paths(graph_files.begin(), graph_files.end());
      const Dataset ds = ingest(paths, max_normalize);
      save_dataset(ds, out);
      std::cout << "ingested " << ds.size() << " subjects into " << out << "\n";
    } else if (*run) {
      const RunConfig cfg = load_run_config(run_config);
      const RunResult r = run_experiment(cfg, resolve_dataset(cfg), fs::path(out));
      print_summary(r.manifest);
    } else if (*sweep) {
      const RunConfig cfg = load_run_config(run_config);
      const SweepResult r = run_sweep(cfg, resolve_dataset(cfg), fractions, fs::path(out));
      for (const auto& p : r.points)
        std::cout << "fraction " << p.fraction << ": F1 pretrained " << p.f1_pretrained
                  << ", scratch " << p.f1_scratch << ", relative improvement "
                  << p.relative_improvement << "\n";
      if (r.points.size() >= 2 &&
          r.points.front().relative_improvement < r.points.back().relative_improvement)
        std::cout << "note: improvement at the smallest fraction is below that at the largest\n";
    } else if (*stats) {
      const Dataset ds = load_dataset(dataset_dir);
      const StrengthStats s = edge_strength_stats(ds, absolute);
      write_text_file(fs::path(out) / "stats.json", to_json(s).dump(2) + "\n");
      for (const auto& c : s.comparisons)
        std::cout << c.first << " vs " << c.second << ": " << c.mean_first << " vs "
                  << c.mean_second << ", t = " << c.test.t << ", p = " << c.test.p << "\n";
    } else if (*exporter) {
      ModelParams model = model_from_json(read_json(model_file));
      export_embeddings(load_dataset(dataset_dir), model, out);
      std::cout << "wrote " << out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
