#include "hebrain/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hebrain/errors.hpp"
#include "hebrain/rng.hpp"

namespace hebrain {

using nlohmann::json;

std::size_t Dataset::n_nodes() const {
  return subjects.empty() ? 0 : subjects.front().graph.n_nodes;
}

std::size_t Dataset::feature_dim() const {
  return subjects.empty() ? 0 : subjects.front().graph.features.cols();
}

void Dataset::validate() const {
  if (subjects.empty()) throw ValidationError("dataset is empty");
  bool has0 = false, has1 = false;
  for (const auto& s : subjects) {
    if (s.graph.n_nodes != n_nodes())
      throw ValidationError("subject " + s.id + " has " + std::to_string(s.graph.n_nodes) +
                            " nodes, expected " + std::to_string(n_nodes()));
    if (s.graph.features.cols() != feature_dim())
      throw ValidationError("subject " + s.id + " has feature width " +
                            std::to_string(s.graph.features.cols()) + ", expected " +
                            std::to_string(feature_dim()));
    has0 |= s.label == 0;
    has1 |= s.label == 1;
  }
  if (!has0 || !has1) throw ValidationError("dataset must contain both labels");
}

void GenConfig::validate() const {
  if (n_nodes < 4 || n_nodes % 2 != 0)
    throw ConfigError("n_nodes must be even and at least 4, got " + std::to_string(n_nodes));
  if (n_subjects < 2) throw ConfigError("n_subjects must be at least 2");
  auto density = [](const char* name, double v) {
    if (!(v > 0.0 && v <= 1.0))
      throw ConfigError(std::string(name) + " must lie in (0, 1], got " + std::to_string(v));
  };
  density("intra_density", intra_density);
  density("inter_density", inter_density);
  if (!(sigma_w >= 0.0)) throw ConfigError("sigma_w must be non-negative");
  if (!(feature_noise >= 0.0)) throw ConfigError("feature_noise must be non-negative");
  if (!(signal_strength >= 0.0)) throw ConfigError("signal_strength must be non-negative");
  if (!(signal_fraction >= 0.0 && signal_fraction <= 1.0))
    throw ConfigError("signal_fraction must lie in [0, 1]");
  if (!(feature_signal_ratio >= 0.0)) throw ConfigError("feature_signal_ratio must be >= 0");
  if (!(mu_intra >= 0.0 && mu_inter >= 0.0)) throw ConfigError("weight means must be >= 0");
}

json to_json(const GenConfig& c) {
  return json{{"n_nodes", c.n_nodes},
              {"n_subjects", c.n_subjects},
              {"intra_density", c.intra_density},
              {"inter_density", c.inter_density},
              {"mu_intra", c.mu_intra},
              {"mu_inter", c.mu_inter},
              {"sigma_w", c.sigma_w},
              {"signal_strength", c.signal_strength},
              {"feature_noise", c.feature_noise},
              {"signal_fraction", c.signal_fraction},
              {"feature_signal_ratio", c.feature_signal_ratio},
              {"augment_feature_noise", c.augment_feature_noise},
              {"seed", c.seed}};
}

GenConfig gen_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("generator config must be a JSON object");
  GenConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "n_nodes") c.n_nodes = value.get<std::size_t>();
      else if (key == "n_subjects") c.n_subjects = value.get<std::size_t>();
      else if (key == "intra_density") c.intra_density = value.get<double>();
      else if (key == "inter_density") c.inter_density = value.get<double>();
      else if (key == "mu_intra") c.mu_intra = value.get<double>();
      else if (key == "mu_inter") c.mu_inter = value.get<double>();
      else if (key == "sigma_w") c.sigma_w = value.get<double>();
      else if (key == "signal_strength") c.signal_strength = value.get<double>();
      else if (key == "feature_noise") c.feature_noise = value.get<double>();
      else if (key == "signal_fraction") c.signal_fraction = value.get<double>();
      else if (key == "feature_signal_ratio") c.feature_signal_ratio = value.get<double>();
      else if (key == "augment_feature_noise") c.augment_feature_noise = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError("unknown generator config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("generator config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

namespace {

std::string subject_id(std::size_t s) {
  std::ostringstream os;
  os << "subject_";
  os.width(4);
  os.fill('0');
  os << s;
  return os.str();
}

// FC surrogate: row-normalized two-step communicability of the unperturbed
// structural matrix.
Matrix correlation_surrogate(const Matrix& sc) {
  const std::size_t n = sc.rows();
  const double mx = std::max(max_abs(sc), 1e-12);
  const Matrix a = scale(sc, 1.0 / mx);
  Matrix c = add(a, scale(matmul(a, a), 1.0 / static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) c(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = 0.0;
    for (double v : c.row(i)) row_max = std::max(row_max, std::abs(v));
    for (double& v : c.row(i)) v /= row_max;
  }
  return c;
}

}  // namespace

Dataset generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_nodes;
  const std::size_t half = n / 2;
  std::vector<Hemisphere> hemisphere(n, Hemisphere::Left);
  for (std::size_t i = half; i < n; ++i) hemisphere[i] = Hemisphere::Right;

  // Dataset-level structure: which left-right pairs carry the class signal
  // and the feature direction that mirrors it.
  Rng layout_rng = Rng::derive(cfg.seed, StreamPurpose::Generator, 0);
  std::vector<std::pair<std::size_t, std::size_t>> lr_pairs;
  for (std::size_t i = 0; i < half; ++i)
    for (std::size_t j = half; j < n; ++j) lr_pairs.emplace_back(i, j);
  layout_rng.shuffle(lr_pairs);
  const auto n_signal = static_cast<std::size_t>(
      std::llround(cfg.signal_fraction * static_cast<double>(lr_pairs.size())));
  Matrix signal_pair(n, n);
  std::vector<bool> perturbed_node(n, false);
  for (std::size_t p = 0; p < n_signal; ++p) {
    const auto [i, j] = lr_pairs[p];
    signal_pair(i, j) = signal_pair(j, i) = 1.0;
    perturbed_node[i] = perturbed_node[j] = true;
  }
  std::vector<double> feature_direction(n);
  for (double& v : feature_direction) v = layout_rng.bernoulli(0.5) ? 1.0 : -1.0;

  Dataset ds;
  ds.subjects.reserve(cfg.n_subjects);
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    Rng rng = Rng::derive(cfg.seed, StreamPurpose::Generator, 1, s);
    const int label = static_cast<int>(s % 2);
    Matrix base(n, n);
    Matrix sc(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool same = hemisphere[i] == hemisphere[j];
        double w = 0.0;
        if (same) {
          if (rng.bernoulli(cfg.intra_density)) w = std::abs(rng.normal(cfg.mu_intra, cfg.sigma_w));
        } else if (signal_pair(i, j) != 0.0 || rng.bernoulli(cfg.inter_density)) {
          w = std::abs(rng.normal(cfg.mu_inter, cfg.sigma_w));
        }
        base(i, j) = base(j, i) = w;
        double perturbed = w;
        if (label == 1 && signal_pair(i, j) != 0.0) perturbed = w + cfg.signal_strength;
        sc(i, j) = sc(j, i) = perturbed;
      }
    }
    Matrix fc = correlation_surrogate(base);
    const double feature_shift = cfg.feature_signal_ratio * cfg.signal_strength;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < n; ++f) {
        fc(i, f) += rng.normal(0.0, cfg.feature_noise);
        if (label == 1 && perturbed_node[i]) fc(i, f) += feature_shift * feature_direction[f];
      }
    }
    ds.subjects.push_back(Subject{subject_id(s), make_graph(sc, hemisphere, std::move(fc)), label});
  }
  ds.manifest = json{{"schema", "hebrain.dataset"},
                     {"version", kDatasetSchemaVersion},
                     {"source", "synthetic"},
                     {"gen_config", to_json(cfg)},
                     {"seed", cfg.seed},
                     {"n_nodes", n},
                     {"feature_dim", n}};
  ds.validate();
  return ds;
}

namespace {

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array())
      throw SchemaError(where + "[" + std::to_string(r) + "]: expected an array");
    if (r == 0) cols = row.size();
    if (row.size() != cols)
      throw SchemaError(where + "[" + std::to_string(r) + "]: row has " +
                        std::to_string(row.size()) + " entries, expected " +
                        std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw SchemaError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                          "]: expected a number");
      data.push_back(row[c].get<double>());
    }
  }
  return Matrix(rows, cols, std::move(data));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << j.dump(1) << '\n';
}

}  // namespace

json graph_to_json(const Subject& s) {
  json hemi = json::array();
  for (Hemisphere h : s.graph.hemisphere) hemi.push_back(std::string(1, hemisphere_code(h)));
  return json{{"schema", "hebrain.graph"},
              {"version", kGraphSchemaVersion},
              {"id", s.id},
              {"n", s.graph.n_nodes},
              {"hemisphere", hemi},
              {"sc", matrix_to_json(s.graph.structural())},
              {"fc", matrix_to_json(s.graph.features)},
              {"label", s.label}};
}

Subject graph_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw SchemaError(source + ": top level must be an object");
  static const std::set<std::string> known{"schema", "version", "id",    "n",     "hemisphere",
                                           "sc",     "fc",      "label", "intra", "inter"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw SchemaError(source + ": unknown field '" + key + "'");
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw SchemaError(source + ": missing field '" + key + "'");
    return j.at(key);
  };
  if (j.contains("schema") && j.at("schema") != "hebrain.graph")
    throw SchemaError(source + ": field 'schema' must be \"hebrain.graph\"");
  if (j.contains("version") && j.at("version") != kGraphSchemaVersion)
    throw SchemaError(source + ": field 'version' must be " + std::to_string(kGraphSchemaVersion));

  Subject s;
  s.id = j.contains("id") ? j.at("id").get<std::string>()
                          : std::filesystem::path(source).stem().string();
  const json& n_field = require("n");
  if (!n_field.is_number_integer() || n_field.get<long long>() <= 0)
    throw SchemaError(source + ": field 'n' must be a positive integer");
  const auto n = n_field.get<std::size_t>();

  const json& hemi = require("hemisphere");
  if (!hemi.is_array() || hemi.size() != n)
    throw SchemaError(source + ": field 'hemisphere' must list " + std::to_string(n) + " labels");
  std::vector<Hemisphere> hemisphere;
  for (const json& h : hemi) {
    if (!h.is_string()) throw SchemaError(source + ": field 'hemisphere' must hold strings");
    try {
      hemisphere.push_back(parse_hemisphere(h.get<std::string>()));
    } catch (const ValidationError& e) {
      throw SchemaError(source + ": field 'hemisphere': " + e.what());
    }
  }

  const json& label = require("label");
  if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1))
    throw SchemaError(source + ": field 'label' must be 0 or 1");
  s.label = label.get<int>();

  Matrix fc = matrix_from_json(require("fc"), source + ": field 'fc'");
  if (fc.rows() != n)
    throw SchemaError(source + ": field 'fc' has " + std::to_string(fc.rows()) +
                      " rows, expected " + std::to_string(n));

  const bool split_form = j.contains("intra") || j.contains("inter");
  if (split_form && j.contains("sc"))
    throw SchemaError(source + ": give either 'sc' or 'intra'/'inter', not both");
  try {
    if (split_form) {
      HeteroBrainGraph g;
      g.n_nodes = n;
      g.hemisphere = std::move(hemisphere);
      g.intra_adj = matrix_from_json(require("intra"), source + ": field 'intra'");
      g.inter_adj = matrix_from_json(require("inter"), source + ": field 'inter'");
      g.features = std::move(fc);
      g.validate();
      s.graph = std::move(g);
    } else {
      Matrix sc = matrix_from_json(require("sc"), source + ": field 'sc'");
      s.graph = make_graph(sc, std::move(hemisphere), std::move(fc));
    }
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return s;
}

Dataset ingest(std::span<const std::filesystem::path> files, bool max_normalize) {
  if (files.empty()) throw ValidationError("ingest: no graph files given");
  Dataset ds;
  json names = json::array();
  for (const auto& path : files) {
    Subject s = graph_from_json(read_json_file(path), path.string());
    if (max_normalize) {
      const double mx = std::max(max_abs(s.graph.intra_adj), max_abs(s.graph.inter_adj));
      if (mx > 0.0) {
        s.graph.intra_adj = scale(s.graph.intra_adj, 1.0 / mx);
        s.graph.inter_adj = scale(s.graph.inter_adj, 1.0 / mx);
      }
    }
    if (!ds.subjects.empty() && s.graph.n_nodes != ds.n_nodes())
      throw ValidationError(path.string() + ": has " + std::to_string(s.graph.n_nodes) +
                            " nodes but earlier files have " + std::to_string(ds.n_nodes()));
    if (!ds.subjects.empty() && s.graph.features.cols() != ds.feature_dim())
      throw ValidationError(path.string() + ": feature width " +
                            std::to_string(s.graph.features.cols()) + " differs from " +
                            std::to_string(ds.feature_dim()));
    names.push_back(path.filename().string());
    ds.subjects.push_back(std::move(s));
  }
  ds.manifest = json{{"schema", "hebrain.dataset"},
                     {"version", kDatasetSchemaVersion},
                     {"source", "ingest"},
                     {"max_normalize", max_normalize},
                     {"files", names},
                     {"n_nodes", ds.n_nodes()},
                     {"feature_dim", ds.feature_dim()}};
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = ds.manifest;
  json files = json::array();
  for (const auto& s : ds.subjects) {
    const std::string name = s.id + ".json";
    write_json_file(dir / name, graph_to_json(s));
    files.push_back(name);
  }
  manifest["subjects"] = files;
  write_json_file(dir / "manifest.json", manifest);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.contains("subjects") || !manifest.at("subjects").is_array())
    throw SchemaError((dir / "manifest.json").string() + ": missing field 'subjects'");
  std::vector<std::filesystem::path> files;
  for (const json& name : manifest.at("subjects")) files.push_back(dir / name.get<std::string>());
  if (files.empty()) throw ValidationError((dir / "manifest.json").string() + ": dataset is empty");
  Dataset ds = ingest(files, false);
  ds.manifest = manifest;
  ds.manifest.erase("subjects");
  return ds;
}

namespace {

std::map<int, std::vector<std::size_t>> by_label(const Dataset& ds,
                                                 std::span<const std::size_t> pool) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i : pool) groups[ds.subjects.at(i).label].push_back(i);
  return groups;
}

}  // namespace

SplitIndices split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ConfigError("train_ratio must lie in (0, 1), got " + std::to_string(train_ratio));
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  SplitIndices out;
  Rng rng = Rng::derive(seed, StreamPurpose::Split);
  for (auto& [label, members] : by_label(ds, all)) {
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + n_train);
    out.test.insert(out.test.end(), members.begin() + n_train, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::size_t> stratified_subsample(const Dataset& ds,
                                              std::span<const std::size_t> pool,
                                              double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("training fraction must lie in (0, 1], got " + std::to_string(fraction));
  std::vector<std::size_t> out;
  if (fraction == 1.0) {
    out.assign(pool.begin(), pool.end());
    return out;
  }
  Rng rng = Rng::derive(seed, StreamPurpose::Split, 1);
  for (auto& [label, members] : by_label(ds, pool)) {
    rng.shuffle(members);
    auto keep = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    keep = std::max<std::size_t>(keep, 1);
    out.insert(out.end(), members.begin(), members.begin() + keep);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hebrain
