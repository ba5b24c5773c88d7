// ecladts: dataset generation, training, concept extraction, validation,
// method comparison and SVG reports from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecladts/concepts.hpp"
#include "ecladts/dataset.hpp"
#include "ecladts/error.hpp"
#include "ecladts/io.hpp"
#include "ecladts/model.hpp"
#include "ecladts/report.hpp"
#include "ecladts/synthdata.hpp"
#include "ecladts/trainer.hpp"
#include "ecladts/validation.hpp"

namespace fs = std::filesystem;
using namespace ecladts;

namespace {

enum class Kind { Text, Path, Uint, Real, TextList, UintList };

struct Key {
  const char* flag;
  const char* name;
  Kind kind;
  const char* help;
};

// Flag -> config key. Path keys are left out of the config hash.
const std::vector<Key> kKeys = {
    {"--config", "config", Kind::Path, "JSON run configuration; flags override its keys"},
    {"--seed", "seed", Kind::Uint, "random seed"},
    {"--out", "out", Kind::Path, "output directory"},
    {"--method", "method", Kind::Text, "eclad-ts | eclad-vanilla | multivision"},
    {"--n-concepts", "n_concepts", Kind::Uint, "number of concepts n_c"},
    {"--layers", "layers", Kind::TextList, "comma-separated probe layers"},
    {"--dataset", "dataset", Kind::Path, "dataset directory, UCR-style CSV or generator name"},
    {"--checkpoint", "checkpoint", Kind::Path, "model checkpoint ({seed} is substituted)"},
    {"--report", "report", Kind::Path, "concept report JSON"},
    {"--ledger", "ledger", Kind::Path, "run ledger CSV to append to"},
    {"--from-ledger", "from_ledger", Kind::Path, "summarize an existing ledger instead of running"},
    {"--architecture", "architecture", Kind::Text, "tiny-cnn | mini-inception | mini-resnet"},
    {"--n", "n", Kind::Uint, "number of generated samples"},
    {"--w", "w", Kind::Uint, "series length of generated samples"},
    {"--format", "format", Kind::Text, "dataset storage: binary | csv"},
    {"--epochs", "epochs", Kind::Uint, "maximum training epochs"},
    {"--lr", "lr", Kind::Real, "learning rate"},
    {"--methods", "methods", Kind::TextList, "methods to compare"},
    {"--seeds", "seeds", Kind::UintList, "seed list, e.g. 0-9 or 0,3,5"},
    {"--grid", "grid", Kind::UintList, "n_c values to sweep"},
    {"--samples", "samples", Kind::UintList, "sample ids to render"},
    {"--quantile", "quantile", Kind::Real, "activation quantile of the multivision baseline"},
    {"--max-batches", "max_batches", Kind::Uint, "cap on k-means mini-batches (0 = none)"},
};

const std::set<std::string> kGrid = {"3", "5", "10", "15", "20"};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') {
    throw UsageError("--" + key + " expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

json parse_value(const Key& k, const std::string& s) {
  switch (k.kind) {
    case Kind::Text:
    case Kind::Path: return s;
    case Kind::Uint: return parse_uint(k.name, s);
    case Kind::Real:
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        throw UsageError(std::string(k.flag) + " expects a number, got '" + s + "'");
      }
    case Kind::TextList: return split_list(s);
    case Kind::UintList: {
      json out = json::array();
      for (const std::string& item : split_list(s)) {
        const auto dash = item.find('-');
        if (dash != std::string::npos && dash > 0) {
          const auto a = parse_uint(k.name, item.substr(0, dash));
          const auto b = parse_uint(k.name, item.substr(dash + 1));
          if (b < a) throw UsageError("empty range '" + item + "'");
          for (auto v = a; v <= b; ++v) out.push_back(v);
        } else {
          out.push_back(parse_uint(k.name, item));
        }
      }
      return out;
    }
  }
  return nullptr;
}

class Config {
 public:
  explicit Config(json values) : v_(std::move(values)) {}

  bool has(const std::string& key) const { return v_.contains(key) && !v_[key].is_null(); }
  const json& raw() const { return v_; }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    if (!has(key)) return fallback;
    try {
      return v_[key].get<T>();
    } catch (const json::exception&) {
      throw UsageError("config key '" + key + "' has the wrong type");
    }
  }
  template <typename T>
  T require(const std::string& key, const std::string& command) const {
    if (!has(key)) {
      throw UsageError(command + " needs --" + replace_underscores(key));
    }
    return get<T>(key, T{});
  }

  // Configuration without filesystem locations, for hashing.
  json hashable() const {
    json out = v_;
    for (const Key& k : kKeys) {
      if (k.kind == Kind::Path) out.erase(k.name);
    }
    return out;
  }
  std::string hash() const { return sha256_hex(hashable().dump()); }

 private:
  static std::string replace_underscores(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
  }
  json v_;
};

fs::path require_existing(const std::string& what, const fs::path& p) {
  if (!fs::exists(p)) throw InputError(what + " '" + p.string() + "' does not exist");
  return p;
}

Dataset load_any_dataset(const Config& cfg, const std::string& command) {
  const auto spec = cfg.require<std::string>("dataset", command);
  if (fs::is_directory(spec)) return load_dataset(spec);
  if (fs::is_regular_file(spec)) {
    CsvSchema schema;
    if (cfg.has("csv")) {
      const json& c = cfg.raw()["csv"];
      schema.label_column = c.value("label_column", schema.label_column);
      schema.channels = c.value("channels", schema.channels);
      schema.z_normalize = c.value("z_normalize", schema.z_normalize);
      schema.labels = c.value("labels", schema.labels);
    }
    return load_csv(spec, schema);
  }
  if (spec.rfind("synthetic-", 0) == 0) {
    return generate(spec, cfg.get<std::size_t>("n", 2560), cfg.get<std::size_t>("w", 256),
                    cfg.get<std::uint64_t>("dataset_seed", 0));
  }
  throw InputError("dataset '" + spec + "' does not exist");
}

std::string substitute_seed(std::string path, std::uint64_t seed) {
  const std::string tag = "{seed}";
  for (auto pos = path.find(tag); pos != std::string::npos; pos = path.find(tag)) {
    path.replace(pos, tag.size(), std::to_string(seed));
  }
  return path;
}

struct Manifest {
  std::string command;
  json inputs = json::array();
  json outputs = json::array();

  void input(const std::string& role, const fs::path& path, const std::string& digest) {
    inputs.push_back({{"role", role}, {"path", path.string()}, {"sha256", digest}});
  }
  void output(const fs::path& dir, const std::string& name) {
    outputs.push_back({{"file", name}, {"sha256", sha256_file(dir / name)}});
  }
  void write(const fs::path& dir, const Config& cfg) const {
    write_json(dir / "run-manifest.json", {{"format", "ecladts-run/1"},
                                           {"command", command},
                                           {"config", cfg.hashable()},
                                           {"config_hash", cfg.hash()},
                                           {"inputs", inputs},
                                           {"outputs", outputs}});
  }
};

TrainConfig train_config(const Config& cfg, std::uint64_t seed) {
  TrainConfig tc;
  if (cfg.has("train")) {
    try {
      tc = cfg.raw()["train"].get<TrainConfig>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config 'train' block malformed: ") + e.what());
    }
  }
  if (cfg.has("epochs")) tc.max_epochs = cfg.get<std::size_t>("epochs", tc.max_epochs);
  if (cfg.has("lr")) tc.lr = cfg.get<double>("lr", tc.lr);
  tc.seed = seed;
  tc.validate();
  return tc;
}

KMeansOptions kmeans_options(const Config& cfg) {
  KMeansOptions km;
  if (cfg.has("kmeans")) {
    const json& k = cfg.raw()["kmeans"];
    km.batch_size = k.value("batch_size", km.batch_size);
    km.max_sweeps = k.value("max_sweeps", km.max_sweeps);
    km.max_batches = k.value("max_batches", km.max_batches);
    km.tolerance = k.value("tolerance", km.tolerance);
    km.reservoir_size = k.value("reservoir_size", km.reservoir_size);
  }
  if (cfg.has("max_batches")) km.max_batches = cfg.get<std::size_t>("max_batches", 0);
  return km;
}

struct LoadedModel {
  Model model;
  Checkpoint checkpoint;
  std::string sha256;
};

LoadedModel load_model(const fs::path& path) {
  require_existing("checkpoint", path);
  Checkpoint c = Checkpoint::load(path);
  Model m = c.to_model();
  return {std::move(m), std::move(c), sha256_file(path)};
}

void check_checkpoint_dataset(const Checkpoint& c, const Dataset& data, const fs::path& path) {
  if (!c.metadata.contains("dataset_fingerprint")) return;
  if (c.metadata["dataset_fingerprint"] != data.fingerprint()) {
    throw InputError("checkpoint '" + path.string() + "' was trained on a different dataset");
  }
}

void note_grid(std::size_t n_c, std::vector<std::string>* warnings) {
  if (kGrid.count(std::to_string(n_c))) return;
  const std::string note =
      "n_c = " + std::to_string(n_c) + " is outside the usual grid {3,5,10,15,20}";
  std::cerr << "note: " << note << "\n";
  if (warnings) warnings->push_back(note);
}

ConceptReport run_method(Method method, const Model& model, const Dataset& data,
                         const ConceptInputs* inputs, std::size_t n_c, std::uint64_t seed,
                         const Config& cfg, const std::vector<std::string>& layers) {
  if (method == Method::MultiVision) {
    MultiVisionOptions mo;
    mo.quantile = cfg.get<double>("quantile", mo.quantile);
    mo.kmeans = kmeans_options(cfg);
    if (cfg.has("multivision_layer")) mo.layer = cfg.get<std::string>("multivision_layer", "");
    return multivision_baseline(model, data, n_c, seed, mo);
  }
  ExtractionOptions eo;
  eo.probe_layers = layers;
  eo.kmeans = kmeans_options(cfg);
  eo.standardize = cfg.get<bool>("standardize", false);
  if (inputs) return eclad_from_inputs(*inputs, data, method, n_c, seed, eo);
  const ConceptInputs fresh = prepare_concept_inputs(model, data, eo);
  return eclad_from_inputs(fresh, data, method, n_c, seed, eo);
}

void annotate(ConceptReport& report, const Dataset& data, const LoadedModel& lm,
              const std::string& config_hash) {
  report.metadata["dataset"] = data.spec.name;
  report.metadata["dataset_fingerprint"] = data.fingerprint();
  report.metadata["architecture"] = lm.checkpoint.spec.architecture;
  report.metadata["checkpoint_sha256"] = lm.sha256;
  report.metadata["config_hash"] = config_hash;
}

int cmd_gen(const Config& cfg) {
  const auto name = cfg.require<std::string>("dataset", "gen");
  const auto seed = cfg.require<std::uint64_t>("seed", "gen");
  const fs::path out = cfg.require<std::string>("out", "gen");
  const std::string format = cfg.get<std::string>("format", "binary");
  if (format != "binary" && format != "csv") {
    throw UsageError("--format must be binary or csv, got '" + format + "'");
  }
  const Dataset data =
      generate(name, cfg.get<std::size_t>("n", 2560), cfg.get<std::size_t>("w", 256), seed);
  save_dataset(out, data, format == "csv" ? StorageFormat::Csv : StorageFormat::Binary,
               {{"config_hash", cfg.hash()}});
  Manifest m{"gen"};
  m.output(out, "meta.json");
  if (format == "binary") m.output(out, "data.bin");
  m.write(out, cfg);
  std::cout << "dataset " << data.spec.name << ": " << data.size() << " samples -> "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const Config& cfg) {
  const auto seed = cfg.require<std::uint64_t>("seed", "train");
  const fs::path out = cfg.require<std::string>("out", "train");
  const Dataset data = load_any_dataset(cfg, "train");
  ModelSpec spec = ModelSpec::defaults(cfg.get<std::string>("architecture", "tiny-cnn"),
                                       data.spec.ch, data.spec.w, data.spec.num_classes);
  if (cfg.has("model")) {
    json merged = spec;
    merged.update(cfg.raw()["model"]);
    spec = merged.get<ModelSpec>();
  }
  if (cfg.has("layers")) spec.probe_layers = cfg.get<std::vector<std::string>>("layers", {});
  const TrainConfig tc = train_config(cfg, seed);
  const Split sp = split(data.size(), tc.split_fraction, seed);

  Model model = Model::build(spec, seed);
  TrainResult result = train(model, data, sp, tc);
  result.checkpoint.metadata["dataset"] = data.spec.name;
  result.checkpoint.metadata["dataset_fingerprint"] = data.fingerprint();
  result.checkpoint.metadata["config_hash"] = cfg.hash();
  result.checkpoint.metadata["split"] = sp;
  result.checkpoint.save(out / "checkpoint.bin");
  result.report.checkpoint_path = "checkpoint.bin";
  json report = result.report;
  report["config_hash"] = cfg.hash();
  write_json(out / "train-report.json", report);

  Manifest m{"train"};
  m.input("dataset", cfg.get<std::string>("dataset", ""), data.fingerprint());
  m.output(out, "checkpoint.bin");
  m.output(out, "train-report.json");
  m.write(out, cfg);
  std::printf("best epoch %zu: val accuracy %.4f, val nll %.6f -> %s\n", result.report.best_epoch,
              result.report.best_val_accuracy, result.report.best_val_nll,
              (out / "checkpoint.bin").string().c_str());
  return 0;
}

int cmd_extract(const Config& cfg) {
  const auto seed = cfg.require<std::uint64_t>("seed", "extract");
  const fs::path out = cfg.require<std::string>("out", "extract");
  const auto n_c = cfg.require<std::size_t>("n_concepts", "extract");
  const Method method = method_from_string(cfg.get<std::string>("method", "eclad-ts"));
  const Dataset data = load_any_dataset(cfg, "extract");
  const fs::path ckpt = substitute_seed(cfg.require<std::string>("checkpoint", "extract"), seed);
  const LoadedModel lm = load_model(ckpt);
  check_checkpoint_dataset(lm.checkpoint, data, ckpt);
  const auto layers = cfg.get<std::vector<std::string>>("layers", {});

  std::vector<std::string> notes;
  note_grid(n_c, &notes);
  ConceptReport report = run_method(method, lm.model, data, nullptr, n_c, seed, cfg, layers);
  for (const std::string& n : notes) report.warnings.push_back(n);
  annotate(report, data, lm, cfg.hash());
  save_concept_report(out / "concepts.json", report);

  Manifest m{"extract"};
  m.input("dataset", cfg.get<std::string>("dataset", ""), data.fingerprint());
  m.input("checkpoint", ckpt, lm.sha256);
  m.output(out, "concepts.json");
  m.output(out, centroid_sidecar("concepts.json").string());
  m.write(out, cfg);
  std::cout << to_string(method) << ": " << report.n_c << " concepts -> "
            << (out / "concepts.json").string() << "\n";
  return 0;
}

int cmd_validate(const Config& cfg) {
  const fs::path out = cfg.require<std::string>("out", "validate");
  const fs::path report_path = require_existing("concept report", cfg.require<std::string>("report", "validate"));
  const Dataset data = load_any_dataset(cfg, "validate");
  const ConceptReport report = load_concept_report(report_path);
  const std::string fp = report.metadata.value("dataset_fingerprint", "");
  if (fp != data.fingerprint()) {
    throw InputError("concept report '" + report_path.string() +
                     "' was not produced from this dataset (fingerprint mismatch)");
  }
  AlignmentReport a = validate_run(report, data);
  a.metadata = {{"dataset", data.spec.name},
                {"dataset_fingerprint", fp},
                {"report_sha256", sha256_file(report_path)},
                {"seed", report.metadata.value("seed", 0)},
                {"architecture", report.metadata.value("architecture", "")},
                {"config_hash", cfg.hash()}};
  write_json(out / "alignment.json", a);
  if (cfg.has("ledger")) {
    append_ledger(cfg.get<std::string>("ledger", ""),
                  {data.spec.name, report.metadata.value("architecture", ""), a.method,
                   report.metadata.value("seed", std::uint64_t{0}), a.n_c, a.rc, a.ic.value});
  }
  Manifest m{"validate"};
  m.input("dataset", cfg.get<std::string>("dataset", ""), data.fingerprint());
  m.input("report", report_path, sha256_file(report_path));
  m.output(out, "alignment.json");
  m.write(out, cfg);
  std::printf("%s n_c=%zu: RC %+.4f, IC %+.4f, %zu aligned -> %s\n", a.method.c_str(), a.n_c, a.rc,
              a.ic.value, a.association.aligned_count(), (out / "alignment.json").string().c_str());
  return 0;
}

int cmd_compare(const Config& cfg) {
  const fs::path out = cfg.require<std::string>("out", "compare");
  std::vector<LedgerRow> rows;
  Manifest m{"compare"};
  if (cfg.has("from_ledger")) {
    const fs::path src = require_existing("ledger", cfg.get<std::string>("from_ledger", ""));
    rows = read_ledger(src);
    m.input("ledger", src, sha256_file(src));
  } else {
    const Dataset data = load_any_dataset(cfg, "compare");
    const auto ckpt_pattern = cfg.require<std::string>("checkpoint", "compare");
    const auto methods = cfg.get<std::vector<std::string>>(
        "methods", {"eclad-ts", "eclad-vanilla", "multivision"});
    if (methods.size() < 2) throw UsageError("compare needs at least two methods");
    const auto seeds = cfg.get<std::vector<std::uint64_t>>(
        "seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto grid = cfg.get<std::vector<std::size_t>>("grid", {3, 5, 10, 15, 20});
    const auto layers = cfg.get<std::vector<std::string>>("layers", {});
    m.input("dataset", cfg.get<std::string>("dataset", ""), data.fingerprint());
    std::string architecture;
    for (std::uint64_t seed : seeds) {
      const fs::path ckpt = substitute_seed(ckpt_pattern, seed);
      const LoadedModel lm = load_model(ckpt);
      check_checkpoint_dataset(lm.checkpoint, data, ckpt);
      if (!architecture.empty() && lm.checkpoint.spec.architecture != architecture) {
        throw InputError("checkpoints mix architectures");
      }
      architecture = lm.checkpoint.spec.architecture;
      m.input("checkpoint", ckpt, lm.sha256);
      std::optional<ConceptInputs> inputs;
      for (std::size_t n_c : grid) {
        note_grid(n_c, nullptr);
        for (const std::string& name : methods) {
          const Method method = method_from_string(name);
          if (method != Method::MultiVision && !inputs) {
            ExtractionOptions eo;
            eo.probe_layers = layers;
            eo.standardize = cfg.get<bool>("standardize", false);
            inputs = prepare_concept_inputs(lm.model, data, eo);
          }
          ConceptReport report =
              run_method(method, lm.model, data, inputs ? &*inputs : nullptr, n_c, seed, cfg, layers);
          annotate(report, data, lm, cfg.hash());
          const AlignmentReport a = validate_run(report, data);
          rows.push_back({data.spec.name, architecture, name, seed, n_c, a.rc, a.ic.value});
          std::printf("seed %llu n_c %2zu %-14s RC %+.4f IC %+.4f\n",
                      static_cast<unsigned long long>(seed), n_c, name.c_str(), a.rc, a.ic.value);
        }
      }
    }
  }
  json summary = summarize_ledger(rows);
  summary["config_hash"] = cfg.hash();
  fs::create_directories(out);
  fs::remove(out / "ledger.csv");
  for (const LedgerRow& r : rows) append_ledger(out / "ledger.csv", r);
  write_json(out / "summary.json", summary);
  m.output(out, "ledger.csv");
  m.output(out, "summary.json");
  m.write(out, cfg);
  for (const auto& [method, s] : summary["methods"].items()) {
    std::printf("%-14s runs %zu  median RC %+.4f  median IC %+.4f  aligned %zu\n", method.c_str(),
                s["runs"].get<std::size_t>(), s["rc"]["median"].get<double>(),
                s["ic"]["median"].get<double>(), s["aligned_runs"].get<std::size_t>());
  }
  return 0;
}

int cmd_report(const Config& cfg) {
  const fs::path out = cfg.require<std::string>("out", "report");
  const fs::path report_path = require_existing("concept report", cfg.require<std::string>("report", "report"));
  const Dataset data = load_any_dataset(cfg, "report");
  const ConceptReport report = load_concept_report(report_path);
  RenderOptions ro;
  ro.sample_ids = cfg.get<std::vector<std::size_t>>("samples", {});
  Manifest m{"report"};
  m.input("report", report_path, sha256_file(report_path));
  if (cfg.has("checkpoint")) {
    const fs::path ckpt = substitute_seed(cfg.get<std::string>("checkpoint", ""),
                                          report.metadata.value("seed", std::uint64_t{0}));
    const LoadedModel lm = load_model(ckpt);
    m.input("checkpoint", ckpt, lm.sha256);
    ro.predicted.resize(report.samples.size());
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
      const auto pos = data.find(report.samples[i].id);
      if (!pos) {
        ro.predicted[i] = report.samples[i].predicted;
        continue;
      }
      const std::size_t idx[] = {*pos};
      const Tensor logits = lm.model.logits(data.batch(idx));
      ro.predicted[i] = static_cast<int>(
          std::max_element(logits.data(), logits.data() + logits.dim(1)) - logits.data());
    }
  }
  write_text(out / "report.svg", render_report(report, data, ro));
  m.output(out, "report.svg");
  m.write(out, cfg);
  std::cout << "report -> " << (out / "report.svg").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECLAD-ts concept extraction for 1D CNN time-series classifiers"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;

  const std::map<std::string, std::string> about = {
      {"gen", "generate a synthetic dataset"},
      {"train", "train a classifier"},
      {"extract", "extract concepts from a trained model"},
      {"validate", "score a concept report against primitive masks"},
      {"compare", "sweep methods, seeds and n_c; summarize RC/IC"},
      {"report", "render a concept report as SVG"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : about) {
    CLI::App* sub = app.add_subcommand(name, help);
    subs[name] = sub;
    for (const Key& k : kKeys) {
      options[name + k.name] = sub->add_option(k.flag, flags[name + k.name], k.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  try {
    json values = json::object();
    const std::string config_path = flags[command + "config"];
    if (!config_path.empty()) {
      values = read_json(require_existing("config", config_path));
      if (!values.is_object()) throw UsageError("config must be a JSON object");
      values.erase("command");
    }
    for (const Key& k : kKeys) {
      if (options[command + k.name]->count() > 0) values[k.name] = parse_value(k, flags[command + k.name]);
    }
    values.erase("config");
    const Config cfg(values);
    if (command == "gen") return cmd_gen(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "extract") return cmd_extract(cfg);
    if (command == "validate") return cmd_validate(cfg);
    if (command == "compare") return cmd_compare(cfg);
    return cmd_report(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
