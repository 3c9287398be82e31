// SPDX-License-Identifier: Apache-2.0
//
// uasprobe: frozen-feature probing workflow.
//
//   synth     write a seeded synthetic store + label map
//   ingest    manifest + raw feature dumps -> validated UASF store
//   train     fit a probe head, write runs/<run_id>/
//   eval      score a checkpoint on one split
//   compare   full fine-tune vs LoRA vs linear probe on a toy backbone
//   subspace  covariance spectra and principal angles per class
//   report    one line per recorded run
//
// Exit codes: 0 ok, 2 usage/format, 3 data/validation, 4 numeric failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "uas/checkpoint.hpp"
#include "uas/dataset.hpp"
#include "uas/error.hpp"
#include "uas/feature_store.hpp"
#include "uas/run_record.hpp"
#include "uas/strategy.hpp"
#include "uas/subspace.hpp"
#include "uas/trainer.hpp"

namespace fs = std::filesystem;
using namespace uas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

constexpr const char* kConfigKeys[] = {
    "optimizer", "learning_rate", "weight_decay", "momentum",
    "beta1",     "beta2",         "epsilon",      "batch_size",
    "epochs",    "seed",          "class_weighting", "deterministic",
    "threads"};

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool parallel = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value training config file");
    app->add_option("--seed", seed, "RNG seed (overrides the config)");
    app->add_flag("--deterministic", deterministic,
                  "serial kernels, fixed reduction order (default)");
    app->add_flag("--parallel", parallel, "use the OpenMP kernels");
    app->add_option("--set", sets, "override a config key: --set key=value");
    for (const char* key : kConfigKeys) {
      std::string flag = key;
      if (flag == "seed" || flag == "deterministic") continue;
      for (char& c : flag) c = c == '_' ? '-' : c;
      app->add_option("--" + flag, overrides[key], "config key " + std::string(key));
    }
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) cfg.set(key, value);
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (parallel) cfg.deterministic = false;
    if (deterministic) cfg.deterministic = true;
    cfg.validate();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

/// Prints one results row: Top-1, MCA, training time (hr), #Params (K).
void print_result_row(const MetricsReport& m, const std::optional<BudgetReport>& budget) {
  std::cout << "Top-1    MCA    Training Time (hr)  #Params (K)\n";
  std::cout << std::setw(5) << fixed(100 * m.top1, 1) << "  " << std::setw(5)
            << fixed(100 * m.mca, 1) << "  ";
  if (budget) {
    std::cout << std::setw(18) << fixed(budget->wall_time_seconds / 3600.0, 6) << "  "
              << std::setw(11)
              << fixed(static_cast<double>(budget->trainable_params) / 1000.0, 1);
  } else {
    std::cout << std::setw(18) << "-" << "  " << std::setw(11) << "-";
  }
  std::cout << '\n';
}

fs::path resolve_out(const std::string& out) {
  return out.empty() ? default_out_root() : fs::path(out);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t per_class = 200;
  double margin = 6.0;
  std::uint64_t seed = 1;
  std::string store, labels;
};

int cmd_synth(const SynthArgs& a) {
  const auto data = make_synthetic_task(a.classes, a.dim, a.per_class, a.margin, a.seed);
  const auto records = data.to_records();
  const auto header = write_store(records, static_cast<std::uint32_t>(a.dim), a.store);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < a.classes; ++c) names.push_back("class_" + std::to_string(c));
  LabelMap(names).save(a.labels);
  std::cout << "wrote " << header.record_count << " records (D=" << header.feature_dim
            << ", K=" << a.classes << ") to " << a.store << '\n';
  return kExitOk;
}

struct IngestArgs {
  std::string manifest, labels, features, store;
  std::uint32_t dim = 0;
};

// Each manifest entry's source_path names a raw little-endian float32 dump
// of T x D values, resolved against --features when relative.
int cmd_ingest(const IngestArgs& a) {
  const auto labels = LabelMap::load(a.labels);
  const auto entries = load_manifest(a.manifest);
  const auto manifest_violations = validate_manifest(entries, labels);
  if (!manifest_violations.empty()) {
    for (const auto& v : manifest_violations) {
      std::cerr << "violation: " << to_string(v.kind) << " [" << v.clip_id << "] "
                << v.detail << '\n';
    }
    return kExitData;
  }
  if (!fs::is_directory(a.features)) {
    throw IoError("feature directory '" + a.features + "' does not exist");
  }

  std::vector<FeatureRecord> records;
  records.reserve(entries.size());
  for (const auto& e : entries) {
    fs::path src = e.source_path;
    if (src.is_relative()) src = fs::path(a.features) / src;
    std::ifstream in(src, std::ios::binary);
    if (!in) throw IoError("cannot open feature dump '" + src.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.empty() || bytes.size() % (4ull * a.dim) != 0) {
      throw FormatError("'" + src.string() + "' holds " + std::to_string(bytes.size()) +
                        " bytes, not a whole number of D=" + std::to_string(a.dim) +
                        " float32 rows");
    }
    std::vector<float> tokens(bytes.size() / 4);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) {
        bits = (bits << 8) | static_cast<unsigned char>(bytes[4 * i + static_cast<std::size_t>(b)]);
      }
      tokens[i] = std::bit_cast<float>(bits);
    }
    records.push_back(make_record(e.clip_id, *labels.index_of(e.class_name), e.split,
                                  a.dim, std::move(tokens)));
  }

  // Validate the in-memory records before anything touches disk.
  FeatureStore staged{{StoreHeader::kVersion, StoreHeader::kFloat32, a.dim, records.size()},
                      records};
  const auto report = validate_store(staged, labels);
  std::cout << format_report(report);
  if (!report.ok()) return kExitData;
  write_store(records, a.dim, a.store);
  std::cout << "store written to " << a.store << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string store, labels, out, replay;
  bool use_val = true;
  ConfigFlags flags;
};

struct TrainOutcome {
  RunRecord record;
  fs::path run_dir;
};

TrainOutcome do_train(const std::string& store_path, const std::string& labels_path,
                      const TrainConfig& cfg, const fs::path& out_root, bool use_val) {
  const auto started = utc_now();
  const auto labels = LabelMap::load(labels_path);
  const auto store = read_store(store_path);
  const auto store_sum = checksum(store.records);
  const auto train = filter_split(store.records, Split::train);
  const auto val = use_val ? filter_split(store.records, Split::val)
                           : std::vector<FeatureRecord>{};

  auto result = fit(train, labels, cfg, val);
  if (checksum(store.records) != store_sum) {
    throw NumericError("feature store changed during training");
  }

  RunRecord rec;
  rec.run_id = allocate_run(out_root, "train");
  rec.command = "train";
  rec.config = cfg;
  rec.inputs = {{"store", fs::absolute(store_path).string()},
                {"labels", fs::absolute(labels_path).string()},
                {"use_val", use_val ? "true" : "false"}};
  rec.started_at = started;
  const fs::path dir = out_root / rec.run_id;

  write_text(dir / "config.txt", to_config_text(cfg));
  save_checkpoint({result.head, labels.hash(), cfg.seed}, dir / "checkpoint.bin");
  write_text(dir / "log.csv", log_csv(result.log));
  write_json(dir / "budget.json", to_json(result.budget));

  nlohmann::json metrics;
  const auto train_metrics = evaluate(result.head, train);
  metrics["train"] = to_json(train_metrics, labels.names());
  if (!val.empty()) metrics["val"] = to_json(evaluate(result.head, val), labels.names());
  write_json(dir / "metrics.json", metrics);

  rec.metrics = train_metrics;
  rec.budget = result.budget;
  rec.artifacts = {{"config", "config.txt"},
                   {"checkpoint", "checkpoint.bin"},
                   {"log", "log.csv"},
                   {"budget", "budget.json"},
                   {"metrics", "metrics.json"}};
  rec.finished_at = utc_now();
  save_run_record(rec, dir);
  return {rec, dir};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return fs::file_size(a) == fs::file_size(b) && file_checksum(a) == file_checksum(b);
}

int replay_run(const std::string& id, const fs::path& out_root);

int cmd_train(const TrainArgs& a) {
  const fs::path out_root = resolve_out(a.out);
  if (!a.replay.empty()) return replay_run(a.replay, out_root);
  if (a.store.empty() || a.labels.empty()) {
    throw CLI::ValidationError("train", "--store and --labels are required");
  }
  const auto cfg = a.flags.resolve();
  const auto outcome = do_train(a.store, a.labels, cfg, out_root, a.use_val);
  const auto& m = *outcome.record.metrics;
  std::cout << "run " << outcome.record.run_id << " -> " << outcome.run_dir.string() << '\n';
  std::cout << "train split: ";
  print_result_row(m, outcome.record.budget);
  return kExitOk;
}

struct EvalArgs {
  std::string store, labels, checkpoint, run, split = "test", out, replay;
};

struct EvalOutcome {
  RunRecord record;
  fs::path run_dir;
};

EvalOutcome do_eval(const std::string& store_path, const std::string& labels_path,
                    const fs::path& checkpoint_path, Split split, const fs::path& out_root) {
  const auto started = utc_now();
  if (!fs::exists(checkpoint_path)) {
    throw IoError("checkpoint '" + checkpoint_path.string() + "' does not exist");
  }
  const auto ckpt = load_checkpoint(checkpoint_path);
  const auto labels = LabelMap::load(labels_path);
  if (ckpt.head.classes != labels.size()) {
    throw LabelError("checkpoint has K=" + std::to_string(ckpt.head.classes) +
                     " but the label map has " + std::to_string(labels.size()));
  }
  if (ckpt.label_map_hash != labels.hash()) {
    std::cerr << "warning: label map differs from the one used for training\n";
  }
  const auto store = read_store(store_path);
  const auto records = filter_split(store.records, split);
  const auto metrics = evaluate(ckpt.head, records);

  std::optional<BudgetReport> budget;
  const auto budget_path = checkpoint_path.parent_path() / "budget.json";
  if (fs::exists(budget_path)) {
    std::ifstream in(budget_path);
    budget = budget_from_json(nlohmann::json::parse(in));
  }

  RunRecord rec;
  rec.run_id = allocate_run(out_root, "eval");
  rec.command = "eval";
  rec.inputs = {{"store", fs::absolute(store_path).string()},
                {"labels", fs::absolute(labels_path).string()},
                {"checkpoint", fs::absolute(checkpoint_path).string()},
                {"split", std::string(to_string(split))}};
  rec.started_at = started;
  const fs::path dir = out_root / rec.run_id;
  write_json(dir / "metrics.json", to_json(metrics, labels.names()));
  write_text(dir / "confusion.csv", confusion_csv(metrics, labels.names()));
  if (budget) write_json(dir / "budget.json", to_json(*budget));
  rec.metrics = metrics;
  rec.budget = budget;
  rec.artifacts = {{"metrics", "metrics.json"}, {"confusion", "confusion.csv"}};
  rec.finished_at = utc_now();
  save_run_record(rec, dir);
  return {rec, dir};
}

int cmd_eval(const EvalArgs& a) {
  const fs::path out_root = resolve_out(a.out);
  if (!a.replay.empty()) return replay_run(a.replay, out_root);
  if (a.store.empty() || a.labels.empty()) {
    throw CLI::ValidationError("eval", "--store and --labels are required");
  }
  fs::path ckpt = a.checkpoint;
  if (ckpt.empty() && !a.run.empty()) ckpt = out_root / a.run / "checkpoint.bin";
  if (ckpt.empty()) throw CLI::ValidationError("eval", "--checkpoint or --run is required");
  const auto outcome = do_eval(a.store, a.labels, ckpt, parse_split(a.split), out_root);
  const auto& m = *outcome.record.metrics;
  std::cout << "run " << outcome.record.run_id << " -> " << outcome.run_dir.string() << '\n';
  std::cout << a.split << " split (" << m.n_samples << " samples, top-" << m.top5_k
            << " = " << fixed(100 * m.top5, 1) << "):\n";
  print_result_row(m, outcome.record.budget);
  return kExitOk;
}

int replay_run(const std::string& id, const fs::path& out_root) {
  const fs::path original_dir = out_root / id;
  const auto original = load_run_record(original_dir);
  bool identical = false;
  std::string new_id;
  if (original.command == "train") {
    const auto again = do_train(original.inputs.at("store"), original.inputs.at("labels"),
                                original.config, out_root,
                                original.inputs.at("use_val") == "true");
    new_id = again.record.run_id;
    identical = same_bytes(original_dir / "checkpoint.bin", again.run_dir / "checkpoint.bin") &&
                original.metrics == again.record.metrics;
  } else if (original.command == "eval") {
    const auto again =
        do_eval(original.inputs.at("store"), original.inputs.at("labels"),
                original.inputs.at("checkpoint"), parse_split(original.inputs.at("split")),
                out_root);
    new_id = again.record.run_id;
    identical = original.metrics == again.record.metrics;
  } else {
    throw ConfigError("runs of type '" + original.command + "' cannot be replayed");
  }
  std::cout << "replayed " << id << " as " << new_id << ": "
            << (identical ? "bit-identical" : "MISMATCH") << '\n';
  return identical ? kExitOk : kExitNumeric;
}

struct CompareArgs {
  std::string store, labels, out;
  std::vector<std::string> strategies;
  bool synthetic = false;
  SynthArgs synth;
  std::vector<std::size_t> hidden = {64, 64, 32};
  ConfigFlags flags;
};

int cmd_compare(const CompareArgs& a) {
  const auto cfg = a.flags.resolve();
  std::vector<StrategySpec> specs;
  if (a.strategies.empty()) {
    specs = {StrategySpec::full(), StrategySpec::lora(4), StrategySpec::probe()};
  } else {
    for (const auto& s : a.strategies) specs.push_back(StrategySpec::parse(s));
  }

  LabeledDataset data;
  std::map<std::string, std::string> inputs;
  if (!a.store.empty()) {
    if (a.labels.empty()) throw CLI::ValidationError("compare", "--labels is required with --store");
    const auto labels = LabelMap::load(a.labels);
    const auto store = read_store(a.store);
    data = dataset_from_records(store.records, labels.size());
    inputs = {{"store", fs::absolute(a.store).string()},
              {"labels", fs::absolute(a.labels).string()}};
  } else {
    data = make_synthetic_task(a.synth.classes, a.synth.dim, a.synth.per_class,
                               a.synth.margin, a.synth.seed);
    inputs = {{"synthetic", "true"},
              {"classes", std::to_string(a.synth.classes)},
              {"dim", std::to_string(a.synth.dim)},
              {"per_class", std::to_string(a.synth.per_class)},
              {"margin", fixed(a.synth.margin, 6)},
              {"data_seed", std::to_string(a.synth.seed)}};
  }

  ComparisonOptions options;
  options.hidden_dims = a.hidden;
  const auto rows = run_comparison(data, specs, cfg, options);

  const fs::path out_root = resolve_out(a.out);
  RunRecord rec;
  rec.started_at = utc_now();
  rec.run_id = allocate_run(out_root, "compare");
  rec.command = "compare";
  rec.config = cfg;
  rec.inputs = inputs;
  std::string keys;
  for (const auto& s : specs) keys += (keys.empty() ? "" : ",") + s.key();
  rec.inputs["strategies"] = keys;
  const fs::path dir = out_root / rec.run_id;
  write_text(dir / "config.txt", to_config_text(cfg));
  write_text(dir / "comparison.csv", comparison_csv(rows));
  const auto table = comparison_table(rows);
  write_text(dir / "comparison.txt", table);
  rec.artifacts = {{"config", "config.txt"},
                   {"comparison", "comparison.csv"},
                   {"table", "comparison.txt"}};
  rec.finished_at = utc_now();
  save_run_record(rec, dir);

  std::cout << "run " << rec.run_id << " -> " << dir.string() << '\n' << table;
  return kExitOk;
}

struct SubspaceArgs {
  std::string store, labels, split = "all", out;
  std::size_t top = 4;
  bool parallel = false;
};

int cmd_subspace(const SubspaceArgs& a) {
  const auto labels = LabelMap::load(a.labels);
  const auto store = read_store(a.store);
  const auto records = a.split == "all" ? store.records
                                        : filter_split(store.records, parse_split(a.split));
  const auto data = dataset_from_records(records, labels.size());

  const fs::path out_root = resolve_out(a.out);
  RunRecord rec;
  rec.started_at = utc_now();
  rec.run_id = allocate_run(out_root, "subspace");
  rec.command = "subspace";
  rec.inputs = {{"store", fs::absolute(a.store).string()},
                {"labels", fs::absolute(a.labels).string()},
                {"split", a.split}};
  const fs::path dir = out_root / rec.run_id;

  nlohmann::json doc;
  const auto all = summarize_domain(data.features, data.dim, a.parallel);
  doc["all"] = to_json(all);
  write_text(dir / "spectrum_all.csv", spectrum_csv(all));
  std::cout << "domain       n    PR      rank90\n";
  std::cout << std::left << std::setw(10) << "all" << std::right << std::setw(5)
            << all.n_samples << "  " << std::setw(6) << fixed(all.participation_ratio, 2)
            << "  " << std::setw(6) << all.effective_rank_90 << '\n';

  std::vector<std::pair<std::string, std::vector<double>>> bases;
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<double> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == c) {
        const auto r = data.row(i);
        rows.insert(rows.end(), r.begin(), r.end());
      }
    }
    if (rows.size() < 2 * data.dim) continue;
    try {
      const auto s = summarize_domain(rows, data.dim, a.parallel);
      per_class[labels.name(c)] = to_json(s);
      write_text(dir / ("spectrum_class" + std::to_string(c) + ".csv"), spectrum_csv(s));
      std::cout << std::left << std::setw(10) << labels.name(c).substr(0, 10) << std::right
                << std::setw(5) << s.n_samples << "  " << std::setw(6)
                << fixed(s.participation_ratio, 2) << "  " << std::setw(6)
                << s.effective_rank_90 << '\n';
      if (a.top > 0 && a.top <= s.numerical_rank) {
        bases.emplace_back(labels.name(c), top_subspace(s, a.top));
      }
    } catch (const InsufficientDataError&) {
      continue;
    }
  }
  doc["classes"] = per_class;

  nlohmann::json angles = nlohmann::json::array();
  for (std::size_t i = 0; i < bases.size(); ++i) {
    for (std::size_t j = i + 1; j < bases.size(); ++j) {
      angles.push_back({{"a", bases[i].first},
                        {"b", bases[j].first},
                        {"m", a.top},
                        {"angles_rad", principal_angles(bases[i].second, a.top,
                                                        bases[j].second, a.top, data.dim)}});
    }
  }
  doc["principal_angles"] = angles;
  write_json(dir / "subspace.json", doc);
  rec.artifacts = {{"summary", "subspace.json"}, {"spectrum", "spectrum_all.csv"}};
  rec.finished_at = utc_now();
  save_run_record(rec, dir);
  std::cout << "run " << rec.run_id << " -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_report(const std::string& out) {
  const fs::path out_root = resolve_out(out);
  if (!fs::is_directory(out_root)) throw IoError("no runs under '" + out_root.string() + "'");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(out_root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "run.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::cout << std::left << std::setw(34) << "run_id" << std::setw(10) << "command"
            << std::right << std::setw(8) << "Top-1" << std::setw(8) << "MCA"
            << std::setw(14) << "time (s)" << std::setw(13) << "#Params (K)" << '\n';
  for (const auto& d : dirs) {
    const auto r = load_run_record(d);
    std::cout << std::left << std::setw(34) << r.run_id << std::setw(10) << r.command
              << std::right;
    if (r.metrics) {
      std::cout << std::setw(8) << fixed(100 * r.metrics->top1, 1) << std::setw(8)
                << fixed(100 * r.metrics->mca, 1);
    } else {
      std::cout << std::setw(8) << "-" << std::setw(8) << "-";
    }
    if (r.budget) {
      std::cout << std::setw(14) << fixed(r.budget->wall_time_seconds, 3) << std::setw(13)
                << fixed(static_cast<double>(r.budget->trainable_params) / 1000.0, 1);
    } else {
      std::cout << std::setw(14) << "-" << std::setw(13) << "-";
    }
    std::cout << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uasprobe: linear probing on frozen action features"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic Gaussian-cluster store");
  synth_cmd->add_option("--classes", synth.classes)->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--dim", synth.dim)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--per-class", synth.per_class)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--margin", synth.margin)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--store", synth.store)->required();
  synth_cmd->add_option("--labels", synth.labels)->required();

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "manifest + raw dumps -> UASF store");
  ingest_cmd->add_option("--manifest", ingest.manifest)->required();
  ingest_cmd->add_option("--labels", ingest.labels)->required();
  ingest_cmd->add_option("--features", ingest.features, "directory of raw float32 dumps")
      ->required();
  ingest_cmd->add_option("--dim", ingest.dim, "feature dimension D")->required()
      ->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--store", ingest.store, "output UASF path")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fit a linear probe head");
  train_cmd->add_option("--store", train.store);
  train_cmd->add_option("--labels", train.labels);
  train_cmd->add_option("--out", train.out, "output root (default $UAS_OUT_DIR or runs)");
  train_cmd->add_option("--replay", train.replay, "re-run a recorded run and compare");
  train_cmd->add_flag("!--no-val", train.use_val, "do not score the val split per epoch");
  train.flags.attach(train_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint");
  eval_cmd->add_option("--store", eval.store);
  eval_cmd->add_option("--labels", eval.labels);
  eval_cmd->add_option("--checkpoint", eval.checkpoint);
  eval_cmd->add_option("--run", eval.run, "use <out>/<run>/checkpoint.bin");
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", eval.out);
  eval_cmd->add_option("--replay", eval.replay);

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "full fine-tune vs LoRA vs linear probe");
  compare_cmd->add_option("--store", compare.store);
  compare_cmd->add_option("--labels", compare.labels);
  compare_cmd->add_option("--out", compare.out);
  compare_cmd->add_option("--strategy", compare.strategies, "probe | lora:R | full (repeatable)");
  compare_cmd->add_flag("--synthetic", compare.synthetic, "use a generated task (default)");
  compare_cmd->add_option("--classes", compare.synth.classes)->check(CLI::Range(2, 100000));
  compare_cmd->add_option("--dim", compare.synth.dim)->check(CLI::PositiveNumber);
  compare_cmd->add_option("--per-class", compare.synth.per_class)->check(CLI::PositiveNumber);
  compare_cmd->add_option("--margin", compare.synth.margin)->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--data-seed", compare.synth.seed);
  compare_cmd->add_option("--hidden", compare.hidden, "backbone widths after the input")
      ->delimiter(',');
  compare.synth.dim = 32;
  compare.flags.attach(compare_cmd);

  SubspaceArgs subspace;
  auto* subspace_cmd = app.add_subcommand("subspace", "covariance spectra and principal angles");
  subspace_cmd->add_option("--store", subspace.store)->required();
  subspace_cmd->add_option("--labels", subspace.labels)->required();
  subspace_cmd->add_option("--split", subspace.split)
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  subspace_cmd->add_option("--top", subspace.top, "basis size for principal angles");
  subspace_cmd->add_option("--out", subspace.out);
  subspace_cmd->add_flag("--parallel", subspace.parallel);

  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "summarize recorded runs");
  report_cmd->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*ingest_cmd) return cmd_ingest(ingest);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*compare_cmd) return cmd_compare(compare);
    if (*subspace_cmd) return cmd_subspace(subspace);
    if (*report_cmd) return cmd_report(report_out);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const VersionError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CorruptionError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
