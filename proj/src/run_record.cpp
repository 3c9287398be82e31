// SPDX-License-Identifier: Apache-2.0
#include "uas/run_record.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "uas/error.hpp"

namespace uas {

using nlohmann::json;

nlohmann::json to_json(const RunRecord& r) {
  json doc = {{"run_id", r.run_id},
              {"command", r.command},
              {"config", to_config_text(r.config)},
              {"inputs", r.inputs},
              {"artifacts", r.artifacts},
              {"started_at", r.started_at},
              {"finished_at", r.finished_at}};
  doc["metrics"] = r.metrics ? to_json(*r.metrics) : json(nullptr);
  doc["budget"] = r.budget ? to_json(*r.budget) : json(nullptr);
  return doc;
}

RunRecord run_record_from_json(const nlohmann::json& doc) {
  RunRecord r;
  try {
    r.run_id = doc.at("run_id").get<std::string>();
    r.command = doc.at("command").get<std::string>();
    std::istringstream cfg(doc.at("config").get<std::string>());
    r.config = parse_config(cfg);
    r.inputs = doc.at("inputs").get<std::map<std::string, std::string>>();
    r.artifacts = doc.at("artifacts").get<std::map<std::string, std::string>>();
    r.started_at = doc.value("started_at", "");
    r.finished_at = doc.value("finished_at", "");
    if (doc.contains("metrics") && !doc["metrics"].is_null()) {
      r.metrics = metrics_from_json(doc["metrics"]);
    }
    if (doc.contains("budget") && !doc["budget"].is_null()) {
      r.budget = budget_from_json(doc["budget"]);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

RunRecord load_run_record(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "run.json";
  std::ifstream in(path);
  if (!in) throw IoError("no run record at '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return run_record_from_json(doc);
}

void save_run_record(const RunRecord& record, const std::filesystem::path& run_dir) {
  std::ofstream out(run_dir / "run.json");
  if (!out) throw IoError("cannot write run record in '" + run_dir.string() + "'");
  out << to_json(record).dump(2) << '\n';
}

std::filesystem::path default_out_root() {
  if (const char* env = std::getenv("UAS_OUT_DIR"); env && *env) return env;
  return "runs";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string allocate_run(const std::filesystem::path& out_root,
                         std::string_view prefix) {
  std::filesystem::create_directories(out_root);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm);
  for (int n = 1;; ++n) {
    std::string id = std::string(prefix) + "-" + stamp + "-" + std::to_string(n);
    // create_directory is the atomic claim: false means someone else has it.
    if (std::filesystem::create_directory(out_root / id)) return id;
  }
}

}  // namespace uas
