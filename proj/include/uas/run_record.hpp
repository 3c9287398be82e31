// SPDX-License-Identifier: Apache-2.0
//
// Experiment bookkeeping: every CLI run gets <out>/<run_id>/ holding the
// config snapshot, checkpoint, metrics, budget and log, plus run.json.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "uas/metrics.hpp"
#include "uas/train_config.hpp"
#include "uas/trainer.hpp"

namespace uas {

struct RunRecord {
  std::string run_id;
  std::string command;
  TrainConfig config;
  /// Inputs needed to replay: store, labels, strategy, split, ...
  std::map<std::string, std::string> inputs;
  std::optional<MetricsReport> metrics;
  std::optional<BudgetReport> budget;
  /// Artifact name -> path relative to the run directory.
  std::map<std::string, std::string> artifacts;
  std::string started_at;
  std::string finished_at;
};

nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& doc);

RunRecord load_run_record(const std::filesystem::path& run_dir);
void save_run_record(const RunRecord& record, const std::filesystem::path& run_dir);

/// UAS_OUT_DIR when set, otherwise "runs".
std::filesystem::path default_out_root();

/// "<prefix>-<UTC yyyymmddThhmmss>-<n>", with n chosen so the directory does
/// not exist yet. Creates the directory.
std::string allocate_run(const std::filesystem::path& out_root,
                         std::string_view prefix);

/// ISO-8601 UTC timestamp.
std::string utc_now();

}  // namespace uas
