// SPDX-License-Identifier: Apache-2.0
//
// Minibatch training of a probe head over frozen features.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uas/dataset.hpp"
#include "uas/feature_store.hpp"
#include "uas/metrics.hpp"
#include "uas/probe_head.hpp"
#include "uas/train_config.hpp"

namespace uas {

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // weighted mean minibatch loss over the epoch
  double train_top1 = 0.0;  // train accuracy at the end of the epoch
  std::optional<double> val_top1;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

using TrainLog = std::vector<EpochStats>;

/// epoch,train_loss,train_top1,val_top1 (val_top1 empty when absent).
std::string log_csv(const TrainLog& log);

struct BudgetReport {
  std::uint64_t trainable_params = 0;
  std::uint64_t total_params = 0;
  double wall_time_seconds = 0.0;
  std::size_t epochs_run = 0;
};

nlohmann::json to_json(const BudgetReport& budget);
BudgetReport budget_from_json(const nlohmann::json& doc);

struct FitResult {
  ProbeHead head;
  TrainLog log;
  BudgetReport budget;
};

/// Per-sample weights: all 1, or N / (K_present * n_class) for
/// inverse-frequency weighting.
std::vector<double> sample_weights(std::span<const std::uint32_t> labels,
                                   std::size_t classes,
                                   ClassWeighting weighting);

/// Trains a fresh seeded head on `train`. Features are only read.
/// Throws EmptyDatasetError for an empty train set, LabelError for K < 2 or
/// out-of-range labels, NumericError if the loss becomes non-finite.
FitResult fit(std::span<const FeatureRecord> train, std::size_t classes,
              const TrainConfig& config,
              std::span<const FeatureRecord> val = {});

FitResult fit(std::span<const FeatureRecord> train, const LabelMap& labels,
              const TrainConfig& config,
              std::span<const FeatureRecord> val = {});

/// Scores every record once. Throws EmptyDatasetError for an empty set.
MetricsReport evaluate(const ProbeHead& head,
                       std::span<const FeatureRecord> records,
                       bool parallel = false);

}  // namespace uas
