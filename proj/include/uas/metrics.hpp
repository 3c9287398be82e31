// SPDX-License-Identifier: Apache-2.0
//
// Top-k accuracy, mean class accuracy, and confusion matrices.
// Logits are passed as an N x K row-major buffer.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace uas {

/// Fraction of rows whose label ranks within the k best logits. k is clamped
/// to K; equal logits rank the lower class index first.
double top_k_accuracy(std::span<const double> logits, std::size_t classes,
                      std::span<const std::uint32_t> labels, std::size_t k);

/// Per-class recall; nullopt for classes with no samples in `labels`.
std::vector<std::optional<double>> per_class_accuracy(
    std::span<const std::uint32_t> predictions,
    std::span<const std::uint32_t> labels, std::size_t classes);

/// Mean of per-class recall over the classes present in `labels`.
double mean_class_accuracy(std::span<const std::uint32_t> predictions,
                           std::span<const std::uint32_t> labels,
                           std::size_t classes);

/// K x K counts; entry (i, j) is true class i predicted as j.
std::vector<std::uint64_t> confusion_matrix(
    std::span<const std::uint32_t> predictions,
    std::span<const std::uint32_t> labels, std::size_t classes);

/// Row-wise argmax with ties toward the lower index.
std::vector<std::uint32_t> predict(std::span<const double> logits,
                                   std::size_t classes);

struct MetricsReport {
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t top5_k = 5;  // min(5, K)
  double mca = 0.0;
  std::vector<std::optional<double>> per_class_accuracy;
  std::vector<std::uint64_t> confusion;  // classes x classes
  std::size_t classes = 0;
  std::size_t n_samples = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport compute_metrics(std::span<const double> logits,
                              std::size_t classes,
                              std::span<const std::uint32_t> labels);

nlohmann::json to_json(const MetricsReport& report,
                       std::span<const std::string> class_names = {});
MetricsReport metrics_from_json(const nlohmann::json& doc);

/// Header row of class names (or indices), then one row per true class.
std::string confusion_csv(const MetricsReport& report,
                          std::span<const std::string> class_names = {});

}  // namespace uas
