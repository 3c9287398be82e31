// SPDX-License-Identifier: Apache-2.0
#include "uas/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uas/error.hpp"
#include "uas/kernels.hpp"
#include "uas/optimizer.hpp"
#include "uas/rng.hpp"

namespace uas {
namespace {

std::size_t common_dim(std::span<const FeatureRecord> records) {
  const std::size_t dim = records.front().dim();
  for (const auto& r : records) {
    if (r.dim() != dim || r.tokens.size() != std::size_t{r.token_count} * dim) {
      throw DimensionError("record '" + r.clip_id + "' has D=" +
                           std::to_string(r.dim()) + ", expected " +
                           std::to_string(dim));
    }
  }
  return dim;
}

std::vector<std::uint32_t> labels_of(std::span<const FeatureRecord> records,
                                     std::size_t classes) {
  std::vector<std::uint32_t> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    if (r.label_index >= classes) {
      throw LabelError("record '" + r.clip_id + "' has label " +
                       std::to_string(r.label_index) + " >= K=" +
                       std::to_string(classes));
    }
    labels.push_back(r.label_index);
  }
  return labels;
}

double accuracy(const ProbeHead& head, std::span<const float> pooled,
                std::span<const std::uint32_t> labels, bool parallel) {
  const auto z = parallel ? kernels::omp::logits(head, pooled)
                          : kernels::serial::logits(head, pooled);
  const auto pred = predict(z, head.classes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace

std::string log_csv(const TrainLog& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,train_top1,val_top1\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << e.train_loss << ',' << e.train_top1 << ',';
    if (e.val_top1) os << *e.val_top1;
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const BudgetReport& b) {
  return {{"trainable_params", b.trainable_params},
          {"total_params", b.total_params},
          {"wall_time_seconds", b.wall_time_seconds},
          {"wall_time_hours", b.wall_time_seconds / 3600.0},
          {"epochs_run", b.epochs_run}};
}

BudgetReport budget_from_json(const nlohmann::json& doc) {
  BudgetReport b;
  b.trainable_params = doc.at("trainable_params").get<std::uint64_t>();
  b.total_params = doc.at("total_params").get<std::uint64_t>();
  b.wall_time_seconds = doc.at("wall_time_seconds").get<double>();
  b.epochs_run = doc.at("epochs_run").get<std::size_t>();
  return b;
}

std::vector<double> sample_weights(std::span<const std::uint32_t> labels,
                                   std::size_t classes,
                                   ClassWeighting weighting) {
  std::vector<double> weights(labels.size(), 1.0);
  if (weighting == ClassWeighting::none || labels.empty()) return weights;

  std::vector<std::uint64_t> counts(classes, 0);
  for (auto y : labels) ++counts.at(y);
  const auto present = static_cast<double>(
      std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  const auto n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    weights[i] = n / (present * static_cast<double>(counts[labels[i]]));
  }
  return weights;
}

FitResult fit(std::span<const FeatureRecord> train, std::size_t classes,
              const TrainConfig& config, std::span<const FeatureRecord> val) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  if (train.empty()) throw EmptyDatasetError("train split is empty");
  if (classes < 2) throw LabelError("training needs K >= 2");

  const std::size_t dim = common_dim(train);
  const auto labels = labels_of(train, classes);
  const auto weights = sample_weights(labels, classes, config.class_weighting);
  const bool parallel = !config.deterministic;
  if (parallel) kernels::set_threads(config.threads);

  const auto pooled = parallel ? kernels::omp::pool_records(train, dim)
                               : kernels::serial::pool_records(train, dim);
  std::vector<float> val_pooled;
  std::vector<std::uint32_t> val_labels;
  if (!val.empty()) {
    if (common_dim(val) != dim) throw DimensionError("val split D differs from train");
    val_labels = labels_of(val, classes);
    val_pooled = kernels::serial::pool_records(val, dim);
  }

  FitResult result;
  result.head = init_head<float>(dim, classes, config.seed);
  ProbeHead& head = result.head;

  const kernels::PooledView view{pooled, labels, weights, dim};
  const std::array<std::size_t, 2> slots = {head.weights.size(), head.bias.size()};
  Optimizer optimizer(config, slots);
  // Stream distinct from the head initialization.
  Xoshiro256 shuffle_rng(config.seed ^ 0x5DEECE66DULL);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(config.batch_size, order.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0, weight_sum = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const auto idx = std::span<const std::size_t>(order).subspan(
          begin, std::min(batch, order.size() - begin));
      auto g = parallel ? kernels::omp::batch_gradient(head, view, idx)
                        : kernels::serial::batch_gradient(head, view, idx);
      if (!std::isfinite(g.loss_sum)) {
        throw NumericError("non-finite training loss in epoch " +
                           std::to_string(epoch + 1));
      }
      loss_sum += g.loss_sum;
      weight_sum += g.weight_sum;

      const double scale = 1.0 / g.weight_sum;
      for (double& v : g.grad_weights) v *= scale;
      for (double& v : g.grad_bias) v *= scale;
      optimizer.begin_step();
      optimizer.apply(0, std::span<float>(head.weights), g.grad_weights, true);
      optimizer.apply(1, std::span<float>(head.bias), g.grad_bias, false);
    }

    for (float w : head.weights) {
      if (!std::isfinite(w)) throw NumericError("head weights diverged");
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / weight_sum;
    stats.train_top1 = accuracy(head, pooled, labels, parallel);
    if (!val.empty()) stats.val_top1 = accuracy(head, val_pooled, val_labels, parallel);
    result.log.push_back(stats);
  }

  result.budget.trainable_params = param_count(dim, classes);
  result.budget.total_params = result.budget.trainable_params;
  result.budget.epochs_run = config.epochs;
  result.budget.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return result;
}

FitResult fit(std::span<const FeatureRecord> train, const LabelMap& labels,
              const TrainConfig& config, std::span<const FeatureRecord> val) {
  return fit(train, labels.size(), config, val);
}

MetricsReport evaluate(const ProbeHead& head,
                       std::span<const FeatureRecord> records, bool parallel) {
  if (records.empty()) throw EmptyDatasetError("evaluation split is empty");
  if (common_dim(records) != head.dim) {
    throw DimensionError("records have D=" + std::to_string(records.front().dim()) +
                         ", head expects " + std::to_string(head.dim));
  }
  const auto labels = labels_of(records, head.classes);
  const auto pooled = parallel ? kernels::omp::pool_records(records, head.dim)
                               : kernels::serial::pool_records(records, head.dim);
  const auto z = parallel ? kernels::omp::logits(head, pooled)
                          : kernels::serial::logits(head, pooled);
  return compute_metrics(z, head.classes, labels);
}

}  // namespace uas
