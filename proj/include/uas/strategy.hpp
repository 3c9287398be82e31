// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale comparison of training strategies on a small tanh backbone:
// full fine-tuning, LoRA adapters, and a linear probe on frozen features.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uas/feature_store.hpp"
#include "uas/probe_head.hpp"
#include "uas/train_config.hpp"
#include "uas/trainer.hpp"

namespace uas {

struct ParamTensor {
  std::vector<double> values;
  bool trainable = true;
};

/// Low-rank additive correction B*A (A: rank x in, B: out x rank).
struct LoraAdapter {
  std::size_t rank = 0;
  ParamTensor a;
  ParamTensor b;
};

struct AffineLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  ParamTensor weights;  // out x in
  ParamTensor bias;     // out
  std::optional<LoraAdapter> adapter;
};

/// Stack of affine+tanh layers. With an adapter present the layer computes
/// tanh((W + B*A) x + b).
class ToyBackbone {
 public:
  ToyBackbone() = default;

  /// dims = {D0, H1, ..., D}; weights ~ U(+-1/sqrt(in)), biases 0.
  static ToyBackbone make(std::span<const std::size_t> dims, std::uint64_t seed);

  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::vector<AffineLayer>& layers() noexcept { return layers_; }
  const std::vector<AffineLayer>& layers() const noexcept { return layers_; }

  std::vector<double> forward(std::span<const double> x) const;

  /// Parameter counts from a walk over every tensor.
  std::uint64_t param_count() const noexcept;
  std::uint64_t trainable_count() const noexcept;

  /// FNV-1a over the bytes of every frozen tensor.
  std::uint64_t frozen_checksum() const noexcept;

 private:
  std::vector<AffineLayer> layers_;
};

enum class StrategyKind { full_finetune, lora, linear_probe };

struct StrategySpec {
  StrategyKind kind = StrategyKind::linear_probe;
  std::size_t rank = 0;  // lora only

  static StrategySpec full() { return {StrategyKind::full_finetune, 0}; }
  static StrategySpec lora(std::size_t r) { return {StrategyKind::lora, r}; }
  static StrategySpec probe() { return {StrategyKind::linear_probe, 0}; }

  /// "full", "lora:R" or "probe". Throws ConfigError otherwise and RankError
  /// for lora:0.
  static StrategySpec parse(std::string_view text);
  std::string display_name() const;
  std::string key() const;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

struct TrainablePartition {
  std::uint64_t backbone = 0;  // trainable base weights and biases
  std::uint64_t adapters = 0;
  std::uint64_t head = 0;
  std::uint64_t total = 0;     // every parameter, trainable or not

  std::uint64_t trainable() const noexcept { return backbone + adapters + head; }
};

/// Sets trainable flags (and attaches zero-B adapters for LoRA, A drawn from
/// `seed`). Throws RankError when a LoRA rank is 0 or exceeds min(in, out)
/// of any layer.
TrainablePartition apply_strategy(ToyBackbone& backbone, const ProbeHead64& head,
                                  const StrategySpec& spec,
                                  std::uint64_t seed = 0);

/// Walks the tensors and counts what is unfrozen. `head_trainable = false`
/// models a fully frozen model.
BudgetReport count_budget(const ToyBackbone& backbone, const ProbeHead64& head,
                          bool head_trainable = true);
/// A bare head on stored features: trainable = total = K*D + K.
BudgetReport count_budget(std::size_t dim, std::size_t classes);

/// Labelled N x D samples with a split per sample.
struct LabeledDataset {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;
  std::vector<Split> splits;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * dim, dim);
  }
  /// One single-token record per sample, ids "s000000", ...
  std::vector<FeatureRecord> to_records() const;
};

/// Gaussian class clusters (unit variance). Class means sit on orthogonal
/// axes (or seeded random directions when K > D0) scaled so that every pair
/// of means is `margin` apart. Every fifth sample of a class goes to test.
LabeledDataset make_synthetic_task(std::size_t classes, std::size_t dim,
                                   std::size_t n_per_class, double margin,
                                   std::uint64_t seed);

/// Pools each record into one row.
LabeledDataset dataset_from_records(std::span<const FeatureRecord> records,
                                    std::size_t classes);

/// Gradient of the mean (weighted) cross-entropy over `indices`.
struct LayerGradient {
  std::vector<double> weights, bias, a, b;
};

struct ModelGradient {
  double loss = 0.0;
  std::vector<LayerGradient> layers;
  std::vector<double> head_weights, head_bias;
};

/// Frozen tensors get gradients too when `include_frozen` is set (used for
/// checking); otherwise their gradient vectors stay empty.
ModelGradient model_gradient(const ToyBackbone& backbone, const ProbeHead64& head,
                             const LabeledDataset& data,
                             std::span<const std::size_t> indices,
                             bool include_frozen = false);

/// Trains the trainable partition of backbone+head on `indices`. A fully
/// frozen backbone is run once per sample and only the head is optimized.
void fit_strategy(ToyBackbone& backbone, ProbeHead64& head,
                  const LabeledDataset& data, std::span<const std::size_t> indices,
                  const TrainConfig& config);

struct ComparisonOptions {
  /// Hidden and output widths after D0; the default gives 32 -> 64 -> 64 -> 32
  /// for 32-dimensional inputs.
  std::vector<std::size_t> hidden_dims = {64, 64, 32};
  std::uint64_t backbone_seed = 7;
};

struct ComparisonRow {
  StrategySpec spec;
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t top5_k = 5;
  double mca = 0.0;
  double train_top1 = 0.0;
  double wall_time_seconds = 0.0;
  std::uint64_t trainable_params = 0;
  std::uint64_t total_params = 0;
};

/// Trains one fresh backbone+head per spec (same seeds for every row) on the
/// train split and scores the test split.
std::vector<ComparisonRow> run_comparison(const LabeledDataset& data,
                                          std::span<const StrategySpec> specs,
                                          const TrainConfig& config,
                                          const ComparisonOptions& options = {});

std::string comparison_csv(std::span<const ComparisonRow> rows);
/// Aligned columns: Strategy, Top-1, Top-5, MCA, Training Time, #Params (K).
std::string comparison_table(std::span<const ComparisonRow> rows);

}  // namespace uas
