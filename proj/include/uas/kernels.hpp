// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops shared by training, evaluation and subspace
// analysis. Every kernel has a serial reference in `kernels::serial` and an
// OpenMP version in `kernels::omp` with the same signature.
//
// Row-wise kernels (pooling, logits, covariance) produce bit-identical
// results in both variants because each output element is accumulated in
// the same order. The OpenMP batch gradient sums fixed-size chunks and then
// reduces the chunks in index order, so its result does not depend on the
// thread count but may differ from the serial reference in the last bits.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uas/feature_store.hpp"
#include "uas/probe_head.hpp"

namespace uas::kernels {

/// Samples per chunk in the OpenMP gradient reduction.
inline constexpr std::size_t kGradientChunk = 32;

struct BatchGradient {
  double loss_sum = 0.0;    // sum of w_i * loss_i
  double weight_sum = 0.0;  // sum of w_i
  std::size_t correct = 0;  // argmax hits
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

/// Pooled samples laid out N x D, with labels and per-sample weights.
struct PooledView {
  std::span<const float> features;
  std::span<const std::uint32_t> labels;
  std::span<const double> sample_weights;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const noexcept {
    return features.subspan(i * dim, dim);
  }
};

namespace serial {

/// Average-pools every record into an N x D matrix.
std::vector<float> pool_records(std::span<const FeatureRecord> records,
                                std::size_t dim);

/// N x K logits for N x D features.
std::vector<double> logits(const ProbeHead& head, std::span<const float> features);

/// Weighted loss/gradient sums over the samples named by `indices`.
BatchGradient batch_gradient(const ProbeHead& head, const PooledView& data,
                             std::span<const std::size_t> indices);

/// Unbiased (N-1) covariance of an N x D matrix; `mean` receives the D means.
std::vector<double> covariance(std::span<const double> samples, std::size_t dim,
                               std::vector<double>& mean);

}  // namespace serial

namespace omp {

std::vector<float> pool_records(std::span<const FeatureRecord> records,
                                std::size_t dim);
std::vector<double> logits(const ProbeHead& head, std::span<const float> features);
BatchGradient batch_gradient(const ProbeHead& head, const PooledView& data,
                             std::span<const std::size_t> indices);
std::vector<double> covariance(std::span<const double> samples, std::size_t dim,
                               std::vector<double>& mean);

}  // namespace omp

/// Threads the OpenMP runtime will use (1 when built without OpenMP).
int max_threads() noexcept;
void set_threads(int n) noexcept;

}  // namespace uas::kernels
