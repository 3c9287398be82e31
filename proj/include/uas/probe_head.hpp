// SPDX-License-Identifier: Apache-2.0
//
// Linear probe head: average pooling over tokens followed by one fully
// connected layer, with softmax cross-entropy and its analytic gradient.
//
// Parameters are stored as `Real` (float32 for production heads, float64
// for gradient checking); every dot product, loss and gradient is
// accumulated in double.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "uas/error.hpp"
#include "uas/rng.hpp"

namespace uas {

template <std::floating_point Real>
struct BasicProbeHead {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<Real> weights;  // classes x dim, row-major
  std::vector<Real> bias;     // classes

  BasicProbeHead() = default;
  BasicProbeHead(std::size_t d, std::size_t k)
      : dim(d), classes(k), weights(d * k, Real{0}), bias(k, Real{0}) {}

  std::span<const Real> row(std::size_t k) const noexcept {
    return std::span<const Real>(weights).subspan(k * dim, dim);
  }
  std::span<Real> row(std::size_t k) noexcept {
    return std::span<Real>(weights).subspan(k * dim, dim);
  }

  friend bool operator==(const BasicProbeHead&, const BasicProbeHead&) = default;
};

using ProbeHead = BasicProbeHead<float>;
using ProbeHead64 = BasicProbeHead<double>;

/// K*D weights plus K biases.
constexpr std::uint64_t param_count(std::uint64_t dim,
                                    std::uint64_t classes) noexcept {
  return classes * dim + classes;
}

/// W ~ U(-1/sqrt(D), 1/sqrt(D)) drawn row-major from a seeded xoshiro256**,
/// b = 0.
template <std::floating_point Real = float>
BasicProbeHead<Real> init_head(std::size_t dim, std::size_t classes,
                               std::uint64_t seed) {
  if (dim == 0 || classes == 0) {
    throw DimensionError("head needs D >= 1 and K >= 1");
  }
  BasicProbeHead<Real> head(dim, classes);
  Xoshiro256 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& w : head.weights) w = static_cast<Real>(rng.uniform(-bound, bound));
  return head;
}

/// Mean of the T token rows of a T x D buffer, accumulated in double.
std::vector<float> pool(std::span<const float> tokens, std::size_t dim);

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

/// logits = W * pooled + b.
template <std::floating_point Real>
std::vector<double> forward(const BasicProbeHead<Real>& head,
                            std::span<const Real> pooled) {
  if (pooled.size() != head.dim) {
    throw DimensionError("forward: input has " + std::to_string(pooled.size()) +
                         " features, head expects " + std::to_string(head.dim));
  }
  std::vector<double> logits(head.classes);
  for (std::size_t k = 0; k < head.classes; ++k) {
    const auto w = head.row(k);
    double acc = static_cast<double>(head.bias[k]);
    for (std::size_t d = 0; d < head.dim; ++d) {
      acc += static_cast<double>(w[d]) * static_cast<double>(pooled[d]);
    }
    logits[k] = acc;
  }
  return logits;
}

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// log(sum(exp(logits))) without overflow.
double log_sum_exp(std::span<const double> logits) noexcept;

struct LogitLoss {
  double value = 0.0;
  std::vector<double> grad_logits;  // softmax - one_hot(label)
};

/// -log softmax(logits)[label]. Throws LabelError when label >= K.
LogitLoss cross_entropy(std::span<const double> logits, std::size_t label);

struct LossValue {
  double value = 0.0;
  std::vector<double> grad_weights;  // classes x dim
  std::vector<double> grad_bias;     // classes
};

template <std::floating_point Real>
LossValue loss_and_gradient(const BasicProbeHead<Real>& head,
                            std::span<const Real> pooled, std::size_t label) {
  const auto logits = forward(head, pooled);
  auto ce = cross_entropy(logits, label);
  LossValue out;
  out.value = ce.value;
  out.grad_weights.resize(head.classes * head.dim);
  for (std::size_t k = 0; k < head.classes; ++k) {
    const double g = ce.grad_logits[k];
    for (std::size_t d = 0; d < head.dim; ++d) {
      out.grad_weights[k * head.dim + d] = g * static_cast<double>(pooled[d]);
    }
  }
  out.grad_bias = std::move(ce.grad_logits);
  return out;
}

}  // namespace uas
