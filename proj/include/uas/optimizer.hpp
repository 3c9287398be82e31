// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "uas/train_config.hpp"

namespace uas {

/// SGD (optional heavy-ball momentum) or Adam over a fixed set of parameter
/// slots. Optimizer state is kept in double regardless of parameter type.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, std::span<const std::size_t> slot_sizes)
      : config_(config) {
    first_.reserve(slot_sizes.size());
    for (std::size_t n : slot_sizes) {
      first_.emplace_back(n, 0.0);
      second_.emplace_back(config.optimizer == OptimizerKind::adam ? n : 0, 0.0);
    }
  }

  /// Call once per update, before the per-slot `apply` calls.
  void begin_step() noexcept {
    ++steps_;
    if (config_.optimizer == OptimizerKind::adam) {
      correction1_ = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
      correction2_ = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    }
  }

  /// Updates `params` in place. `decay` enables L2 weight decay for the slot.
  template <std::floating_point Real>
  void apply(std::size_t slot, std::span<Real> params,
             std::span<const double> grad, bool decay) {
    auto& m = first_[slot];
    const double lr = config_.learning_rate;
    const double wd = decay ? config_.weight_decay : 0.0;
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + wd * static_cast<double>(params[i]);
        double step = g;
        if (config_.momentum > 0.0) {
          m[i] = config_.momentum * m[i] + g;
          step = m[i];
        }
        params[i] = static_cast<Real>(static_cast<double>(params[i]) - lr * step);
      }
      return;
    }
    auto& v = second_[slot];
    const double b1 = config_.beta1, b2 = config_.beta2;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + wd * static_cast<double>(params[i]);
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1_;
      const double v_hat = v[i] / correction2_;
      params[i] = static_cast<Real>(static_cast<double>(params[i]) -
                                    lr * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }

  std::size_t steps() const noexcept { return steps_; }

 private:
  TrainConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t steps_ = 0;
  double correction1_ = 1.0;
  double correction2_ = 1.0;
};

}  // namespace uas
