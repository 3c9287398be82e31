// SPDX-License-Identifier: Apache-2.0
#include "uas/probe_head.hpp"

#include <limits>

namespace uas {

std::vector<float> pool(std::span<const float> tokens, std::size_t dim) {
  if (tokens.empty()) throw EmptyInputError("pool: no tokens");
  if (dim == 0 || tokens.size() % dim != 0) {
    throw DimensionError("pool: " + std::to_string(tokens.size()) +
                         " values are not a whole number of D=" +
                         std::to_string(dim) + " rows");
  }
  const std::size_t count = tokens.size() / dim;
  std::vector<double> acc(dim, 0.0);
  for (std::size_t t = 0; t < count; ++t) {
    const float* row = tokens.data() + t * dim;
    for (std::size_t d = 0; d < dim; ++d) acc[d] += row[d];
  }
  std::vector<float> out(dim);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t d = 0; d < dim; ++d) {
    out[d] = static_cast<float>(acc[d] * inv);
  }
  return out;
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double log_sum_exp(std::span<const double> logits) noexcept {
  if (logits.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  return peak + std::log(sum);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

LogitLoss cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw LabelError("label " + std::to_string(label) + " out of range for K=" +
                     std::to_string(logits.size()));
  }
  LogitLoss out;
  // value = (m - z_y) + log(sum_j exp(z_j - m)). Splitting off the label's
  // own term lets the confident case use log1p and keep full precision.
  const double peak = *std::max_element(logits.begin(), logits.end());
  double others = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != label) others += std::exp(logits[j] - peak);
  }
  const double gap = peak - logits[label];
  out.value = gap == 0.0 ? std::log1p(others)
                         : gap + std::log(std::exp(-gap) + others);
  out.grad_logits = softmax(logits);
  out.grad_logits[label] -= 1.0;
  return out;
}

}  // namespace uas
