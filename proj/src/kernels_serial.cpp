// SPDX-License-Identifier: Apache-2.0
#include "uas/kernels.hpp"

namespace uas::kernels::serial {

std::vector<float> pool_records(std::span<const FeatureRecord> records,
                                std::size_t dim) {
  std::vector<float> out(records.size() * dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto pooled = pool(records[i].tokens, dim);
    std::copy(pooled.begin(), pooled.end(), out.begin() + i * dim);
  }
  return out;
}

std::vector<double> logits(const ProbeHead& head,
                           std::span<const float> features) {
  const std::size_t n = features.size() / head.dim;
  std::vector<double> out(n * head.classes);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = forward(head, features.subspan(i * head.dim, head.dim));
    std::copy(z.begin(), z.end(), out.begin() + i * head.classes);
  }
  return out;
}

BatchGradient batch_gradient(const ProbeHead& head, const PooledView& data,
                             std::span<const std::size_t> indices) {
  BatchGradient g;
  g.grad_weights.assign(head.weights.size(), 0.0);
  g.grad_bias.assign(head.classes, 0.0);
  for (std::size_t idx : indices) {
    const auto x = data.row(idx);
    const auto z = forward(head, x);
    const auto ce = cross_entropy(z, data.labels[idx]);
    const double w = data.sample_weights[idx];
    g.loss_sum += w * ce.value;
    g.weight_sum += w;
    g.correct += argmax(z) == data.labels[idx];
    for (std::size_t k = 0; k < head.classes; ++k) {
      const double gk = w * ce.grad_logits[k];
      g.grad_bias[k] += gk;
      double* gw = g.grad_weights.data() + k * head.dim;
      for (std::size_t d = 0; d < head.dim; ++d) gw[d] += gk * x[d];
    }
  }
  return g;
}

std::vector<double> covariance(std::span<const double> samples, std::size_t dim,
                               std::vector<double>& mean) {
  const std::size_t n = samples.size() / dim;
  mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += samples[i * dim + d];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += (samples[i * dim + a] - mean[a]) * (samples[i * dim + b] - mean[b]);
      }
      acc /= static_cast<double>(n - 1);
      cov[a * dim + b] = acc;
      cov[b * dim + a] = acc;
    }
  }
  return cov;
}

}  // namespace uas::kernels::serial
