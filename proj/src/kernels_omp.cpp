// SPDX-License-Identifier: Apache-2.0
#include "uas/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uas::kernels {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) noexcept {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace omp {

std::vector<float> pool_records(std::span<const FeatureRecord> records,
                                std::size_t dim) {
  std::vector<float> out(records.size() * dim);
  const auto n = static_cast<std::ptrdiff_t>(records.size());
  // Exceptions must not cross the parallel region; remember the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto pooled = pool(records[static_cast<std::size_t>(i)].tokens, dim);
      std::copy(pooled.begin(), pooled.end(),
                out.begin() + static_cast<std::ptrdiff_t>(i * dim));
    } catch (...) {
#pragma omp critical(uas_pool_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> logits(const ProbeHead& head,
                           std::span<const float> features) {
  const std::size_t rows = features.size() / head.dim;
  const std::size_t k_count = head.classes;
  std::vector<double> out(rows * k_count);
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const float* x = features.data() + static_cast<std::size_t>(i) * head.dim;
    double* z = out.data() + static_cast<std::size_t>(i) * k_count;
    for (std::size_t k = 0; k < k_count; ++k) {
      const float* w = head.weights.data() + k * head.dim;
      double acc = static_cast<double>(head.bias[k]);
      for (std::size_t d = 0; d < head.dim; ++d) {
        acc += static_cast<double>(w[d]) * static_cast<double>(x[d]);
      }
      z[k] = acc;
    }
  }
  return out;
}

BatchGradient batch_gradient(const ProbeHead& head, const PooledView& data,
                             std::span<const std::size_t> indices) {
  for (std::size_t idx : indices) {
    if (data.labels[idx] >= head.classes) {
      throw LabelError("label " + std::to_string(data.labels[idx]) +
                       " out of range for K=" + std::to_string(head.classes));
    }
  }
  const std::size_t chunks =
      (indices.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<BatchGradient> partial(chunks);
  const auto n = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kGradientChunk;
    const std::size_t len = std::min(kGradientChunk, indices.size() - begin);
    partial[static_cast<std::size_t>(c)] =
        serial::batch_gradient(head, data, indices.subspan(begin, len));
  }

  BatchGradient total;
  total.grad_weights.assign(head.weights.size(), 0.0);
  total.grad_bias.assign(head.classes, 0.0);
  for (const auto& p : partial) {
    total.loss_sum += p.loss_sum;
    total.weight_sum += p.weight_sum;
    total.correct += p.correct;
    for (std::size_t j = 0; j < p.grad_weights.size(); ++j) {
      total.grad_weights[j] += p.grad_weights[j];
    }
    for (std::size_t k = 0; k < p.grad_bias.size(); ++k) {
      total.grad_bias[k] += p.grad_bias[k];
    }
  }
  return total;
}

std::vector<double> covariance(std::span<const double> samples, std::size_t dim,
                               std::vector<double>& mean) {
  const std::size_t rows = samples.size() / dim;
  mean.assign(dim, 0.0);
  const auto nd = static_cast<std::ptrdiff_t>(dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < nd; ++d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      acc += samples[i * dim + static_cast<std::size_t>(d)];
    }
    mean[static_cast<std::size_t>(d)] = acc / static_cast<double>(rows);
  }

  std::vector<double> cov(dim * dim, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t sa = 0; sa < nd; ++sa) {
    const auto a = static_cast<std::size_t>(sa);
    for (std::size_t b = a; b < dim; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        acc += (samples[i * dim + a] - mean[a]) * (samples[i * dim + b] - mean[b]);
      }
      acc /= static_cast<double>(rows - 1);
      cov[a * dim + b] = acc;
      cov[b * dim + a] = acc;
    }
  }
  return cov;
}

}  // namespace omp
}  // namespace uas::kernels
