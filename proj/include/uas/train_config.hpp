// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace uas {

enum class OptimizerKind { sgd, adam };
enum class ClassWeighting { none, inverse_frequency };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;     // adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  ClassWeighting class_weighting = ClassWeighting::none;
  /// Serial kernels and a fixed reduction order. When false the OpenMP
  /// kernels are used with `threads` workers (0 = runtime default).
  bool deterministic = true;
  int threads = 0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  /// Sets one field from its textual form; throws ConfigError for unknown
  /// keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// `key = value` lines; blank lines and `#` comments ignored.
TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::filesystem::path& path);
/// Every key, in a form `parse_config` reads back to an equal config.
std::string to_config_text(const TrainConfig& config);

std::string_view to_string(OptimizerKind kind) noexcept;
std::string_view to_string(ClassWeighting weighting) noexcept;

}  // namespace uas
