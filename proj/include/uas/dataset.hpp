// SPDX-License-Identifier: Apache-2.0
//
// Label maps, manifests, and store validation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uas/feature_store.hpp"

namespace uas {

/// Ordered class names; position is the label index.
class LabelMap {
 public:
  LabelMap() = default;
  /// Throws LabelError for fewer than two or duplicate names.
  explicit LabelMap(std::vector<std::string> class_names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::uint32_t> index_of(std::string_view name) const;

  /// FNV-1a over the names in order; stored in checkpoints.
  std::uint64_t hash() const noexcept;

  static LabelMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> names_;
};

struct ManifestEntry {
  std::string clip_id;
  std::string source_path;
  std::string class_name;
  Split split = Split::train;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Newline-delimited JSON objects. Throws FormatError on malformed lines.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(std::span<const ManifestEntry> entries,
                   const std::filesystem::path& path);

enum class ViolationKind {
  label_out_of_range,
  non_finite_value,
  dimension_mismatch,
  empty_tokens,
  duplicate_id,
  unknown_class,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::string clip_id;
  std::string detail;
};

struct ValidationReport {
  std::vector<std::string> class_names;
  /// counts[class][split]; records with an out-of-range label are tallied in
  /// `out_of_range_counts` instead.
  std::vector<std::array<std::uint64_t, 3>> counts;
  std::array<std::uint64_t, 3> out_of_range_counts{};
  std::uint64_t record_count = 0;
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::uint64_t total_counted() const noexcept;
};

/// Never throws on bad data; every problem lands in `violations`.
ValidationReport validate_store(const FeatureStore& store,
                                const LabelMap& labels);

/// Checks manifest ids for uniqueness and classes for membership in `labels`.
std::vector<Violation> validate_manifest(std::span<const ManifestEntry> entries,
                                         const LabelMap& labels);

std::string format_report(const ValidationReport& report);

}  // namespace uas
