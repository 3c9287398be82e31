// SPDX-License-Identifier: Apache-2.0
//
// UASF: binary container for frozen per-clip feature tokens.
//
// Layout (little-endian, no padding):
//
//   magic "UASF" | version u32 | dtype u8 | D u32 | record_count u64
//   record_count x { id_len u16 | id bytes | label u32 | split u8 | T u32 |
//                    T*D float32, row-major }
//
// Stores are written once and never modified afterwards.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uas {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::val,
                                                    Split::test};

std::string_view to_string(Split split) noexcept;
/// Throws ValueError for anything other than "train", "val" or "test".
Split parse_split(std::string_view text);

/// One clip's frozen embedding: T token vectors of dimension D, row-major.
struct FeatureRecord {
  std::string clip_id;
  std::uint32_t label_index = 0;
  Split split = Split::train;
  std::uint32_t token_count = 0;
  std::vector<float> tokens;

  std::size_t dim() const noexcept {
    return token_count == 0 ? 0 : tokens.size() / token_count;
  }
  std::span<const float> token(std::size_t t) const noexcept {
    const std::size_t d = dim();
    return std::span<const float>(tokens).subspan(t * d, d);
  }

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// Builds a record and checks that `tokens.size()` is a multiple of `dim`.
FeatureRecord make_record(std::string clip_id, std::uint32_t label,
                          Split split, std::size_t dim,
                          std::vector<float> tokens);

struct StoreHeader {
  static constexpr std::array<char, 4> kMagic = {'U', 'A', 'S', 'F'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint8_t kFloat32 = 0;
  static constexpr std::size_t kEncodedSize = 4 + 4 + 1 + 4 + 8;

  std::uint32_t version = kVersion;
  std::uint8_t dtype_code = kFloat32;
  std::uint32_t feature_dim = 0;
  std::uint64_t record_count = 0;

  friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

/// Writes `records` to `path`. All records are validated before the file is
/// touched, so a failed call never leaves a partial store behind.
StoreHeader write_store(std::span<const FeatureRecord> records,
                        std::uint32_t dim, const std::filesystem::path& path);

/// Sequential reader. Each instance owns its own file handle, so any number
/// of readers may be open on the same store.
class StoreReader {
 public:
  explicit StoreReader(const std::filesystem::path& path);

  const StoreHeader& header() const noexcept { return header_; }

  /// Next record, or nullopt once `record_count` records have been read.
  /// Throws CorruptionError on truncation; a partial record is never returned.
  std::optional<FeatureRecord> next();

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = FeatureRecord;
    using difference_type = std::ptrdiff_t;
    using pointer = const FeatureRecord*;
    using reference = const FeatureRecord&;

    iterator() = default;
    explicit iterator(StoreReader* reader) : reader_(reader) { advance(); }

    reference operator*() const { return *current_; }
    pointer operator->() const { return &*current_; }
    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }
    friend bool operator==(const iterator& it, std::default_sentinel_t) {
      return !it.current_.has_value();
    }

   private:
    void advance() { current_ = reader_->next(); }

    StoreReader* reader_ = nullptr;
    std::optional<FeatureRecord> current_;
  };

  iterator begin() { return iterator(this); }
  std::default_sentinel_t end() const noexcept { return {}; }

 private:
  void read_exact(void* dst, std::size_t n, const char* what);

  std::filesystem::path path_;
  std::ifstream in_;
  StoreHeader header_;
  std::uint64_t consumed_ = 0;
};

/// A fully materialized store.
struct FeatureStore {
  StoreHeader header;
  std::vector<FeatureRecord> records;
};

FeatureStore read_store(const std::filesystem::path& path);

/// Records whose split matches, in store order.
std::vector<FeatureRecord> filter_split(std::span<const FeatureRecord> records,
                                        Split split);

/// FNV-1a over every record's identity and token bytes.
std::uint64_t checksum(std::span<const FeatureRecord> records) noexcept;

std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace uas
