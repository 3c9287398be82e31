// SPDX-License-Identifier: Apache-2.0
#include "uas/feature_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "uas/error.hpp"

namespace uas {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <class T>
void put_le(std::vector<char>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits = static_cast<U>(bits >> 8);
  }
}

template <class T>
T get_le(const unsigned char* bytes) {
  std::make_unsigned_t<T> bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    bits = static_cast<std::make_unsigned_t<T>>((bits << 8) | bytes[i]);
  }
  return static_cast<T>(bits);
}

void put_float(std::vector<char>& out, float value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value));
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void check_record(const FeatureRecord& r, std::uint32_t dim) {
  if (r.token_count == 0 || r.tokens.empty()) {
    throw DimensionError("record '" + r.clip_id + "' has no tokens");
  }
  if (r.tokens.size() != static_cast<std::size_t>(r.token_count) * dim) {
    throw DimensionError("record '" + r.clip_id + "' has " +
                         std::to_string(r.tokens.size()) + " values for T=" +
                         std::to_string(r.token_count) + ", D=" +
                         std::to_string(dim));
  }
  if (r.clip_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValueError("clip_id longer than 65535 bytes");
  }
  if (static_cast<std::uint8_t>(r.split) > 2) {
    throw ValueError("record '" + r.clip_id + "' has an invalid split");
  }
  for (float v : r.tokens) {
    if (!std::isfinite(v)) {
      throw ValueError("record '" + r.clip_id + "' contains a non-finite value");
    }
  }
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw ValueError("unknown split '" + std::string(text) + "'");
}

FeatureRecord make_record(std::string clip_id, std::uint32_t label,
                          Split split, std::size_t dim,
                          std::vector<float> tokens) {
  if (dim == 0 || tokens.empty() || tokens.size() % dim != 0) {
    throw DimensionError("token buffer of " + std::to_string(tokens.size()) +
                         " values is not a whole number of D=" +
                         std::to_string(dim) + " rows");
  }
  FeatureRecord r;
  r.clip_id = std::move(clip_id);
  r.label_index = label;
  r.split = split;
  r.token_count = static_cast<std::uint32_t>(tokens.size() / dim);
  r.tokens = std::move(tokens);
  return r;
}

StoreHeader write_store(std::span<const FeatureRecord> records,
                        std::uint32_t dim, const std::filesystem::path& path) {
  if (dim == 0) throw DimensionError("feature dimension must be >= 1");

  std::unordered_set<std::string_view> seen;
  seen.reserve(records.size());
  for (const auto& r : records) {
    check_record(r, dim);
    if (!seen.insert(r.clip_id).second) {
      throw DuplicateIdError("duplicate clip_id '" + r.clip_id + "'");
    }
  }

  StoreHeader header;
  header.feature_dim = dim;
  header.record_count = records.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

  std::vector<char> buf;
  buf.reserve(StoreHeader::kEncodedSize);
  buf.insert(buf.end(), StoreHeader::kMagic.begin(), StoreHeader::kMagic.end());
  put_le(buf, header.version);
  put_le(buf, header.dtype_code);
  put_le(buf, header.feature_dim);
  put_le(buf, header.record_count);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  for (const auto& r : records) {
    buf.clear();
    put_le(buf, static_cast<std::uint16_t>(r.clip_id.size()));
    buf.insert(buf.end(), r.clip_id.begin(), r.clip_id.end());
    put_le(buf, r.label_index);
    put_le(buf, static_cast<std::uint8_t>(r.split));
    put_le(buf, r.token_count);
    for (float v : r.tokens) put_float(buf, v);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
  return header;
}

StoreReader::StoreReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open '" + path.string() + "'");

  std::array<unsigned char, StoreHeader::kEncodedSize> raw{};
  in_.read(reinterpret_cast<char*>(raw.data()), raw.size());
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got >= 4 && std::memcmp(raw.data(), StoreHeader::kMagic.data(), 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a UASF store (bad magic)");
  }
  if (got < raw.size()) {
    if (got < 4) throw FormatError("'" + path.string() + "' is too short");
    throw CorruptionError("'" + path.string() + "' has a truncated header");
  }
  header_.version = get_le<std::uint32_t>(raw.data() + 4);
  header_.dtype_code = raw[8];
  header_.feature_dim = get_le<std::uint32_t>(raw.data() + 9);
  header_.record_count = get_le<std::uint64_t>(raw.data() + 13);

  if (header_.version != StoreHeader::kVersion) {
    throw VersionError("unsupported UASF version " +
                       std::to_string(header_.version));
  }
  if (header_.dtype_code != StoreHeader::kFloat32) {
    throw FormatError("unsupported dtype code " +
                      std::to_string(header_.dtype_code));
  }
  if (header_.feature_dim == 0) throw FormatError("header declares D = 0");
}

void StoreReader::read_exact(void* dst, std::size_t n, const char* what) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw CorruptionError("'" + path_.string() + "' truncated in record " +
                          std::to_string(consumed_) + " (" + what + ")");
  }
}

std::optional<FeatureRecord> StoreReader::next() {
  if (consumed_ == header_.record_count) {
    if (in_.peek() != std::ifstream::traits_type::eof()) {
      throw CorruptionError("'" + path_.string() +
                            "' has trailing bytes after the last record");
    }
    return std::nullopt;
  }

  unsigned char fixed[4];
  FeatureRecord r;

  read_exact(fixed, 2, "id length");
  r.clip_id.resize(get_le<std::uint16_t>(fixed));
  if (!r.clip_id.empty()) read_exact(r.clip_id.data(), r.clip_id.size(), "id");

  read_exact(fixed, 4, "label");
  r.label_index = get_le<std::uint32_t>(fixed);

  read_exact(fixed, 1, "split");
  if (fixed[0] > 2) {
    throw CorruptionError("record " + std::to_string(consumed_) +
                          " has split code " + std::to_string(fixed[0]));
  }
  r.split = static_cast<Split>(fixed[0]);

  read_exact(fixed, 4, "token count");
  r.token_count = get_le<std::uint32_t>(fixed);
  if (r.token_count == 0) {
    throw CorruptionError("record " + std::to_string(consumed_) +
                          " declares zero tokens");
  }

  const std::size_t n =
      static_cast<std::size_t>(r.token_count) * header_.feature_dim;
  std::vector<unsigned char> payload(n * 4);
  read_exact(payload.data(), payload.size(), "tokens");
  r.tokens.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.tokens[i] =
        std::bit_cast<float>(get_le<std::uint32_t>(payload.data() + 4 * i));
  }
  ++consumed_;
  return r;
}

FeatureStore read_store(const std::filesystem::path& path) {
  StoreReader reader(path);
  FeatureStore store;
  store.header = reader.header();
  store.records.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(store.header.record_count, 1u << 20)));
  for (auto& r : reader) store.records.push_back(r);
  return store;
}

std::vector<FeatureRecord> filter_split(std::span<const FeatureRecord> records,
                                        Split split) {
  std::vector<FeatureRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::uint64_t checksum(std::span<const FeatureRecord> records) noexcept {
  std::uint64_t h = kFnvOffset;
  for (const auto& r : records) {
    fnv_mix(h, r.clip_id.data(), r.clip_id.size());
    fnv_mix(h, &r.label_index, sizeof r.label_index);
    fnv_mix(h, &r.split, sizeof r.split);
    fnv_mix(h, &r.token_count, sizeof r.token_count);
    fnv_mix(h, r.tokens.data(), r.tokens.size() * sizeof(float));
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::uint64_t h = kFnvOffset;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    fnv_mix(h, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h;
}

}  // namespace uas
