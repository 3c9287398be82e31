// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "test_support.hpp"
#include "uas/error.hpp"
#include "uas/feature_store.hpp"

using namespace uas;
using uas::test::TempDir;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("empty store round-trips") {
  TempDir dir;
  const auto header = write_store({}, 8, dir / "empty.uasf");
  CHECK(header.record_count == 0);
  CHECK(header.feature_dim == 8);
  const auto store = read_store(dir / "empty.uasf");
  CHECK(store.header == header);
  CHECK(store.records.empty());
  CHECK(std::filesystem::file_size(dir / "empty.uasf") == StoreHeader::kEncodedSize);
}

TEST_CASE("byte layout is exact") {
  TempDir dir;
  const auto rec = make_record("ab", 5, Split::test, 2, {1.0f, -2.0f});
  write_store(std::span(&rec, 1), 2, dir / "one.uasf");

  // Hand-assembled little-endian image.
  const std::vector<unsigned char> expected = {
      'U', 'A', 'S', 'F',                      // magic
      1, 0, 0, 0,                              // version
      0,                                       // dtype float32
      2, 0, 0, 0,                              // D
      1, 0, 0, 0, 0, 0, 0, 0,                  // record_count
      2, 0, 'a', 'b',                          // id
      5, 0, 0, 0,                              // label
      2,                                       // split = test
      1, 0, 0, 0,                              // T
      0x00, 0x00, 0x80, 0x3f,                  // 1.0f
      0x00, 0x00, 0x00, 0xc0,                  // -2.0f
  };
  CHECK(file_bytes(dir / "one.uasf") == expected);
}

TEST_CASE("round trip is bit exact") {
  TempDir dir;
  Xoshiro256 rng(11);
  auto records = test::random_records(rng, 3, 8, 5);
  // Values that a text round trip would mangle.
  records[0].tokens[0] = std::numeric_limits<float>::denorm_min();
  records[1].tokens[1] = -0.0f;
  records[2].tokens[2] = std::numeric_limits<float>::max();
  write_store(records, 8, dir / "s.uasf");
  const auto store = read_store(dir / "s.uasf");
  REQUIRE(store.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(store.records[i] == records[i]);
    CHECK(std::memcmp(store.records[i].tokens.data(), records[i].tokens.data(),
                      records[i].tokens.size() * sizeof(float)) == 0);
  }
  CHECK(std::signbit(store.records[1].tokens[1]));
}

TEST_CASE("property: random stores round trip and keep finite values finite") {
  TempDir dir;
  Xoshiro256 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t dim = 1 + rng.below(16);
    const auto records = test::random_records(rng, rng.below(20), dim, 7, 6);
    const auto path = dir / ("p" + std::to_string(trial) + ".uasf");
    write_store(records, static_cast<std::uint32_t>(dim), path);
    const auto store = read_store(path);
    REQUIRE(store.records == records);
    CHECK(store.header.record_count == records.size());
    for (const auto& r : store.records) {
      for (float v : r.tokens) REQUIRE(std::isfinite(v));
    }
    CHECK(checksum(store.records) == checksum(records));
  }
}

TEST_CASE("write_store rejects bad records before touching disk") {
  TempDir dir;
  const auto path = dir / "bad.uasf";

  SUBCASE("dimension mismatch") {
    const auto r = make_record("x", 0, Split::train, 7, std::vector<float>(7, 0.5f));
    CHECK_THROWS_AS(write_store(std::span(&r, 1), 8, path), DimensionError);
  }
  SUBCASE("non-finite value") {
    auto r = make_record("x", 0, Split::train, 2, {1.0f, 2.0f});
    r.tokens[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(write_store(std::span(&r, 1), 2, path), ValueError);
    r.tokens[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(write_store(std::span(&r, 1), 2, path), ValueError);
  }
  SUBCASE("duplicate clip id") {
    const std::vector<FeatureRecord> rs = {
        make_record("same", 0, Split::train, 1, {1.0f}),
        make_record("same", 1, Split::test, 1, {2.0f})};
    CHECK_THROWS_AS(write_store(rs, 1, path), DuplicateIdError);
  }
  SUBCASE("zero dimension") {
    CHECK_THROWS_AS(write_store({}, 0, path), DimensionError);
  }
  CHECK_FALSE(std::filesystem::exists(path));
}

TEST_CASE("make_record checks the token buffer shape") {
  CHECK_THROWS_AS(make_record("x", 0, Split::train, 3, {1, 2, 3, 4}), DimensionError);
  CHECK_THROWS_AS(make_record("x", 0, Split::train, 3, {}), DimensionError);
  const auto r = make_record("x", 0, Split::train, 2, {1, 2, 3, 4, 5, 6});
  CHECK(r.token_count == 3);
  CHECK(r.dim() == 2);
  CHECK(r.token(1)[0] == 3.0f);
}

TEST_CASE("reader error taxonomy") {
  TempDir dir;
  Xoshiro256 rng(5);
  const auto records = test::random_records(rng, 4, 3, 2);
  write_store(records, 3, dir / "good.uasf");
  const auto good = file_bytes(dir / "good.uasf");

  SUBCASE("wrong magic") {
    auto bytes = good;
    bytes[0] = bytes[1] = bytes[2] = bytes[3] = 'X';
    write_bytes(dir / "x.uasf", bytes);
    CHECK_THROWS_AS(read_store(dir / "x.uasf"), FormatError);
  }
  SUBCASE("unknown version") {
    auto bytes = good;
    bytes[4] = 2;
    write_bytes(dir / "v.uasf", bytes);
    CHECK_THROWS_AS(read_store(dir / "v.uasf"), VersionError);
  }
  SUBCASE("truncated mid-record yields no partial record") {
    auto bytes = good;
    bytes.resize(bytes.size() - 5);
    write_bytes(dir / "t.uasf", bytes);
    StoreReader reader(dir / "t.uasf");
    std::vector<FeatureRecord> got;
    CHECK_THROWS_AS(
        {
          while (auto r = reader.next()) got.push_back(*r);
        },
        CorruptionError);
    CHECK(got.size() == 3);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == records[i]);
  }
  SUBCASE("truncated header") {
    auto bytes = good;
    bytes.resize(10);
    write_bytes(dir / "h.uasf", bytes);
    CHECK_THROWS_AS(read_store(dir / "h.uasf"), CorruptionError);
  }
  SUBCASE("trailing garbage") {
    auto bytes = good;
    bytes.push_back(0);
    write_bytes(dir / "g.uasf", bytes);
    CHECK_THROWS_AS(read_store(dir / "g.uasf"), CorruptionError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_store(dir / "nope.uasf"), IoError);
  }
}

TEST_CASE("iterator yields exactly N records in written order") {
  TempDir dir;
  Xoshiro256 rng(8);
  const auto records = test::random_records(rng, 17, 4, 3);
  write_store(records, 4, dir / "s.uasf");
  StoreReader reader(dir / "s.uasf");
  std::size_t n = 0;
  for (const auto& r : reader) {
    REQUIRE(n < records.size());
    CHECK(r == records[n]);
    ++n;
  }
  CHECK(n == 17);
}

TEST_CASE("concurrent readers see identical content") {
  TempDir dir;
  Xoshiro256 rng(9);
  const auto records = test::random_records(rng, 64, 16, 4, 8);
  write_store(records, 16, dir / "s.uasf");
  std::vector<std::uint64_t> sums(8, 0);
  std::vector<std::thread> readers;
  for (std::size_t t = 0; t < sums.size(); ++t) {
    readers.emplace_back([&, t] { sums[t] = checksum(read_store(dir / "s.uasf").records); });
  }
  for (auto& th : readers) th.join();
  for (auto s : sums) CHECK(s == checksum(records));
}

TEST_CASE("filter_split") {
  const std::vector<FeatureRecord> rs = {make_record("a", 0, Split::train, 1, {1}),
                                         make_record("b", 1, Split::test, 1, {2}),
                                         make_record("c", 0, Split::train, 1, {3})};
  const auto train = filter_split(rs, Split::train);
  REQUIRE(train.size() == 2);
  CHECK(train[0].clip_id == "a");
  CHECK(train[1].clip_id == "c");
  CHECK(filter_split(rs, Split::val).empty());

  Xoshiro256 rng(4);
  const auto many = test::random_records(rng, 100, 2, 3);
  std::size_t total = 0;
  std::vector<std::string> seen;
  for (Split s : kAllSplits) {
    for (const auto& r : filter_split(many, s)) seen.push_back(r.clip_id);
    total += filter_split(many, s).size();
  }
  CHECK(total == many.size());
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("split names") {
  for (Split s : kAllSplits) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS_AS(parse_split("dev"), ValueError);
}
