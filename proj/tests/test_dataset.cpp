// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <limits>

#include "test_support.hpp"
#include "uas/dataset.hpp"
#include "uas/error.hpp"

using namespace uas;
using uas::test::TempDir;

TEST_CASE("label map invariants") {
  CHECK_THROWS_AS(LabelMap({"only"}), LabelError);
  CHECK_THROWS_AS(LabelMap({"a", "b", "a"}), LabelError);
  const LabelMap labels({"eat", "rest", "walk"});
  CHECK(labels.size() == 3);
  CHECK(labels.index_of("rest") == 1u);
  CHECK_FALSE(labels.index_of("fly").has_value());
  CHECK(labels.hash() != LabelMap({"rest", "eat", "walk"}).hash());
  CHECK(labels.hash() != LabelMap({"ea", "trest", "walk"}).hash());
}

TEST_CASE("label map file is a JSON array") {
  TempDir dir;
  const LabelMap labels({"a", "bé"});
  labels.save(dir / "labels.json");
  std::ifstream in(dir / "labels.json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.front() == '[');
  CHECK(LabelMap::load(dir / "labels.json").names() == labels.names());

  std::ofstream(dir / "obj.json") << R"({"a": 1})";
  CHECK_THROWS_AS(LabelMap::load(dir / "obj.json"), FormatError);
  std::ofstream(dir / "broken.json") << "[\"a\",";
  CHECK_THROWS_AS(LabelMap::load(dir / "broken.json"), FormatError);
  CHECK_THROWS_AS(LabelMap::load(dir / "missing.json"), IoError);
}

TEST_CASE("manifest is newline-delimited JSON") {
  TempDir dir;
  const std::vector<ManifestEntry> entries = {
      {"c1", "videos/c1.bin", "eat", Split::train},
      {"c2", "videos/c2.bin", "walk", Split::test}};
  save_manifest(entries, dir / "m.jsonl");
  CHECK(load_manifest(dir / "m.jsonl") == entries);

  std::ifstream in(dir / "m.jsonl");
  std::string first;
  std::getline(in, first);
  CHECK(first.find("\"clip_id\":\"c1\"") != std::string::npos);

  std::ofstream(dir / "bad.jsonl") << R"({"clip_id": "x", "source_path": "p"})" << '\n';
  CHECK_THROWS_AS(load_manifest(dir / "bad.jsonl"), FormatError);
  std::ofstream(dir / "split.jsonl")
      << R"({"clip_id":"x","source_path":"p","class_name":"eat","split":"dev"})" << '\n';
  CHECK_THROWS_AS(load_manifest(dir / "split.jsonl"), FormatError);
}

TEST_CASE("manifest validation names unknown classes and duplicate ids") {
  const LabelMap labels({"eat", "walk"});
  const std::vector<ManifestEntry> entries = {{"c1", "a", "eat", Split::train},
                                              {"c2", "b", "fly", Split::train},
                                              {"c1", "c", "walk", Split::val}};
  const auto v = validate_manifest(entries, labels);
  REQUIRE(v.size() == 2);
  CHECK(v[0].kind == ViolationKind::unknown_class);
  CHECK(v[0].clip_id == "c2");
  CHECK(v[1].kind == ViolationKind::duplicate_id);
}

TEST_CASE("validate_store") {
  Xoshiro256 rng(3);
  FeatureStore store;
  store.header.feature_dim = 4;
  store.records = test::random_records(rng, 60, 4, 12);
  store.header.record_count = store.records.size();
  std::vector<std::string> names;
  for (int i = 0; i < 12; ++i) names.push_back("b" + std::to_string(i));
  const LabelMap labels(names);

  SUBCASE("consistent store has no violations and counts are conserved") {
    const auto report = validate_store(store, labels);
    CHECK(report.ok());
    CHECK(report.total_counted() == store.header.record_count);
    std::uint64_t from_rows = 0;
    for (const auto& row : report.counts) from_rows += row[0] + row[1] + row[2];
    CHECK(from_rows == 60);
  }
  SUBCASE("label equal to K is a violation") {
    store.records[7].label_index = 12;
    const auto report = validate_store(store, labels);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::label_out_of_range);
    CHECK(report.violations[0].clip_id == store.records[7].clip_id);
    CHECK(report.total_counted() == 60);
    CHECK(format_report(report).find("label_out_of_range") != std::string::npos);
  }
  SUBCASE("non-finite values are reported, not thrown") {
    store.records[2].tokens[0] = std::numeric_limits<float>::infinity();
    const auto report = validate_store(store, labels);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::non_finite_value);
  }
  SUBCASE("dimension mismatch") {
    store.records[1].tokens.pop_back();
    const auto report = validate_store(store, labels);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].kind == ViolationKind::dimension_mismatch);
  }
}
