// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "uas/feature_store.hpp"
#include "uas/rng.hpp"

namespace uas::test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("uas_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random valid records: T in [1, max_tokens], labels < classes.
inline std::vector<FeatureRecord> random_records(Xoshiro256& rng, std::size_t count,
                                                 std::size_t dim, std::size_t classes,
                                                 std::size_t max_tokens = 4) {
  std::vector<FeatureRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t tokens = 1 + rng.below(max_tokens);
    std::vector<float> values(tokens * dim);
    for (auto& v : values) v = static_cast<float>(rng.normal());
    out.push_back(make_record("clip-" + std::to_string(i) + "-\xC3\xA9",
                              static_cast<std::uint32_t>(rng.below(classes)),
                              static_cast<Split>(rng.below(3)), dim, std::move(values)));
  }
  return out;
}

}  // namespace uas::test
