// SPDX-License-Identifier: Apache-2.0
//
// Head checkpoint: one line of JSON (terminated by '\n') carrying D, K, the
// label-map hash and the seed, followed by K*D float32 weights and K float32
// biases, little-endian.
#pragma once

#include <cstdint>
#include <filesystem>

#include "uas/probe_head.hpp"

namespace uas {

struct Checkpoint {
  ProbeHead head;
  std::uint64_t label_map_hash = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);

/// Throws IoError if missing, FormatError/CorruptionError if malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uas
