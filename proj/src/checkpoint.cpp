// SPDX-License-Identifier: Apache-2.0
#include "uas/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <string>

#include <json.hpp>

#include "uas/error.hpp"

namespace uas {
namespace {

void write_floats(std::ofstream& out, std::span<const float> values) {
  for (float v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    char bytes[4];
    for (char& b : bytes) {
      b = static_cast<char>(bits & 0xFF);
      bits >>= 8;
    }
    out.write(bytes, 4);
  }
}

void read_floats(std::ifstream& in, std::span<float> values,
                 const std::filesystem::path& path) {
  for (float& v : values) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) {
      throw CorruptionError("checkpoint '" + path.string() + "' is truncated");
    }
    const std::uint32_t bits = std::uint32_t{bytes[0]} | std::uint32_t{bytes[1]} << 8 |
                               std::uint32_t{bytes[2]} << 16 |
                               std::uint32_t{bytes[3]} << 24;
    v = std::bit_cast<float>(bits);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  // The hash is a string so that readers without 64-bit integers keep it intact.
  const nlohmann::json header = {{"format", "uas-probe-head"},
                                 {"version", 1},
                                 {"D", ckpt.head.dim},
                                 {"K", ckpt.head.classes},
                                 {"label_map_hash", std::to_string(ckpt.label_map_hash)},
                                 {"seed", ckpt.seed},
                                 {"dtype", "float32"}};
  out << header.dump() << '\n';
  write_floats(out, ckpt.head.weights);
  write_floats(out, ckpt.head.bias);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("checkpoint '" + path.string() + "' is empty");
  }
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != "uas-probe-head") {
      throw FormatError("'" + path.string() + "' is not a probe-head checkpoint");
    }
    const auto dim = header.at("D").get<std::size_t>();
    const auto classes = header.at("K").get<std::size_t>();
    if (dim == 0 || classes == 0) throw FormatError("checkpoint declares D or K = 0");
    ckpt.head = ProbeHead(dim, classes);
    ckpt.label_map_hash = std::stoull(header.at("label_map_hash").get<std::string>());
    ckpt.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path.string() + "': " + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError("checkpoint '" + path.string() + "': bad label_map_hash");
  }
  read_floats(in, ckpt.head.weights, path);
  read_floats(in, ckpt.head.bias, path);
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw CorruptionError("checkpoint '" + path.string() + "' has trailing bytes");
  }
  return ckpt;
}

}  // namespace uas
