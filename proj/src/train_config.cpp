// SPDX-License-Identifier: Apache-2.0
#include "uas/train_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "uas/error.hpp"

namespace uas {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  // std::from_chars for double is not available on every libstdc++ we target.
  std::string text(v);
  char* end = nullptr;
  const double out = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(out)) {
    throw ConfigError("'" + std::string(key) + "': '" + text +
                      "' is not a finite number");
  }
  return out;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "': '" + std::string(v) +
                      "' is not an integer in range");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "': expected true/false");
}

}  // namespace

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

std::string_view to_string(ClassWeighting weighting) noexcept {
  return weighting == ClassWeighting::none ? "none" : "inverse_frequency";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "optimizer") {
    if (value == "adam") optimizer = OptimizerKind::adam;
    else if (value == "sgd") optimizer = OptimizerKind::sgd;
    else throw ConfigError("optimizer must be 'adam' or 'sgd'");
  } else if (key == "learning_rate") {
    learning_rate = to_double(key, value);
  } else if (key == "weight_decay") {
    weight_decay = to_double(key, value);
  } else if (key == "momentum") {
    momentum = to_double(key, value);
  } else if (key == "beta1") {
    beta1 = to_double(key, value);
  } else if (key == "beta2") {
    beta2 = to_double(key, value);
  } else if (key == "epsilon") {
    epsilon = to_double(key, value);
  } else if (key == "batch_size") {
    batch_size = to_int<std::size_t>(key, value);
  } else if (key == "epochs") {
    epochs = to_int<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = to_int<std::uint64_t>(key, value);
  } else if (key == "class_weighting") {
    if (value == "none") class_weighting = ClassWeighting::none;
    else if (value == "inverse_frequency") class_weighting = ClassWeighting::inverse_frequency;
    else throw ConfigError("class_weighting must be 'none' or 'inverse_frequency'");
  } else if (key == "deterministic") {
    deterministic = to_bool(key, value);
  } else if (key == "threads") {
    threads = to_int<int>(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

TrainConfig parse_config(std::istream& in) {
  TrainConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    config.set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

std::string to_config_text(const TrainConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "optimizer = " << to_string(c.optimizer) << '\n'
     << "learning_rate = " << c.learning_rate << '\n'
     << "weight_decay = " << c.weight_decay << '\n'
     << "momentum = " << c.momentum << '\n'
     << "beta1 = " << c.beta1 << '\n'
     << "beta2 = " << c.beta2 << '\n'
     << "epsilon = " << c.epsilon << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "epochs = " << c.epochs << '\n'
     << "seed = " << c.seed << '\n'
     << "class_weighting = " << to_string(c.class_weighting) << '\n'
     << "deterministic = " << (c.deterministic ? "true" : "false") << '\n'
     << "threads = " << c.threads << '\n';
  return os.str();
}

}  // namespace uas
