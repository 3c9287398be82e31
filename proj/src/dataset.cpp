// SPDX-License-Identifier: Apache-2.0
#include "uas/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "uas/error.hpp"

namespace uas {

using nlohmann::json;

LabelMap::LabelMap(std::vector<std::string> class_names)
    : names_(std::move(class_names)) {
  if (names_.size() < 2) {
    throw LabelError("a label map needs at least 2 classes, got " +
                     std::to_string(names_.size()));
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) {
      throw LabelError("duplicate class name '" + n + "'");
    }
  }
}

std::optional<std::uint32_t> LabelMap::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

std::uint64_t LabelMap::hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : names_) {
    for (unsigned char c : n) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;  // separator: never a valid UTF-8 byte
    h *= 0x100000001b3ULL;
  }
  return h;
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label map '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("label map '" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) {
    throw FormatError("label map '" + path.string() + "' is not a JSON array");
  }
  std::vector<std::string> names;
  for (const auto& item : doc) {
    if (!item.is_string()) {
      throw FormatError("label map entries must be strings");
    }
    names.push_back(item.get<std::string>());
  }
  return LabelMap(std::move(names));
}

void LabelMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << json(names_).dump() << '\n';
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    try {
      const json obj = json::parse(line);
      ManifestEntry e;
      e.clip_id = obj.at("clip_id").get<std::string>();
      e.source_path = obj.at("source_path").get<std::string>();
      e.class_name = obj.at("class_name").get<std::string>();
      e.split = parse_split(obj.at("split").get<std::string>());
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError(where + ": " + ex.what());
    } catch (const ValueError& ex) {
      throw FormatError(where + ": " + ex.what());
    }
  }
  return entries;
}

void save_manifest(std::span<const ManifestEntry> entries,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& e : entries) {
    out << json{{"clip_id", e.clip_id},
                {"source_path", e.source_path},
                {"class_name", e.class_name},
                {"split", std::string(to_string(e.split))}}
               .dump()
        << '\n';
  }
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::label_out_of_range: return "label_out_of_range";
    case ViolationKind::non_finite_value: return "non_finite_value";
    case ViolationKind::dimension_mismatch: return "dimension_mismatch";
    case ViolationKind::empty_tokens: return "empty_tokens";
    case ViolationKind::duplicate_id: return "duplicate_id";
    case ViolationKind::unknown_class: return "unknown_class";
  }
  return "?";
}

std::uint64_t ValidationReport::total_counted() const noexcept {
  std::uint64_t total = 0;
  for (const auto& row : counts) {
    for (auto c : row) total += c;
  }
  for (auto c : out_of_range_counts) total += c;
  return total;
}

ValidationReport validate_store(const FeatureStore& store,
                                const LabelMap& labels) {
  ValidationReport report;
  report.class_names = labels.names();
  report.counts.assign(labels.size(), {0, 0, 0});
  report.record_count = store.records.size();

  const std::size_t dim = store.header.feature_dim;
  std::unordered_set<std::string_view> seen;
  for (const auto& r : store.records) {
    const auto split = static_cast<std::size_t>(r.split);
    if (r.label_index >= labels.size()) {
      report.violations.push_back(
          {ViolationKind::label_out_of_range, r.clip_id,
           "label_index " + std::to_string(r.label_index) + " >= K=" +
               std::to_string(labels.size())});
      if (split < 3) ++report.out_of_range_counts[split];
    } else if (split < 3) {
      ++report.counts[r.label_index][split];
    }
    if (r.token_count == 0 || r.tokens.empty()) {
      report.violations.push_back({ViolationKind::empty_tokens, r.clip_id, ""});
    } else if (r.tokens.size() != std::size_t{r.token_count} * dim) {
      report.violations.push_back(
          {ViolationKind::dimension_mismatch, r.clip_id,
           std::to_string(r.tokens.size()) + " values for T=" +
               std::to_string(r.token_count) + ", D=" + std::to_string(dim)});
    }
    std::size_t bad = 0;
    for (float v : r.tokens) bad += !std::isfinite(v);
    if (bad > 0) {
      report.violations.push_back({ViolationKind::non_finite_value, r.clip_id,
                                   std::to_string(bad) + " non-finite values"});
    }
    if (!seen.insert(r.clip_id).second) {
      report.violations.push_back({ViolationKind::duplicate_id, r.clip_id, ""});
    }
  }
  return report;
}

std::vector<Violation> validate_manifest(std::span<const ManifestEntry> entries,
                                         const LabelMap& labels) {
  std::vector<Violation> out;
  std::unordered_set<std::string_view> seen;
  for (const auto& e : entries) {
    if (!labels.index_of(e.class_name)) {
      out.push_back({ViolationKind::unknown_class, e.clip_id,
                     "class '" + e.class_name + "' is not in the label map"});
    }
    if (!seen.insert(e.clip_id).second) {
      out.push_back({ViolationKind::duplicate_id, e.clip_id, ""});
    }
  }
  return out;
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  os << "records: " << report.record_count << '\n';
  os << "class                     train      val     test\n";
  for (std::size_t c = 0; c < report.counts.size(); ++c) {
    std::string name = report.class_names.at(c);
    if (name.size() > 24) name = name.substr(0, 21) + "...";
    os << name << std::string(24 - name.size(), ' ');
    for (auto n : report.counts[c]) {
      const auto s = std::to_string(n);
      os << std::string(s.size() < 9 ? 9 - s.size() : 1, ' ') << s;
    }
    os << '\n';
  }
  os << "violations: " << report.violations.size() << '\n';
  for (const auto& v : report.violations) {
    os << "  " << to_string(v.kind) << " [" << v.clip_id << "]";
    if (!v.detail.empty()) os << ": " << v.detail;
    os << '\n';
  }
  return os.str();
}

}  // namespace uas
