// SPDX-License-Identifier: Apache-2.0
#include "uas/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "uas/error.hpp"
#include "uas/probe_head.hpp"

namespace uas {
namespace {

void check_shapes(std::span<const double> logits, std::size_t classes,
                  std::size_t n) {
  if (n == 0) throw EmptyInputError("no samples to score");
  if (classes == 0 || logits.size() != n * classes) {
    throw DimensionError("logit buffer of " + std::to_string(logits.size()) +
                         " values does not match N=" + std::to_string(n) +
                         ", K=" + std::to_string(classes));
  }
}

void check_pairs(std::span<const std::uint32_t> predictions,
                 std::span<const std::uint32_t> labels, std::size_t classes) {
  if (labels.empty()) throw EmptyInputError("no samples to score");
  if (predictions.size() != labels.size()) {
    throw DimensionError("predictions and labels differ in length");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predictions[i] >= classes) {
      throw LabelError("sample " + std::to_string(i) + " has an index >= K=" +
                       std::to_string(classes));
    }
  }
}

}  // namespace

double top_k_accuracy(std::span<const double> logits, std::size_t classes,
                      std::span<const std::uint32_t> labels, std::size_t k) {
  check_shapes(logits, classes, labels.size());
  if (k == 0) throw ValueError("k must be >= 1");
  k = std::min(k, classes);

  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t y = labels[i];
    if (y >= classes) throw LabelError("label out of range");
    const double* z = logits.data() + i * classes;
    // Rank of y: classes strictly ahead of it under (logit desc, index asc).
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      ahead += z[j] > z[y] || (z[j] == z[y] && j < y);
    }
    hits += ahead < k;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<std::optional<double>> per_class_accuracy(
    std::span<const std::uint32_t> predictions,
    std::span<const std::uint32_t> labels, std::size_t classes) {
  check_pairs(predictions, labels, classes);
  std::vector<std::uint64_t> total(classes, 0), correct(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++total[labels[i]];
    correct[labels[i]] += predictions[i] == labels[i];
  }
  std::vector<std::optional<double>> out(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    if (total[c] > 0) {
      out[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    }
  }
  return out;
}

double mean_class_accuracy(std::span<const std::uint32_t> predictions,
                           std::span<const std::uint32_t> labels,
                           std::size_t classes) {
  const auto per_class = per_class_accuracy(predictions, labels, classes);
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& acc : per_class) {
    if (acc) {
      sum += *acc;
      ++present;
    }
  }
  return sum / static_cast<double>(present);
}

std::vector<std::uint64_t> confusion_matrix(
    std::span<const std::uint32_t> predictions,
    std::span<const std::uint32_t> labels, std::size_t classes) {
  check_pairs(predictions, labels, classes);
  std::vector<std::uint64_t> m(classes * classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++m[std::size_t{labels[i]} * classes + predictions[i]];
  }
  return m;
}

std::vector<std::uint32_t> predict(std::span<const double> logits,
                                   std::size_t classes) {
  if (classes == 0 || logits.size() % classes != 0) {
    throw DimensionError("logit buffer is not a whole number of rows");
  }
  std::vector<std::uint32_t> out(logits.size() / classes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint32_t>(
        argmax(logits.subspan(i * classes, classes)));
  }
  return out;
}

MetricsReport compute_metrics(std::span<const double> logits,
                              std::size_t classes,
                              std::span<const std::uint32_t> labels) {
  check_shapes(logits, classes, labels.size());
  const auto predictions = predict(logits, classes);

  MetricsReport r;
  r.classes = classes;
  r.n_samples = labels.size();
  r.top1 = top_k_accuracy(logits, classes, labels, 1);
  r.top5_k = std::min<std::size_t>(5, classes);
  r.top5 = top_k_accuracy(logits, classes, labels, r.top5_k);
  r.per_class_accuracy = per_class_accuracy(predictions, labels, classes);
  r.mca = mean_class_accuracy(predictions, labels, classes);
  r.confusion = confusion_matrix(predictions, labels, classes);
  return r;
}

nlohmann::json to_json(const MetricsReport& report,
                       std::span<const std::string> class_names) {
  using nlohmann::json;
  json per_class = json::array();
  std::vector<std::size_t> absent;
  for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c) {
    const auto& acc = report.per_class_accuracy[c];
    per_class.push_back(acc ? json(*acc) : json(nullptr));
    if (!acc) absent.push_back(c);
  }
  json confusion = json::array();
  for (std::size_t i = 0; i < report.classes; ++i) {
    confusion.push_back(std::vector<std::uint64_t>(
        report.confusion.begin() + static_cast<std::ptrdiff_t>(i * report.classes),
        report.confusion.begin() +
            static_cast<std::ptrdiff_t>((i + 1) * report.classes)));
  }
  json doc = {{"top1", report.top1},
              {"top5", report.top5},
              {"top5_k", report.top5_k},
              {"mca", report.mca},
              {"n_samples", report.n_samples},
              {"classes", report.classes},
              {"per_class_accuracy", per_class},
              {"absent_classes", absent},
              {"confusion", confusion}};
  if (report.top5_k < 5) {
    doc["top5_note"] = "K < 5: reported as top-" + std::to_string(report.top5_k);
  }
  if (!class_names.empty()) {
    doc["class_names"] =
        std::vector<std::string>(class_names.begin(), class_names.end());
  }
  return doc;
}

MetricsReport metrics_from_json(const nlohmann::json& doc) {
  MetricsReport r;
  r.top1 = doc.at("top1").get<double>();
  r.top5 = doc.at("top5").get<double>();
  r.top5_k = doc.at("top5_k").get<std::size_t>();
  r.mca = doc.at("mca").get<double>();
  r.n_samples = doc.at("n_samples").get<std::size_t>();
  r.classes = doc.at("classes").get<std::size_t>();
  for (const auto& v : doc.at("per_class_accuracy")) {
    r.per_class_accuracy.push_back(v.is_null() ? std::nullopt
                                               : std::optional(v.get<double>()));
  }
  for (const auto& row : doc.at("confusion")) {
    for (const auto& v : row) r.confusion.push_back(v.get<std::uint64_t>());
  }
  return r;
}

std::string confusion_csv(const MetricsReport& report,
                          std::span<const std::string> class_names) {
  const auto label = [&](std::size_t c) {
    return c < class_names.size() ? class_names[c] : std::to_string(c);
  };
  std::ostringstream os;
  os << "true\\pred";
  for (std::size_t j = 0; j < report.classes; ++j) os << ',' << label(j);
  os << '\n';
  for (std::size_t i = 0; i < report.classes; ++i) {
    os << label(i);
    for (std::size_t j = 0; j < report.classes; ++j) {
      os << ',' << report.confusion[i * report.classes + j];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace uas
