// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numeric>

#include "metric_oracle.hpp"
#include "uas/error.hpp"

using namespace uas;

namespace {

// One-hot logits whose argmax is `predictions[i]`.
std::vector<double> one_hot(const std::vector<std::uint32_t>& predictions, std::size_t classes) {
  std::vector<double> z(predictions.size() * classes, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) z[i * classes + predictions[i]] = 1.0;
  return z;
}

}  // namespace

TEST_CASE("hand-enumerated four-row example") {
  const std::vector<std::uint32_t> labels = {0, 1, 2, 1};
  const std::vector<std::uint32_t> preds = {0, 1, 1, 1};
  CHECK(top_k_accuracy(one_hot(preds, 3), 3, labels, 1) == 0.75);
  CHECK(mean_class_accuracy(preds, labels, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("top-k edge cases") {
  const std::vector<std::uint32_t> labels = {2, 0, 1};
  CHECK(top_k_accuracy(one_hot(labels, 4), 4, labels, 1) == 1.0);

  Xoshiro256 rng(5);
  std::vector<double> z(3 * 4);
  for (auto& v : z) v = rng.normal();
  CHECK(top_k_accuracy(z, 4, labels, 4) == 1.0);
  CHECK(top_k_accuracy(z, 4, labels, 40) == 1.0);

  // All-equal logits: only class 0 is inside the top-1.
  const std::vector<double> flat(3 * 4, 0.5);
  CHECK(top_k_accuracy(flat, 4, std::vector<std::uint32_t>{0, 1, 0}, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(top_k_accuracy(flat, 4, std::vector<std::uint32_t>{1, 1, 2}, 2) == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(top_k_accuracy({}, 4, {}, 1), EmptyInputError);
  CHECK_THROWS_AS(top_k_accuracy(flat, 4, labels, 0), ValueError);
  CHECK_THROWS_AS(top_k_accuracy(flat, 4, std::vector<std::uint32_t>{0, 4, 0}, 1), LabelError);
}

TEST_CASE("mean class accuracy") {
  // Balanced, each class 1/2 correct.
  const std::vector<std::uint32_t> labels = {0, 0, 1, 1, 2, 2};
  const std::vector<std::uint32_t> preds = {0, 1, 1, 0, 2, 0};
  CHECK(mean_class_accuracy(preds, labels, 3) == 0.5);
  CHECK(top_k_accuracy(one_hot(preds, 3), 3, labels, 1) == 0.5);

  // Majority-class predictor over 3 present classes out of 5.
  const std::vector<std::uint32_t> skewed = {0, 0, 0, 0, 3, 4};
  const std::vector<std::uint32_t> majority(skewed.size(), 0);
  CHECK(mean_class_accuracy(majority, skewed, 5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto per_class = per_class_accuracy(majority, skewed, 5);
  CHECK(per_class[0] == 1.0);
  CHECK_FALSE(per_class[1].has_value());
  CHECK_FALSE(per_class[2].has_value());
  CHECK(per_class[3] == 0.0);

  CHECK_THROWS_AS(mean_class_accuracy({}, {}, 3), EmptyInputError);
}

TEST_CASE("confusion matrix") {
  const auto anti = confusion_matrix(std::vector<std::uint32_t>{1, 0},
                                     std::vector<std::uint32_t>{0, 1}, 2);
  CHECK(anti == std::vector<std::uint64_t>{0, 1, 1, 0});

  const std::vector<std::uint32_t> labels = {0, 2, 2, 1, 2};
  const auto diag = confusion_matrix(labels, labels, 3);
  CHECK(diag == std::vector<std::uint64_t>{1, 0, 0, 0, 1, 0, 0, 0, 3});

  CHECK_THROWS_AS(confusion_matrix(std::vector<std::uint32_t>{3}, std::vector<std::uint32_t>{0}, 3),
                  LabelError);
}

TEST_CASE("property: library equals the exhaustive oracle on 1000 instances") {
  Xoshiro256 rng(2024);
  std::size_t top_k_ok = 0, mca_ok = 0, dup_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = test::random_metric_instance(rng);
    const auto out = test::check_against_oracle(m, rng);
    top_k_ok += out.top_k_match;
    mca_ok += out.mca_match;
    dup_ok += out.duplication_invariant;
  }
  CHECK(top_k_ok == 1000);
  CHECK(mca_ok == 1000);
  CHECK(dup_ok == 1000);
}

TEST_CASE("property: report invariants") {
  Xoshiro256 rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto m = test::random_metric_instance(rng);
    const auto r = compute_metrics(m.logits, m.classes, m.labels);
    const auto total = std::accumulate(r.confusion.begin(), r.confusion.end(), std::uint64_t{0});
    CHECK(total == m.labels.size());
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < m.classes; ++c) trace += r.confusion[c * m.classes + c];
    CHECK(static_cast<double>(trace) / static_cast<double>(m.labels.size()) == r.top1);
    CHECK(r.top5 >= r.top1);
    CHECK(r.top5_k == std::min<std::size_t>(5, m.classes));

    double prev = 0.0;
    for (std::size_t k = 1; k <= m.classes; ++k) {
      const double acc = top_k_accuracy(m.logits, m.classes, m.labels, k);
      CHECK(acc >= prev);
      prev = acc;
    }
    CHECK(prev == 1.0);
  }
}

TEST_CASE("duplicating a class moves Top-1 but not MCA") {
  const std::vector<std::uint32_t> labels = {0, 1};
  const std::vector<std::uint32_t> preds = {0, 0};
  test::MetricInstance m{2, one_hot(preds, 2), labels};
  const auto dup = test::duplicate_class(m, 0, 10);
  const auto a = compute_metrics(m.logits, 2, m.labels);
  const auto b = compute_metrics(dup.logits, 2, dup.labels);
  CHECK(a.mca == b.mca);
  CHECK(a.top1 == 0.5);
  CHECK(b.top1 == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("report serialization") {
  const std::vector<std::uint32_t> labels = {0, 1, 1, 0};
  const std::vector<double> logits = {1, 0, 0, 0, 0.2, 0.9, 3, -1, 0, 0, 0, 0};
  const auto r = compute_metrics(logits, 3, labels);
  CHECK(r.top5_k == 3);
  CHECK(r.top5 == 1.0);

  const std::vector<std::string> names = {"walk", "eat", "sleep"};
  const auto doc = to_json(r, names);
  CHECK(doc.at("absent_classes") == nlohmann::json::array({2}));
  CHECK(doc.contains("top5_note"));
  CHECK(metrics_from_json(nlohmann::json::parse(doc.dump())) == r);

  const auto csv = confusion_csv(r, names);
  CHECK(csv.rfind("true\\pred,walk,eat,sleep\n", 0) == 0);
  CHECK(csv.find("eat,1,0,1\n") != std::string::npos);
}
