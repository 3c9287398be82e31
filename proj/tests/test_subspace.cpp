// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "subspace_oracle.hpp"
#include "uas/error.hpp"
#include "uas/subspace.hpp"

using namespace uas;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

std::vector<double> column_basis(std::size_t dim, std::initializer_list<std::size_t> axes) {
  std::vector<double> b(dim * axes.size(), 0.0);
  std::size_t j = 0;
  for (auto axis : axes) b[axis * axes.size() + j++] = 1.0;
  return b;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("participation ratio and effective rank formulas") {
  CHECK(participation_ratio(std::vector<double>{2, 1}) == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(participation_ratio(std::vector<double>(7, 0.3)) == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(participation_ratio(std::vector<double>{5, 0, 0}) == 1.0);
  CHECK(effective_rank(std::vector<double>{0.5, 0.3, 0.15, 0.05}) == 3);
  CHECK(effective_rank(std::vector<double>{0.9, 0.1}) == 1);
  CHECK(effective_rank(std::vector<double>{1, 1, 1, 1}, 0.5) == 2);
}

TEST_CASE("summaries of simple clouds") {
  SUBCASE("points on a line") {
    std::vector<double> s;
    for (double t : {-2.0, 0.5, 1.0, 3.0, 7.5}) {
      s.insert(s.end(), {1 + 2 * t, -1 + t, 3 - 2 * t});
    }
    const auto sum = summarize_domain(s, 3);
    CHECK(sum.n_samples == 5);
    CHECK(sum.participation_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sum.effective_rank_90 == 1);
    CHECK(sum.numerical_rank == 1);
    CHECK(sum.eigenvalues[1] == 0.0);
    CHECK(sum.eigenvalues[2] == 0.0);

    const auto basis = top_subspace(sum, 1);
    CHECK(basis[0] == doctest::Approx(2.0 / 3.0));
    CHECK(basis[1] == doctest::Approx(1.0 / 3.0));
    CHECK(basis[2] == doctest::Approx(-2.0 / 3.0));
    CHECK_THROWS_AS(top_subspace(sum, 2), RankError);
  }
  SUBCASE("isotropic square") {
    // Corners of a square: covariance is a multiple of the identity.
    const std::vector<double> s = {1, 1, 1, -1, -1, 1, -1, -1};
    const auto sum = summarize_domain(s, 2);
    CHECK(sum.participation_ratio == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sum.eigenvalues[0] == doctest::Approx(4.0 / 3.0));
    CHECK(sum.effective_rank_90 == 2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(summarize_domain(std::vector<double>{1, 2, 3}, 3), InsufficientDataError);
    CHECK_THROWS_AS(summarize_domain(std::vector<double>{1, 2, 1, 2}, 2), InsufficientDataError);
    CHECK_THROWS_AS(summarize_domain(std::vector<double>{1, 2, 3}, 2), DimensionError);
  }
}

TEST_CASE("eigen-decomposition reconstructs the covariance") {
  Xoshiro256 rng(3);
  const std::size_t n = 60, dim = 7;
  std::vector<double> s(n * dim);
  for (auto& v : s) v = rng.normal() * rng.uniform(0.5, 3.0);
  const auto sum = summarize_domain(s, dim);
  CHECK(std::is_sorted(sum.eigenvalues.rbegin(), sum.eigenvalues.rend()));
  for (double l : sum.eigenvalues) CHECK(l >= 0.0);

  std::vector<double> mean(dim, 0.0), cov(dim * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += s[i * dim + d] / n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        cov[a * dim + b] += (s[i * dim + a] - mean[a]) * (s[i * dim + b] - mean[b]) / (n - 1);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) {
      double r = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        r += sum.eigenvectors[a * dim + j] * sum.eigenvalues[j] * sum.eigenvectors[b * dim + j];
      }
      CHECK(std::abs(r - cov[a * dim + b]) < 1e-12);
    }
  }
  CHECK(max_abs_diff(sum.mean, mean) < 1e-14);
  CHECK(test::jacobi_eigenvalues(cov, dim).back() == doctest::Approx(sum.eigenvalues[0]).epsilon(1e-12));

  const auto par = summarize_domain(s, dim, true);
  CHECK(par.eigenvalues == sum.eigenvalues);
  CHECK(par.eigenvectors == sum.eigenvectors);
}

TEST_CASE("participation ratio is invariant to rotation and scale") {
  Xoshiro256 rng(4);
  const std::size_t n = 80, dim = 6;
  std::vector<double> s(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) s[i * dim + d] = rng.normal() * (1.0 + static_cast<double>(d));
  const double pr = summarize_domain(s, dim).participation_ratio;

  const auto q = test::random_basis(rng, dim, dim);
  std::vector<double> rotated(n * dim, 0.0), scaled(s);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b) rotated[i * dim + a] += q[a * dim + b] * s[i * dim + b];
  for (auto& v : scaled) v *= 37.5;
  CHECK(summarize_domain(rotated, dim).participation_ratio == doctest::Approx(pr).epsilon(1e-12));
  CHECK(summarize_domain(scaled, dim).participation_ratio == doctest::Approx(pr).epsilon(1e-12));
}

TEST_CASE("rank-r clouds at SNR 100") {
  for (std::size_t r : {1u, 2u, 4u, 8u}) {
    const auto cloud = test::low_rank_cloud(r, 64, 400, 100 + r);
    const auto sum = summarize_domain(cloud.samples, 64);
    CAPTURE(r);
    CHECK(sum.effective_rank_90 == r);
    const double expected = test::closed_form_pr(r, 64);
    CHECK(std::abs(sum.participation_ratio - expected) / expected < 1e-3);
    CHECK(std::abs(sum.participation_ratio - participation_ratio(cloud.spectrum)) < 1e-9);
  }
}

TEST_CASE("top subspace") {
  const auto cloud = test::low_rank_cloud(4, 12, 200, 9);
  const auto sum = summarize_domain(cloud.samples, 12);
  for (std::size_t m : {1u, 3u, 6u}) {
    const auto basis = top_subspace(sum, m);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t peak = 0;
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < 12; ++d) dot += basis[d * m + i] * basis[d * m + j];
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-8);
      }
      for (std::size_t d = 1; d < 12; ++d) {
        if (std::abs(basis[d * m + i]) > std::abs(basis[peak * m + i])) peak = d;
      }
      CHECK(basis[peak * m + i] > 0.0);
    }
  }

  // Variance captured by the top-m basis equals the top-m eigenvalue mass and
  // no random m-dimensional basis captures more.
  const std::size_t m = 2, n = 200, dim = 12;
  const auto capture = [&](const std::vector<double>& basis) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double proj = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          proj += (cloud.samples[i * dim + d] - sum.mean[d]) * basis[d * m + j];
        }
        total += proj * proj;
      }
    }
    return total / static_cast<double>(n - 1);
  };
  const double best = capture(top_subspace(sum, m));
  CHECK(best == doctest::Approx(sum.eigenvalues[0] + sum.eigenvalues[1]).epsilon(1e-10));
  Xoshiro256 rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    CHECK(capture(test::random_basis(rng, dim, m)) <= best + 1e-12);
  }
}

TEST_CASE("principal angle examples") {
  const auto e12 = column_basis(3, {0, 1});
  const auto e13 = column_basis(3, {0, 2});
  const auto angles = principal_angles(e12, 2, e13, 2, 3);
  REQUIRE(angles.size() == 2);
  CHECK(angles[0] == doctest::Approx(0.0));
  CHECK(angles[1] == doctest::Approx(kHalfPi));

  for (double a : principal_angles(e12, 2, e12, 2, 3)) CHECK(std::abs(a) < 1e-8);
  const auto e3 = column_basis(3, {2});
  CHECK(principal_angles(e12, 2, e3, 1, 3) == std::vector<double>{kHalfPi});

  const std::vector<double> skewed = {1, 0, 0, 1, 0, 1};  // columns not unit length
  CHECK_THROWS_AS(principal_angles(skewed, 2, e12, 2, 3), BasisError);
  CHECK_THROWS_AS(principal_angles(e12, 2, e13, 2, 4), DimensionError);
}

TEST_CASE("property: principal angles match the Jacobi oracle") {
  Xoshiro256 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 6 + rng.below(20);
    const std::size_t p = 1 + rng.below(4), q = 1 + rng.below(4);
    const double lo = trial % 3 == 0 ? 1e-5 : 0.0;
    const double hi = trial % 3 == 0 ? 1e-3 : kHalfPi;
    const auto [a, b] = trial % 2 ? test::tilted_pair(rng, dim, p, q, lo, hi)
                                  : std::pair{test::random_basis(rng, dim, p), test::random_basis(rng, dim, q)};
    const auto got = principal_angles(a, p, b, q, dim);
    const auto expected = test::oracle_principal_angles(a, p, b, q, dim);
    REQUIRE(got.size() == std::min(p, q));
    CHECK(std::is_sorted(got.begin(), got.end()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      worst = std::max(worst, std::abs(got[i] - expected[i]));
      CHECK(got[i] >= 0.0);
      CHECK(got[i] <= kHalfPi);
    }
    // Symmetric in the arguments.
    const auto swapped = principal_angles(b, q, a, p, dim);
    CHECK(max_abs_diff(got, swapped) < 1e-12);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("principal angles ignore the choice of basis within a subspace") {
  Xoshiro256 rng(5);
  const std::size_t dim = 10, p = 3;
  const auto a = test::random_basis(rng, dim, p);
  const auto b = test::random_basis(rng, dim, p);
  const auto r = test::random_basis(rng, p, p);  // p x p rotation
  std::vector<double> a2(dim * p, 0.0);
  for (std::size_t d = 0; d < dim; ++d)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k) a2[d * p + j] += a[d * p + k] * r[k * p + j];
  CHECK(max_abs_diff(principal_angles(a, p, b, p, dim), principal_angles(a2, p, b, p, dim)) < 1e-12);
}

TEST_CASE("summary serialization") {
  const std::vector<double> s = {1, 0, 0, 2, 0, 0, 3, 1, 1};
  const auto sum = summarize_domain(s, 3);
  const auto doc = to_json(sum);
  CHECK(doc.at("n_samples") == 3);
  CHECK(doc.at("eigenvalues").size() == 3);
  CHECK(doc.at("effective_rank_90") == sum.effective_rank_90);
  const auto csv = spectrum_csv(sum);
  CHECK(csv.rfind("index,eigenvalue,cumulative_mass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
