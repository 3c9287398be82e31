// SPDX-License-Identifier: Apache-2.0
//
// Covariance spectra, effective dimensionality, and principal angles for
// clouds of pooled features. Matrices are row-major spans: samples are
// N x D, bases are D x m (one basis vector per column).
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace uas {

struct SubspaceSummary {
  std::size_t dim = 0;
  std::size_t n_samples = 0;
  std::vector<double> mean;
  std::vector<double> eigenvalues;   // descending, >= 0
  std::vector<double> eigenvectors;  // D x D, column j pairs with eigenvalue j
  std::size_t effective_rank_90 = 0;
  double participation_ratio = 0.0;
  /// Eigenvalues left nonzero after clamping.
  std::size_t numerical_rank = 0;
};

/// Eigenvalues below this fraction of the largest are clamped to zero.
inline constexpr double kEigenRelativeTolerance = 1e-10;

/// Throws InsufficientDataError for N < 2 or a cloud with zero variance.
SubspaceSummary summarize_domain(std::span<const double> samples,
                                 std::size_t dim, bool parallel = false);

/// (sum l)^2 / sum l^2.
double participation_ratio(std::span<const double> eigenvalues) noexcept;

/// Smallest m whose leading eigenvalues hold at least `mass` of the total.
std::size_t effective_rank(std::span<const double> eigenvalues,
                           double mass = 0.90) noexcept;

/// Leading m eigenvectors as a D x m basis; each column's largest-magnitude
/// entry is positive. Throws RankError when m exceeds the numerical rank.
std::vector<double> top_subspace(const SubspaceSummary& summary, std::size_t m);

/// Canonical angles between span(a) and span(b), ascending, in [0, pi/2].
/// Throws BasisError when either basis is not orthonormal within 1e-8.
std::vector<double> principal_angles(std::span<const double> basis_a,
                                     std::size_t cols_a,
                                     std::span<const double> basis_b,
                                     std::size_t cols_b, std::size_t dim);

nlohmann::json to_json(const SubspaceSummary& summary);

/// index,eigenvalue,cumulative_mass
std::string spectrum_csv(const SubspaceSummary& summary);

}  // namespace uas
