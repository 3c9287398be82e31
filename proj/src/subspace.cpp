// SPDX-License-Identifier: Apache-2.0
#include "uas/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "uas/error.hpp"
#include "uas/kernels.hpp"

namespace uas {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(std::span<const double> data, std::size_t rows,
                                 std::size_t cols) {
  return {data.data(), static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

void check_orthonormal(const Eigen::MatrixXd& basis, const char* which) {
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  const double err =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(err <= 1e-8)) {
    throw BasisError(std::string("basis ") + which +
                     " is not orthonormal (max |B^T B - I| = " +
                     std::to_string(err) + ")");
  }
}

}  // namespace

double participation_ratio(std::span<const double> eigenvalues) noexcept {
  double sum = 0.0, sum_sq = 0.0;
  for (double l : eigenvalues) {
    sum += l;
    sum_sq += l * l;
  }
  return sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
}

std::size_t effective_rank(std::span<const double> eigenvalues,
                           double mass) noexcept {
  double total = 0.0;
  for (double l : eigenvalues) total += l;
  if (total <= 0.0) return 0;
  double running = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    running += eigenvalues[i];
    if (running >= mass * total) return i + 1;
  }
  return eigenvalues.size();
}

SubspaceSummary summarize_domain(std::span<const double> samples,
                                 std::size_t dim, bool parallel) {
  if (dim == 0 || samples.size() % dim != 0) {
    throw DimensionError("sample buffer is not a whole number of D-rows");
  }
  const std::size_t n = samples.size() / dim;
  if (n < 2) {
    throw InsufficientDataError("need at least 2 samples, got " + std::to_string(n));
  }

  SubspaceSummary s;
  s.dim = dim;
  s.n_samples = n;
  const auto cov = parallel ? kernels::omp::covariance(samples, dim, s.mean)
                            : kernels::serial::covariance(samples, dim, s.mean);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      Eigen::Map<const Eigen::MatrixXd>(cov.data(), static_cast<Eigen::Index>(dim),
                                        static_cast<Eigen::Index>(dim)));
  if (solver.info() != Eigen::Success) {
    throw NumericError("covariance eigen-decomposition did not converge");
  }
  // Eigen returns ascending order.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double peak = values.size() ? std::max(values.maxCoeff(), 0.0) : 0.0;
  if (!(peak > 0.0)) throw InsufficientDataError("feature cloud has zero variance");

  s.eigenvalues.resize(dim);
  s.eigenvectors.resize(dim * dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const auto src = static_cast<Eigen::Index>(dim - 1 - j);
    double l = values(src);
    if (l < kEigenRelativeTolerance * peak) l = 0.0;
    s.eigenvalues[j] = l;
    s.numerical_rank += l > 0.0;

    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    vectors.col(src).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      s.eigenvectors[d * dim + j] = sign * vectors(static_cast<Eigen::Index>(d), src);
    }
  }
  s.participation_ratio = participation_ratio(s.eigenvalues);
  s.effective_rank_90 = effective_rank(s.eigenvalues, 0.90);
  return s;
}

std::vector<double> top_subspace(const SubspaceSummary& summary, std::size_t m) {
  if (m == 0 || m > summary.numerical_rank) {
    throw RankError("requested " + std::to_string(m) +
                    " directions but the data has numerical rank " +
                    std::to_string(summary.numerical_rank));
  }
  const std::size_t dim = summary.dim;
  std::vector<double> basis(dim * m);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t j = 0; j < m; ++j) {
      basis[d * m + j] = summary.eigenvectors[d * dim + j];
    }
  }
  return basis;
}

std::vector<double> principal_angles(std::span<const double> basis_a,
                                     std::size_t cols_a,
                                     std::span<const double> basis_b,
                                     std::size_t cols_b, std::size_t dim) {
  if (cols_a == 0 || cols_b == 0 || basis_a.size() != dim * cols_a ||
      basis_b.size() != dim * cols_b) {
    throw DimensionError("basis shapes do not match D x p / D x q");
  }
  Eigen::MatrixXd a = view(basis_a, dim, cols_a);
  Eigen::MatrixXd b = view(basis_b, dim, cols_b);
  check_orthonormal(a, "a");
  check_orthonormal(b, "b");
  // Work with the wider basis second so the sine residual spans the gap.
  if (cols_a > cols_b) std::swap(a, b);

  const std::size_t count = static_cast<std::size_t>(a.cols());
  const Eigen::MatrixXd cross = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> cos_svd(cross, Eigen::ComputeThinV);
  const Eigen::VectorXd cosines = cos_svd.singularValues();

  // arccos loses half the digits near zero angle. The sines come from the
  // part of b's principal vectors orthogonal to span(a).
  const Eigen::MatrixXd principal_b = b * cos_svd.matrixV();
  const Eigen::MatrixXd residual =
      principal_b.leftCols(static_cast<Eigen::Index>(count)) -
      a * (a.transpose() * principal_b.leftCols(static_cast<Eigen::Index>(count)));

  std::vector<double> angles(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double c = std::clamp(cosines(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    if (c * c >= 0.5) {
      const double s = std::clamp(residual.col(static_cast<Eigen::Index>(i)).norm(), 0.0, 1.0);
      angles[i] = std::asin(s);
    } else {
      angles[i] = std::acos(c);
    }
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

nlohmann::json to_json(const SubspaceSummary& s) {
  return {{"dim", s.dim},
          {"n_samples", s.n_samples},
          {"mean", s.mean},
          {"eigenvalues", s.eigenvalues},
          {"effective_rank_90", s.effective_rank_90},
          {"participation_ratio", s.participation_ratio},
          {"numerical_rank", s.numerical_rank}};
}

std::string spectrum_csv(const SubspaceSummary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "index,eigenvalue,cumulative_mass\n";
  double total = 0.0;
  for (double l : s.eigenvalues) total += l;
  double running = 0.0;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    running += s.eigenvalues[i];
    os << i + 1 << ',' << s.eigenvalues[i] << ',' << (total > 0 ? running / total : 0.0)
       << '\n';
  }
  return os.str();
}

}  // namespace uas
