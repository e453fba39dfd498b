// Copyright 2026 The projda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROJDA_NUMERICS_HPP
#define PROJDA_NUMERICS_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

/**
 * \file
 * \brief Dense linear algebra, Gaussian covariances and the deterministic RNG.
 *
 * Every factorization here either returns a result that satisfies its contract or
 * throws. Callers downstream (filters in particular) rely on that to tell numerical
 * breakdown apart from filter divergence.
 */

namespace projda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Base class of all numerical failures raised by the library.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPositiveDefiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Default tolerances. None of them come from the model problem; all are tunable.
struct Tolerances {
  /// Relative threshold on diag(T) in the Gram-Schmidt QR.
  double qr_rank = 1e-12;
  /// Relative threshold on singular values when forming a pseudoinverse.
  double pinv_rank = 1e-12;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& a) { return a.allFinite(); }

// -----------------------------------------------------------------------------
// Random numbers
// -----------------------------------------------------------------------------

/**
 * Reproducible random stream: a std::mt19937_64 seeded through std::seed_seq from
 * the stream's derivation path.
 *
 * The path starts as (seed, stream_id). `split(id)` appends (forks so far, id) to a
 * copy of the path without touching the parent; `fork()` does the same with a
 * reserved id and then counts the fork, so successive forks differ.
 *
 * Engine and seeding are fully specified by the C++ standard. The standard leaves the
 * distributions implementation-defined, so uniforms take the top 53 bits of one
 * engine output and normals use Box-Muller on consecutive uniform pairs (both
 * outputs are used). The sequence is then the same on every conforming platform.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : path_{seed, stream_id} { reseed(); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11U) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - uniform() lies in (0, 1], so the log is finite.
    const double radius = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Vector normal_vector(Eigen::Index n) {
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out[i] = normal();
    }
    return out;
  }

  [[nodiscard]] RngStream split(std::uint64_t id) const {
    RngStream child;
    child.path_ = path_;
    child.path_.push_back(forks_);
    child.path_.push_back(id);
    child.reseed();
    return child;
  }

  RngStream fork() {
    RngStream child = split(~0ULL);
    ++forks_;
    return child;
  }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.path_ == b.path_ && a.forks_ == b.forks_ && a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  RngStream() = default;

  void reseed() {
    std::vector<std::uint32_t> words;
    words.reserve(2 * path_.size());
    for (std::uint64_t p : path_) {
      words.push_back(static_cast<std::uint32_t>(p));
      words.push_back(static_cast<std::uint32_t>(p >> 32U));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    has_spare_ = false;
  }

  std::vector<std::uint64_t> path_;
  std::uint64_t forks_ = 0;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// -----------------------------------------------------------------------------
// Factorizations
// -----------------------------------------------------------------------------

struct SvdResult {
  Matrix left;            ///< Φ, orthonormal columns.
  Vector singular_values; ///< Descending, nonnegative.
  Matrix right;           ///< Ψ, orthonormal columns.
};

/// Thin SVD, A = Φ diag(σ) Ψᵀ.
inline SvdResult svd(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw std::invalid_argument("svd: empty matrix");
  }
  if (!all_finite(a)) {
    throw NumericalError("svd: input contains non-finite entries");
  }
  Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("svd: factorization did not converge");
  }
  SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  if (!all_finite(out.left) || !all_finite(out.right) || !out.singular_values.allFinite()) {
    throw ConvergenceError("svd: factorization produced non-finite output");
  }
  return out;
}

/// Number of singular values above `rel_tol * σ_max`.
inline Eigen::Index numerical_rank(const Vector& singular_values, double rel_tol) {
  if (singular_values.size() == 0 || singular_values[0] == 0.0) {
    return 0;
  }
  const double cutoff = rel_tol * singular_values[0];
  Eigen::Index rank = 0;
  while (rank < singular_values.size() && singular_values[rank] > cutoff) {
    ++rank;
  }
  return rank;
}

struct QrResult {
  Matrix q;  ///< Orthonormal columns.
  Matrix t;  ///< Upper triangular, strictly positive diagonal.
};

/**
 * Reduced QR by modified Gram-Schmidt with one reorthogonalization sweep.
 *
 * The diagonal of T is positive by construction. Throws RankDeficientError when a
 * column's remaining norm drops below `tol.qr_rank * ‖A‖_F`.
 */
inline QrResult qr_positive(const Eigen::Ref<const Matrix>& a, const Tolerances& tol = {}) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m == 0 || n == 0) {
    throw std::invalid_argument("qr_positive: empty matrix");
  }
  if (n > m) {
    throw RankDeficientError("qr_positive: more columns (" + std::to_string(n) + ") than rows (" +
                             std::to_string(m) + ")");
  }
  if (!all_finite(a)) {
    throw NumericalError("qr_positive: input contains non-finite entries");
  }
  const double threshold = tol.qr_rank * a.norm();
  QrResult out{a, Matrix::Zero(n, n)};
  Matrix& q = out.q;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double c = q.col(i).dot(q.col(j));
        out.t(i, j) += c;
        q.col(j) -= c * q.col(i);
      }
    }
    const double norm = q.col(j).norm();
    if (!(norm > threshold)) {
      throw RankDeficientError("qr_positive: column " + std::to_string(j) +
                               " is linearly dependent on the preceding columns");
    }
    out.t(j, j) = norm;
    q.col(j) /= norm;
  }
  return out;
}

/// Moore-Penrose pseudoinverse of a full-row-rank matrix, via SVD.
inline Matrix pseudoinverse(const Eigen::Ref<const Matrix>& h, const Tolerances& tol = {}) {
  if (h.rows() > h.cols()) {
    throw RankDeficientError("pseudoinverse: operator has more rows than columns, so it cannot have full row rank");
  }
  const SvdResult f = svd(h);
  const Eigen::Index rank = numerical_rank(f.singular_values, tol.pinv_rank);
  if (rank < h.rows()) {
    throw RankDeficientError("pseudoinverse: operator rank " + std::to_string(rank) +
                             " is below its row count " + std::to_string(h.rows()));
  }
  return f.right * f.singular_values.cwiseInverse().asDiagonal() * f.left.transpose();
}

struct EigResult {
  ComplexVector values;
  ComplexMatrix vectors;  ///< Unit-norm columns.
};

/// Eigendecomposition of a general real square matrix. Conjugate pairs are adjacent.
inline EigResult eig_general(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("eig_general: matrix must be square and nonempty");
  }
  if (!all_finite(a)) {
    throw NumericalError("eig_general: input contains non-finite entries");
  }
  Eigen::EigenSolver<Matrix> solver(a, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig_general: QR iteration did not converge");
  }
  EigResult out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    const double norm = out.vectors.col(k).norm();
    if (norm > 0.0) {
      out.vectors.col(k) /= norm;
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Gaussian covariances
// -----------------------------------------------------------------------------

/**
 * Covariance of a zero-mean Gaussian, either `scale * I` or a dense SPD matrix.
 *
 * The dense form keeps its Cholesky factor. A dense matrix that is exactly a
 * multiple of the identity is stored in scalar form, so algebraically equal
 * covariances take the same arithmetic path.
 */
class NoiseSpec {
 public:
  NoiseSpec() = default;

  static NoiseSpec scaled_identity(Eigen::Index dim, double scale) {
    if (dim < 1) {
      throw std::invalid_argument("NoiseSpec: dimension must be positive");
    }
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
      throw std::invalid_argument("NoiseSpec: scale must be finite and nonnegative");
    }
    NoiseSpec out;
    out.dim_ = dim;
    out.scale_ = scale;
    return out;
  }

  /// Throws NotPositiveDefiniteError when `cov` has no Cholesky factor.
  static NoiseSpec dense(const Eigen::Ref<const Matrix>& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0) {
      throw std::invalid_argument("NoiseSpec: covariance must be square and nonempty");
    }
    if (auto s = exact_scale(cov)) {
      return scaled_identity(cov.rows(), *s);
    }
    NoiseSpec out;
    out.dim_ = cov.rows();
    out.matrix_ = cov;
    out.chol_.compute(out.matrix_);
    if (out.chol_.info() != Eigen::Success || !out.chol_.matrixL().toDenseMatrix().allFinite()) {
      throw NotPositiveDefiniteError("NoiseSpec: covariance is not symmetric positive definite");
    }
    return out;
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
  [[nodiscard]] bool is_scalar() const noexcept { return scale_.has_value(); }
  [[nodiscard]] double scale() const { return scale_.value(); }
  [[nodiscard]] bool is_zero() const noexcept { return scale_.has_value() && *scale_ == 0.0; }

  [[nodiscard]] Matrix matrix() const {
    if (scale_) {
      return *scale_ * Matrix::Identity(dim_, dim_);
    }
    return matrix_;
  }

  /// C ξ for the Cholesky factor C (CCᵀ = covariance).
  [[nodiscard]] Vector color(const Vector& xi) const {
    if (scale_) {
      return std::sqrt(*scale_) * xi;
    }
    return chol_.matrixL() * xi;
  }

  /// Draws from N(0, covariance), consuming `dim()` normals.
  Vector sample(RngStream& rng) const { return color(rng.normal_vector(dim_)); }

  /// covariance⁻¹ v.
  [[nodiscard]] Vector solve(const Vector& v) const {
    require_invertible();
    if (scale_) {
      return v / *scale_;
    }
    return chol_.solve(v);
  }

  /// covariance⁻¹ B.
  [[nodiscard]] Matrix solve(const Matrix& b) const {
    require_invertible();
    if (scale_) {
      return b / *scale_;
    }
    return chol_.solve(b);
  }

  /// vᵀ covariance⁻¹ v.
  [[nodiscard]] double quadratic_form(const Vector& v) const {
    require_invertible();
    if (scale_) {
      return v.squaredNorm() / *scale_;
    }
    const Vector w = chol_.matrixL().solve(v);
    return w.squaredNorm();
  }

  /// Bᵀ covariance B.
  [[nodiscard]] Matrix conjugate(const Matrix& b) const {
    if (scale_) {
      return *scale_ * (b.transpose() * b);
    }
    return b.transpose() * matrix_ * b;
  }

 private:
  static std::optional<double> exact_scale(const Eigen::Ref<const Matrix>& cov) {
    const double s = cov(0, 0);
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        if (cov(i, j) != (i == j ? s : 0.0)) {
          return std::nullopt;
        }
      }
    }
    if (!(s >= 0.0)) {
      return std::nullopt;
    }
    return s;
  }

  void require_invertible() const {
    if (is_zero()) {
      throw NotPositiveDefiniteError("NoiseSpec: zero covariance cannot be inverted");
    }
  }

  Eigen::Index dim_ = 0;
  std::optional<double> scale_{};
  Matrix matrix_{};
  Eigen::LLT<Matrix> chol_{};
};

/// mean + Cξ, ξ standard normal drawn from `rng`.
inline Vector sample_gaussian(const Vector& mean, const NoiseSpec& cov, RngStream& rng) {
  if (mean.size() != cov.dim()) {
    throw std::invalid_argument("sample_gaussian: mean has dimension " + std::to_string(mean.size()) +
                                " but covariance has dimension " + std::to_string(cov.dim()));
  }
  if (cov.is_zero()) {
    return mean;
  }
  return mean + cov.sample(rng);
}

}  // namespace projda

#endif
