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

#ifndef PROJDA_REDUCTION_HPP
#define PROJDA_REDUCTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <projda/models.hpp>
#include <projda/numerics.hpp>

/**
 * \file
 * \brief Reduction bases (POD, DMD, approximate Lyapunov vectors) and the reduced
 * physical and data models built from them.
 */

namespace projda {

enum class BasisKind { pod, dmd, aus, identity };

inline std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::pod:
      return "pod";
    case BasisKind::dmd:
      return "dmd";
    case BasisKind::aus:
      return "aus";
    case BasisKind::identity:
      return "identity";
  }
  return "unknown";
}

inline BasisKind basis_kind_from_string(std::string_view s) {
  if (s == "pod") return BasisKind::pod;
  if (s == "dmd") return BasisKind::dmd;
  if (s == "aus") return BasisKind::aus;
  if (s == "identity") return BasisKind::identity;
  throw std::invalid_argument("unknown reduction kind '" + std::string(s) + "' (expected pod, dmd, aus or identity)");
}

/**
 * Orthonormal basis U (M x r) of a subspace of the state (or data) space.
 *
 * The identity basis stores no matrix; reduce and reconstruct are plain copies, so an
 * identity reduction reproduces unreduced arithmetic exactly.
 */
class ReductionBasis {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-10;

  static ReductionBasis identity(Eigen::Index dim) {
    if (dim < 1) {
      throw std::invalid_argument("ReductionBasis: dimension must be positive");
    }
    ReductionBasis out;
    out.dim_ = dim;
    out.rank_ = dim;
    out.kind_ = BasisKind::identity;
    return out;
  }

  /// Throws when the columns are not orthonormal within `tolerance`.
  static ReductionBasis from_columns(Matrix columns, BasisKind kind, bool time_dependent = false,
                                     double tolerance = kOrthonormalityTolerance) {
    if (columns.rows() < 1 || columns.cols() < 1) {
      throw std::invalid_argument("ReductionBasis: empty basis");
    }
    if (columns.cols() > columns.rows()) {
      throw std::invalid_argument("ReductionBasis: rank " + std::to_string(columns.cols()) +
                                  " exceeds dimension " + std::to_string(columns.rows()));
    }
    const double defect =
        (columns.transpose() * columns - Matrix::Identity(columns.cols(), columns.cols())).cwiseAbs().maxCoeff();
    if (!(defect <= tolerance)) {
      throw NumericalError("ReductionBasis: columns are not orthonormal (max |UᵀU - I| = " + std::to_string(defect) +
                           ")");
    }
    ReductionBasis out;
    out.dim_ = columns.rows();
    out.rank_ = columns.cols();
    out.columns_ = std::move(columns);
    out.kind_ = kind;
    out.time_dependent_ = time_dependent;
    return out;
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
  [[nodiscard]] Eigen::Index rank() const noexcept { return rank_; }
  [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_identity() const noexcept { return kind_ == BasisKind::identity; }
  [[nodiscard]] bool time_dependent() const noexcept { return time_dependent_; }

  /// Number of columns added beyond the requested rank to keep a conjugate pair whole.
  [[nodiscard]] int rounded_up() const noexcept { return rounded_up_; }
  void set_rounded_up(int n) noexcept { rounded_up_ = n; }

  [[nodiscard]] Matrix columns() const {
    if (is_identity()) {
      return Matrix::Identity(dim_, dim_);
    }
    return columns_;
  }

  /// Uᵀx
  [[nodiscard]] Vector reduce(const Vector& x) const {
    check_rows(x.size());
    if (is_identity()) {
      return x;
    }
    return columns_.transpose() * x;
  }

  /// UᵀX
  [[nodiscard]] Matrix reduce(const Matrix& x) const {
    check_rows(x.rows());
    if (is_identity()) {
      return x;
    }
    return columns_.transpose() * x;
  }

  /// Uz
  [[nodiscard]] Vector reconstruct(const Vector& z) const {
    if (z.size() != rank_) {
      throw std::invalid_argument("ReductionBasis: reduced vector has dimension " + std::to_string(z.size()) +
                                  ", expected " + std::to_string(rank_));
    }
    if (is_identity()) {
      return z;
    }
    return columns_ * z;
  }

  /// UUᵀx
  [[nodiscard]] Vector project(const Vector& x) const { return reconstruct(reduce(x)); }

  /// AU for a matrix A with `dim()` columns.
  [[nodiscard]] Matrix right_multiply(const Matrix& a) const {
    check_rows(a.cols());
    if (is_identity()) {
      return a;
    }
    return a * columns_;
  }

  /// Basis of the first r columns.
  [[nodiscard]] ReductionBasis leading(Eigen::Index r) const {
    if (r < 1 || r > rank_) {
      throw std::invalid_argument("ReductionBasis: cannot take " + std::to_string(r) + " leading columns of a rank " +
                                  std::to_string(rank_) + " basis");
    }
    if (r == rank_) {
      return *this;
    }
    ReductionBasis out;
    out.dim_ = dim_;
    out.rank_ = r;
    out.columns_ = is_identity() ? Matrix(Matrix::Identity(dim_, r)) : Matrix(columns_.leftCols(r));
    out.kind_ = is_identity() ? BasisKind::pod : kind_;
    out.time_dependent_ = time_dependent_;
    return out;
  }

 private:
  void check_rows(Eigen::Index n) const {
    if (n != dim_) {
      throw std::invalid_argument("ReductionBasis: operand has dimension " + std::to_string(n) + ", basis acts on " +
                                  std::to_string(dim_));
    }
  }

  Eigen::Index dim_ = 0;
  Eigen::Index rank_ = 0;
  Matrix columns_{};
  BasisKind kind_ = BasisKind::identity;
  bool time_dependent_ = false;
  int rounded_up_ = 0;
};

/// Stacks snapshot vectors as the columns of a matrix.
inline Matrix snapshot_matrix(const std::vector<Vector>& snapshots, std::size_t first = 0,
                              std::size_t stride = 1) {
  if (snapshots.empty() || first >= snapshots.size() || stride == 0) {
    throw std::invalid_argument("snapshot_matrix: no snapshots selected");
  }
  const std::size_t count = (snapshots.size() - first + stride - 1) / stride;
  Matrix x(snapshots.front().size(), static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) {
    x.col(static_cast<Eigen::Index>(k)) = snapshots[first + k * stride];
  }
  return x;
}

// -----------------------------------------------------------------------------
// POD
// -----------------------------------------------------------------------------

/// Relative singular-value cutoff used to decide the numerical rank of snapshot data.
inline constexpr double kSnapshotRankTolerance = 1e-10;

/// Leading r left singular vectors of the snapshot matrix.
inline ReductionBasis pod_basis(const Matrix& snapshots, Eigen::Index r) {
  const SvdResult f = svd(snapshots);
  const Eigen::Index rank = numerical_rank(f.singular_values, kSnapshotRankTolerance);
  if (r < 1 || r > rank) {
    throw std::invalid_argument("pod_basis: requested rank " + std::to_string(r) +
                                " but the snapshot matrix has numerical rank " + std::to_string(rank));
  }
  return ReductionBasis::from_columns(f.left.leftCols(r), BasisKind::pod);
}

// -----------------------------------------------------------------------------
// DMD
// -----------------------------------------------------------------------------

struct DmdResult {
  ComplexMatrix modes;        ///< Unit-norm columns, sorted by descending energy.
  ComplexVector eigenvalues;  ///< λ_m of the compressed operator.
  ComplexVector frequencies;  ///< ω_m = log(λ_m) / τ.
  ComplexVector coefficients; ///< b_m
  Vector energies;            ///< b̄_m
  double dt = 0.0;
  /// Modes discarded because λ_m was numerically zero.
  int dropped_modes = 0;
  /// Index of the conjugate partner of each mode, or -1 for real modes.
  std::vector<Eigen::Index> partner;
};

/// b̄ = |b| sqrt((exp(2 Re(ω) T) - 1) / (2 Re(ω) T)), and |b| when Re(ω) T vanishes.
inline double dmd_mode_energy(Complex b, Complex omega, double horizon) {
  const double a = omega.real() * horizon;
  if (std::abs(a) < 1e-12) {
    return std::abs(b);
  }
  return std::abs(b) * std::sqrt(std::expm1(2.0 * a) / (2.0 * a));
}

/**
 * Exact DMD of a snapshot sequence x_0..x_T (columns of `snapshots`) with spacing `dt`.
 *
 * `svd_rank` defaults to min(T, floor(0.9 M)), clipped to the numerical rank of the
 * left snapshot matrix. Coefficients b are fitted by least squares at five equally
 * spaced snapshots.
 */
inline DmdResult dmd(const Matrix& snapshots, std::optional<Eigen::Index> svd_rank, double dt) {
  const Eigen::Index m = snapshots.rows();
  const Eigen::Index t = snapshots.cols() - 1;
  if (t < 2) {
    throw std::invalid_argument("dmd: need at least three snapshots");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("dmd: snapshot spacing must be positive");
  }
  const Matrix x1 = snapshots.leftCols(t);
  const Matrix x2 = snapshots.rightCols(t);
  const SvdResult f = svd(x1);
  const Eigen::Index rank = numerical_rank(f.singular_values, kSnapshotRankTolerance);
  Eigen::Index r = 0;
  if (svd_rank) {
    r = *svd_rank;
    if (r < 1 || r > rank) {
      throw std::invalid_argument("dmd: SVD truncation " + std::to_string(r) +
                                  " exceeds the numerical rank " + std::to_string(rank) +
                                  " of the left snapshot matrix");
    }
  } else {
    r = std::min({t, static_cast<Eigen::Index>(0.9 * static_cast<double>(m)), rank});
    r = std::max<Eigen::Index>(r, 1);
  }

  const Matrix phi = f.left.leftCols(r);
  const Matrix psi = f.right.leftCols(r);
  const Vector sigma_inv = f.singular_values.head(r).cwiseInverse();
  const Matrix lifted = x2 * psi * sigma_inv.asDiagonal();  // X₂ Ψ Σ⁻¹
  const Matrix compressed = phi.transpose() * lifted;
  const EigResult eig = eig_general(compressed);

  const double max_abs = eig.values.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> kept;
  DmdResult out;
  out.dt = dt;
  for (Eigen::Index k = 0; k < r; ++k) {
    if (std::abs(eig.values[k]) <= 1e-13 * max_abs || eig.values[k] == 0.0) {
      ++out.dropped_modes;
    } else {
      kept.push_back(k);
    }
  }
  if (kept.empty()) {
    throw NumericalError("dmd: all eigenvalues of the compressed operator vanish");
  }

  const auto n_modes = static_cast<Eigen::Index>(kept.size());
  ComplexMatrix modes(m, n_modes);
  ComplexVector lambda(n_modes);
  ComplexVector omega(n_modes);
  for (Eigen::Index c = 0; c < n_modes; ++c) {
    const Eigen::Index k = kept[static_cast<std::size_t>(c)];
    lambda[c] = eig.values[k];
    ComplexVector mode = (lifted.cast<Complex>() * eig.vectors.col(k)) / eig.values[k];
    modes.col(c) = mode / mode.norm();
    omega[c] = std::log(eig.values[k]) / dt;
  }

  // Coefficients: least squares over five equally spaced snapshots.
  const Eigen::Index n_fit = std::min<Eigen::Index>(5, t + 1);
  ComplexMatrix system(m * n_fit, n_modes);
  ComplexVector rhs(m * n_fit);
  for (Eigen::Index s = 0; s < n_fit; ++s) {
    const auto idx = static_cast<Eigen::Index>(
        std::llround(static_cast<double>(s) * static_cast<double>(t) / static_cast<double>(n_fit - 1)));
    const double time = static_cast<double>(idx) * dt;
    for (Eigen::Index c = 0; c < n_modes; ++c) {
      system.block(s * m, c, m, 1) = modes.col(c) * std::exp(omega[c] * time);
    }
    rhs.segment(s * m, m) = snapshots.col(idx).cast<Complex>();
  }
  const ComplexVector b = system.colPivHouseholderQr().solve(rhs);
  if (!b.allFinite()) {
    throw NumericalError("dmd: coefficient regression produced non-finite values");
  }

  const double horizon = static_cast<double>(t) * dt;
  Vector energy(n_modes);
  for (Eigen::Index c = 0; c < n_modes; ++c) {
    energy[c] = dmd_mode_energy(b[c], omega[c], horizon);
  }

  // Group conjugate pairs, then order groups by energy.
  struct Group {
    Eigen::Index first;
    Eigen::Index second;  // -1 for a real mode
    double energy;
  };
  std::vector<Group> groups;
  for (Eigen::Index c = 0; c < n_modes; ++c) {
    const bool complex_value = lambda[c].imag() != 0.0;
    if (complex_value && c + 1 < n_modes &&
        std::abs(lambda[c + 1] - std::conj(lambda[c])) <= 1e-12 * std::abs(lambda[c])) {
      const Eigen::Index pos = lambda[c].imag() > 0.0 ? c : c + 1;
      const Eigen::Index neg = pos == c ? c + 1 : c;
      groups.push_back({pos, neg, 0.5 * (energy[c] + energy[c + 1])});
      ++c;
    } else {
      groups.push_back({c, -1, energy[c]});
    }
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& g) { return a.energy > g.energy; });

  out.modes.resize(m, n_modes);
  out.eigenvalues.resize(n_modes);
  out.frequencies.resize(n_modes);
  out.coefficients.resize(n_modes);
  out.energies.resize(n_modes);
  out.partner.assign(static_cast<std::size_t>(n_modes), -1);
  Eigen::Index pos = 0;
  const auto place = [&](Eigen::Index src, double e) {
    out.modes.col(pos) = modes.col(src);
    out.eigenvalues[pos] = lambda[src];
    out.frequencies[pos] = omega[src];
    out.coefficients[pos] = b[src];
    out.energies[pos] = e;
    ++pos;
  };
  for (const Group& g : groups) {
    place(g.first, g.energy);
    if (g.second >= 0) {
      place(g.second, g.energy);
      out.partner[static_cast<std::size_t>(pos - 2)] = pos - 1;
      out.partner[static_cast<std::size_t>(pos - 1)] = pos - 2;
    }
  }
  return out;
}

/**
 * Orthonormal basis of the subspace spanned by the most energetic DMD modes.
 *
 * A complex pair contributes Re υ and Im υ. A pair is never split: if the request
 * would cut one, the basis gets one extra column and `rounded_up()` reports it.
 */
inline ReductionBasis dmd_basis(const DmdResult& result, Eigen::Index r) {
  const Eigen::Index m = result.modes.rows();
  if (r < 1 || r > m) {
    throw std::invalid_argument("dmd_basis: requested rank " + std::to_string(r) + " outside [1, " +
                                std::to_string(m) + "]");
  }
  std::vector<Vector> directions;
  Eigen::Index c = 0;
  while (static_cast<Eigen::Index>(directions.size()) < r && c < result.modes.cols()) {
    const Eigen::Index partner = result.partner[static_cast<std::size_t>(c)];
    if (partner >= 0) {
      directions.emplace_back(result.modes.col(c).real());
      directions.emplace_back(result.modes.col(c).imag());
      c += 2;
    } else {
      directions.emplace_back(result.modes.col(c).real());
      c += 1;
    }
  }
  const auto gathered = static_cast<Eigen::Index>(directions.size());
  if (gathered < r) {
    throw std::invalid_argument("dmd_basis: only " + std::to_string(gathered) + " real directions available, " +
                                std::to_string(r) + " requested");
  }
  if (gathered > m) {
    throw std::invalid_argument("dmd_basis: keeping the last conjugate pair would exceed the state dimension");
  }
  Matrix stacked(m, gathered);
  for (Eigen::Index k = 0; k < gathered; ++k) {
    stacked.col(k) = directions[static_cast<std::size_t>(k)];
  }
  const SvdResult f = svd(stacked);
  if (numerical_rank(f.singular_values, 1e-12) < gathered) {
    throw RankDeficientError("dmd_basis: selected DMD modes are linearly dependent");
  }
  ReductionBasis out = ReductionBasis::from_columns(f.left.leftCols(gathered), BasisKind::dmd);
  out.set_rounded_up(static_cast<int>(gathered - r));
  return out;
}

// -----------------------------------------------------------------------------
// Approximate Lyapunov vectors
// -----------------------------------------------------------------------------

struct AusStep {
  ReductionBasis basis;  ///< U_{t+1}
  Matrix t;              ///< Upper triangular, positive diagonal.
};

/// Finite-difference step size used for state x: `relative * ‖x‖`, or `relative` for x = 0.
inline double aus_increment(const Vector& x, double relative) {
  const double norm = x.norm();
  return norm > 0.0 ? relative * norm : relative;
}

/**
 * One discrete-QR step: Z = [f(x + εU) - f(x)] / ε column by column, then Z = U_{t+1} T.
 *
 * `relative_epsilon` is scaled by ‖x‖. Throws RankDeficientError when the propagated
 * basis collapses.
 */
template <class Map>
AusStep aus_step(Map&& f, const Vector& x, const Matrix& u, double relative_epsilon = 1e-6,
                 const Vector* fx_cached = nullptr) {
  if (!(relative_epsilon > 0.0)) {
    throw std::invalid_argument("aus_step: epsilon must be positive");
  }
  if (u.rows() != x.size()) {
    throw std::invalid_argument("aus_step: basis and state dimensions differ");
  }
  const double eps = aus_increment(x, relative_epsilon);
  const Vector fx = fx_cached ? *fx_cached : Vector(f(x));
  Matrix z(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const Vector xp = x + eps * u.col(j);
    z.col(j) = (f(xp) - fx) / eps;
  }
  QrResult qr;
  try {
    qr = qr_positive(z);
  } catch (const RankDeficientError& e) {
    throw RankDeficientError(std::string("aus_step: Lyapunov basis collapsed: ") + e.what());
  }
  return {ReductionBasis::from_columns(std::move(qr.q), BasisKind::aus, true, 1e-9), std::move(qr.t)};
}

struct LyapunovOptions {
  double relative_epsilon = 1e-6;
  /// Steps that advance (x, U) before averaging starts.
  int transient_steps = 0;
};

/**
 * Leading p Lyapunov exponents of x ↦ f(x), from time averages of ln diag(T_t).
 *
 * `step_time` is the time represented by one application of f. `u0` defaults to the
 * first p columns of the identity. Returned in descending order.
 */
template <class Map>
std::vector<double> lyapunov_spectrum(Map&& f, const Vector& x0, int n_steps, Eigen::Index p, double step_time,
                                      const LyapunovOptions& options = {},
                                      std::optional<Matrix> u0 = std::nullopt) {
  const Eigen::Index m = x0.size();
  if (p < 1 || p > m) {
    throw std::invalid_argument("lyapunov_spectrum: p must lie in [1, " + std::to_string(m) + "]");
  }
  if (n_steps < 1 || !(step_time > 0.0)) {
    throw std::invalid_argument("lyapunov_spectrum: need n_steps >= 1 and a positive step time");
  }
  Matrix u = u0 ? *u0 : Matrix(Matrix::Identity(m, p));
  if (u.rows() != m || u.cols() != p) {
    throw std::invalid_argument("lyapunov_spectrum: initial basis has the wrong shape");
  }
  Vector x = x0;
  Vector sums = Vector::Zero(p);
  for (int k = 0; k < options.transient_steps + n_steps; ++k) {
    const Vector fx = f(x);
    AusStep s = aus_step(f, x, u, options.relative_epsilon, &fx);
    if (k >= options.transient_steps) {
      sums += s.t.diagonal().array().log().matrix();
    }
    u = s.basis.columns();
    x = fx;
  }
  std::vector<double> out(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    out[static_cast<std::size_t>(i)] = sums[i] / (static_cast<double>(n_steps) * step_time);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/**
 * Kaplan-Yorke dimension k + (λ₁ + … + λ_k)/|λ_{k+1}|, k the largest index with a
 * positive partial sum. Returns 0 when λ₁ ≤ 0.
 */
inline double kaplan_yorke(const std::vector<double>& exponents) {
  if (exponents.empty()) {
    throw std::invalid_argument("kaplan_yorke: empty spectrum");
  }
  if (!std::is_sorted(exponents.begin(), exponents.end(), std::greater<>())) {
    throw std::invalid_argument("kaplan_yorke: exponents must be sorted in descending order");
  }
  if (exponents.front() <= 0.0) {
    return 0.0;
  }
  double sum = 0.0;
  std::size_t k = 0;
  double sum_k = 0.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    sum += exponents[i];
    if (sum > 0.0) {
      k = i + 1;
      sum_k = sum;
    }
  }
  if (k == exponents.size()) {
    throw std::invalid_argument("kaplan_yorke: spectrum insufficient, every partial sum is positive; compute more exponents");
  }
  return static_cast<double>(k) + sum_k / std::abs(exponents[k]);
}

/// Number of positive entries.
inline int count_positive(const std::vector<double>& exponents) {
  return static_cast<int>(std::count_if(exponents.begin(), exponents.end(), [](double l) { return l > 0.0; }));
}

// -----------------------------------------------------------------------------
// Reduced models
// -----------------------------------------------------------------------------

enum class DataReduction { model_based, data_based };

inline std::string_view to_string(DataReduction kind) {
  return kind == DataReduction::model_based ? "model-based" : "data-based";
}

using Transition = std::function<Vector(const Vector&)>;

/**
 * Reduced physical and data models for one observation cycle.
 *
 * Both data reductions are written as ŷ = Wᵀy with H^q = Wᵀ H U and R^q = Wᵀ R W:
 * W = (H⁺)ᵀ V for the model-based form (V acts on the state space) and W = V for the
 * data-based form (V acts on the data space).
 */
struct ReducedModel {
  Transition full_transition;
  ReductionBasis state_now;   ///< U_t
  ReductionBasis state_next;  ///< U_{t+1}
  ReductionBasis data_basis;  ///< V
  DataReduction data_kind = DataReduction::model_based;

  Matrix lifted_operator;     ///< H U_{t+1}, d x r_p
  Matrix data_weights;        ///< W, d x r_d
  Matrix reduced_operator;    ///< H^q, r_d x r_p
  NoiseSpec model_noise;      ///< Q^q
  NoiseSpec data_noise;       ///< R^q
  ReductionBasis noise_basis; ///< V expressed in the state space, for resampling noise

  [[nodiscard]] Eigen::Index reduced_state_dim() const noexcept { return state_next.rank(); }
  [[nodiscard]] Eigen::Index reduced_data_dim() const noexcept { return data_weights.cols(); }

  /// f^q(z) = U_{t+1}ᵀ f(U_t z)
  [[nodiscard]] Vector forecast(const Vector& z) const {
    return state_next.reduce(full_transition(state_now.reconstruct(z)));
  }

  /// ŷ = Wᵀ y
  [[nodiscard]] Vector reduce_data(const Vector& y) const {
    if (y.size() != data_weights.rows()) {
      throw std::invalid_argument("ReducedModel: observation has dimension " + std::to_string(y.size()) +
                                  ", expected " + std::to_string(data_weights.rows()));
    }
    return data_weights.transpose() * y;
  }
};

/// Uᵀ Q U for orthonormal U: exactly q I when Q = q I.
inline NoiseSpec reduce_covariance(const NoiseSpec& q, const ReductionBasis& u) {
  if (q.dim() != u.dim()) {
    throw std::invalid_argument("reduce_covariance: covariance and basis dimensions differ");
  }
  if (q.is_scalar()) {
    return NoiseSpec::scaled_identity(u.rank(), q.scale());
  }
  return NoiseSpec::dense(u.reduce(Matrix(u.reduce(q.matrix()).transpose())));
}

/**
 * Assembles the reduced model of one cycle from U_t, U_{t+1} and V.
 *
 * Throws NotPositiveDefiniteError naming the data reduction when R^q is singular.
 */
inline ReducedModel build_reduced_model(Transition f, const ObservationOperator& h, const NoiseSpec& q,
                                        const NoiseSpec& r, const ReductionBasis& u_now,
                                        const ReductionBasis& u_next, const ReductionBasis& v,
                                        DataReduction kind) {
  const Eigen::Index m = h.state_dim();
  const Eigen::Index d = h.data_dim();
  if (u_now.dim() != m || u_next.dim() != m || u_now.rank() != u_next.rank()) {
    throw std::invalid_argument("build_reduced_model: state bases must be M x r_p with M = " + std::to_string(m));
  }
  if (q.dim() != m || r.dim() != d) {
    throw std::invalid_argument("build_reduced_model: Q must be M x M and R must be d x d");
  }
  const Matrix hm = h.matrix();
  ReducedModel out;
  out.full_transition = std::move(f);
  out.state_now = u_now;
  out.state_next = u_next;
  out.data_basis = v;
  out.data_kind = kind;
  out.lifted_operator = u_next.right_multiply(hm);

  if (kind == DataReduction::model_based) {
    if (v.dim() != m) {
      throw std::invalid_argument("build_reduced_model: model-based data reduction needs V with M = " +
                                  std::to_string(m) + " rows, got " + std::to_string(v.dim()));
    }
    // W = (H⁺)ᵀ V; H⁺ = Hᵀ for a row selection, so (H⁺)ᵀ = H.
    out.data_weights = v.right_multiply(hm);
    out.noise_basis = v;
  } else {
    if (v.dim() != d) {
      throw std::invalid_argument("build_reduced_model: data-based reduction needs V with d = " + std::to_string(d) +
                                  " rows, got " + std::to_string(v.dim()));
    }
    out.data_weights = v.columns();
    if (v.is_identity() && h.is_identity()) {
      out.noise_basis = ReductionBasis::identity(m);
    } else {
      const Matrix lifted = h.pseudoinverse() * out.data_weights;
      out.noise_basis = ReductionBasis::from_columns(lifted, v.is_identity() ? BasisKind::pod : v.kind());
    }
  }
  out.reduced_operator = out.data_weights.transpose() * out.lifted_operator;
  out.model_noise = reduce_covariance(q, u_next);
  const auto singular = [kind] {
    return NotPositiveDefiniteError(
        std::string("build_reduced_model: reduced data-noise covariance R^q is singular; the ") +
        std::string(to_string(kind)) + " data reduction V does not see enough observed components");
  };
  try {
    out.data_noise = NoiseSpec::dense(r.conjugate(out.data_weights));
  } catch (const NotPositiveDefiniteError&) {
    throw singular();
  }
  if (out.data_noise.is_zero()) {
    throw singular();
  }
  return out;
}

/// Time-independent reduction: U_t = U_{t+1} = U.
inline ReducedModel build_reduced_model(Transition f, const ObservationOperator& h, const NoiseSpec& q,
                                        const NoiseSpec& r, const ReductionBasis& u, const ReductionBasis& v,
                                        DataReduction kind) {
  return build_reduced_model(std::move(f), h, q, r, u, u, v, kind);
}

}  // namespace projda

#endif
