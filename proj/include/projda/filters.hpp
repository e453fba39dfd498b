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

#ifndef PROJDA_FILTERS_HPP
#define PROJDA_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <projda/models.hpp>
#include <projda/numerics.hpp>
#include <projda/reduction.hpp>

/**
 * \file
 * \brief Particle filters: standard, optimal proposal, and their projected variants.
 *
 * Random numbers within one step are drawn in a fixed order so that a projected
 * filter with identity bases reproduces its unprojected counterpart bit for bit.
 * The step forks `rng` once; particle l draws from `split(l)`, the resampling
 * uniform from `split(L)` and the jitter of resampled particle k from `split(L+1+k)`.
 */

namespace projda {

/// All log-likelihoods were non-finite, so no particle carries weight.
class WeightCollapseError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct FilterConfig {
  double ess_threshold_fraction = 0.5;
  double resample_alpha = 0.99;
  double resample_omega = 1e-2;

  void validate() const {
    if (!(ess_threshold_fraction > 0.0 && ess_threshold_fraction <= 1.0)) {
      throw std::invalid_argument("FilterConfig: ess_threshold_fraction must lie in (0, 1]");
    }
    if (!(resample_alpha >= 0.0 && resample_alpha <= 1.0)) {
      throw std::invalid_argument("FilterConfig: resample_alpha must lie in [0, 1]");
    }
    if (!(resample_omega >= 0.0) || !std::isfinite(resample_omega)) {
      throw std::invalid_argument("FilterConfig: resample_omega must be finite and nonnegative");
    }
  }
};

/// L particles of common dimension with normalized weights.
struct ParticleEnsemble {
  std::vector<Vector> particles;
  Vector weights;

  static ParticleEnsemble uniform(std::vector<Vector> particles) {
    if (particles.empty()) {
      throw std::invalid_argument("ParticleEnsemble: need at least one particle");
    }
    ParticleEnsemble out;
    const auto n = static_cast<Eigen::Index>(particles.size());
    out.particles = std::move(particles);
    out.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    out.validate();
    return out;
  }

  [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(particles.size()); }
  [[nodiscard]] Eigen::Index dim() const { return particles.front().size(); }

  /// Σ w_l x_l
  [[nodiscard]] Vector mean() const {
    Vector out = Vector::Zero(dim());
    for (Eigen::Index l = 0; l < size(); ++l) {
      out += weights[l] * particles[static_cast<std::size_t>(l)];
    }
    return out;
  }

  void validate() const {
    if (particles.empty() || weights.size() != size()) {
      throw std::invalid_argument("ParticleEnsemble: particle and weight counts differ");
    }
    for (const Vector& p : particles) {
      if (p.size() != particles.front().size()) {
        throw std::invalid_argument("ParticleEnsemble: particles have different dimensions");
      }
    }
    if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("ParticleEnsemble: weights must be nonnegative and sum to one");
    }
  }
};

/// Outcome of one assimilation step.
struct StepInfo {
  double ess = 0.0;  ///< Before any resampling.
  bool resampled = false;
};

/// (Σw)² / Σw²
inline double ess(const Vector& weights) {
  if (weights.size() == 0 || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("ess: weights must be nonempty and nonnegative");
  }
  const double sq = weights.squaredNorm();
  if (!(sq > 0.0)) {
    throw WeightCollapseError("ess: degenerate weights, all are zero");
  }
  const double s = weights.sum();
  return s * s / sq;
}

/// Systematic resampling from one uniform draw; replication counts stay within 1 of L w_l.
inline std::vector<Eigen::Index> systematic_resample(const Vector& weights, RngStream& rng) {
  const Eigen::Index n = weights.size();
  if (n == 0) {
    throw std::invalid_argument("systematic_resample: empty weight vector");
  }
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = rng.uniform() * step;
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  double cumulative = weights[0];
  Eigen::Index source = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double position = u0 + static_cast<double>(k) * step;
    while (position >= cumulative && source < n - 1) {
      ++source;
      cumulative += weights[source];
    }
    out[static_cast<std::size_t>(k)] = source;
  }
  return out;
}

/**
 * Uᵀ[αVVᵀ + (1-α)I]ξ, ξ ~ N(0, ωI_M). U and V act on the state space.
 *
 * Returns zeros without drawing when ω = 0.
 */
inline Vector projected_resample_noise(const ReductionBasis& u, const ReductionBasis& v, double alpha,
                                       double omega, RngStream& rng) {
  if (u.dim() != v.dim()) {
    throw std::invalid_argument("projected_resample_noise: U and V must both act on the state space");
  }
  if (omega == 0.0) {
    return Vector::Zero(u.rank());
  }
  const Vector xi = std::sqrt(omega) * rng.normal_vector(u.dim());
  const Vector mixed = alpha * v.reconstruct(v.reduce(xi)) + (1.0 - alpha) * xi;
  return u.reduce(mixed);
}

/// G Q Gᵀ + R.
inline Matrix innovation_covariance(const Matrix& g, const NoiseSpec& q, const NoiseSpec& r) {
  return q.conjugate(g.transpose()) + r.matrix();
}

/**
 * Gaussian optimal proposal for x = f + η, η ~ N(0, Q), observed through y = Gx + ε,
 * ε ~ N(0, R).
 *
 * P = (Q⁻¹ + GᵀR⁻¹G)⁻¹ and mean f + PGᵀR⁻¹(y - Gf). For a state larger than the data
 * the equivalent gain QGᵀ(GQGᵀ + R)⁻¹ is used.
 */
class OptimalProposal {
 public:
  OptimalProposal() = default;

  OptimalProposal(const NoiseSpec& q, Matrix g, const NoiseSpec& r) : g_{std::move(g)} {
    const Eigen::Index n = q.dim();
    const Eigen::Index d = r.dim();
    if (g_.rows() != d || g_.cols() != n) {
      throw std::invalid_argument("OptimalProposal: observation matrix is " + std::to_string(g_.rows()) + " x " +
                                  std::to_string(g_.cols()) + ", expected " + std::to_string(d) + " x " +
                                  std::to_string(n));
    }
    if (q.is_zero()) {
      throw NotPositiveDefiniteError("OptimalProposal: model noise Q must be positive definite");
    }
    Matrix p;
    if (n <= d) {
      const Matrix r_inv_g = r.solve(g_);
      Matrix info = q.solve(Matrix(Matrix::Identity(n, n))) + g_.transpose() * r_inv_g;
      Eigen::LLT<Matrix> llt(info);
      if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("OptimalProposal: proposal covariance Q_p is singular");
      }
      p = llt.solve(Matrix(Matrix::Identity(n, n)));
      p = 0.5 * (p + p.transpose()).eval();
      gain_ = p * r_inv_g.transpose();
    } else {
      const Matrix qgt = apply(q, Matrix(g_.transpose()));
      const Matrix s = g_ * qgt + r.matrix();
      Eigen::LLT<Matrix> llt(s);
      if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("OptimalProposal: innovation covariance G Q Gᵀ + R is singular");
      }
      gain_ = llt.solve(qgt.transpose()).transpose();
      p = q.matrix() - gain_ * qgt.transpose();
      p = 0.5 * (p + p.transpose()).eval();
    }
    try {
      cov_ = NoiseSpec::dense(p);
    } catch (const NotPositiveDefiniteError&) {
      throw NotPositiveDefiniteError("OptimalProposal: proposal covariance Q_p is not positive definite");
    }
  }

  [[nodiscard]] const NoiseSpec& covariance() const noexcept { return cov_; }
  [[nodiscard]] const Matrix& gain() const noexcept { return gain_; }

  [[nodiscard]] Vector mean(const Vector& forecast, const Vector& y) const {
    return forecast + gain_ * (y - g_ * forecast);
  }

 private:
  static Matrix apply(const NoiseSpec& q, const Matrix& a) {
    if (q.is_scalar()) {
      return q.scale() * a;
    }
    return q.matrix() * a;
  }

  Matrix g_{};
  Matrix gain_{};
  NoiseSpec cov_{};
};

/// Innovation covariance of the weights, factorized once.
inline NoiseSpec weight_covariance(const Matrix& g, const NoiseSpec& q, const NoiseSpec& r) {
  try {
    return NoiseSpec::dense(innovation_covariance(g, q, r));
  } catch (const NotPositiveDefiniteError&) {
    throw NotPositiveDefiniteError("weight covariance Z = G Q Gᵀ + R is singular");
  }
}

namespace detail {

/// Adds log-likelihood increments, renormalizes and resamples on the ESS trigger.
inline StepInfo reweight_and_resample(ParticleEnsemble& ensemble, const Vector& log_increment,
                                      const RngStream& base, const ReductionBasis& noise_u,
                                      const ReductionBasis& noise_v, const FilterConfig& config) {
  const Eigen::Index n = ensemble.size();
  Vector log_w(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < n; ++l) {
    log_w[l] = std::log(ensemble.weights[l]) + log_increment[l];
    if (std::isnan(log_w[l])) {
      log_w[l] = -std::numeric_limits<double>::infinity();
    }
    max_log = std::max(max_log, log_w[l]);
  }
  if (!std::isfinite(max_log)) {
    throw WeightCollapseError("particle weights collapsed: every log-likelihood is non-finite");
  }
  Vector w = (log_w.array() - max_log).exp().matrix();
  w /= w.sum();
  ensemble.weights = w;

  StepInfo info;
  info.ess = ess(w);
  if (info.ess < config.ess_threshold_fraction * static_cast<double>(n)) {
    RngStream pick = base.split(static_cast<std::uint64_t>(n));
    const std::vector<Eigen::Index> idx = systematic_resample(w, pick);
    std::vector<Vector> next(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
      RngStream jitter = base.split(static_cast<std::uint64_t>(n + 1 + k));
      next[static_cast<std::size_t>(k)] =
          ensemble.particles[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] +
          projected_resample_noise(noise_u, noise_v, config.resample_alpha, config.resample_omega, jitter);
    }
    ensemble.particles = std::move(next);
    ensemble.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    info.resampled = true;
  }
  return info;
}

inline void check_ensemble(const ParticleEnsemble& ensemble, Eigen::Index dim, const char* who) {
  if (ensemble.particles.empty() || ensemble.weights.size() != ensemble.size()) {
    throw std::invalid_argument(std::string(who) + ": malformed ensemble");
  }
  if (ensemble.dim() != dim) {
    throw std::invalid_argument(std::string(who) + ": particles have dimension " + std::to_string(ensemble.dim()) +
                                ", expected " + std::to_string(dim));
  }
}

}  // namespace detail

/// x ← f(x) + N(0, Q); w ∝ w exp(-½ (y - Hx)ᵀR⁻¹(y - Hx)).
template <class Map>
StepInfo standard_pf_step(ParticleEnsemble& ensemble, Map&& f, const ObservationOperator& h,
                          const NoiseSpec& q, const NoiseSpec& r, const Vector& y, RngStream& rng,
                          const FilterConfig& config) {
  detail::check_ensemble(ensemble, h.state_dim(), "standard_pf_step");
  const Eigen::Index n = ensemble.size();
  const RngStream base = rng.fork();
  Vector log_inc(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    RngStream s = base.split(static_cast<std::uint64_t>(l));
    auto& x = ensemble.particles[static_cast<std::size_t>(l)];
    x = sample_gaussian(Vector(f(x)), q, s);
    log_inc[l] = -0.5 * r.quadratic_form(Vector(y - h.apply(x)));
  }
  const ReductionBasis eye = ReductionBasis::identity(h.state_dim());
  return detail::reweight_and_resample(ensemble, log_inc, base, eye, eye, config);
}

/**
 * Optimal-proposal step with a proposal built by the caller.
 *
 * `proposal` and `weight_cov` depend only on (Q, H, R) and can be reused across steps.
 */
template <class Map>
StepInfo oppf_step(ParticleEnsemble& ensemble, Map&& f, const ObservationOperator& h,
                   const OptimalProposal& proposal, const NoiseSpec& weight_cov, const Vector& y, RngStream& rng,
                   const FilterConfig& config) {
  detail::check_ensemble(ensemble, h.state_dim(), "oppf_step");
  const Eigen::Index n = ensemble.size();
  const Matrix hm = h.matrix();
  const RngStream base = rng.fork();
  Vector log_inc(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    RngStream s = base.split(static_cast<std::uint64_t>(l));
    auto& x = ensemble.particles[static_cast<std::size_t>(l)];
    const Vector fx = f(x);
    x = sample_gaussian(proposal.mean(fx, y), proposal.covariance(), s);
    log_inc[l] = -0.5 * weight_cov.quadratic_form(Vector(y - hm * fx));
  }
  const ReductionBasis eye = ReductionBasis::identity(h.state_dim());
  return detail::reweight_and_resample(ensemble, log_inc, base, eye, eye, config);
}

template <class Map>
StepInfo oppf_step(ParticleEnsemble& ensemble, Map&& f, const ObservationOperator& h, const NoiseSpec& q,
                   const NoiseSpec& r, const Vector& y, RngStream& rng, const FilterConfig& config) {
  const Matrix hm = h.matrix();
  const OptimalProposal proposal(q, hm, r);
  return oppf_step(ensemble, std::forward<Map>(f), h, proposal, weight_covariance(hm, q, r), y, rng, config);
}

/// z ← f^q(z) + N(0, Q^q); w ∝ w exp(-½ (ŷ - H^q z)ᵀ(R^q)⁻¹(ŷ - H^q z)).
inline StepInfo proj_pf_step(ParticleEnsemble& ensemble, const ReducedModel& model, const Vector& y_reduced,
                             RngStream& rng, const FilterConfig& config) {
  detail::check_ensemble(ensemble, model.state_now.rank(), "proj_pf_step");
  if (y_reduced.size() != model.reduced_data_dim()) {
    throw std::invalid_argument("proj_pf_step: reduced observation has the wrong dimension");
  }
  const Eigen::Index n = ensemble.size();
  const RngStream base = rng.fork();
  Vector log_inc(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    RngStream s = base.split(static_cast<std::uint64_t>(l));
    auto& z = ensemble.particles[static_cast<std::size_t>(l)];
    z = sample_gaussian(model.forecast(z), model.model_noise, s);
    log_inc[l] = -0.5 * model.data_noise.quadratic_form(Vector(y_reduced - model.reduced_operator * z));
  }
  return detail::reweight_and_resample(ensemble, log_inc, base, model.state_next, model.noise_basis, config);
}

/// Optimal proposal and weight covariance of a reduced model.
struct ProjectedProposal {
  OptimalProposal proposal;  ///< Built from Q^q, H U and the full R.
  NoiseSpec weight_cov;      ///< Z^q = H^q Q^q (H^q)ᵀ + R^q

  ProjectedProposal() = default;
  ProjectedProposal(const ReducedModel& model, const NoiseSpec& r)
      : proposal(model.model_noise, model.lifted_operator, r),
        weight_cov(weight_covariance(model.reduced_operator, model.model_noise, model.data_noise)) {}
};

/**
 * Projected optimal-proposal step.
 *
 * The proposal uses the full data y through the lifted operator H U; the weight uses
 * the reduced innovation ŷ - H^q f^q(z) against Z^q.
 */
inline StepInfo proj_oppf_step(ParticleEnsemble& ensemble, const ReducedModel& model,
                               const ProjectedProposal& proposal, const Vector& y, const Vector& y_reduced,
                               RngStream& rng, const FilterConfig& config) {
  detail::check_ensemble(ensemble, model.state_now.rank(), "proj_oppf_step");
  if (y.size() != model.lifted_operator.rows() || y_reduced.size() != model.reduced_data_dim()) {
    throw std::invalid_argument("proj_oppf_step: observation has the wrong dimension");
  }
  const Eigen::Index n = ensemble.size();
  const RngStream base = rng.fork();
  Vector log_inc(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    RngStream s = base.split(static_cast<std::uint64_t>(l));
    auto& z = ensemble.particles[static_cast<std::size_t>(l)];
    const Vector fz = model.forecast(z);
    z = sample_gaussian(proposal.proposal.mean(fz, y), proposal.proposal.covariance(), s);
    log_inc[l] = -0.5 * proposal.weight_cov.quadratic_form(Vector(y_reduced - model.reduced_operator * fz));
  }
  return detail::reweight_and_resample(ensemble, log_inc, base, model.state_next, model.noise_basis, config);
}

inline StepInfo proj_oppf_step(ParticleEnsemble& ensemble, const ReducedModel& model, const NoiseSpec& r,
                               const Vector& y, const Vector& y_reduced, RngStream& rng,
                               const FilterConfig& config) {
  return proj_oppf_step(ensemble, model, ProjectedProposal(model, r), y, y_reduced, rng, config);
}

}  // namespace projda

#endif
