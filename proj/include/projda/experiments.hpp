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

#ifndef PROJDA_EXPERIMENTS_HPP
#define PROJDA_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <projda/filters.hpp>
#include <projda/models.hpp>
#include <projda/numerics.hpp>
#include <projda/reduction.hpp>

/**
 * \file
 * \brief Twin experiments: truth generation, filtering runs, metrics and sweeps.
 */

namespace projda {

enum class ModelKind { l96, swe };
enum class FilterKind { pf, oppf, proj_pf, proj_oppf, non };
enum class TrainingSource { independent_run, truth };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::l96 ? "l96" : "swe"; }

inline std::string_view to_string(FilterKind k) {
  switch (k) {
    case FilterKind::pf:
      return "pf";
    case FilterKind::oppf:
      return "oppf";
    case FilterKind::proj_pf:
      return "projpf";
    case FilterKind::proj_oppf:
      return "projoppf";
    case FilterKind::non:
      return "non";
  }
  return "unknown";
}

inline std::string_view to_string(SweScenario s) {
  switch (s) {
    case SweScenario::velocities:
      return "velocities";
    case SweScenario::all:
      return "all";
    case SweScenario::height:
      return "height";
  }
  return "unknown";
}

inline bool is_projected(FilterKind k) { return k == FilterKind::proj_pf || k == FilterKind::proj_oppf; }

struct ExperimentConfig {
  ModelKind model = ModelKind::l96;
  L96Spec l96{};
  SweSpec swe{};
  SweJet jet{};

  SweScenario scenario = SweScenario::all;
  /// Fraction of components (L96) or grid nodes (SWE) observed.
  double obs_fraction = 1.0;

  double q_scale = 0.1;
  double r_scale = 0.01;
  bool truth_noise = true;

  BasisKind reduction = BasisKind::pod;
  DataReduction data_reduction = DataReduction::model_based;
  TrainingSource training = TrainingSource::independent_run;
  Eigen::Index r_p = 40;
  Eigen::Index r_d = 5;
  /// Internal steps covered by the training run; 0 means the length of the assimilation window.
  int training_steps = 0;
  int training_stride = 1;
  std::optional<Eigen::Index> dmd_svd_rank{};
  double aus_epsilon = 1e-6;

  FilterKind filter = FilterKind::proj_oppf;
  int particles = 20;
  FilterConfig filter_config{};

  int n_observations = 1000;
  /// Deterministic internal steps from the initial condition to the first analysis time.
  int burn_in_steps = 1000;
  int trials = 10;
  std::uint64_t base_seed = 1;
  /// First observation index (1-based) of the averaging window; 0 means the second half.
  int average_from = 0;

  std::vector<Eigen::Index> sweep_r_p{};
  std::vector<Eigen::Index> sweep_r_d{};
  std::vector<double> sweep_forcing{};
  std::vector<double> sweep_q_scale{};
  std::vector<SweScenario> sweep_scenario{};

  static ExperimentConfig l96_defaults() { return {}; }

  static ExperimentConfig swe_defaults() {
    ExperimentConfig c;
    c.model = ModelKind::swe;
    c.obs_fraction = 0.01;
    c.training = TrainingSource::truth;
    c.training_steps = 1440;
    c.training_stride = 10;
    c.r_p = 20;
    c.r_d = 10;
    c.particles = 5;
    c.filter_config.resample_omega = 1e-4;
    c.n_observations = 24;
    c.burn_in_steps = 2880;
    c.trials = 1;
    return c;
  }

  [[nodiscard]] Eigen::Index state_dim() const {
    return model == ModelKind::l96 ? l96.dimension : 3 * swe.nx * swe.ny;
  }
  [[nodiscard]] int steps_per_observation() const {
    return model == ModelKind::l96 ? l96.steps_per_observation : swe.steps_per_observation;
  }
  [[nodiscard]] double dt() const { return model == ModelKind::l96 ? l96.dt : swe.dt; }

  [[nodiscard]] int window_start() const { return average_from > 0 ? average_from : n_observations / 2 + 1; }

  void validate() const {
    if (model == ModelKind::l96) {
      l96.validate();
    } else {
      swe.validate();
    }
    filter_config.validate();
    const Eigen::Index m = state_dim();
    if (!(obs_fraction > 0.0 && obs_fraction <= 1.0)) {
      throw std::invalid_argument("observation.fraction must lie in (0, 1]");
    }
    if (!(q_scale > 0.0) || !(r_scale > 0.0)) {
      throw std::invalid_argument("noise.q_scale and noise.r_scale must be positive");
    }
    if (particles < 1) {
      throw std::invalid_argument("filter.particles must be at least 1");
    }
    if (n_observations < 1 || burn_in_steps < 0 || trials < 1) {
      throw std::invalid_argument("experiment: need n_observations >= 1, burn_in_steps >= 0, trials >= 1");
    }
    if (average_from < 0 || average_from > n_observations) {
      throw std::invalid_argument("experiment.average_from must lie in [0, n_observations]");
    }
    if (training_steps < 0 || training_stride < 1) {
      throw std::invalid_argument("reduction.training_steps must be >= 0 and reduction.training_stride >= 1");
    }
    if (is_projected(filter) && reduction != BasisKind::identity) {
      if (r_p < 1 || r_p > m) {
        throw std::invalid_argument("reduction.r_p must lie in [1, " + std::to_string(m) + "]");
      }
      if (r_d < 1 || r_d > r_p) {
        throw std::invalid_argument("reduction.r_d must lie in [1, r_p]");
      }
      if (reduction == BasisKind::aus && data_reduction == DataReduction::data_based) {
        throw std::invalid_argument("reduction.data_reduction: AUS supports only the model-based data reduction");
      }
    }
    if (!(aus_epsilon > 0.0)) {
      throw std::invalid_argument("reduction.aus_epsilon must be positive");
    }
  }
};

/// One analysis time.
struct MetricsEntry {
  int obs_index = 0;
  double time = 0.0;
  double rmse = 0.0;
  double rmse_proj = 0.0;
  double ess = 0.0;
  bool resampled = false;
};

struct MetricsRecord {
  std::vector<MetricsEntry> entries;
  double mean_rmse = 0.0;
  double mean_rmse_proj = 0.0;
  double resamp_fraction = 0.0;
  /// Effective reduced rank (differs from the request when DMD keeps a pair whole).
  Eigen::Index r_p = 0;
  bool failed = false;
  std::string failure;

  friend bool operator==(const MetricsRecord& a, const MetricsRecord& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t k = 0; k < a.entries.size(); ++k) {
      const auto& x = a.entries[k];
      const auto& y = b.entries[k];
      if (x.obs_index != y.obs_index || x.time != y.time || x.rmse != y.rmse || x.rmse_proj != y.rmse_proj ||
          x.ess != y.ess || x.resampled != y.resampled) {
        return false;
      }
    }
    return a.mean_rmse == b.mean_rmse && a.mean_rmse_proj == b.mean_rmse_proj &&
           a.resamp_fraction == b.resamp_fraction && a.failed == b.failed;
  }
};

/// ‖truth - mean‖ / √M
inline double rmse(const Vector& truth, const Vector& mean) {
  if (truth.size() != mean.size() || truth.size() == 0) {
    throw std::invalid_argument("rmse: dimension mismatch");
  }
  return (truth - mean).norm() / std::sqrt(static_cast<double>(truth.size()));
}

/// ‖UUᵀ truth - U z̄‖ / √rᵖ
inline double rmse_projected(const Vector& truth, const Vector& reduced_mean, const ReductionBasis& u) {
  return (u.reconstruct(u.reduce(truth)) - u.reconstruct(reduced_mean)).norm() /
         std::sqrt(static_cast<double>(u.rank()));
}

namespace detail {

/// Internal-step map and initial condition of the configured model.
struct ModelHandle {
  std::function<Vector(const Vector&)> step;
  std::function<Vector(RngStream&)> initial;
  int steps_per_observation = 1;
  double dt = 0.0;
  Eigen::Index dim = 0;

  [[nodiscard]] Vector cycle(const Vector& x) const {
    Vector out = x;
    for (int k = 0; k < steps_per_observation; ++k) {
      out = step(out);
    }
    return out;
  }
};

inline ModelHandle make_model(const ExperimentConfig& c) {
  ModelHandle h;
  if (c.model == ModelKind::l96) {
    const L96Model model(c.l96);
    h.step = [model](const Vector& x) { return model.step(x); };
    const double forcing = c.l96.forcing;
    const Eigen::Index m = c.l96.dimension;
    h.initial = [forcing, m](RngStream& rng) { return Vector(Vector::Constant(m, forcing) + rng.normal_vector(m)); };
  } else {
    const SweModel model(c.swe);
    h.step = [model](const Vector& x) { return model.step(x); };
    const SweJet jet = c.jet;
    h.initial = [model, jet](RngStream& rng) { return model.balanced_jet(jet, rng); };
  }
  h.steps_per_observation = c.steps_per_observation();
  h.dt = c.dt();
  h.dim = c.state_dim();
  return h;
}

inline ObservationOperator make_observation(const ExperimentConfig& c) {
  if (c.model == ModelKind::l96) {
    return c.obs_fraction == 1.0 ? ObservationOperator::identity(c.l96.dimension)
                                 : ObservationOperator::sparse(c.l96.dimension, c.obs_fraction);
  }
  return ObservationOperator::swe(SweModel(c.swe), c.scenario, c.obs_fraction);
}

enum RngRole : std::uint64_t { truth_ic = 0, truth_noise, obs_noise, training_ic, filter_noise, init_noise, basis_ic };

}  // namespace detail

/// Truth states at analysis times 0..n_observations and the observations at 1..n_observations.
struct TwinData {
  std::vector<Vector> truth;
  std::vector<Vector> observations;  ///< observations[k] belongs to truth[k + 1].
  /// States visited during the burn-in, every `training_stride` steps, ending at truth[0].
  std::vector<Vector> spin_up;
};

inline TwinData make_twin_data(const ExperimentConfig& c, const detail::ModelHandle& model,
                               const ObservationOperator& h, const NoiseSpec& q, const NoiseSpec& r,
                               const RngStream& trial_rng) {
  TwinData out;
  RngStream ic_rng = trial_rng.split(detail::truth_ic);
  RngStream noise_rng = trial_rng.split(detail::truth_noise);
  RngStream obs_rng = trial_rng.split(detail::obs_noise);
  Vector x = model.initial(ic_rng);
  const int train_steps = c.training_steps > 0 ? c.training_steps : c.n_observations * model.steps_per_observation;
  const int record_from = c.burn_in_steps - train_steps;
  for (int k = 0; k < c.burn_in_steps; ++k) {
    if (c.training == TrainingSource::truth && k >= record_from && (k - record_from) % c.training_stride == 0) {
      out.spin_up.push_back(x);
    }
    x = model.step(x);
  }
  if (c.training == TrainingSource::truth) {
    out.spin_up.push_back(x);
  }
  const auto cycle = [&model](const Vector& s) { return model.cycle(s); };
  out.truth = simulate_truth(cycle, x, c.n_observations, q, noise_rng, c.truth_noise);
  out.observations.reserve(static_cast<std::size_t>(c.n_observations));
  for (int k = 1; k <= c.n_observations; ++k) {
    out.observations.push_back(observe(out.truth[static_cast<std::size_t>(k)], h, r, obs_rng));
  }
  return out;
}

/// Snapshots of an independent run: random initial condition, burn-in, then `training_steps`.
inline std::vector<Vector> independent_training_run(const ExperimentConfig& c, const detail::ModelHandle& model,
                                                    const RngStream& trial_rng) {
  RngStream rng = trial_rng.split(detail::training_ic);
  Vector x = model.initial(rng);
  for (int k = 0; k < c.burn_in_steps; ++k) {
    x = model.step(x);
  }
  const int steps = c.training_steps > 0 ? c.training_steps : c.n_observations * model.steps_per_observation;
  std::vector<Vector> out;
  for (int k = 0; k <= steps; ++k) {
    if (k % c.training_stride == 0) {
      out.push_back(x);
    }
    if (k < steps) {
      x = model.step(x);
    }
  }
  return out;
}

/// Time-invariant state basis from training snapshots.
inline ReductionBasis training_basis(const ExperimentConfig& c, const std::vector<Vector>& snapshots,
                                     double snapshot_dt) {
  const Matrix x = snapshot_matrix(snapshots);
  if (c.reduction == BasisKind::pod) {
    return pod_basis(x, c.r_p);
  }
  if (c.reduction == BasisKind::dmd) {
    return dmd_basis(dmd(x, c.dmd_svd_rank, snapshot_dt), c.r_p);
  }
  throw std::invalid_argument("training_basis: only POD and DMD are trained from snapshots");
}

/**
 * Runs one twin experiment. Filter failures (weight collapse, blowup, singular
 * covariances) mark the record failed instead of propagating.
 */
inline MetricsRecord run_trial(const ExperimentConfig& c, std::uint64_t trial) {
  c.validate();
  MetricsRecord rec;
  try {
    const detail::ModelHandle model = detail::make_model(c);
    const ObservationOperator h = detail::make_observation(c);
    const Eigen::Index m = model.dim;
    const NoiseSpec q = NoiseSpec::scaled_identity(m, c.q_scale);
    const NoiseSpec r = NoiseSpec::scaled_identity(h.data_dim(), c.r_scale);
    const RngStream trial_rng(c.base_seed, trial);
    const TwinData twin = make_twin_data(c, model, h, q, r, trial_rng);
    const Transition f = [&model](const Vector& x) { return model.cycle(x); };
    RngStream filter_rng = trial_rng.split(detail::filter_noise);
    RngStream init_rng = trial_rng.split(detail::init_noise);
    const double obs_dt = model.dt * model.steps_per_observation;
    const bool projected = is_projected(c.filter);

    // State and data bases.
    ReductionBasis u = ReductionBasis::identity(m);
    std::optional<ReductionBasis> v_override;
    Matrix aus_u;
    if (projected) {
      if (c.reduction == BasisKind::identity) {
        u = ReductionBasis::identity(m);
      } else if (c.reduction == BasisKind::aus) {
        // Spin the Lyapunov basis up along the truth's burn-in window before the first analysis.
        RngStream basis_rng = trial_rng.split(detail::basis_ic);
        Matrix start(m, c.r_p);
        for (Eigen::Index j = 0; j < c.r_p; ++j) {
          start.col(j) = basis_rng.normal_vector(m);
        }
        aus_u = qr_positive(start).q;
        RngStream ic_rng = trial_rng.split(detail::truth_ic);
        Vector x = model.initial(ic_rng);
        const int spin_cycles = c.burn_in_steps / model.steps_per_observation;
        const int remainder = c.burn_in_steps % model.steps_per_observation;
        for (int k = 0; k < remainder; ++k) {
          x = model.step(x);
        }
        for (int k = 0; k < spin_cycles; ++k) {
          const Vector fx = f(x);
          aus_u = aus_step(f, x, aus_u, c.aus_epsilon, &fx).basis.columns();
          x = fx;
        }
        u = ReductionBasis::from_columns(aus_u, BasisKind::aus, true, 1e-9);
      } else {
        const std::vector<Vector> snaps = c.training == TrainingSource::truth
                                              ? twin.spin_up
                                              : independent_training_run(c, model, trial_rng);
        u = training_basis(c, snaps, model.dt * c.training_stride);
        if (c.data_reduction == DataReduction::data_based) {
          std::vector<Vector> observed;
          observed.reserve(snaps.size());
          for (const Vector& s : snaps) {
            observed.push_back(h.apply(s));
          }
          if (c.reduction == BasisKind::pod) {
            v_override = pod_basis(snapshot_matrix(observed), c.r_d);
          } else {
            v_override = dmd_basis(dmd(snapshot_matrix(observed), c.dmd_svd_rank, model.dt * c.training_stride), c.r_d);
          }
        }
      }
    }
    rec.r_p = u.rank();

    const auto data_basis = [&](const ReductionBasis& state) -> std::pair<ReductionBasis, DataReduction> {
      if (c.reduction == BasisKind::identity) {
        return {ReductionBasis::identity(h.data_dim()), DataReduction::data_based};
      }
      if (v_override) {
        return {*v_override, DataReduction::data_based};
      }
      return {state.leading(std::min(c.r_d, state.rank())), DataReduction::model_based};
    };

    // Initial ensemble around the truth at the first analysis time.
    std::vector<Vector> initial(static_cast<std::size_t>(c.particles));
    if (projected) {
      const NoiseSpec qq = reduce_covariance(q, u);
      const Vector z0 = u.reduce(twin.truth.front());
      for (auto& p : initial) {
        p = sample_gaussian(z0, qq, init_rng);
      }
    } else {
      for (auto& p : initial) {
        p = sample_gaussian(twin.truth.front(), q, init_rng);
      }
    }
    ParticleEnsemble ens = ParticleEnsemble::uniform(std::move(initial));

    // Operators that do not change between cycles.
    std::optional<OptimalProposal> full_proposal;
    std::optional<NoiseSpec> full_weight_cov;
    if (c.filter == FilterKind::oppf || c.filter == FilterKind::non) {
      const Matrix hm = h.matrix();
      full_proposal.emplace(q, hm, r);
      full_weight_cov = weight_covariance(hm, q, r);
    }
    std::optional<ReducedModel> fixed_model;
    std::optional<ProjectedProposal> fixed_proposal;
    if (projected && !u.time_dependent()) {
      auto [v, kind] = data_basis(u);
      fixed_model = build_reduced_model(f, h, q, r, u, v, kind);
      if (c.filter == FilterKind::proj_oppf) {
        fixed_proposal.emplace(*fixed_model, r);
      }
    }

    const ReductionBasis eye = ReductionBasis::identity(m);
    for (int k = 1; k <= c.n_observations; ++k) {
      const Vector& y = twin.observations[static_cast<std::size_t>(k - 1)];
      const Vector& truth = twin.truth[static_cast<std::size_t>(k)];
      StepInfo info;
      ReductionBasis u_after = u;
      switch (c.filter) {
        case FilterKind::pf:
          info = standard_pf_step(ens, f, h, q, r, y, filter_rng, c.filter_config);
          break;
        case FilterKind::oppf:
        case FilterKind::non:
          info = oppf_step(ens, f, h, *full_proposal, *full_weight_cov, y, filter_rng, c.filter_config);
          break;
        case FilterKind::proj_pf:
        case FilterKind::proj_oppf: {
          const ReducedModel* rm = nullptr;
          const ProjectedProposal* pp = nullptr;
          std::optional<ReducedModel> cycle_model;
          std::optional<ProjectedProposal> cycle_proposal;
          if (fixed_model) {
            rm = &*fixed_model;
            pp = fixed_proposal ? &*fixed_proposal : nullptr;
          } else {
            // Advance the Lyapunov basis along the reconstructed analysis mean.
            const Vector x_mean = u.reconstruct(ens.mean());
            const Vector fx = f(x_mean);
            ReductionBasis u_next = aus_step(f, x_mean, u.columns(), c.aus_epsilon, &fx).basis;
            auto [v, kind] = data_basis(u_next);
            cycle_model = build_reduced_model(f, h, q, r, u, u_next, v, kind);
            rm = &*cycle_model;
            if (c.filter == FilterKind::proj_oppf) {
              cycle_proposal.emplace(*cycle_model, r);
              pp = &*cycle_proposal;
            }
            u_after = u_next;
          }
          const Vector y_hat = rm->reduce_data(y);
          if (c.filter == FilterKind::proj_pf) {
            info = proj_pf_step(ens, *rm, y_hat, filter_rng, c.filter_config);
          } else {
            info = proj_oppf_step(ens, *rm, *pp, y, y_hat, filter_rng, c.filter_config);
          }
          break;
        }
      }
      u = u_after;
      const Vector z_bar = ens.mean();
      const ReductionBasis& basis = projected ? u : eye;
      MetricsEntry e;
      e.obs_index = k;
      e.time = k * obs_dt;
      e.rmse = rmse(truth, basis.reconstruct(z_bar));
      e.rmse_proj = rmse_projected(truth, z_bar, basis);
      e.ess = info.ess;
      e.resampled = info.resampled;
      if (!std::isfinite(e.rmse)) {
        throw NumericalError("ensemble mean became non-finite");
      }
      rec.entries.push_back(e);
    }

    const int from = c.window_start();
    double sum = 0.0;
    double sum_proj = 0.0;
    int count = 0;
    int resampled = 0;
    for (const MetricsEntry& e : rec.entries) {
      if (e.obs_index >= from) {
        sum += e.rmse;
        sum_proj += e.rmse_proj;
        ++count;
      }
      resampled += e.resampled ? 1 : 0;
    }
    rec.mean_rmse = count > 0 ? sum / count : 0.0;
    rec.mean_rmse_proj = count > 0 ? sum_proj / count : 0.0;
    rec.resamp_fraction = static_cast<double>(resampled) / static_cast<double>(c.n_observations);
  } catch (const NumericalError& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  return rec;
}

// -----------------------------------------------------------------------------
// Sweeps
// -----------------------------------------------------------------------------

struct SweepPoint {
  Eigen::Index r_p = 0;
  Eigen::Index r_d = 0;
  double forcing = 0.0;
  SweScenario scenario = SweScenario::all;
  double q_scale = 0.0;
};

struct SummaryRow {
  SweepPoint point;
  Eigen::Index effective_r_p = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double mean_rmse_proj = 0.0;
  double std_rmse_proj = 0.0;
  double resamp_pct = 0.0;
  double std_resamp_pct = 0.0;
  int failed_trials = 0;
  int trials = 0;
};

/// Sweep points in output order: forcing (or scenario), then Q scale, r_p, r_d.
inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  const auto or_single = [](const auto& list, auto value) {
    using T = decltype(value);
    return list.empty() ? std::vector<T>{value} : std::vector<T>(list.begin(), list.end());
  };
  const std::vector<Eigen::Index> rps = or_single(c.sweep_r_p, c.r_p);
  const std::vector<Eigen::Index> rds = or_single(c.sweep_r_d, c.r_d);
  const std::vector<double> qs = or_single(c.sweep_q_scale, c.q_scale);
  const std::vector<double> fs = or_single(c.sweep_forcing, c.l96.forcing);
  const std::vector<SweScenario> scs = or_single(c.sweep_scenario, c.scenario);
  std::vector<SweepPoint> out;
  const std::size_t outer = c.model == ModelKind::l96 ? fs.size() : scs.size();
  for (std::size_t a = 0; a < outer; ++a) {
    for (double qv : qs) {
      for (Eigen::Index rp : rps) {
        for (Eigen::Index rd : rds) {
          SweepPoint p;
          p.r_p = rp;
          p.r_d = rd;
          p.q_scale = qv;
          if (c.model == ModelKind::l96) {
            p.forcing = fs[a];
          } else {
            p.scenario = scs[a];
          }
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

inline ExperimentConfig apply_point(ExperimentConfig c, const SweepPoint& p) {
  c.r_p = p.r_p;
  c.r_d = p.r_d;
  c.q_scale = p.q_scale;
  if (c.model == ModelKind::l96) {
    c.l96.forcing = p.forcing;
  } else {
    c.scenario = p.scenario;
  }
  return c;
}

/// Mean and sample standard deviation; zero spread for fewer than two values.
inline std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) {
    return {std::nan(""), std::nan("")};
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline SummaryRow summarize(const SweepPoint& p, const std::vector<MetricsRecord>& records) {
  SummaryRow row;
  row.point = p;
  row.effective_r_p = p.r_p;
  row.trials = static_cast<int>(records.size());
  std::vector<double> rm;
  std::vector<double> rp;
  std::vector<double> rs;
  for (const MetricsRecord& r : records) {
    if (r.failed) {
      ++row.failed_trials;
      continue;
    }
    row.effective_r_p = r.r_p;
    rm.push_back(r.mean_rmse);
    rp.push_back(r.mean_rmse_proj);
    rs.push_back(100.0 * r.resamp_fraction);
  }
  std::tie(row.mean_rmse, row.std_rmse) = mean_and_std(rm);
  std::tie(row.mean_rmse_proj, row.std_rmse_proj) = mean_and_std(rp);
  std::tie(row.resamp_pct, row.std_resamp_pct) = mean_and_std(rs);
  return row;
}

/// Calls `task(i)` for i in [0, n) on up to `jobs` threads.
template <class Task>
void parallel_for(std::size_t n, int jobs, Task&& task) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        task(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

/// All trials of all sweep points; rows follow `sweep_points` order for any `jobs`.
inline std::vector<SummaryRow> run_sweep(const ExperimentConfig& c, int jobs = 1,
                                         std::vector<std::vector<MetricsRecord>>* per_trial = nullptr) {
  const std::vector<SweepPoint> points = sweep_points(c);
  std::vector<ExperimentConfig> configs;
  for (const SweepPoint& p : points) {
    configs.push_back(apply_point(c, p));
    configs.back().validate();
  }
  const auto n_trials = static_cast<std::size_t>(c.trials);
  std::vector<std::vector<MetricsRecord>> results(points.size(), std::vector<MetricsRecord>(n_trials));
  parallel_for(points.size() * n_trials, jobs, [&](std::size_t i) {
    const std::size_t p = i / n_trials;
    const std::size_t t = i % n_trials;
    results[p][t] = run_trial(configs[p], t);
  });
  std::vector<SummaryRow> rows;
  rows.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    rows.push_back(summarize(points[p], results[p]));
  }
  if (per_trial != nullptr) {
    *per_trial = std::move(results);
  }
  return rows;
}

// -----------------------------------------------------------------------------
// CSV
// -----------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_trial_csv_header(std::ostream& os) { os << "trial,obs_index,time,rmse,rmse_proj,ess,resampled\n"; }

inline void write_trial_csv(std::ostream& os, std::uint64_t trial, const MetricsRecord& rec) {
  for (const MetricsEntry& e : rec.entries) {
    os << trial << ',' << e.obs_index << ',' << format_number(e.time) << ',' << format_number(e.rmse) << ','
       << format_number(e.rmse_proj) << ',' << format_number(e.ess) << ',' << (e.resampled ? 1 : 0) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, ModelKind model, const std::vector<SummaryRow>& rows) {
  os << "r_p,r_d," << (model == ModelKind::l96 ? "F" : "scenario")
     << ",Q_scale,mean_rmse,std_rmse,mean_rmse_proj,resamp_pct,failed_trials\n";
  for (const SummaryRow& r : rows) {
    os << r.effective_r_p << ',' << r.point.r_d << ',';
    if (model == ModelKind::l96) {
      os << format_number(r.point.forcing);
    } else {
      os << to_string(r.point.scenario);
    }
    os << ',' << format_number(r.point.q_scale) << ',' << format_number(r.mean_rmse) << ','
       << format_number(r.std_rmse) << ',' << format_number(r.mean_rmse_proj) << ',' << format_number(r.resamp_pct)
       << ',' << r.failed_trials << '\n';
  }
}

}  // namespace projda

#endif
