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

#ifndef PROJDA_MODELS_HPP
#define PROJDA_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <projda/numerics.hpp>

/**
 * \file
 * \brief Discrete-time stochastic models x_{t+1} = f(x_t) + w_t and the linear
 * observation map y = Hx + v.
 *
 * A model exposes one integrator step (`step`) of length `dt()`. The filters work on
 * the observation-cycle map, `steps_per_observation()` integrator steps composed,
 * which is what `cycle()` computes.
 */

namespace projda {

/// Raised when an integration produces non-finite values or leaves its stability region.
class BlowupError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

template <class M>
concept DynamicalModel = requires(const M& m, const Vector& x) {
  { m.step(x) } -> std::convertible_to<Vector>;
  { m.dimension() } -> std::convertible_to<Eigen::Index>;
  { m.dt() } -> std::convertible_to<double>;
  { m.steps_per_observation() } -> std::convertible_to<int>;
};

/// Applies `n` integrator steps.
template <DynamicalModel M>
Vector propagate(const M& model, Vector x, int n) {
  for (int k = 0; k < n; ++k) {
    x = model.step(x);
  }
  return x;
}

/// The deterministic part of the observation-cycle map.
template <DynamicalModel M>
Vector cycle(const M& model, const Vector& x) {
  return propagate(model, x, model.steps_per_observation());
}

/// Classical fourth-order Runge-Kutta step.
template <class Rhs>
Vector step_rk4(Rhs&& rhs, const Vector& state, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_rk4: dt must be positive");
  }
  const Vector k1 = rhs(state);
  const Vector k2 = rhs(state + 0.5 * dt * k1);
  const Vector k3 = rhs(state + 0.5 * dt * k2);
  const Vector k4 = rhs(state + dt * k3);
  Vector out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) {
    throw BlowupError("step_rk4: integration produced non-finite values");
  }
  return out;
}

// -----------------------------------------------------------------------------
// Lorenz-96
// -----------------------------------------------------------------------------

struct L96Spec {
  Eigen::Index dimension = 40;
  double forcing = 8.0;
  double dt = 0.01;
  int steps_per_observation = 5;

  void validate() const {
    if (dimension < 4) {
      throw std::invalid_argument("L96Spec: dimension must be at least 4, got " + std::to_string(dimension));
    }
    if (!(dt > 0.0)) {
      throw std::invalid_argument("L96Spec: dt must be positive");
    }
    if (steps_per_observation < 1) {
      throw std::invalid_argument("L96Spec: steps_per_observation must be at least 1");
    }
  }
};

/// du_i/dt = (u_{i+1} - u_{i-2}) u_{i-1} - u_i + F with cyclic indices.
inline Vector l96_rhs(const Vector& u, double forcing) {
  const Eigen::Index m = u.size();
  if (m < 4) {
    throw std::invalid_argument("l96_rhs: dimension must be at least 4");
  }
  Vector out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double next = u[(i + 1) % m];
    const double prev = u[(i + m - 1) % m];
    const double prev2 = u[(i + m - 2) % m];
    out[i] = (next - prev2) * prev - u[i] + forcing;
  }
  return out;
}

class L96Model {
 public:
  explicit L96Model(L96Spec spec) : spec_{spec} { spec_.validate(); }

  [[nodiscard]] Vector step(const Vector& x) const {
    return step_rk4([this](const Vector& u) { return l96_rhs(u, spec_.forcing); }, x, spec_.dt);
  }

  [[nodiscard]] Eigen::Index dimension() const noexcept { return spec_.dimension; }
  [[nodiscard]] double dt() const noexcept { return spec_.dt; }
  [[nodiscard]] int steps_per_observation() const noexcept { return spec_.steps_per_observation; }
  [[nodiscard]] const L96Spec& spec() const noexcept { return spec_; }

 private:
  L96Spec spec_;
};

// -----------------------------------------------------------------------------
// Shallow water
// -----------------------------------------------------------------------------

/**
 * Shallow-water configuration. SI units; flat bottom.
 *
 * The channel is periodic in x with free-slip rigid walls in y. None of the physical
 * defaults below are tied to a particular published run; treat them as tunable.
 */
struct SweSpec {
  Eigen::Index nx = 64;
  Eigen::Index ny = 16;
  double dx = 50.0e3;
  double dy = 50.0e3;
  double gravity = 9.81;
  double coriolis = 1.0e-4;
  double bottom_friction = 0.0;
  /// Eddy viscosity [m²/s]. It damps grid-scale waves excited by the additive model noise.
  double viscosity = 2.0e4;
  double dt = 60.0;
  int steps_per_observation = 60;
  /// Depth used for the construction-time CFL check.
  double reference_depth = 10050.0;

  [[nodiscard]] double cfl_number(double depth, double speed = 0.0) const {
    return (speed + std::sqrt(gravity * depth)) * dt / std::min(dx, dy);
  }

  void validate() const {
    if (nx < 3 || ny < 2) {
      throw std::invalid_argument("SweSpec: grid must be at least 3 x 2");
    }
    if (!(dx > 0.0) || !(dy > 0.0) || !(dt > 0.0) || !(gravity > 0.0)) {
      throw std::invalid_argument("SweSpec: dx, dy, dt and gravity must be positive");
    }
    if (bottom_friction < 0.0 || viscosity < 0.0) {
      throw std::invalid_argument("SweSpec: friction and viscosity must be nonnegative");
    }
    if (viscosity * dt * (1.0 / (dx * dx) + 1.0 / (dy * dy)) > 0.5) {
      throw std::invalid_argument("SweSpec: viscosity too large for the explicit diffusion step");
    }
    if (steps_per_observation < 1) {
      throw std::invalid_argument("SweSpec: steps_per_observation must be at least 1");
    }
    if (!(reference_depth > 0.0)) {
      throw std::invalid_argument("SweSpec: reference_depth must be positive");
    }
    if (const double c = cfl_number(reference_depth); !(c < 1.0)) {
      throw std::invalid_argument("SweSpec: CFL number " + std::to_string(c) + " at the reference depth is not below 1");
    }
  }
};

/// Height profile and perturbation of the balanced zonal jet.
struct SweJet {
  double mean_depth = 10000.0;
  /// Half of the height drop across the jet.
  double amplitude = 50.0;
  /// Width of the tanh height profile [m].
  double width = 100.0e3;
  /// Amplitude of the large-scale seed perturbation of h [m].
  double seed_amplitude = 2.0;
  /// Standard deviation of the random grid-point perturbation of h [m].
  double noise_amplitude = 0.5;
};

/**
 * Two-step Lax-Wendroff discretization of the shallow-water equations in flux form,
 * advancing (h, hu, hv).
 *
 * The advective part is Strang split into one-dimensional two-step Lax-Wendroff
 * sweeps, x over dt/2, y over dt, x over dt/2, each stable for a directional CFL
 * number below 1. Coriolis is then applied as an exact rotation of (u, v), bottom
 * friction as exact decay and viscosity as an explicit Laplacian. Ghost rows mirror
 * the wall cells with v reversed, which makes the wall mass flux exactly zero, so the
 * sum of h is conserved to rounding.
 *
 * State layout is [u; v; h], each field stored row-major (index j * nx + i).
 */
class SweModel {
 public:
  explicit SweModel(SweSpec spec) : spec_{spec} { spec_.validate(); }

  [[nodiscard]] Eigen::Index cells() const noexcept { return spec_.nx * spec_.ny; }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return 3 * cells(); }
  [[nodiscard]] double dt() const noexcept { return spec_.dt; }
  [[nodiscard]] int steps_per_observation() const noexcept { return spec_.steps_per_observation; }
  [[nodiscard]] const SweSpec& spec() const noexcept { return spec_; }

  [[nodiscard]] Eigen::Index at(Eigen::Index i, Eigen::Index j) const noexcept { return j * spec_.nx + i; }

  [[nodiscard]] Vector step(const Vector& state) const;

  /// Total of h over the grid.
  [[nodiscard]] double mass(const Vector& state) const { return state.tail(cells()).sum(); }

  /// Zonal jet in geostrophic balance plus a seed perturbation of h. Uses `rng` only
  /// for the grid-point noise.
  [[nodiscard]] Vector balanced_jet(const SweJet& jet, RngStream& rng) const;

 private:
  void sweep_x(Vector& h, Vector& hu, Vector& hv, double tau) const;
  void sweep_y(Vector& h, Vector& hu, Vector& hv, double tau) const;

  SweSpec spec_;
};

inline Vector SweModel::step(const Vector& state) const {
  const Eigen::Index nx = spec_.nx;
  const Eigen::Index ny = spec_.ny;
  const Eigen::Index n = cells();
  if (state.size() != 3 * n) {
    throw std::invalid_argument("SweModel::step: state has dimension " + std::to_string(state.size()) +
                                ", expected " + std::to_string(3 * n));
  }
  const double g = spec_.gravity;
  const double dt = spec_.dt;
  const double dx = spec_.dx;
  const double dy = spec_.dy;

  const auto u = state.segment(0, n);
  const auto v = state.segment(n, n);
  const auto h = state.segment(2 * n, n);

  double max_cfl = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(h[k] > 0.0) || !std::isfinite(u[k]) || !std::isfinite(v[k])) {
      throw BlowupError("SweModel::step: non-physical state (nonpositive depth or non-finite velocity)");
    }
    const double c = std::sqrt(g * h[k]);
    max_cfl = std::max({max_cfl, (std::abs(u[k]) + c) * dt / dx, (std::abs(v[k]) + c) * dt / dy});
  }
  if (!(max_cfl < 1.0)) {
    throw BlowupError("SweModel::step: CFL number " + std::to_string(max_cfl) + " is not below 1");
  }

  // Conserved fields h, hu, hv.
  Vector ch = h;
  Vector cu = h.cwiseProduct(u);
  Vector cv = h.cwiseProduct(v);
  sweep_x(ch, cu, cv, 0.5 * dt);
  sweep_y(ch, cu, cv, dt);
  sweep_x(ch, cu, cv, 0.5 * dt);

  Vector out(3 * n);
  const double c = std::cos(spec_.coriolis * dt);
  const double s = std::sin(spec_.coriolis * dt);
  const double decay = std::exp(-spec_.bottom_friction * dt);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double uk = cu[k] / ch[k];
    const double vk = cv[k] / ch[k];
    // du/dt = f v, dv/dt = -f u over one step.
    out[k] = decay * (c * uk + s * vk);
    out[n + k] = decay * (c * vk - s * uk);
    out[2 * n + k] = ch[k];
  }
  if (spec_.viscosity > 0.0) {
    const Vector uu = out.segment(0, n);
    const Vector vv = out.segment(n, n);
    const auto wrap = [nx](Eigen::Index i) { return (i % nx + nx) % nx; };
    for (Eigen::Index j = 0; j < ny; ++j) {
      const Eigen::Index js = std::max<Eigen::Index>(j - 1, 0);
      const Eigen::Index jn = std::min<Eigen::Index>(j + 1, ny - 1);
      for (Eigen::Index i = 0; i < nx; ++i) {
        const Eigen::Index k = at(i, j);
        const Eigen::Index ke = at(wrap(i + 1), j);
        const Eigen::Index kw = at(wrap(i - 1), j);
        // Mirrored ghosts: u keeps its value, v changes sign.
        const double v_s = j == 0 ? -vv[k] : vv[at(i, js)];
        const double v_n = j == ny - 1 ? -vv[k] : vv[at(i, jn)];
        const double lap_u = (uu[ke] - 2.0 * uu[k] + uu[kw]) / (dx * dx) +
                             (uu[at(i, jn)] - 2.0 * uu[k] + uu[at(i, js)]) / (dy * dy);
        const double lap_v =
            (vv[ke] - 2.0 * vv[k] + vv[kw]) / (dx * dx) + (v_n - 2.0 * vv[k] + v_s) / (dy * dy);
        out[k] += dt * spec_.viscosity * lap_u;
        out[n + k] += dt * spec_.viscosity * lap_v;
      }
    }
  }
  if (!out.allFinite()) {
    throw BlowupError("SweModel::step: integration produced non-finite values");
  }
  return out;
}

inline void SweModel::sweep_x(Vector& h, Vector& hu, Vector& hv, double tau) const {
  const Eigen::Index nx = spec_.nx;
  const Eigen::Index ny = spec_.ny;
  const double g = spec_.gravity;
  const double r = tau / spec_.dx;
  // Face i sits between cells i and i+1 (periodic); flux (hu, hu²/h + gh²/2, hu hv/h).
  std::vector<double> fh(static_cast<std::size_t>(nx));
  std::vector<double> fu(static_cast<std::size_t>(nx));
  std::vector<double> fv(static_cast<std::size_t>(nx));
  for (Eigen::Index j = 0; j < ny; ++j) {
    const Eigen::Index row = j * nx;
    for (Eigen::Index i = 0; i < nx; ++i) {
      const Eigen::Index a = row + i;
      const Eigen::Index b = row + (i + 1) % nx;
      const double fa_u = hu[a] * hu[a] / h[a] + 0.5 * g * h[a] * h[a];
      const double fb_u = hu[b] * hu[b] / h[b] + 0.5 * g * h[b] * h[b];
      const double mh = 0.5 * (h[a] + h[b]) - 0.5 * r * (hu[b] - hu[a]);
      const double mu = 0.5 * (hu[a] + hu[b]) - 0.5 * r * (fb_u - fa_u);
      const double mv = 0.5 * (hv[a] + hv[b]) - 0.5 * r * (hu[b] * hv[b] / h[b] - hu[a] * hv[a] / h[a]);
      const auto f = static_cast<std::size_t>(i);
      fh[f] = mu;
      fu[f] = mu * mu / mh + 0.5 * g * mh * mh;
      fv[f] = mu * mv / mh;
    }
    for (Eigen::Index i = 0; i < nx; ++i) {
      const auto e = static_cast<std::size_t>(i);
      const auto w = static_cast<std::size_t>((i + nx - 1) % nx);
      const Eigen::Index k = row + i;
      h[k] -= r * (fh[e] - fh[w]);
      hu[k] -= r * (fu[e] - fu[w]);
      hv[k] -= r * (fv[e] - fv[w]);
    }
  }
}

inline void SweModel::sweep_y(Vector& h, Vector& hu, Vector& hv, double tau) const {
  const Eigen::Index nx = spec_.nx;
  const Eigen::Index ny = spec_.ny;
  const double g = spec_.gravity;
  const double r = tau / spec_.dy;
  // Face j sits between cells j-1 and j, j = 0..ny; flux (hv, hu hv/h, hv²/h + gh²/2).
  const auto faces = static_cast<std::size_t>(ny + 1);
  std::vector<double> fh(faces);
  std::vector<double> fu(faces);
  std::vector<double> fv(faces);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j <= ny; ++j) {
      // Ghosts mirror the wall cell with hv reversed.
      const Eigen::Index ja = std::max<Eigen::Index>(j - 1, 0);
      const Eigen::Index jb = std::min<Eigen::Index>(j, ny - 1);
      const Eigen::Index a = at(i, ja);
      const Eigen::Index b = at(i, jb);
      const double sa = j == 0 ? -1.0 : 1.0;
      const double sb = j == ny ? -1.0 : 1.0;
      const double ha = h[a];
      const double hb = h[b];
      const double ua = hu[a];
      const double ub = hu[b];
      const double va = sa * hv[a];
      const double vb = sb * hv[b];
      const double mh = 0.5 * (ha + hb) - 0.5 * r * (vb - va);
      const double mu = 0.5 * (ua + ub) - 0.5 * r * (ub * vb / hb - ua * va / ha);
      const double mv = 0.5 * (va + vb) -
                        0.5 * r * ((vb * vb / hb + 0.5 * g * hb * hb) - (va * va / ha + 0.5 * g * ha * ha));
      const auto f = static_cast<std::size_t>(j);
      fh[f] = mv;
      fu[f] = mu * mv / mh;
      fv[f] = mv * mv / mh + 0.5 * g * mh * mh;
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
      const auto sf = static_cast<std::size_t>(j);
      const auto nf = static_cast<std::size_t>(j + 1);
      const Eigen::Index k = at(i, j);
      h[k] -= r * (fh[nf] - fh[sf]);
      hu[k] -= r * (fu[nf] - fu[sf]);
      hv[k] -= r * (fv[nf] - fv[sf]);
    }
  }
}

inline Vector SweModel::balanced_jet(const SweJet& jet, RngStream& rng) const {
  const Eigen::Index nx = spec_.nx;
  const Eigen::Index ny = spec_.ny;
  const Eigen::Index n = cells();
  const double length_y = static_cast<double>(ny) * spec_.dy;
  const double length_x = static_cast<double>(nx) * spec_.dx;
  const double y0 = 0.5 * length_y;
  Vector out = Vector::Zero(3 * n);
  for (Eigen::Index j = 0; j < ny; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * spec_.dy;
    const double s = (y - y0) / jet.width;
    const double sech = 1.0 / std::cosh(s);
    // u = -(g/f) dh/dy for h = H - A tanh(s).
    const double u_geo =
        spec_.coriolis != 0.0 ? spec_.gravity * jet.amplitude / (spec_.coriolis * jet.width) * sech * sech : 0.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * spec_.dx;
      const Eigen::Index k = at(i, j);
      out[k] = u_geo;
      out[2 * n + k] = jet.mean_depth - jet.amplitude * std::tanh(s) +
                       jet.seed_amplitude * std::sin(2.0 * std::numbers::pi * 2.0 * x / length_x) * sech * sech;
    }
  }
  if (jet.noise_amplitude > 0.0) {
    for (Eigen::Index k = 0; k < n; ++k) {
      out[2 * n + k] += jet.noise_amplitude * rng.normal();
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Observation
// -----------------------------------------------------------------------------

enum class SweScenario { velocities, all, height };

/// Row-subsampled identity: y_k = x[indices[k]].
class ObservationOperator {
 public:
  ObservationOperator(Eigen::Index state_dim, std::vector<Eigen::Index> indices)
      : state_dim_{state_dim}, indices_{std::move(indices)} {
    if (indices_.empty()) {
      throw std::invalid_argument("ObservationOperator: no observed components");
    }
    std::vector<Eigen::Index> sorted = indices_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("ObservationOperator: observed indices must be distinct");
    }
    if (sorted.front() < 0 || sorted.back() >= state_dim_) {
      throw std::invalid_argument("ObservationOperator: observed index outside [0, " + std::to_string(state_dim_) + ")");
    }
  }

  static ObservationOperator identity(Eigen::Index state_dim) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(state_dim));
    for (Eigen::Index i = 0; i < state_dim; ++i) {
      idx[static_cast<std::size_t>(i)] = i;
    }
    return {state_dim, std::move(idx)};
  }

  /// Every `stride`-th element of `candidates`, starting with the first.
  static ObservationOperator every(Eigen::Index state_dim, const std::vector<Eigen::Index>& candidates,
                                   Eigen::Index stride) {
    if (stride < 1) {
      throw std::invalid_argument("ObservationOperator: stride must be at least 1");
    }
    std::vector<Eigen::Index> idx;
    for (std::size_t k = 0; k < candidates.size(); k += static_cast<std::size_t>(stride)) {
      idx.push_back(candidates[k]);
    }
    return {state_dim, std::move(idx)};
  }

  /// Fraction `p` of all components, evenly strided.
  static ObservationOperator sparse(Eigen::Index state_dim, double fraction) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(state_dim));
    for (Eigen::Index i = 0; i < state_dim; ++i) {
      all[static_cast<std::size_t>(i)] = i;
    }
    return every(state_dim, all, stride_for(fraction));
  }

  /// Shallow-water observation scenario: the scenario's fields at a fraction `p` of the
  /// grid nodes (every round(1/p)-th node in layout order).
  static ObservationOperator swe(const SweModel& model, SweScenario scenario, double fraction) {
    const Eigen::Index n = model.cells();
    std::vector<Eigen::Index> fields;
    switch (scenario) {
      case SweScenario::velocities:
        fields = {0, 1};
        break;
      case SweScenario::all:
        fields = {0, 1, 2};
        break;
      case SweScenario::height:
        fields = {2};
        break;
    }
    const Eigen::Index stride = stride_for(fraction);
    std::vector<Eigen::Index> idx;
    for (const Eigen::Index field : fields) {
      for (Eigen::Index node = 0; node < n; node += stride) {
        idx.push_back(field * n + node);
      }
    }
    return {3 * n, std::move(idx)};
  }

  [[nodiscard]] Eigen::Index state_dim() const noexcept { return state_dim_; }
  [[nodiscard]] Eigen::Index data_dim() const noexcept { return static_cast<Eigen::Index>(indices_.size()); }
  [[nodiscard]] const std::vector<Eigen::Index>& indices() const noexcept { return indices_; }

  [[nodiscard]] bool is_identity() const noexcept {
    if (data_dim() != state_dim_) {
      return false;
    }
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (indices_[k] != static_cast<Eigen::Index>(k)) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] Vector apply(const Vector& x) const {
    Vector y(data_dim());
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      y[static_cast<Eigen::Index>(k)] = x[indices_[k]];
    }
    return y;
  }

  [[nodiscard]] Matrix matrix() const {
    Matrix h = Matrix::Zero(data_dim(), state_dim_);
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      h(static_cast<Eigen::Index>(k), indices_[k]) = 1.0;
    }
    return h;
  }

  /// H⁺. For rows of the identity this is exactly Hᵀ.
  [[nodiscard]] Matrix pseudoinverse() const { return matrix().transpose(); }

 private:
  static Eigen::Index stride_for(double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
      throw std::invalid_argument("ObservationOperator: observed fraction must lie in (0, 1]");
    }
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(1.0 / fraction)));
  }

  Eigen::Index state_dim_;
  std::vector<Eigen::Index> indices_;
};

/// y = Hx + v, v ~ N(0, R).
inline Vector observe(const Vector& x, const ObservationOperator& h, const NoiseSpec& r, RngStream& rng) {
  if (x.size() != h.state_dim() || r.dim() != h.data_dim()) {
    throw std::invalid_argument("observe: dimension mismatch between state, operator and noise");
  }
  return sample_gaussian(h.apply(x), r, rng);
}

/**
 * Runs `n_steps` applications of `step` from `x0`, adding N(0, Q) after each one when
 * `noise_on`. Returns all n_steps + 1 states.
 */
template <class Step>
std::vector<Vector> simulate_truth(Step&& step, const Vector& x0, int n_steps, const NoiseSpec& q, RngStream& rng,
                                   bool noise_on) {
  if (n_steps < 0) {
    throw std::invalid_argument("simulate_truth: n_steps must be nonnegative");
  }
  if (noise_on && q.dim() != x0.size()) {
    throw std::invalid_argument("simulate_truth: model noise dimension does not match the state");
  }
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.push_back(x0);
  for (int k = 0; k < n_steps; ++k) {
    Vector next = step(out.back());
    if (noise_on) {
      next = sample_gaussian(next, q, rng);
    }
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace projda

#endif
