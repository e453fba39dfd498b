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

// Acceptance checks A1-A9. `acceptance` runs all of them, `acceptance A4` runs one.
// Each criterion prints one PASS or FAIL line; the exit status is nonzero on any FAIL.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <projda/experiments.hpp>
#include <projda/filters.hpp>
#include <projda/reduction.hpp>

namespace {

using namespace projda;

/// Collects named conditions and a free-form detail line for one criterion.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail_ += (detail_.empty() ? "" : " ") + s; }
  [[nodiscard]] bool ok() const { return ok_; }
  [[nodiscard]] const std::string& detail() const { return detail_; }
  [[nodiscard]] const std::string& failures() const { return failures_; }

 private:
  bool ok_ = true;
  std::string detail_;
  std::string failures_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ExperimentConfig l96_setup(Eigen::Index m, double forcing) {
  ExperimentConfig c;
  c.l96.dimension = m;
  c.l96.forcing = forcing;
  c.q_scale = 0.1;
  c.r_scale = 0.01;
  c.particles = 20;
  c.n_observations = 1000;
  c.burn_in_steps = 1000;
  c.trials = 10;
  c.base_seed = 2026;
  c.reduction = BasisKind::pod;
  c.filter = FilterKind::proj_oppf;
  return c;
}

// -----------------------------------------------------------------------------

void a1(Verdict& v) {
  constexpr Eigen::Index kM = 40;
  ExperimentConfig c = l96_setup(kM, 8.0);
  c.n_observations = 200;
  c.trials = 1;

  // Step level: identity bases against the unprojected optimal proposal filter.
  const detail::ModelHandle model = detail::make_model(c);
  const Transition f = [&model](const Vector& x) { return model.cycle(x); };
  const ObservationOperator h = ObservationOperator::identity(kM);
  const NoiseSpec q = NoiseSpec::scaled_identity(kM, c.q_scale);
  const NoiseSpec r = NoiseSpec::scaled_identity(kM, c.r_scale);
  const ReductionBasis id = ReductionBasis::identity(kM);
  int resampled = 0;
  bool equal = true;
  for (DataReduction kind : {DataReduction::data_based, DataReduction::model_based}) {
    RngStream init(c.base_seed, 100);
    Vector x = model.initial(init);
    for (int k = 0; k < 1000; ++k) x = model.step(x);
    std::vector<Vector> start;
    for (int l = 0; l < c.particles; ++l) start.push_back(sample_gaussian(x, q, init));
    ParticleEnsemble full = ParticleEnsemble::uniform(start);
    ParticleEnsemble proj = ParticleEnsemble::uniform(start);
    const ReducedModel rm = build_reduced_model(f, h, q, r, id, id, kind);
    const ProjectedProposal pp(rm, r);
    const OptimalProposal op(q, h.matrix(), r);
    const NoiseSpec z = weight_covariance(h.matrix(), q, r);
    RngStream a(c.base_seed, 101);
    RngStream b(c.base_seed, 101);
    RngStream noise(c.base_seed, 102);
    for (int k = 0; k < c.n_observations; ++k) {
      x = sample_gaussian(f(x), q, noise);
      const Vector y = observe(x, h, r, noise);
      const StepInfo i1 = oppf_step(full, f, h, op, z, y, a, c.filter_config);
      const StepInfo i2 = proj_oppf_step(proj, rm, pp, y, rm.reduce_data(y), b, c.filter_config);
      equal = equal && i1.ess == i2.ess && i1.resampled == i2.resampled && full.weights == proj.weights;
      for (Eigen::Index l = 0; l < full.size(); ++l) {
        equal = equal && full.particles[static_cast<std::size_t>(l)] == proj.particles[static_cast<std::size_t>(l)];
      }
      resampled += i1.resampled ? 1 : 0;
    }
  }
  v.require(equal, "particle states or weights differ");
  v.require(resampled > 0, "no resampling event exercised");
  v.note("steps=" + std::to_string(2 * c.n_observations) + " resampling_events=" + std::to_string(resampled));

  // Experiment level: MetricsRecord of NON against ProjOPPF with identity bases.
  for (std::uint64_t seed : {1ULL, 7ULL, 12345ULL}) {
    ExperimentConfig e = c;
    e.base_seed = seed;
    e.filter = FilterKind::non;
    const MetricsRecord non = run_trial(e, 0);
    e.filter = FilterKind::proj_oppf;
    e.reduction = BasisKind::identity;
    const MetricsRecord proj = run_trial(e, 0);
    v.require(!non.failed && non == proj, "MetricsRecord differs for seed " + std::to_string(seed));
  }
}

void a2(Verdict& v) {
  ExperimentConfig c = l96_setup(40, 3.0);
  c.r_d = 5;
  c.sweep_r_p = {5, 10, 15, 20, 25, 30, 35, 40};
  const std::vector<SummaryRow> rows = run_sweep(c, 1);
  std::map<Eigen::Index, double> by_rank;
  int failed = 0;
  for (const SummaryRow& row : rows) {
    by_rank[row.point.r_p] = row.mean_rmse;
    failed += row.failed_trials;
    v.note("rmse(" + std::to_string(row.point.r_p) + ")=" + fmt(row.mean_rmse));
  }
  v.require(failed == 0, std::to_string(failed) + " failed trials");
  v.require(by_rank[40] <= 0.3, "rmse(r_p=40)=" + fmt(by_rank[40]) + " > 0.3");
  v.require(by_rank[5] >= 2.0 * by_rank[40], "rmse(r_p=5) < 2 rmse(r_p=40)");
}

void a3(Verdict& v) {
  ExperimentConfig c = l96_setup(40, 3.0);
  c.r_p = 20;
  c.r_d = 5;
  c.sweep_q_scale = {0.1, 1.0};
  const std::vector<SummaryRow> rows = run_sweep(c, 1);
  const double low = rows.at(0).resamp_pct;
  const double high = rows.at(1).resamp_pct;
  v.note("RESAMP(Q=0.1)=" + fmt(low) + "% RESAMP(Q=1.0)=" + fmt(high) + "%");
  v.require(rows[0].failed_trials + rows[1].failed_trials == 0, "failed trials");
  v.require(high < low, "RESAMP(Q=1.0) is not below RESAMP(Q=0.1)");
}

void a4(Verdict& v) {
  const std::map<double, int> reference = {{3.0, 1}, {4.0, 3}, {6.0, 22}, {8.0, 28}};
  for (const auto& [forcing, ky_ref] : reference) {
    const L96Model model({40, forcing, 0.01, 5});
    RngStream rng(2026, static_cast<std::uint64_t>(forcing));
    Vector x = Vector::Constant(40, forcing) + rng.normal_vector(40);
    for (int k = 0; k < 1000; ++k) x = model.step(x);
    const auto step = [&model](const Vector& s) { return model.step(s); };
    const std::vector<double> exps = lyapunov_spectrum(step, x, 100000, 40, 0.01, {1e-6, 1000});
    const double ky = kaplan_yorke(exps);
    const int ky_int = static_cast<int>(std::floor(ky));
    v.note("F=" + fmt(forcing) + ": KY=" + fmt(ky) + " lambda1=" + fmt(exps.front()));
    v.require(std::abs(ky_int - ky_ref) <= 2,
              "F=" + fmt(forcing) + " KY integer part " + std::to_string(ky_int) + " vs " + std::to_string(ky_ref));
    if (forcing == 8.0) {
      int neutral = 0;
      int positive = 0;
      for (double l : exps) {
        if (std::abs(l) < 0.01) {
          ++neutral;
        } else if (l > 0.0) {
          ++positive;
        }
      }
      v.note("positive=" + std::to_string(positive) + " neutral=" + std::to_string(neutral));
      v.require(std::abs(positive - 13) <= 1, "F=8 positive count " + std::to_string(positive));
      v.require(neutral == 1, "F=8 neutral count " + std::to_string(neutral));
    }
  }
}

/// Mean of ‖truth‖/√M over the averaging window of trial 0.
double truth_magnitude(const ExperimentConfig& c) {
  const detail::ModelHandle model = detail::make_model(c);
  const ObservationOperator h = detail::make_observation(c);
  const NoiseSpec q = NoiseSpec::scaled_identity(model.dim, c.q_scale);
  const NoiseSpec r = NoiseSpec::scaled_identity(h.data_dim(), c.r_scale);
  const TwinData twin = make_twin_data(c, model, h, q, r, RngStream(c.base_seed, 0));
  double sum = 0.0;
  int count = 0;
  for (int k = c.window_start(); k <= c.n_observations; ++k) {
    sum += twin.truth[static_cast<std::size_t>(k)].norm() / std::sqrt(static_cast<double>(model.dim));
    ++count;
  }
  return sum / count;
}

void a5(Verdict& v) {
  ExperimentConfig c = ExperimentConfig::swe_defaults();
  c.scenario = SweScenario::all;
  c.q_scale = 0.1;
  c.r_scale = 0.01;
  c.base_seed = 2026;
  c.r_p = 20;
  c.r_d = 10;
  const MetricsRecord proj = run_trial(c, 0);
  ExperimentConfig n = c;
  n.filter = FilterKind::non;
  const MetricsRecord non = run_trial(n, 0);
  v.require(!proj.failed, "ProjOPPF failed: " + proj.failure);
  v.require(!non.failed, "NON failed: " + non.failure);
  if (proj.failed || non.failed) return;
  const double scale = truth_magnitude(c);
  const double rel = proj.mean_rmse / scale;
  v.note("ProjOPPF rmse=" + fmt(proj.mean_rmse) + " resamp=" + fmt(100 * proj.resamp_fraction) + "%; NON rmse=" +
         fmt(non.mean_rmse) + " resamp=" + fmt(100 * non.resamp_fraction) + "%; relative=" + fmt(rel));
  v.require(proj.resamp_fraction <= non.resamp_fraction, "ProjOPPF RESAMP above NON");
  v.require(proj.mean_rmse <= non.mean_rmse, "ProjOPPF RMSE above NON");
  v.require(rel < 0.1, "relative error " + fmt(rel) + " >= 0.1");
}

void a6(Verdict& v) {
  ExperimentConfig c = l96_setup(100, 3.0);
  c.r_p = 25;
  c.sweep_r_d = {1, 5, 10, 25};
  const std::vector<SummaryRow> rows = run_sweep(c, 1);
  double lo = 1e300;
  double hi = 0.0;
  int failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    lo = std::min(lo, rows[i].mean_rmse);
    hi = std::max(hi, rows[i].mean_rmse);
    failed += rows[i].failed_trials;
    v.note("r_d=" + std::to_string(rows[i].point.r_d) + ": rmse=" + fmt(rows[i].mean_rmse) +
           " resamp=" + fmt(rows[i].resamp_pct) + "%");
    if (i > 0) {
      v.require(rows[i].resamp_pct >= rows[i - 1].resamp_pct,
                "RESAMP decreases from r_d=" + std::to_string(rows[i - 1].point.r_d) + " to " +
                    std::to_string(rows[i].point.r_d));
    }
  }
  const double variation = (hi - lo) / lo;
  v.note("rmse variation=" + fmt(variation));
  v.require(failed == 0, "failed trials");
  v.require(variation < 0.25, "RMSE varies by " + fmt(100 * variation) + "%");
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) a.col(j) = rng.normal_vector(rows);
  return a;
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = svd(a).left;
  const Matrix qb = svd(b).left;
  // sin of the largest angle is the norm of the part of qb outside span(qa).
  const Matrix residual = qb - qa * (qa.transpose() * qb);
  return std::asin(std::min(1.0, svd(residual).singular_values.maxCoeff()));
}

void a7(Verdict& v) {
  RngStream rng(2026, 7);
  double worst_eig = 0.0;
  double worst_angle = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 4 + trial % 17;
    // Real block-diagonal spectrum: rotation-contraction pairs and, for odd m, one real mode.
    Matrix d = Matrix::Zero(m, m);
    std::vector<Complex> truth;
    std::vector<Eigen::Index> block_of;  // first column of the block owning each eigenvalue
    Eigen::Index k = 0;
    if (m % 2 == 1) {
      d(0, 0) = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + 0.45 * rng.uniform());
      truth.emplace_back(d(0, 0), 0.0);
      block_of.push_back(0);
      k = 1;
    }
    for (; k < m; k += 2) {
      const double rho = 0.5 + 0.45 * rng.uniform();
      const double th = 0.1 + 2.5 * rng.uniform();
      d(k, k) = rho * std::cos(th);
      d(k, k + 1) = -rho * std::sin(th);
      d(k + 1, k) = rho * std::sin(th);
      d(k + 1, k + 1) = rho * std::cos(th);
      truth.push_back(std::polar(rho, th));
      truth.push_back(std::polar(rho, -th));
      block_of.push_back(k);
      block_of.push_back(k);
    }
    // Non-normal system: eigenvectors are the columns of a random well-conditioned S.
    const Matrix s = svd(random_matrix(m, m, rng)).left *
                     Vector(Vector::Ones(m) + rng.normal_vector(m).cwiseAbs().cwiseMin(1.0)).asDiagonal() *
                     svd(random_matrix(m, m, rng)).left.transpose();
    const Matrix a = s * d * s.inverse();
    Matrix x(m, 2 * m + 1);
    x.col(0) = rng.normal_vector(m);
    for (Eigen::Index t = 1; t < x.cols(); ++t) x.col(t) = a * x.col(t - 1);
    const DmdResult res = dmd(x, m, 1.0);
    if (res.eigenvalues.size() != m) {
      v.require(false, "trial " + std::to_string(trial) + " kept " + std::to_string(res.eigenvalues.size()) +
                           " of " + std::to_string(m) + " eigenvalues");
      continue;
    }
    for (const Complex& lt : truth) {
      double best = 1e300;
      for (Eigen::Index j = 0; j < m; ++j) best = std::min(best, std::abs(res.eigenvalues[j] - lt));
      worst_eig = std::max(worst_eig, best);
    }
    // Dominant subspace: the leading half of the ranked modes against the true eigenvectors.
    const ReductionBasis lead = dmd_basis(res, std::max<Eigen::Index>(1, m / 2));
    std::vector<Eigen::Index> blocks;
    for (Eigen::Index j = 0; j < lead.rank(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(res.eigenvalues[j] - truth[static_cast<std::size_t>(i)]) <
            std::abs(res.eigenvalues[j] - truth[static_cast<std::size_t>(best)])) {
          best = i;
        }
      }
      const Eigen::Index b = block_of[static_cast<std::size_t>(best)];
      if (std::find(blocks.begin(), blocks.end(), b) == blocks.end()) blocks.push_back(b);
    }
    std::vector<Eigen::Index> cols;
    for (Eigen::Index b : blocks) {
      cols.push_back(b);
      if (!(m % 2 == 1 && b == 0)) cols.push_back(b + 1);
    }
    Matrix expected(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) expected.col(static_cast<Eigen::Index>(i)) = s.col(cols[i]);
    if (expected.cols() != lead.rank()) {
      v.require(false, "trial " + std::to_string(trial) + ": leading modes do not form whole blocks");
      continue;
    }
    worst_angle = std::max(worst_angle, max_principal_angle(lead.columns(), expected));
  }
  v.note("max eigenvalue error=" + fmt(worst_eig) + " max principal angle=" + fmt(worst_angle));
  v.require(worst_eig <= 1e-8, "eigenvalue error " + fmt(worst_eig) + " > 1e-8");
  v.require(worst_angle <= 1e-6, "principal angle " + fmt(worst_angle) + " > 1e-6");
}

void a8(Verdict& v) {
  RngStream rng(2026, 8);
  const std::vector<std::array<Eigen::Index, 3>> shapes = {{20, 10, 3}, {60, 40, 8}, {200, 100, 10}, {150, 90, 40}};
  int comparisons = 0;
  for (const auto& [rows, cols, r] : shapes) {
    // Decaying column scales give a nontrivial spectrum.
    Matrix x = random_matrix(rows, cols, rng);
    for (Eigen::Index j = 0; j < cols; ++j) x.col(j) *= std::exp(-0.05 * static_cast<double>(j));
    const ReductionBasis pod = pod_basis(x, r);
    const double pod_err = (x - pod.columns() * (pod.columns().transpose() * x)).norm();
    for (int t = 0; t < 100; ++t) {
      const Matrix u = svd(random_matrix(rows, r, rng)).left;
      const double err = (x - u * (u.transpose() * x)).norm();
      v.require(pod_err <= err, "random basis beats POD at " + std::to_string(rows) + "x" + std::to_string(cols));
      ++comparisons;
    }
  }
  v.note("comparisons=" + std::to_string(comparisons));
}

void a9(Verdict& v) {
  constexpr double kTol = 1e-12;
  Vector w(2);
  w << 0.75, 0.25;
  Vector one_hot = Vector::Zero(5);
  one_hot[1] = 1.0;
  v.require(std::abs(ess(Vector::Constant(20, 0.05)) - 20.0) <= kTol, "ESS(uniform 20) != 20");
  v.require(std::abs(ess(one_hot) - 1.0) <= kTol, "ESS(one-hot) != 1");
  v.require(std::abs(ess(w) - 1.6) <= kTol, "ESS(3/4, 1/4) != 1.6");

  double worst = 0.0;
  for (double q : {0.01, 0.1, 1.0, 7.5}) {
    for (double r : {0.001, 0.01, 0.5, 3.0}) {
      Matrix g = Matrix::Identity(1, 1);
      const OptimalProposal p(NoiseSpec::scaled_identity(1, q), g, NoiseSpec::scaled_identity(1, r));
      worst = std::max(worst, std::abs(p.covariance().matrix()(0, 0) - 1.0 / (1.0 / q + 1.0 / r)));
      Matrix e1 = Matrix::Zero(3, 1);
      e1(0, 0) = 1.0;
      const ReductionBasis u = ReductionBasis::from_columns(e1, BasisKind::pod);
      const auto f = [](const Vector& x) { return x; };
      const ReducedModel rm =
          build_reduced_model(f, ObservationOperator::identity(3), NoiseSpec::scaled_identity(3, q),
                              NoiseSpec::scaled_identity(3, r), u, u, DataReduction::model_based);
      const ProjectedProposal pp(rm, NoiseSpec::scaled_identity(3, r));
      worst = std::max(worst, std::abs(pp.weight_cov.matrix()(0, 0) - (q + r)));
    }
  }
  v.require(worst <= kTol, "closed forms off by " + fmt(worst));

  RngStream rng(2026, 9);
  double worst_count = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + t % 50;
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = rng.uniform() + 1e-3;
    p /= p.sum();
    std::vector<int> counts(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i : systematic_resample(p, rng)) ++counts[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n; ++i) {
      worst_count = std::max(worst_count, std::abs(counts[static_cast<std::size_t>(i)] - n * p[i]) - 1.0);
    }
  }
  v.require(worst_count <= kTol, "systematic resampling count exceeds L w_l +- 1");
  v.note("closed-form error=" + fmt(worst) + " count bound excess=" + fmt(std::max(0.0, worst_count)));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}};
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  int ran = 0;
  for (const auto& [name, check] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    ++ran;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      check(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%.1fs) %s%s%s\n", name.c_str(), v.ok() ? "PASS" : "FAIL", secs, v.detail().c_str(),
                v.ok() ? "" : " | ", v.failures().c_str());
    std::fflush(stdout);
    failures += v.ok() ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion; expected A1..A9\n");
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
