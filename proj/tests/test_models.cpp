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

#include <cmath>

#include <gtest/gtest.h>

#include <projda/models.hpp>

namespace projda {
namespace {

Vector cyclic_shift(const Vector& u, Eigen::Index s) {
  const Eigen::Index m = u.size();
  Vector out(m);
  for (Eigen::Index i = 0; i < m; ++i) out[(i + s) % m] = u[i];
  return out;
}

TEST(L96, ConstantStateIsFixedPoint) {
  const Vector u = Vector::Constant(10, 8.0);
  EXPECT_LE(l96_rhs(u, 8.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(L96, HandEvaluatedRhs) {
  Vector u(4);
  u << 1, 2, 3, 4;
  Vector expected(4);
  expected << -5, -3, 3, -7;
  EXPECT_EQ(l96_rhs(u, 0.0), expected);
}

TEST(L96, ShiftEquivariance) {
  RngStream rng(1, 0);
  for (Eigen::Index m = 4; m <= 40; ++m) {
    const Vector u = rng.normal_vector(m);
    const Vector lhs = l96_rhs(cyclic_shift(u, 3 % m), 8.0);
    const Vector rhs = cyclic_shift(l96_rhs(u, 8.0), 3 % m);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13) << "M = " << m;
  }
}

TEST(L96, RejectsSmallDimension) {
  EXPECT_THROW(l96_rhs(Vector::Zero(3), 1.0), std::invalid_argument);
  L96Spec s;
  s.dimension = 3;
  EXPECT_THROW(L96Model{s}, std::invalid_argument);
}

TEST(Rk4, ExponentialDecay) {
  Vector u0(1);
  u0 << 2.0;
  const Vector u1 = step_rk4([](const Vector& u) { return Vector(-u); }, u0, 0.01);
  EXPECT_NEAR(u1[0] / u0[0], std::exp(-0.01), 1e-10);
}

TEST(Rk4, TinyStepBarelyMoves) {
  Vector u0 = Vector::Constant(5, 1.0);
  u0[2] = 3.0;
  const Vector u1 = step_rk4([](const Vector& u) { return l96_rhs(u, 8.0); }, u0, 1e-12);
  EXPECT_LT((u1 - u0).norm(), 1e-10);
}

TEST(Rk4, BlowupIsReported) {
  Vector u0(1);
  u0 << 1e200;
  EXPECT_THROW(step_rk4([](const Vector& u) { return Vector(u.array().square()); }, u0, 1.0), BlowupError);
}

TEST(L96, LongRunStaysBounded) {
  const L96Model model({40, 8.0, 0.01, 5});
  RngStream rng(2, 0);
  Vector x = Vector::Constant(40, 8.0) + rng.normal_vector(40);
  double max_abs = 0.0;
  for (int k = 0; k < 10000; ++k) {
    x = model.step(x);
    max_abs = std::max(max_abs, x.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(max_abs, 25.0);
}

TEST(L96, ChaoticRegimeSeparatesNearbyTrajectories) {
  const L96Model model({40, 8.0, 0.01, 5});
  RngStream rng(3, 0);
  Vector x = Vector::Constant(40, 8.0) + rng.normal_vector(40);
  x = propagate(model, x, 1000);
  Vector y = x;
  y[0] += 1e-8;
  double log_growth = 0.0;
  const int blocks = 100;
  for (int b = 0; b < blocks; ++b) {
    x = propagate(model, x, 100);
    y = propagate(model, y, 100);
    const double d = (y - x).norm();
    log_growth += std::log(d / 1e-8);
    y = x + (y - x) * (1e-8 / d);
  }
  EXPECT_GT(log_growth / (blocks * 100 * 0.01), 0.0);
}

TEST(L96, CycleIsStepsPerObservationSteps) {
  const L96Model model({12, 5.0, 0.01, 5});
  Vector x = Vector::LinSpaced(12, -1.0, 1.0);
  EXPECT_EQ(cycle(model, x), propagate(model, x, 5));
}

SweSpec small_swe() {
  SweSpec s;
  s.nx = 16;
  s.ny = 8;
  return s;
}

TEST(Swe, RestStateIsUnchanged) {
  const SweModel model(small_swe());
  const Eigen::Index n = model.cells();
  Vector x = Vector::Zero(3 * n);
  x.tail(n).setConstant(10000.0);
  const Vector y = propagate(model, x, 10);
  EXPECT_LE((y - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Swe, MassConservedOnPerturbedState) {
  const SweModel model(small_swe());
  RngStream rng(5, 0);
  SweJet jet;
  const Vector x0 = model.balanced_jet(jet, rng);
  const double m0 = model.mass(x0);
  const Vector x1 = propagate(model, x0, 1000);
  EXPECT_LT(std::abs(model.mass(x1) - m0) / m0, 1e-8);
}

TEST(Swe, BalancedJetIsNearlySteadyOverAnHour) {
  const SweModel model(small_swe());
  RngStream rng(5, 1);
  SweJet jet;
  jet.seed_amplitude = 0.0;
  jet.noise_amplitude = 0.0;
  const Vector x0 = model.balanced_jet(jet, rng);
  const Vector x1 = propagate(model, x0, 60);
  const Eigen::Index n = model.cells();
  // Geostrophic balance: the depth field barely moves compared to the jet's height drop.
  EXPECT_LT((x1.tail(n) - x0.tail(n)).cwiseAbs().maxCoeff(), 0.1 * jet.amplitude);
}

TEST(Swe, CflViolationIsRejected) {
  SweSpec s = small_swe();
  s.dt = 200.0;
  EXPECT_THROW(SweModel{s}, std::invalid_argument);
}

TEST(Swe, ViscosityDampsShearAndKeepsMass) {
  SweSpec s = small_swe();
  s.coriolis = 0.0;
  const SweModel model(s);
  s.viscosity = 0.0;
  const SweModel inviscid(s);
  const Eigen::Index n = model.cells();
  Vector x = Vector::Zero(3 * n);
  x.tail(n).setConstant(10000.0);
  for (Eigen::Index j = 0; j < 8; ++j) {
    for (Eigen::Index i = 0; i < 16; ++i) x[j * 16 + i] = std::cos(2.0 * std::acos(-1.0) * static_cast<double>(i) / 16.0);
  }
  const Vector damped = propagate(model, x, 60);
  const Vector kept = propagate(inviscid, x, 60);
  EXPECT_LT(damped.head(n).norm(), kept.head(n).norm());
  EXPECT_LT(std::abs(model.mass(damped) - model.mass(x)) / model.mass(x), 1e-12);
}

TEST(Swe, ExplicitDiffusionLimitIsEnforced) {
  SweSpec s = small_swe();
  s.viscosity = 1.0e8;
  EXPECT_THROW(SweModel{s}, std::invalid_argument);
}

TEST(Swe, RuntimeCflViolationRaisesBlowup) {
  SweSpec s = small_swe();
  s.dt = 100.0;  // passes the construction check at the reference depth
  const SweModel model(s);
  const Eigen::Index n = model.cells();
  Vector x = Vector::Zero(3 * n);
  x.tail(n).setConstant(10000.0);
  x.head(n).setConstant(300.0);  // fast flow pushes |u| + sqrt(gh) past the limit
  EXPECT_THROW(propagate(model, x, 100), BlowupError);
}

TEST(Swe, StateLayout) {
  const SweModel model(small_swe());
  EXPECT_EQ(model.dimension(), 3 * 16 * 8);
  EXPECT_EQ(model.at(3, 2), 2 * 16 + 3);
}

TEST(Observation, IdentityAndSubsampling) {
  const ObservationOperator id = ObservationOperator::identity(5);
  EXPECT_TRUE(id.is_identity());
  EXPECT_EQ(id.matrix(), Matrix(Matrix::Identity(5, 5)));
  const ObservationOperator every = ObservationOperator::sparse(1000, 0.01);
  EXPECT_EQ(every.data_dim(), 10);
  Vector x = Vector::LinSpaced(1000, 0.0, 999.0);
  const Vector y = every.apply(x);
  for (Eigen::Index k = 0; k < y.size(); ++k) EXPECT_EQ(y[k], 100.0 * k);
  const ObservationOperator odd = ObservationOperator::sparse(250, 0.01);
  EXPECT_EQ(odd.data_dim(), 3);  // ceil(250 / 100)
  EXPECT_EQ(odd.pseudoinverse(), odd.matrix().transpose());
}

TEST(Observation, InvalidIndicesRejected) {
  EXPECT_THROW(ObservationOperator(4, {0, 0}), std::invalid_argument);
  EXPECT_THROW(ObservationOperator(4, {4}), std::invalid_argument);
  EXPECT_THROW(ObservationOperator::sparse(10, 0.0), std::invalid_argument);
}

TEST(Observation, SweScenariosSelectFieldsAtNodes) {
  const SweModel model(small_swe());
  const Eigen::Index n = model.cells();
  const auto all = ObservationOperator::swe(model, SweScenario::all, 0.1);
  const auto vel = ObservationOperator::swe(model, SweScenario::velocities, 0.1);
  const auto hgt = ObservationOperator::swe(model, SweScenario::height, 0.1);
  const Eigen::Index nodes = (n + 9) / 10;
  EXPECT_EQ(all.data_dim(), 3 * nodes);
  EXPECT_EQ(vel.data_dim(), 2 * nodes);
  EXPECT_EQ(hgt.data_dim(), nodes);
  for (Eigen::Index i : hgt.indices()) EXPECT_GE(i, 2 * n);
  for (Eigen::Index i : vel.indices()) EXPECT_LT(i, 2 * n);
}

TEST(Observe, NoiseFreeIdentityReturnsState) {
  RngStream rng(1, 1);
  const Vector x = Vector::LinSpaced(6, 1.0, 6.0);
  EXPECT_EQ(observe(x, ObservationOperator::identity(6), NoiseSpec::scaled_identity(6, 0.0), rng), x);
}

TEST(Observe, EmpiricalCovarianceMatchesR) {
  RngStream rng(2, 2);
  const ObservationOperator h = ObservationOperator::sparse(6, 0.5);
  const NoiseSpec r = NoiseSpec::scaled_identity(h.data_dim(), 0.01);
  const Vector x = Vector::LinSpaced(6, 1.0, 6.0);
  Matrix acc = Matrix::Zero(h.data_dim(), h.data_dim());
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const Vector e = observe(x, h, r, rng) - h.apply(x);
    acc += e * e.transpose();
  }
  acc /= n;
  for (Eigen::Index i = 0; i < acc.rows(); ++i) EXPECT_NEAR(acc(i, i), 0.01, 0.0005);
}

TEST(SimulateTruth, CountsDeterminismAndSplitting) {
  const L96Model model({10, 8.0, 0.01, 5});
  const auto step = [&model](const Vector& x) { return model.step(x); };
  const NoiseSpec q = NoiseSpec::scaled_identity(10, 0.1);
  const Vector x0 = Vector::LinSpaced(10, 0.0, 1.0);
  RngStream r1(1, 0);
  const auto det = simulate_truth(step, x0, 30, q, r1, false);
  ASSERT_EQ(det.size(), 31U);
  EXPECT_EQ(det.back(), propagate(model, x0, 30));
  RngStream r2(1, 0);
  const auto first = simulate_truth(step, x0, 12, q, r2, false);
  const auto second = simulate_truth(step, first.back(), 18, q, r2, false);
  EXPECT_EQ(second.back(), det.back());

  RngStream a(7, 1);
  RngStream b(7, 1);
  EXPECT_EQ(simulate_truth(step, x0, 20, q, a, true).back(), simulate_truth(step, x0, 20, q, b, true).back());
}

}  // namespace
}  // namespace projda
