// Copyright 2026 The pisest Authors
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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pisest/diagnostics.hpp"
#include "pisest/error.hpp"

namespace {

using namespace pisest;

TrajectoryRecord record(std::vector<double> theta, bool failed = false) {
  TrajectoryRecord r;
  r.theta = std::move(theta);
  r.failed = failed;
  return r;
}

using Ref = std::vector<double>;

TEST(Rmse, ExactReferenceIsZero) {
  const auto report = rmse({{record({0.5, 1.0}), record({0.5, 1.0})}}, {0.0, 1.0}, Ref{0.5, 1.0}, {});
  for (const auto& row : report.rmse) {
    for (double v : row) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(report.final_mean(), 0.0);
}

TEST(Rmse, SymmetricDeviations) {
  const double a = 0.137;
  const auto report = rmse({{record({1.0 + a})}, {record({1.0 - a})}}, {0.0}, Ref{1.0}, {});
  EXPECT_NEAR(report.rmse[0][0], a, 1e-15);
}

TEST(Rmse, PenaltyForFailedReplication) {
  const double e = 0.05;
  std::vector<std::vector<TrajectoryRecord>> aligned;
  for (int s = 0; s < 3; ++s) aligned.push_back({record({0.9 + e})});
  aligned.push_back({record({0.9}, true)});
  const auto report = rmse(aligned, {0.0}, Ref{0.9}, {});
  EXPECT_NEAR(report.rmse[0][0] * report.rmse[0][0], (3 * e * e + 0.1225) / 4.0, 1e-15);
  EXPECT_EQ(report.penalised[0], 1U);
}

TEST(Rmse, OutOfBoundsAndNanArePenalised) {
  const FailureBounds bounds{std::make_pair(0.6, 1.3)};
  const auto report = rmse({{record({1.4})}, {record({std::numeric_limits<double>::quiet_NaN()})}, {record({0.9})}},
                           {0.0}, Ref{0.9}, bounds);
  EXPECT_EQ(report.penalised[0], 2U);
  EXPECT_NEAR(report.rmse[0][0], std::sqrt(2.0 * kDefaultPenalty / 3.0), 1e-15);
}

TEST(Rmse, MisalignedThrows) {
  EXPECT_THROW(rmse({{record({1.0})}, {record({1.0}), record({1.0})}}, {0.0}, Ref{1.0}, {}), InputError);
  EXPECT_THROW(rmse({}, {0.0}, Ref{1.0}, {}), InputError);
  EXPECT_THROW(rmse({{record({1.0, 2.0})}}, {0.0}, Ref{1.0}, {}), InputError);
}

TEST(FailureCount, Cases) {
  const FailureBounds bounds{std::make_pair(0.6, 1.3)};
  std::vector<Trajectory> trajs(3);
  for (auto& t : trajs) t.records.push_back(record({0.9}));
  EXPECT_EQ(failure_count(trajs, bounds), 0U);
  trajs[1].records.back().failed = true;
  EXPECT_EQ(failure_count(trajs, bounds), 1U);
  trajs[2].records.back().theta = {0.6};
  EXPECT_EQ(failure_count(trajs, bounds), 2U);
  EXPECT_EQ(failure_count(trajs, FailureBounds{}), 1U);
}

TEST(Align, LastRecordAtOrBeforeGridPoint) {
  Trajectory t;
  for (std::size_t i : {0, 3, 7}) {
    auto r = record({static_cast<double>(i)});
    r.iteration = i;
    r.seconds = 0.5 * static_cast<double>(i);
    t.records.push_back(r);
  }
  const auto by_iter = align_on_grid(t, {0.0, 2.0, 3.0, 6.9, 10.0}, AlignBy::iteration);
  EXPECT_EQ(by_iter[0].iteration, 0U);
  EXPECT_EQ(by_iter[1].iteration, 0U);
  EXPECT_EQ(by_iter[2].iteration, 3U);
  EXPECT_EQ(by_iter[3].iteration, 3U);
  EXPECT_EQ(by_iter[4].iteration, 7U);
  const auto by_time = align_on_grid(t, {1.5, 3.4}, AlignBy::seconds);
  EXPECT_EQ(by_time[0].iteration, 3U);
  EXPECT_EQ(by_time[1].iteration, 3U);
  EXPECT_THROW(align_on_grid(Trajectory{}, {0.0}, AlignBy::seconds), InputError);
}

TEST(Grid, UniformEndpoints) {
  const auto g = uniform_grid(4.0, 5);
  ASSERT_EQ(g.size(), 5U);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 4.0);
  EXPECT_EQ(g[1], 1.0);
}

TEST(Slope, PowerLaw) {
  const std::vector<std::size_t> n{250, 1000, 4000};
  std::vector<double> e;
  for (auto v : n) e.push_back(3.0 / std::sqrt(static_cast<double>(v)));
  EXPECT_NEAR(log_log_slope(n, e), -0.5, 1e-12);
  EXPECT_THROW(log_log_slope({1}, {1.0}), InputError);
}

class VarianceT0 : public ::testing::Test {
 protected:
  std::unique_ptr<Model> model = make_model("ar1");
  Parameter theta = model->make_parameter({0.7, 0.7, 0.9});
  double y0 = 1.3;
  double prior_var = 0.49 / (1.0 - 0.49);
  double post_var = 1.0 / (1.0 / prior_var + 1.0 / 0.81);
  double post_mean = post_var * y0 / 0.81;
};

TEST_F(VarianceT0, ConstantFunctionHasZeroVariance) {
  VarianceT0Options o;
  o.particles = 500;
  o.replications = 50;
  const auto r = variance_t0_check(*model, theta, y0, [](double) { return 2.0; }, o);
  EXPECT_NEAR(r.quadrature, 0.0, 1e-12);
  EXPECT_NEAR(r.empirical, 0.0, 1e-12);
}

TEST_F(VarianceT0, OptimalProposalGivesPosteriorVariance) {
  const double v = asymptotic_variance_t0(*model, theta, y0, [](double x) { return x; }, ProposalKind::optimal);
  EXPECT_NEAR(v, post_var, 1e-9);
}

TEST_F(VarianceT0, BootstrapQuadratureMatchesGrid) {
  // pi^2 / q (x - pi(x))^2 on a fine trapezoid grid.
  auto normal = [](double x, double m, double v) {
    return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * std::numbers::pi * v);
  };
  const double lo = -15.0;
  const double hi = 15.0;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    const double p = normal(x, post_mean, post_var);
    const double g = p * p / normal(x, 0.0, prior_var) * (x - post_mean) * (x - post_mean);
    sum += (i == 0 || i == n) ? 0.5 * g : g;
  }
  const double v = asymptotic_variance_t0(*model, theta, y0, [](double x) { return x; }, ProposalKind::bootstrap);
  EXPECT_NEAR(v, sum * h, 1e-8);
  EXPECT_GT(v, post_var);
}

TEST_F(VarianceT0, EmpiricalWithinTenPercent) {
  for (auto kind : {ProposalKind::bootstrap, ProposalKind::optimal}) {
    VarianceT0Options o;
    o.proposal = kind;
    o.seed = 2;
    const auto r = variance_t0_check(*model, theta, y0, [](double x) { return x; }, o);
    // Mean of the replicated estimates, within 4 SEs.
    EXPECT_NEAR(r.posterior_mean, post_mean, 4.0 * std::sqrt(r.quadrature / (1e4 * 2000)));
    EXPECT_LT(r.relative_error, 0.10) << "quadrature " << r.quadrature << " empirical " << r.empirical;
  }
}

TEST_F(VarianceT0, NonlinearModelUnsupported) {
  auto sv = make_model("sv");
  EXPECT_THROW(asymptotic_variance_t0(*sv, sv->make_parameter({0.9, 0.4, 0.25}), 0.1, [](double x) { return x; },
                                      ProposalKind::bootstrap),
               Unsupported);
}

class Consistency : public ::testing::Test {
 protected:
  std::unique_ptr<Model> model = make_model("ar1");
  Series y = model->simulate(model->make_parameter({0.6, 0.7, 0.9}), 100, RngStream(21));

  std::vector<Parameter> drift(double from, double to, std::size_t steps) const {
    std::vector<Parameter> out;
    for (std::size_t t = 0; t < steps; ++t) {
      out.push_back(model->make_parameter({from + (to - from) * t / (steps - 1.0), 0.7, 0.9}));
    }
    return out;
  }
};

TEST_F(Consistency, ConstantTrajectoryMatchesSmcCheck) {
  ConsistencyOptions o;
  o.particles = {100, 1600};
  o.replications = 10;
  const auto r = consistency_check(*model, drift(0.6, 0.6, 30), y, o);
  EXPECT_LT(r.rms_error[1], r.rms_error[0] / 2.5);
  // Retargeting to the same parameter changes nothing.
  o.retarget = false;
  const auto plain = consistency_check(*model, drift(0.6, 0.6, 30), y, o);
  EXPECT_EQ(plain.rms_error, r.rms_error);
}

TEST_F(Consistency, DriftSlopeNearHalf) {
  ConsistencyOptions o;
  o.replications = 20;
  o.seed = 3;
  const auto r = consistency_check(*model, drift(0.6, 0.7, 100), y, o);
  EXPECT_GE(r.slope, -0.70);
  EXPECT_LE(r.slope, -0.30);
}

TEST_F(Consistency, RejectsLongTrajectory) {
  EXPECT_THROW(consistency_check(*model, drift(0.6, 0.7, 102), y, {}), InputError);
}

}  // namespace
