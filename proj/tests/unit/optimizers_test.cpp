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

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "pisest/error.hpp"
#include "pisest/kalman.hpp"
#include "pisest/model.hpp"
#include "pisest/optimizers.hpp"
#include "pisest/pis.hpp"
#include "pisest/smc.hpp"

namespace {

using pisest::Algorithm;
using pisest::RngStream;
using pisest::RunConfig;
using pisest::Series;
using pisest::Trajectory;

class OptimizerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = pisest::make_model("ar1");
    truth_ = model_->make_parameter({0.7, 0.7, 0.9});
    data_ = model_->simulate(truth_, 60, RngStream(1));
  }

  RunConfig config(Algorithm algorithm) const {
    RunConfig cfg;
    cfg.algorithm = algorithm;
    cfg.theta0 = model_->make_parameter({0.5, 0.9, 0.7});
    cfg.particles = 100;
    cfg.max_iterations = 4;
    cfg.clock = pisest::ClockKind::work;
    cfg.seed = 11;
    cfg.schedule.c1 = 1e-2;
    return cfg;
  }

  std::unique_ptr<pisest::Model> model_;
  pisest::Parameter truth_;
  Series data_;
};

const std::vector<Algorithm> kAll = {Algorithm::naive_sga,      Algorithm::fisher_sga, Algorithm::adapt_ga,
                                     Algorithm::mcml,           Algorithm::vanilla_online, Algorithm::semi_ga};

TEST(Events, FormatAndParse) {
  using namespace pisest::event;
  EXPECT_EQ(pisest::format_events(kNone), "none");
  EXPECT_EQ(pisest::format_events(kRenewal | kFailure), "renewal|failure");
  for (unsigned flags = 0; flags < 16; ++flags) {
    EXPECT_EQ(pisest::parse_events(pisest::format_events(flags)), flags);
  }
  EXPECT_THROW(static_cast<void>(pisest::parse_events("bogus")), pisest::InputError);
}

TEST(Algorithms, IdsRoundTrip) {
  for (auto a : kAll) EXPECT_EQ(pisest::parse_algorithm(pisest::to_string(a)), a);
  EXPECT_THROW(static_cast<void>(pisest::parse_algorithm("sgd")), pisest::InputError);
}

TEST_F(OptimizerTest, ConfigValidation) {
  auto cfg = config(Algorithm::adapt_ga);
  cfg.r = 1.0;
  EXPECT_THROW(static_cast<void>(pisest::run_optimizer(*model_, data_, cfg)), pisest::InputError);
  cfg = config(Algorithm::fisher_sga);
  cfg.max_iterations = 0;
  EXPECT_THROW(static_cast<void>(pisest::run_optimizer(*model_, data_, cfg)), pisest::InputError);
  cfg = config(Algorithm::semi_ga);
  cfg.r1 = 0.0;
  EXPECT_THROW(static_cast<void>(pisest::run_optimizer(*model_, data_, cfg)), pisest::InputError);
  cfg = config(Algorithm::semi_ga);
  cfg.window = 0;
  EXPECT_THROW(static_cast<void>(pisest::run_optimizer(*model_, data_, cfg)), pisest::InputError);
  cfg = config(Algorithm::fisher_sga);
  cfg.theta0 = model_->make_parameter({1.2, 0.9, 0.7});
  EXPECT_THROW(static_cast<void>(pisest::run_optimizer(*model_, data_, cfg)), pisest::InvalidParameter);
}

TEST_F(OptimizerTest, ZeroGainKeepsParameterFixed) {
  for (auto a : kAll) {
    auto cfg = config(a);
    cfg.schedule.c1 = 0.0;
    const auto traj = pisest::run_optimizer(*model_, data_, cfg);
    EXPECT_FALSE(traj.failed) << pisest::to_string(a);
    for (const auto& rec : traj.records) EXPECT_EQ(rec.theta, cfg.theta0.values) << pisest::to_string(a);
  }
}

TEST_F(OptimizerTest, ZeroGainOnlineRunsAreVanillaSmc) {
  for (auto a : {Algorithm::vanilla_online, Algorithm::semi_ga}) {
    for (double r2 : {1.0, 0.5}) {
      auto cfg = config(a);
      cfg.schedule.c1 = 0.0;
      cfg.r2 = r2;
      cfg.r1 = 0.9;
      const auto traj = pisest::run_optimizer(*model_, data_, cfg);
      pisest::SmcOptions options;
      options.particles = cfg.particles;
      options.r2 = r2;
      const auto reference = pisest::smc_run(*model_, cfg.theta0, data_.prefix(data_.size() - 1), options,
                                             RngStream(cfg.seed));
      EXPECT_EQ(traj.cloud, reference.cloud) << pisest::to_string(a);
      EXPECT_EQ(pisest::loglik_estimate(traj.cloud).value, reference.loglik.value);
      EXPECT_EQ(traj.renewals, 0U);
      for (const auto& rec : traj.records) EXPECT_EQ(rec.ess_a, static_cast<double>(cfg.particles));
    }
  }
}

TEST_F(OptimizerTest, OnlineWithSingleObservationDoesNothing) {
  for (auto a : {Algorithm::vanilla_online, Algorithm::semi_ga}) {
    const auto traj = pisest::run_optimizer(*model_, data_.prefix(1), config(a));
    ASSERT_EQ(traj.records.size(), 1U);
    EXPECT_EQ(traj.final().theta, config(a).theta0.values);
    EXPECT_EQ(traj.propagations, 0U);
  }
}

TEST_F(OptimizerTest, Deterministic) {
  for (auto a : kAll) {
    const auto cfg = config(a);
    const auto first = pisest::run_optimizer(*model_, data_, cfg);
    const auto second = pisest::run_optimizer(*model_, data_, cfg);
    EXPECT_EQ(first.records, second.records) << pisest::to_string(a);
    auto other = cfg;
    other.seed = 12;
    EXPECT_NE(pisest::run_optimizer(*model_, data_, other).final().theta, first.final().theta);
  }
}

TEST_F(OptimizerTest, WorkClockStampsAreMonotone) {
  for (auto a : kAll) {
    const auto traj = pisest::run_optimizer(*model_, data_, config(a));
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
      EXPECT_GE(traj.records[k].seconds, traj.records[k - 1].seconds);
      EXPECT_GT(traj.records[k].iteration, traj.records[k - 1].iteration);
    }
    EXPECT_GT(traj.final().seconds, 0.0);
  }
}

TEST_F(OptimizerTest, BudgetStopsOfflineRuns) {
  auto cfg = config(Algorithm::fisher_sga);
  cfg.max_iterations = 0;
  // One particle run costs N (T + 1) work units.
  cfg.budget_seconds = 3.5 * static_cast<double>(cfg.particles * data_.size()) / cfg.work_rate;
  const auto traj = pisest::run_optimizer(*model_, data_, cfg);
  EXPECT_EQ(traj.smc_runs, 4U);
}

TEST_F(OptimizerTest, OperationCountsFollowTheAlgorithms) {
  const auto adapt = pisest::run_optimizer(*model_, data_, config(Algorithm::adapt_ga));
  EXPECT_EQ(adapt.smc_runs, adapt.records.size() - 1);
  for (std::size_t k = 1; k < adapt.records.size(); ++k) {
    EXPECT_TRUE(adapt.records[k].events & pisest::event::kRegenerate);
  }
  const auto naive = pisest::run_optimizer(*model_, data_, config(Algorithm::naive_sga));
  EXPECT_EQ(naive.smc_runs, 2 * (naive.records.size() - 1));
  const auto online = pisest::run_optimizer(*model_, data_, config(Algorithm::vanilla_online));
  EXPECT_EQ(online.propagations, data_.size() - 1);
  EXPECT_EQ(online.smc_runs, 0U);
  EXPECT_EQ(online.final().iteration, data_.size() - 1);
}

TEST_F(OptimizerTest, OnlineOutputCadence) {
  auto cfg = config(Algorithm::vanilla_online);
  cfg.output_every = 7;
  const auto traj = pisest::run_optimizer(*model_, data_, cfg);
  std::vector<std::size_t> expected = {0};
  for (std::size_t t = 7; t < data_.size() - 1; t += 7) expected.push_back(t);
  expected.push_back(data_.size() - 1);
  std::vector<std::size_t> got;
  for (const auto& rec : traj.records) got.push_back(rec.iteration);
  EXPECT_EQ(got, expected);
}

TEST_F(OptimizerTest, AdaptGaWithThresholdNearOneIsFisherSga) {
  auto fisher = config(Algorithm::fisher_sga);
  auto adapt = config(Algorithm::adapt_ga);
  adapt.r = 1.0 - 1e-12;
  const auto f = pisest::run_optimizer(*model_, data_, fisher);
  const auto a = pisest::run_optimizer(*model_, data_, adapt);
  ASSERT_EQ(a.records.size(), f.records.size());
  EXPECT_EQ(a.inner_updates, a.records.size() - 1);
  for (std::size_t k = 0; k < a.records.size(); ++k) EXPECT_EQ(a.records[k].theta, f.records[k].theta);
}

TEST_F(OptimizerTest, McmlIgnoresTheEssStop) {
  auto adapt = config(Algorithm::adapt_ga);
  adapt.r = 0.9;
  adapt.max_iterations = 2;
  auto mcml = adapt;
  mcml.algorithm = Algorithm::mcml;
  const auto a = pisest::run_optimizer(*model_, data_, adapt);
  const auto m = pisest::run_optimizer(*model_, data_, mcml);
  EXPECT_GT(m.inner_updates, a.inner_updates);
  EXPECT_LT(m.final().ess_a, 0.9 * static_cast<double>(adapt.particles));
}

TEST_F(OptimizerTest, FreeMaskHoldsCoordinates) {
  for (auto a : kAll) {
    auto cfg = config(a);
    cfg.free = {true, false, false};
    const auto traj = pisest::run_optimizer(*model_, data_, cfg);
    EXPECT_NE(traj.final().theta[0], cfg.theta0[0]) << pisest::to_string(a);
    EXPECT_EQ(traj.final().theta[1], cfg.theta0[1]);
    EXPECT_EQ(traj.final().theta[2], cfg.theta0[2]);
  }
}

TEST_F(OptimizerTest, FailureIsStickyAndFreezesTheParameter) {
  // A huge gain throws phi out of (-1, 1) on the first update.
  auto cfg = config(Algorithm::vanilla_online);
  cfg.schedule.c1 = 10.0;
  const auto online = pisest::run_optimizer(*model_, data_, cfg);
  ASSERT_TRUE(online.failed);
  EXPECT_FALSE(online.failure_reason.empty());
  EXPECT_EQ(online.final().iteration, data_.size() - 1);
  bool seen = false;
  for (const auto& rec : online.records) {
    if (seen) {
      EXPECT_TRUE(rec.failed);
      EXPECT_EQ(rec.theta, online.final().theta);
    }
    seen = seen || rec.failed;
  }
  EXPECT_TRUE(model_->is_valid(online.final().theta));

  cfg.algorithm = Algorithm::fisher_sga;
  cfg.max_iterations = 10;
  const auto offline = pisest::run_optimizer(*model_, data_, cfg);
  ASSERT_TRUE(offline.failed);
  EXPECT_TRUE(offline.final().events & pisest::event::kFailure);
  EXPECT_LT(offline.records.size(), 11U);
}

TEST_F(OptimizerTest, SemiGaRenewsBelowThreshold) {
  auto cfg = config(Algorithm::semi_ga);
  cfg.r1 = 1.0;
  cfg.output_every = 1;
  const auto traj = pisest::run_optimizer(*model_, data_, cfg);
  EXPECT_GT(traj.renewals, 0U);
  std::size_t flagged = 0;
  for (const auto& rec : traj.records) flagged += (rec.events & pisest::event::kRenewal) != 0U ? 1 : 0;
  EXPECT_EQ(flagged, traj.renewals);
  EXPECT_EQ(traj.smc_runs, traj.renewals);
  for (const auto& rec : traj.records) {
    // Renewal and resampling are exclusive within a step.
    EXPECT_FALSE((rec.events & pisest::event::kRenewal) && (rec.events & pisest::event::kResample));
  }
}

TEST_F(OptimizerTest, TrajectoryCsvRoundTrip) {
  const auto traj = pisest::run_optimizer(*model_, data_, config(Algorithm::semi_ga));
  std::stringstream buffer;
  pisest::write_trajectory_csv(traj, buffer);
  const std::string text = buffer.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "iter,t_wall,phi,sigma_x,sigma_y,event,ess_a,ess_w,failed");
  const auto back = pisest::read_trajectory_csv(buffer);
  EXPECT_EQ(back.parameter_names, traj.parameter_names);
  EXPECT_EQ(back.records, traj.records);
  std::stringstream bad("iter,phi\n1,2\n");
  EXPECT_THROW(static_cast<void>(pisest::read_trajectory_csv(bad)), pisest::InputError);
}

TEST_F(OptimizerTest, NaiveSgaWithExactLikelihoodFindsTheMle) {
  const auto s = model_->simulate(truth_, 300, RngStream(2));
  const auto mle = pisest::kalman_mle(*model_, truth_, s);
  auto cfg = config(Algorithm::naive_sga);
  cfg.theta0 = model_->make_parameter({0.6, 0.8, 0.8});
  cfg.max_iterations = 4000;
  cfg.schedule = {4e-3, 10.0, 0.602, 0.02, 0.101};
  const auto traj = pisest::naive_sga(*model_, s, cfg, [&](const pisest::Parameter& at) {
    return pisest::kalman_loglik(*model_, at, s);
  });
  ASSERT_FALSE(traj.failed) << traj.failure_reason;
  EXPECT_LE(pisest::sup_norm_distance(traj.final().theta, mle.theta.values), 1e-3);
}

TEST_F(OptimizerTest, AdaptGaEndsWithinThreeStandardErrorsOfMle) {
  const auto s = model_->simulate(truth_, 500, RngStream(5));
  const auto mle = pisest::kalman_mle(*model_, truth_, s);
  Eigen::Matrix3d info;
  const double h = 1e-5;
  for (Eigen::Index j = 0; j < 3; ++j) {
    auto up = mle.theta;
    auto down = mle.theta;
    up.values[static_cast<std::size_t>(j)] += h;
    down.values[static_cast<std::size_t>(j)] -= h;
    const auto gu = pisest::kalman_loglik_gradient(*model_, up, s);
    const auto gd = pisest::kalman_loglik_gradient(*model_, down, s);
    for (Eigen::Index k = 0; k < 3; ++k) {
      info(k, j) = -(gu[static_cast<std::size_t>(k)] - gd[static_cast<std::size_t>(k)]) / (2.0 * h);
    }
  }
  const Eigen::Matrix3d cov = (0.5 * (info + info.transpose())).inverse();

  auto cfg = config(Algorithm::adapt_ga);
  cfg.max_iterations = 150;
  cfg.particles = 500;
  cfg.schedule.c1 = 2e-3;
  cfg.r = 0.2;
  cfg.seed = 2;
  const auto traj = pisest::run_optimizer(*model_, s, cfg);
  ASSERT_FALSE(traj.failed) << traj.failure_reason;
  for (std::size_t j = 0; j < 3; ++j) {
    const double se = std::sqrt(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    EXPECT_LE(std::fabs(traj.final().theta[j] - mle.theta[j]), 3.0 * se) << j;
  }
}

}  // namespace
