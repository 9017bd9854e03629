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

#include "oracles.hpp"
#include "pisest/error.hpp"
#include "pisest/kalman.hpp"
#include "pisest/model.hpp"
#include "pisest/pis.hpp"
#include "pisest/smc.hpp"

namespace {

using pisest::Parameter;
using pisest::ParticleCloud;
using pisest::RngStream;
using pisest::SmcOptions;

pisest::SmcRunResult run_filter(const pisest::Model& model, const Parameter& theta, const pisest::Series& s,
                                std::size_t n, const RngStream& rng) {
  SmcOptions options;
  options.particles = n;
  return pisest::smc_run(model, theta, s, options, rng);
}

Parameter shifted(const Parameter& base, std::vector<double> delta) {
  Parameter out = base;
  for (std::size_t j = 0; j < delta.size(); ++j) out[j] += delta[j];
  return out;
}

struct Spread {
  std::vector<double> mean;
  std::vector<double> sd;
};

Spread spread(const std::vector<std::vector<double>>& rows) {
  const std::size_t p = rows.front().size();
  const auto n = static_cast<double>(rows.size());
  Spread s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += r[j] / n;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) s.sd[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]) / (n - 1.0);
  for (double& v : s.sd) v = std::sqrt(v);
  return s;
}

TEST(IsWeight, IdentityAndTelescoping) {
  for (const auto* id : {"ar1", "ar1-trend", "sv", "sv-trend", "par1"}) {
    pisest::ModelOptions mo;
    mo.max_length = 32;
    const auto model = pisest::make_model(id, mo);
    const bool par = std::string(id) == "par1";
    const auto t0 = model->make_parameter(par ? std::vector<double>{0.5, 0.1, 0.2, -0.1, 0.1, 0.0, 0.6, 0.5}
                                              : std::vector<double>{0.7, 0.6, 0.8});
    const auto t1 = shifted(t0, par ? std::vector<double>{0.05, 0, 0, 0, 0, 0.02, -0.1, 0.05} : std::vector<double>{0.1, -0.1, 0.2});
    const auto t2 = shifted(t0, par ? std::vector<double>{-0.1, 0.1, 0, 0, 0, 0, 0.2, -0.1} : std::vector<double>{-0.2, 0.3, -0.3});
    const auto s = model->simulate(t0, 20, RngStream(1));
    const auto stats = model->build_stats(*s.x, s.y);
    EXPECT_EQ(pisest::log_is_weight(*model, stats, t0, t0), 0.0) << id;
    const double chained = pisest::log_is_weight(*model, stats, t0, t1) + pisest::log_is_weight(*model, stats, t1, t2);
    EXPECT_NEAR(chained, pisest::log_is_weight(*model, stats, t0, t2), 1e-12 * std::max(1.0, std::fabs(chained))) << id;
  }
}

TEST(IsWeight, SingleStepPathByDirectDensities) {
  const auto model = pisest::make_model("ar1");
  const auto t0 = model->make_parameter({0.5, 0.9, 0.6});
  const auto t1 = model->make_parameter({0.3, 1.1, 0.4});
  const double x0 = 0.4;
  const double y0 = 0.1;
  const auto stats = model->initial_stats(x0, y0);
  auto density = [&](const Parameter& th) {
    return oracle::log_normal(x0, 0.0, th[1] * th[1] / (1.0 - th[0] * th[0])) +
           oracle::log_normal(y0, x0, th[2] * th[2]);
  };
  EXPECT_NEAR(pisest::log_is_weight(*model, stats, t0, t1), density(t1) - density(t0), 1e-13);
}

TEST(IsWeight, InvalidParameterPropagates) {
  const auto model = pisest::make_model("ar1");
  const auto stats = model->initial_stats(0.1, 0.2);
  EXPECT_THROW(static_cast<void>(pisest::log_is_weight(*model, stats, model->make_parameter({0.5, 1.0, 1.0}),
                                                       model->make_parameter({1.5, 1.0, 1.0}))),
               pisest::InvalidParameter);
}

TEST(PisScore, AtGeneratingParameterIsFisherScore) {
  for (const auto* id : {"ar1", "sv"}) {
    const auto model = pisest::make_model(id);
    const auto theta = model->make_parameter({0.8, 0.5, 0.7});
    const auto s = model->simulate(theta, 30, RngStream(2));
    SmcOptions options;
    options.particles = 500;
    options.r2 = 0.5;
    const auto run = pisest::smc_run(*model, theta, s, options, RngStream(3));
    const auto pis = pisest::pis_score(*model, run.cloud, theta, theta);
    EXPECT_EQ(pis.score, pisest::fisher_score(*model, run.cloud, theta)) << id;
    EXPECT_DOUBLE_EQ(pis.a_ess, 500.0);
  }
}

TEST(PisScore, MatchesKalmanScoreNearGeneratingParameter) {
  const auto model = pisest::make_model("ar1");
  const auto theta0 = model->make_parameter({0.7, 0.7, 0.9});
  const auto s = model->simulate(theta0, 200, RngStream(4));
  const auto theta = shifted(theta0, {0.02 / std::sqrt(3.0), -0.02 / std::sqrt(3.0), 0.02 / std::sqrt(3.0)});
  const auto exact = pisest::kalman_score(*model, theta, s);
  std::vector<std::vector<double>> runs;
  for (std::uint64_t r = 0; r < 12; ++r) {
    const auto run = run_filter(*model, theta0, s, 10000, RngStream(5).split(r));
    runs.push_back(pisest::pis_score(*model, run.cloud, theta0, theta).score);
  }
  const auto sp = spread(runs);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LE(std::fabs(runs[0][j] - exact[j]), 3.0 * sp.sd[j]) << j;
    EXPECT_LE(std::fabs(sp.mean[j] - exact[j]), 3.0 * sp.sd[j] / std::sqrt(12.0)) << j;
  }
}

TEST(PisScore, AEssDeclinesAlongARay) {
  const auto model = pisest::make_model("ar1");
  const auto theta0 = model->make_parameter({0.7, 0.7, 0.9});
  const auto s = model->simulate(theta0, 100, RngStream(6));
  const auto run = run_filter(*model, theta0, s, 2000, RngStream(7));
  std::vector<double> a_ess;
  for (int k = 0; k < 10; ++k) {
    const double step = 0.01 * k;
    a_ess.push_back(pisest::pis_score(*model, run.cloud, theta0, shifted(theta0, {step, step, -step})).a_ess);
  }
  int declines = 0;
  for (std::size_t k = 1; k < a_ess.size(); ++k) declines += a_ess[k] <= a_ess[k - 1] ? 1 : 0;
  EXPECT_GT(declines, 4);
  EXPECT_LT(a_ess.back(), a_ess.front());
}

TEST(Curve, EqualsOwnEstimateAtGeneratingParameter) {
  const auto model = pisest::make_model("sv");
  const auto theta0 = model->make_parameter({0.9, 0.4, 0.7});
  const auto s = model->simulate(theta0, 25, RngStream(8));
  const auto run = run_filter(*model, theta0, s, 400, RngStream(9));
  const auto curve = pisest::smoothed_loglik_curve(*model, run.cloud, theta0, {theta0});
  EXPECT_NEAR(curve[0].loglik, run.loglik.value, 1e-12 * std::fabs(run.loglik.value));
}

TEST(Curve, TracksKalmanCurveOnShortSeries) {
  const auto model = pisest::make_model("ar1");
  const auto theta0 = model->make_parameter({0.7, 0.7, 0.9});
  const auto s = model->simulate(theta0, 5, RngStream(10));
  const auto run = run_filter(*model, theta0, s, 1000, RngStream(11));
  std::vector<Parameter> grid;
  for (int k = -10; k <= 10; ++k) grid.push_back(shifted(theta0, {0.01 * k, 0.0, 0.0}));
  const auto curve = pisest::smoothed_loglik_curve(*model, run.cloud, theta0, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    ASSERT_TRUE(std::isfinite(curve[g].loglik));
    EXPECT_NEAR(curve[g].loglik, pisest::kalman_loglik(*model, grid[g], s), 0.2) << grid[g][0];
  }
}

TEST(Retarget, IdentityLeavesWeights) {
  const auto model = pisest::make_model("ar1");
  const auto theta = model->make_parameter({0.7, 0.7, 0.9});
  const auto s = model->simulate(theta, 10, RngStream(12));
  SmcOptions options;
  options.particles = 300;
  options.r2 = 0.0;
  auto cloud = pisest::smc_run(*model, theta, s, options, RngStream(13)).cloud;
  const auto before = cloud.logw;
  const auto d = pisest::retarget(*model, cloud, theta, theta);
  EXPECT_EQ(cloud.logw, before);
  EXPECT_DOUBLE_EQ(d.a_ess, 300.0);
  EXPECT_EQ(d.pre_ess, d.post_ess);
  EXPECT_EQ(d.time, 10U);
}

TEST(Retarget, RoundTripRestoresWeights) {
  const auto model = pisest::make_model("sv-trend");
  const auto from = model->make_parameter({0.8, 0.5, 0.7});
  const auto to = model->make_parameter({0.85, 0.45, 0.75});
  const auto s = model->simulate(from, 15, RngStream(14));
  SmcOptions options;
  options.particles = 300;
  options.r2 = 0.3;
  auto cloud = pisest::smc_run(*model, from, s, options, RngStream(15)).cloud;
  const auto original = pisest::normalized_weights(cloud.logw);
  const auto there = pisest::retarget(*model, cloud, from, to);
  EXPECT_EQ(cloud.theta_gen, to);
  for (double e : {there.pre_ess, there.post_ess, there.a_ess}) {
    EXPECT_GE(e, 1.0);
    EXPECT_LE(e, 300.0);
  }
  EXPECT_THROW(static_cast<void>(pisest::retarget(*model, cloud, from, to)), pisest::InputError);
  static_cast<void>(pisest::retarget(*model, cloud, to, from));
  const auto restored = pisest::normalized_weights(cloud.logw);
  for (std::size_t i = 0; i < restored.size(); ++i) EXPECT_NEAR(restored[i], original[i], 1e-12);
}

TEST(Retarget, WeightedMeanEqualsSelfNormalisedEstimator) {
  const auto model = pisest::make_model("ar1");
  const auto from = model->make_parameter({0.7, 0.7, 0.9});
  const auto to = model->make_parameter({0.65, 0.75, 0.85});
  const auto s = model->simulate(from, 12, RngStream(16));
  SmcOptions options;
  options.particles = 500;
  options.r2 = 0.5;
  auto cloud = pisest::smc_run(*model, from, s, options, RngStream(17)).cloud;
  const auto w = pisest::normalized_weights(cloud.logw);
  const auto a = pisest::log_is_weights(*model, cloud, from, to);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += w[i] * std::exp(a[i]) * cloud.x[i];
    den += w[i] * std::exp(a[i]);
  }
  static_cast<void>(pisest::retarget(*model, cloud, from, to));
  const auto w2 = pisest::normalized_weights(cloud.logw);
  double mean = 0.0;
  for (std::size_t i = 0; i < w2.size(); ++i) mean += w2[i] * cloud.x[i];
  EXPECT_NEAR(mean, num / den, 1e-12);
}

TEST(Retarget, FisherScoreAfterRetargetMatchesKalman) {
  const auto model = pisest::make_model("ar1");
  const auto from = model->make_parameter({0.7, 0.7, 0.9});
  const auto to = shifted(from, {0.02, 0.0, 0.0});
  const auto s = model->simulate(from, 100, RngStream(18));
  const auto exact = pisest::kalman_score(*model, to, s);
  std::vector<std::vector<double>> runs;
  for (std::uint64_t r = 0; r < 12; ++r) {
    auto cloud = run_filter(*model, from, s, 10000, RngStream(19).split(r)).cloud;
    static_cast<void>(pisest::retarget(*model, cloud, from, to));
    runs.push_back(pisest::fisher_score(*model, cloud, to));
  }
  const auto sp = spread(runs);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LE(std::fabs(runs[0][j] - exact[j]), 3.0 * sp.sd[j]) << j;
    EXPECT_LE(std::fabs(sp.mean[j] - exact[j]), 3.0 * sp.sd[j] / std::sqrt(12.0)) << j;
  }
}

TEST(Retarget, PosteriorMeanErrorHalvesWhenParticlesQuadruple) {
  const auto model = pisest::make_model("ar1");
  const auto from = model->make_parameter({0.7, 0.7, 0.9});
  const auto to = shifted(from, {0.03, -0.02, 0.02});
  const auto s = model->simulate(from, 20, RngStream(20));
  const double truth = pisest::kalman_filter(*model, to, s).filtered_mean.back();
  auto rms = [&](std::size_t n) {
    double total = 0.0;
    for (std::uint64_t r = 0; r < 200; ++r) {
      auto cloud = run_filter(*model, from, s, n, RngStream(21 + n).split(r)).cloud;
      static_cast<void>(pisest::retarget(*model, cloud, from, to));
      const auto w = pisest::normalized_weights(cloud.logw);
      double mean = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * cloud.x[i];
      total += (mean - truth) * (mean - truth);
    }
    return std::sqrt(total / 200.0);
  };
  const double ratio = rms(250) / rms(1000);
  EXPECT_GE(ratio, 1.0);
  EXPECT_LE(ratio, 3.0);
}

}  // namespace
