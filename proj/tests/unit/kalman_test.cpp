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
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "pisest/error.hpp"
#include "pisest/kalman.hpp"
#include "pisest/model.hpp"

namespace {

using pisest::RngStream;
using pisest::Series;

std::vector<double> random_theta(RngStream& rng) {
  return {-0.9 + 1.8 * rng.uniform(), 0.3 + 1.2 * rng.uniform(), 0.3 + 1.2 * rng.uniform()};
}

TEST(Kalman, SingleObservation) {
  for (const auto* id : {"ar1", "ar1-trend"}) {
    const auto model = pisest::make_model(id);
    const auto theta = model->make_parameter({0.6, 0.8, 0.5});
    const Series y{{1.7}, std::nullopt};
    const double trend = std::string(id) == "ar1-trend" ? 3.0 : 0.0;
    EXPECT_NEAR(pisest::kalman_loglik(*model, theta, y), oracle::log_normal(1.7, trend, 0.64 / 0.64 + 0.25), 1e-14);
  }
}

TEST(Kalman, IndependentObservationsWhenPhiIsZero) {
  const auto model = pisest::make_model("ar1-trend");
  const auto theta = model->make_parameter({0.0, 0.8, 0.5});
  const auto s = model->simulate(theta, 12, RngStream(3));
  // With phi = 0 the trend is 3 at t = 0 and vanishes afterwards.
  double expected = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    expected += oracle::log_normal(s.y[t], t == 0 ? 3.0 : 0.0, 0.64 + 0.25);
  }
  EXPECT_NEAR(pisest::kalman_loglik(*model, theta, s), expected, 1e-12);
}

TEST(Kalman, MatchesDenseGaussianOracle) {
  RngStream draw(7);
  for (const auto* id : {"ar1", "ar1-trend"}) {
    const auto model = pisest::make_model(id);
    const bool trend = std::string(id) == "ar1-trend";
    for (int trial = 0; trial < 50; ++trial) {
      const auto theta = model->make_parameter(random_theta(draw));
      for (std::size_t horizon : {3UL, 30UL}) {
        const auto s = model->simulate(theta, horizon, draw.split(static_cast<std::uint64_t>(trial)));
        const double dense = oracle::dense_gaussian_loglik(theta.values, s.y, trend);
        EXPECT_NEAR(pisest::kalman_loglik(*model, theta, s), dense, 1e-10 * std::max(1.0, std::fabs(dense))) << id;
      }
    }
  }
}

TEST(Kalman, FilteredMomentsMatchDenseOracle) {
  const auto model = pisest::make_model("ar1");
  RngStream draw(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto theta = model->make_parameter(random_theta(draw));
    const auto s = model->simulate(theta, 15, draw.split(static_cast<std::uint64_t>(trial)));
    const auto filter = pisest::kalman_filter(*model, theta, s);
    const auto [mean, var] = oracle::dense_filtered_moments(theta.values, s.y);
    EXPECT_NEAR(filter.filtered_mean.back(), mean, 1e-10);
    EXPECT_NEAR(filter.filtered_variance.back(), var, 1e-10);
  }
}

TEST(Kalman, StepTermsSumToTotal) {
  const auto model = pisest::make_model("ar1-trend");
  const auto theta = model->make_parameter({0.9, 0.7, 0.4});
  const auto s = model->simulate(theta, 300, RngStream(9));
  const auto filter = pisest::kalman_filter(*model, theta, s);
  ASSERT_EQ(filter.step_terms.size(), s.size());
  double sum = 0.0;
  for (double v : filter.step_terms) {
    sum += v;
  }
  EXPECT_NEAR(sum, filter.loglik, 1e-12 * std::fabs(filter.loglik));
  for (double v : filter.filtered_variance) {
    EXPECT_GT(v, 0.0);
  }
}

TEST(Kalman, NonlinearModelsAreRejected) {
  for (const auto* id : {"sv", "sv-trend", "par1"}) {
    const auto model = pisest::make_model(id);
    std::vector<double> values(model->parameter_dim(), 0.5);
    const auto theta = model->make_parameter(values);
    EXPECT_THROW(static_cast<void>(pisest::kalman_loglik(*model, theta, Series{{1.0, 2.0}, std::nullopt})),
                 pisest::Unsupported);
  }
}

TEST(Kalman, InvalidParameterIsRejected) {
  const auto model = pisest::make_model("ar1");
  const Series y{{1.0, 2.0}, std::nullopt};
  EXPECT_THROW(static_cast<void>(pisest::kalman_loglik(*model, model->make_parameter({0.5, 0.0, 1.0}), y)),
               pisest::InvalidParameter);
  // Within one finite-difference step of the boundary.
  EXPECT_THROW(static_cast<void>(pisest::kalman_score(*model, model->make_parameter({1.0 - 5e-7, 1.0, 1.0}), y)),
               pisest::InvalidParameter);
  EXPECT_THROW(static_cast<void>(pisest::kalman_conditional_score(*model, model->make_parameter({0.5, 5e-7, 1.0}), y, 1)),
               pisest::InvalidParameter);
}

TEST(Kalman, DualGradientMatchesFiniteDifferences) {
  RngStream draw(10);
  for (const auto* id : {"ar1", "ar1-trend"}) {
    const auto model = pisest::make_model(id);
    for (int trial = 0; trial < 20; ++trial) {
      const auto theta = model->make_parameter(random_theta(draw));
      const auto s = model->simulate(theta, 40, draw.split(static_cast<std::uint64_t>(trial)));
      const auto exact = pisest::kalman_loglik_gradient(*model, theta, s);
      const auto fd = oracle::richardson_gradient(
          [&](const std::vector<double>& v) { return pisest::kalman_loglik(*model, model->make_parameter(v), s); },
          theta.values, 1e-4);
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(exact[j], fd[j], 1e-6 * std::max(1.0, std::fabs(fd[j]))) << id << " " << j;
      }
      const auto score = pisest::kalman_score(*model, theta, s);
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(score[j], exact[j], 1e-5 * std::max(1.0, std::fabs(exact[j])));
      }
    }
  }
}

TEST(Kalman, ScoreStepHalvingIsSecondOrder) {
  const auto model = pisest::make_model("ar1");
  const auto theta = model->make_parameter({0.7, 0.8, 0.6});
  const auto s = model->simulate(theta, 50, RngStream(11));
  const auto exact = pisest::kalman_loglik_gradient(*model, theta, s);
  const double h = 1e-3;
  const auto coarse = pisest::kalman_score(*model, theta, s, h);
  const auto fine = pisest::kalman_score(*model, theta, s, h / 2.0);
  for (std::size_t j = 0; j < 3; ++j) {
    const double e_coarse = std::fabs(coarse[j] - exact[j]);
    const double e_fine = std::fabs(fine[j] - exact[j]);
    // Truncation error scales with h^2: halving the step divides it by about four.
    EXPECT_NEAR(e_coarse / e_fine, 4.0, 0.2) << j;
    EXPECT_LE(std::fabs(coarse[j] - fine[j]), 1e-4);
  }
}

TEST(Kalman, ScoreForIndependentObservations) {
  const auto model = pisest::make_model("ar1");
  const double sx = 0.6;
  const double sy = 0.9;
  const auto theta = model->make_parameter({0.0, sx, sy});
  const auto s = model->simulate(theta, 30, RngStream(12));
  const double v = sx * sx + sy * sy;
  double sum_sq = 0.0;
  for (double y : s.y) {
    sum_sq += y * y;
  }
  const double n = static_cast<double>(s.size());
  const double d_sy = sy * (sum_sq / (v * v) - n / v);
  EXPECT_NEAR(pisest::kalman_score(*model, theta, s)[2], d_sy, 1e-6 * std::max(1.0, std::fabs(d_sy)));
}

TEST(Kalman, ConditionalScoresTelescope) {
  for (const auto* id : {"ar1", "ar1-trend"}) {
    const auto model = pisest::make_model(id);
    const auto theta = model->make_parameter({0.8, 0.7, 0.5});
    const auto s = model->simulate(theta, 25, RngStream(13));
    std::vector<double> sum(3, 0.0);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const auto c = pisest::kalman_conditional_score(*model, theta, s, t);
      for (std::size_t j = 0; j < 3; ++j) {
        sum[j] += c[j];
      }
    }
    const auto total = pisest::kalman_score(*model, theta, s);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(sum[j], total[j], 1e-8 * std::max(1.0, std::fabs(total[j]))) << id;
    }
  }
}

TEST(Kalman, ConditionalScoreAtZeroIsMarginalGradient) {
  const auto model = pisest::make_model("ar1");
  const double phi = 0.5;
  const double sx = 0.9;
  const double sy = 0.4;
  const auto theta = model->make_parameter({phi, sx, sy});
  const Series y{{1.1, -0.3, 0.8}, std::nullopt};
  const auto c = pisest::kalman_conditional_score(*model, theta, y, 0);
  const auto fd = oracle::richardson_gradient(
      [&](const std::vector<double>& v) {
        return oracle::log_normal(1.1, 0.0, v[1] * v[1] / (1.0 - v[0] * v[0]) + v[2] * v[2]);
      },
      theta.values, 1e-4);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(c[j], fd[j], 1e-7);
  }
}

TEST(Kalman, ConditionalScoreIsPrefixDifference) {
  const auto model = pisest::make_model("ar1-trend");
  const auto theta = model->make_parameter({-0.4, 1.1, 0.7});
  const auto s = model->simulate(theta, 10, RngStream(14));
  for (std::size_t t = 1; t < s.size(); ++t) {
    const auto c = pisest::kalman_conditional_score(*model, theta, s, t);
    const auto fd = oracle::richardson_gradient(
        [&](const std::vector<double>& v) {
          const auto p = model->make_parameter(v);
          return pisest::kalman_loglik(*model, p, s.prefix(t + 1)) - pisest::kalman_loglik(*model, p, s.prefix(t));
        },
        theta.values, 1e-4);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(c[j], fd[j], 1e-6) << t;
    }
  }
  EXPECT_THROW(static_cast<void>(pisest::kalman_conditional_score(*model, theta, s, s.size())), pisest::InputError);
}

TEST(Kalman, MleSatisfiesFirstOrderConditionAndIsAFixedPoint) {
  for (const auto* id : {"ar1", "ar1-trend"}) {
    const auto model = pisest::make_model(id);
    const auto truth = model->make_parameter({0.7, 0.7, 0.9});
    const auto s = model->simulate(truth, 500, RngStream(15));
    const auto fit = pisest::kalman_mle(*model, model->make_parameter({0.3, 1.2, 0.5}), s);
    EXPECT_LE(std::sqrt(std::inner_product(fit.gradient.begin(), fit.gradient.end(), fit.gradient.begin(), 0.0)),
              1e-6);
    const auto score = pisest::kalman_score(*model, fit.theta, s);
    EXPECT_LE(std::sqrt(std::inner_product(score.begin(), score.end(), score.begin(), 0.0)), 1e-4);
    EXPECT_NEAR(fit.loglik, pisest::kalman_loglik(*model, fit.theta, s), 1e-12 * std::fabs(fit.loglik));

    const auto again = pisest::kalman_mle(*model, fit.theta, s);
    EXPECT_EQ(again.iterations, 0U);
    EXPECT_EQ(again.theta, fit.theta);

    const auto repeat = pisest::kalman_mle(*model, model->make_parameter({0.3, 1.2, 0.5}), s);
    EXPECT_EQ(repeat.theta, fit.theta);
  }
}

TEST(Kalman, MleIterationCapCarriesBestIterate) {
  const auto model = pisest::make_model("ar1");
  const auto s = model->simulate(model->make_parameter({0.7, 0.7, 0.9}), 200, RngStream(16));
  pisest::KalmanMleOptions options;
  options.max_iterations = 2;
  try {
    static_cast<void>(pisest::kalman_mle(*model, model->make_parameter({0.1, 2.0, 0.2}), s, options));
    FAIL() << "expected ConvergenceError";
  } catch (const pisest::ConvergenceError& e) {
    ASSERT_EQ(e.best().size(), 3U);
    EXPECT_TRUE(model->is_valid(e.best()));
  }
}

TEST(Kalman, MleIsConsistentOnLongSeries) {
  const auto model = pisest::make_model("ar1");
  const auto truth = model->make_parameter({0.7, 0.7, 0.9});
  const auto s = model->simulate(truth, 100000, RngStream(17));
  const auto fit = pisest::kalman_mle(*model, model->make_parameter({0.5, 0.5, 0.7}), s);

  // Observed information from differences of the exact gradient.
  Eigen::Matrix3d info;
  const double h = 1e-5;
  for (Eigen::Index j = 0; j < 3; ++j) {
    auto up = fit.theta;
    auto down = fit.theta;
    up.values[static_cast<std::size_t>(j)] += h;
    down.values[static_cast<std::size_t>(j)] -= h;
    const auto gu = pisest::kalman_loglik_gradient(*model, up, s);
    const auto gd = pisest::kalman_loglik_gradient(*model, down, s);
    for (Eigen::Index k = 0; k < 3; ++k) {
      info(k, j) = -(gu[static_cast<std::size_t>(k)] - gd[static_cast<std::size_t>(k)]) / (2.0 * h);
    }
  }
  const Eigen::Matrix3d cov = (0.5 * (info + info.transpose())).inverse();
  for (std::size_t j = 0; j < 3; ++j) {
    const double se = std::sqrt(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    EXPECT_LE(std::fabs(fit.theta[j] - truth[j]), 3.0 * se) << j;
  }
}

TEST(Kalman, MleWithFreeMaskKeepsFixedCoordinates) {
  const auto model = pisest::make_model("ar1-trend");
  const auto truth = model->make_parameter({0.95, 0.5, 0.5});
  const auto s = model->simulate(truth, 500, RngStream(4));
  pisest::KalmanMleOptions options;
  options.free = {true, false, false};
  const auto fit = pisest::kalman_mle(*model, model->make_parameter({0.8, 0.5, 0.5}), s, options);
  EXPECT_EQ(fit.theta[1], 0.5);
  EXPECT_EQ(fit.theta[2], 0.5);
  // One-dimensional first-order condition.
  EXPECT_LE(std::fabs(pisest::kalman_loglik_gradient(*model, fit.theta, s)[0]), 1e-6);
  options.free = {true};
  EXPECT_THROW(pisest::kalman_mle(*model, truth, s, options), pisest::InputError);
}

}  // namespace
