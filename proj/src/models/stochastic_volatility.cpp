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

// Stochastic volatility model, optionally with the decaying volatility trend 8 phi^t:
//   x_{t+1} = phi x_t + sigma_x eta_t,   y_t = sigma_y exp((b_t(phi) + x_t) / 2) xi_t,
// with x_0 stationary and b_t = 8 phi^t for t < trend_horizon, 0 afterwards.

#include <algorithm>
#include <cmath>
#include <vector>

#include "models/latent_ar1.hpp"
#include "models/models.hpp"
#include "pisest/error.hpp"

namespace pisest::models {

namespace {

constexpr double kTrendScale = 8.0;
constexpr std::size_t kLatentSum = latent_slot::kCount;        // sum x_s
constexpr std::size_t kScaledTail = latent_slot::kCount + 1;   // sum y_s^2 exp(-x_s), s >= horizon
constexpr std::size_t kScaledHead = latent_slot::kCount + 2;   // y_s^2 exp(-x_s) for s < horizon

class StochasticVolatility final : public Model {
 public:
  StochasticVolatility(bool with_trend, std::size_t horizon)
      : with_trend_(with_trend), horizon_(with_trend ? horizon : 0) {}

  [[nodiscard]] ModelKind kind() const noexcept override { return with_trend_ ? ModelKind::sv_trend : ModelKind::sv; }
  [[nodiscard]] std::vector<std::string> parameter_names() const override { return {"phi", "sigma_x", "sigma_y"}; }
  [[nodiscard]] std::size_t trend_horizon() const noexcept override { return horizon_; }
  [[nodiscard]] std::size_t stat_dim() const noexcept override { return kScaledHead + horizon_; }

  [[nodiscard]] std::optional<std::string> check(std::span<const double> theta) const override {
    if (theta.size() != 3) {
      return "expected 3 parameters (phi, sigma_x, sigma_y)";
    }
    if (auto reason = check_latent(theta[0], theta[1])) {
      return reason;
    }
    if (!std::isfinite(theta[2]) || !(theta[2] > 0.0)) {
      return "sigma_y must be positive";
    }
    return std::nullopt;
  }

  [[nodiscard]] Series simulate(const Parameter& theta, std::size_t horizon, RngStream rng) const override {
    validate(theta);
    const double phi = theta[0];
    const double sx = theta[1];
    const double sy = theta[2];
    Series out;
    std::vector<double> x(horizon + 1);
    out.y.resize(horizon + 1);
    x[0] = std::sqrt(sx * sx / (1.0 - phi * phi)) * rng.normal();
    for (std::size_t t = 0; t <= horizon; ++t) {
      if (t > 0) {
        x[t] = phi * x[t - 1] + sx * rng.normal();
      }
      out.y[t] = sy * std::exp(0.5 * (trend(phi, t) + x[t])) * rng.normal();
    }
    out.x = std::move(x);
    return out;
  }

  void propagate(const Parameter& theta, ProposalKind kind, std::size_t t, double y, std::span<const double> x_prev,
                 std::span<double> x_new, std::span<double> log_u, const RngStream& step) const override {
    require_bootstrap(kind);
    validate(theta);
    const Observation obs(theta, t, y, trend(theta[0], t));
    const RngStream particles = step.split(stream_tag::kParticles);
    for (std::size_t i = 0; i < x_new.size(); ++i) {
      RngStream rng = particles.split(i);
      const double x = obs.prior_mean(t == 0 ? 0.0 : x_prev[i]) + obs.prior_sd() * rng.normal();
      x_new[i] = x;
      log_u[i] = obs.log_density(x);
    }
  }

  [[nodiscard]] Proposal propose(const Parameter& theta, ProposalKind kind, std::size_t t, double x_prev, double y,
                                 RngStream& rng) const override {
    require_bootstrap(kind);
    validate(theta);
    const Observation obs(theta, t, y, trend(theta[0], t));
    const double x = obs.prior_mean(x_prev) + obs.prior_sd() * rng.normal();
    return {x, obs.log_density(x)};
  }

  void init_stats(std::span<double> s, double x0, double y0) const override {
    std::fill(s.begin(), s.end(), 0.0);
    LatentAr1::init(s, x0);
    fold_observation(s, 0, x0, y0);
  }

  void update_stats(std::span<double> s, double x_prev, double x_new, double y_new) const override {
    const std::size_t t = LatentAr1::update(s, x_prev, x_new);
    fold_observation(s, t, x_new, y_new);
  }

  void log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[0], theta[1]);
    const double sy = theta[2];
    const double inv_var_y = 1.0 / (sy * sy);
    const double log_sy = std::log(sy);
    const auto b = trend_table(theta[0]);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      const double n_obs = s[latent_slot::kTime] + 1.0;
      const std::size_t m = active_head(s);
      double trend_sum = 0.0;
      double scaled = s[kScaledTail];
      for (std::size_t k = 0; k < m; ++k) {
        trend_sum += b[k];
        scaled += s[kScaledHead + k] * std::exp(-b[k]);
      }
      out[i] = latent.log_density(s) - n_obs * (kHalfLogTwoPi + log_sy) - 0.5 * (s[kLatentSum] + trend_sum) -
               0.5 * scaled * inv_var_y;
    }
  }

  void grad_log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[0], theta[1]);
    const double sy = theta[2];
    const double inv_var_y = 1.0 / (sy * sy);
    const auto b = trend_table(theta[0]);
    const auto db = trend_derivative_table(theta[0]);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      double d_phi = 0.0;
      double d_sx = 0.0;
      latent.gradient(s, d_phi, d_sx);
      const double n_obs = s[latent_slot::kTime] + 1.0;
      const std::size_t m = active_head(s);
      double scaled = s[kScaledTail];
      double slope_sum = 0.0;
      double weighted_slope = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double v = s[kScaledHead + k] * std::exp(-b[k]);
        scaled += v;
        slope_sum += db[k];
        weighted_slope += v * db[k];
      }
      out[i * 3 + 0] = d_phi - 0.5 * slope_sum + 0.5 * weighted_slope * inv_var_y;
      out[i * 3 + 1] = d_sx;
      out[i * 3 + 2] = -n_obs / sy + scaled * inv_var_y / sy;
    }
  }

 private:
  class Observation {
   public:
    Observation(const Parameter& theta, std::size_t t, double y, double trend_t)
        : initial_(t == 0),
          phi_(theta[0]),
          sd_(initial_ ? theta[1] / std::sqrt(1.0 - theta[0] * theta[0]) : theta[1]),
          log_sy_(std::log(theta[2])),
          inv_var_y_(1.0 / (theta[2] * theta[2])),
          y_sq_(y * y),
          trend_(trend_t) {}

    [[nodiscard]] double prior_mean(double x_prev) const { return initial_ ? 0.0 : phi_ * x_prev; }
    [[nodiscard]] double prior_sd() const { return sd_; }

    [[nodiscard]] double log_density(double x) const {
      const double h = trend_ + x;
      return -kHalfLogTwoPi - log_sy_ - 0.5 * h - 0.5 * y_sq_ * std::exp(-h) * inv_var_y_;
    }

   private:
    bool initial_;
    double phi_;
    double sd_;
    double log_sy_;
    double inv_var_y_;
    double y_sq_;
    double trend_;
  };

  void require_bootstrap(ProposalKind kind) const {
    if (kind != ProposalKind::bootstrap) {
      throw Unsupported("model " + std::string(id()) + " supports only the bootstrap proposal");
    }
  }

  void fold_observation(std::span<double> s, std::size_t t, double x, double y) const {
    s[kLatentSum] += x;
    const double v = y * y * std::exp(-x);
    if (t < horizon_) {
      s[kScaledHead + t] = v;
    } else {
      s[kScaledTail] += v;
    }
  }

  [[nodiscard]] double trend(double phi, std::size_t t) const {
    if (!with_trend_ || t >= horizon_) {
      return 0.0;
    }
    return kTrendScale * std::pow(phi, static_cast<double>(t));
  }

  [[nodiscard]] std::vector<double> trend_table(double phi) const {
    std::vector<double> b(horizon_);
    double power = 1.0;
    for (std::size_t k = 0; k < horizon_; ++k) {
      b[k] = kTrendScale * power;
      power *= phi;
    }
    return b;
  }

  [[nodiscard]] std::vector<double> trend_derivative_table(double phi) const {
    std::vector<double> db(horizon_);
    double power = 1.0;
    for (std::size_t k = 1; k < horizon_; ++k) {
      db[k] = kTrendScale * static_cast<double>(k) * power;
      power *= phi;
    }
    return db;
  }

  [[nodiscard]] std::size_t active_head(std::span<const double> s) const {
    return std::min(static_cast<std::size_t>(s[latent_slot::kTime]) + 1, horizon_);
  }

  bool with_trend_;
  std::size_t horizon_;
};

}  // namespace

std::unique_ptr<Model> make_stochastic_volatility(bool with_trend, std::size_t trend_horizon) {
  return std::make_unique<StochasticVolatility>(with_trend, trend_horizon);
}

}  // namespace pisest::models
