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

// Noisy AR(1) model, optionally with the decaying observation trend 3 phi^t:
//   x_{t+1} = phi x_t + sigma_x eta_t,   y_t = c_t(phi) + x_t + sigma_y xi_t,
// with x_0 stationary and c_t = 3 phi^t for t < trend_horizon, 0 afterwards.

#include <algorithm>
#include <cmath>
#include <vector>

#include "models/latent_ar1.hpp"
#include "models/models.hpp"
#include "pisest/error.hpp"

namespace pisest::models {

namespace {

constexpr double kTrendScale = 3.0;
constexpr std::size_t kResidualSq = latent_slot::kCount;      // sum (y_s - x_s)^2
constexpr std::size_t kResidualHead = latent_slot::kCount + 1;  // y_s - x_s for s < horizon

class LinearGaussian final : public Model {
 public:
  LinearGaussian(bool with_trend, std::size_t horizon) : with_trend_(with_trend), horizon_(with_trend ? horizon : 0) {}

  [[nodiscard]] ModelKind kind() const noexcept override { return with_trend_ ? ModelKind::ar1_trend : ModelKind::ar1; }
  [[nodiscard]] std::vector<std::string> parameter_names() const override { return {"phi", "sigma_x", "sigma_y"}; }
  [[nodiscard]] std::size_t trend_horizon() const noexcept override { return horizon_; }
  [[nodiscard]] std::size_t stat_dim() const noexcept override { return kResidualHead + horizon_; }

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

  [[nodiscard]] bool supports(ProposalKind) const noexcept override { return true; }
  [[nodiscard]] ProposalKind default_proposal() const noexcept override { return ProposalKind::optimal; }

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
      out.y[t] = trend(phi, t) + x[t] + sy * rng.normal();
    }
    out.x = std::move(x);
    return out;
  }

  void propagate(const Parameter& theta, ProposalKind kind, std::size_t t, double y, std::span<const double> x_prev,
                 std::span<double> x_new, std::span<double> log_u, const RngStream& step) const override {
    validate(theta);
    const Step prepared(theta, kind, t, y, trend(theta[0], t));
    const RngStream particles = step.split(stream_tag::kParticles);
    for (std::size_t i = 0; i < x_new.size(); ++i) {
      RngStream rng = particles.split(i);
      const Proposal p = prepared.draw(t == 0 ? 0.0 : x_prev[i], rng);
      x_new[i] = p.x;
      log_u[i] = p.log_u;
    }
  }

  [[nodiscard]] Proposal propose(const Parameter& theta, ProposalKind kind, std::size_t t, double x_prev, double y,
                                 RngStream& rng) const override {
    validate(theta);
    return Step(theta, kind, t, y, trend(theta[0], t)).draw(x_prev, rng);
  }

  void init_stats(std::span<double> s, double x0, double y0) const override {
    std::fill(s.begin(), s.end(), 0.0);
    LatentAr1::init(s, x0);
    const double e = y0 - x0;
    s[kResidualSq] = e * e;
    if (horizon_ > 0) {
      s[kResidualHead] = e;
    }
  }

  void update_stats(std::span<double> s, double x_prev, double x_new, double y_new) const override {
    const std::size_t t = LatentAr1::update(s, x_prev, x_new);
    const double e = y_new - x_new;
    s[kResidualSq] += e * e;
    if (t < horizon_) {
      s[kResidualHead + t] = e;
    }
  }

  void log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[0], theta[1]);
    const double sy = theta[2];
    const double inv_var_y = 1.0 / (sy * sy);
    const double log_sy = std::log(sy);
    const auto trend_values = trend_table(theta[0]);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      const double n_obs = s[latent_slot::kTime] + 1.0;
      const double sum_sq = residual_sum_sq(s, trend_values);
      out[i] = latent.log_density(s) - n_obs * (kHalfLogTwoPi + log_sy) - 0.5 * sum_sq * inv_var_y;
    }
  }

  void grad_log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[0], theta[1]);
    const double sy = theta[2];
    const double inv_var_y = 1.0 / (sy * sy);
    const auto trend_values = trend_table(theta[0]);
    const auto trend_slopes = trend_derivative_table(theta[0]);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      double d_phi = 0.0;
      double d_sx = 0.0;
      latent.gradient(s, d_phi, d_sx);
      const double n_obs = s[latent_slot::kTime] + 1.0;
      const double sum_sq = residual_sum_sq(s, trend_values);
      if (horizon_ > 0) {
        const std::size_t m = active_head(s);
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          acc += trend_slopes[k] * (s[kResidualHead + k] - trend_values[k]);
        }
        d_phi += acc * inv_var_y;
      }
      out[i * 3 + 0] = d_phi;
      out[i * 3 + 1] = d_sx;
      out[i * 3 + 2] = -n_obs / sy + sum_sq * inv_var_y / sy;
    }
  }

 private:
  // Per-step proposal constants for one parameter value.
  class Step {
   public:
    Step(const Parameter& theta, ProposalKind kind, std::size_t t, double y, double trend_t)
        : optimal_(kind == ProposalKind::optimal), initial_(t == 0), phi_(theta[0]), z_(y - trend_t) {
      const double sx = theta[1];
      const double var_y = theta[2] * theta[2];
      const double var_x = initial_ ? sx * sx / (1.0 - phi_ * phi_) : sx * sx;
      if (optimal_) {
        const double post_var = 1.0 / (1.0 / var_x + 1.0 / var_y);
        prior_precision_ = post_var / var_x;
        data_term_ = post_var * z_ / var_y;
        sd_ = std::sqrt(post_var);
        weight_var_ = var_x + var_y;
      } else {
        sd_ = std::sqrt(var_x);
        weight_var_ = var_y;
      }
      weight_norm_ = -kHalfLogTwoPi - 0.5 * std::log(weight_var_);
    }

    Proposal draw(double x_prev, RngStream& rng) const {
      const double prior_mean = initial_ ? 0.0 : phi_ * x_prev;
      if (optimal_) {
        const double d = z_ - prior_mean;
        return {prior_precision_ * prior_mean + data_term_ + sd_ * rng.normal(),
                weight_norm_ - 0.5 * d * d / weight_var_};
      }
      const double x = prior_mean + sd_ * rng.normal();
      const double d = z_ - x;
      return {x, weight_norm_ - 0.5 * d * d / weight_var_};
    }

   private:
    bool optimal_;
    bool initial_;
    double phi_;
    double z_;
    double prior_precision_ = 0.0;
    double data_term_ = 0.0;
    double sd_ = 0.0;
    double weight_var_ = 0.0;
    double weight_norm_ = 0.0;
  };

  [[nodiscard]] double trend(double phi, std::size_t t) const {
    if (!with_trend_ || t >= horizon_) {
      return 0.0;
    }
    return kTrendScale * std::pow(phi, static_cast<double>(t));
  }

  [[nodiscard]] std::vector<double> trend_table(double phi) const {
    std::vector<double> c(horizon_);
    double power = 1.0;
    for (std::size_t k = 0; k < horizon_; ++k) {
      c[k] = kTrendScale * power;
      power *= phi;
    }
    return c;
  }

  [[nodiscard]] std::vector<double> trend_derivative_table(double phi) const {
    std::vector<double> c(horizon_);
    double power = 1.0;  // phi^(k-1)
    for (std::size_t k = 1; k < horizon_; ++k) {
      c[k] = kTrendScale * static_cast<double>(k) * power;
      power *= phi;
    }
    return c;
  }

  [[nodiscard]] std::size_t active_head(std::span<const double> s) const {
    return std::min(static_cast<std::size_t>(s[latent_slot::kTime]) + 1, horizon_);
  }

  // sum_s (y_s - x_s - c_s)^2 from the stored residuals.
  [[nodiscard]] double residual_sum_sq(std::span<const double> s, const std::vector<double>& c) const {
    double total = s[kResidualSq];
    if (horizon_ > 0) {
      const std::size_t m = active_head(s);
      double cross = 0.0;
      double square = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        cross += c[k] * s[kResidualHead + k];
        square += c[k] * c[k];
      }
      total += square - 2.0 * cross;
    }
    return total;
  }

  bool with_trend_;
  std::size_t horizon_;
};

}  // namespace

std::unique_ptr<Model> make_linear_gaussian(bool with_trend, std::size_t trend_horizon) {
  return std::make_unique<LinearGaussian>(with_trend, trend_horizon);
}

}  // namespace pisest::models
