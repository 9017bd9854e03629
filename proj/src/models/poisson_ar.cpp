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

// Poisson autoregression with a deterministic seasonal trend:
//   x_{t+1} = phi x_t + sigma_x eta_t,   y_t ~ Poisson(exp(z_t . mu + x_t)),
// where z_t holds an intercept, a centred linear trend and annual and semiannual
// harmonics of the month index u = t + 1.
//
// The exp link couples the trend and the latent state per time step, so the
// summary keeps x_t itself for every t. Its dimension is fixed by max_length.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "models/latent_ar1.hpp"
#include "models/models.hpp"
#include "pisest/error.hpp"

namespace pisest::models {

namespace {

constexpr std::size_t kCovariates = 6;
constexpr std::size_t kDefaultMaxLength = 256;
constexpr std::size_t kCountState = latent_slot::kCount;        // sum y_s x_s
constexpr std::size_t kLogFactorial = latent_slot::kCount + 1;  // sum log y_s!
constexpr std::size_t kCountCov = latent_slot::kCount + 2;      // sum y_s z_s (6 entries)
constexpr std::size_t kPath = kCountCov + kCovariates;          // x_s for every s

using Covariates = std::array<double, kCovariates>;

Covariates covariates_at(std::size_t t) {
  const double u = static_cast<double>(t) + 1.0;
  const double annual = 2.0 * std::numbers::pi * u / 12.0;
  const double semiannual = 2.0 * std::numbers::pi * u / 6.0;
  return {1.0, (u - 73.0) / 1000.0, std::cos(annual), std::sin(annual), std::cos(semiannual), std::sin(semiannual)};
}

class PoissonAr final : public Model {
 public:
  explicit PoissonAr(std::size_t max_length) : max_length_(max_length == 0 ? kDefaultMaxLength : max_length) {
    z_.reserve(max_length_);
    for (std::size_t t = 0; t < max_length_; ++t) {
      z_.push_back(covariates_at(t));
    }
  }

  [[nodiscard]] ModelKind kind() const noexcept override { return ModelKind::par1; }
  [[nodiscard]] std::vector<std::string> parameter_names() const override {
    return {"mu1", "mu2", "mu3", "mu4", "mu5", "mu6", "phi", "sigma_x"};
  }
  [[nodiscard]] std::size_t stat_dim() const noexcept override { return kPath + max_length_; }

  [[nodiscard]] std::optional<std::string> check(std::span<const double> theta) const override {
    if (theta.size() != 8) {
      return "expected 8 parameters (mu1..mu6, phi, sigma_x)";
    }
    for (std::size_t j = 0; j < kCovariates; ++j) {
      if (!std::isfinite(theta[j])) {
        return "trend coefficients must be finite";
      }
    }
    return check_latent(theta[6], theta[7]);
  }

  void validate_series(const Series& series) const override {
    Model::validate_series(series);
    if (series.size() > max_length_) {
      throw InputError("par1 series has " + std::to_string(series.size()) + " observations but the model was built for " +
                       std::to_string(max_length_));
    }
    for (double v : series.y) {
      if (v < 0.0 || v != std::floor(v)) {
        throw InputError("par1 observations must be non-negative integers");
      }
    }
  }

  [[nodiscard]] Series simulate(const Parameter& theta, std::size_t horizon, RngStream rng) const override {
    validate(theta);
    if (horizon >= max_length_) {
      throw InputError("par1 simulation horizon exceeds the model's max_length");
    }
    const double phi = theta[6];
    const double sx = theta[7];
    Series out;
    std::vector<double> x(horizon + 1);
    out.y.resize(horizon + 1);
    x[0] = sx / std::sqrt(1.0 - phi * phi) * rng.normal();
    for (std::size_t t = 0; t <= horizon; ++t) {
      if (t > 0) {
        x[t] = phi * x[t - 1] + sx * rng.normal();
      }
      out.y[t] = static_cast<double>(rng.poisson(std::exp(linear_trend(theta, t) + x[t])));
    }
    out.x = std::move(x);
    return out;
  }

  void propagate(const Parameter& theta, ProposalKind kind, std::size_t t, double y, std::span<const double> x_prev,
                 std::span<double> x_new, std::span<double> log_u, const RngStream& step) const override {
    require_bootstrap(kind);
    validate(theta);
    const double phi = theta[6];
    const double sd = t == 0 ? theta[7] / std::sqrt(1.0 - phi * phi) : theta[7];
    const double eta0 = linear_trend(theta, t);
    const double log_fact = std::lgamma(y + 1.0);
    const RngStream particles = step.split(stream_tag::kParticles);
    for (std::size_t i = 0; i < x_new.size(); ++i) {
      RngStream rng = particles.split(i);
      const double x = (t == 0 ? 0.0 : phi * x_prev[i]) + sd * rng.normal();
      const double eta = eta0 + x;
      x_new[i] = x;
      log_u[i] = y * eta - std::exp(eta) - log_fact;
    }
  }

  [[nodiscard]] Proposal propose(const Parameter& theta, ProposalKind kind, std::size_t t, double x_prev, double y,
                                 RngStream& rng) const override {
    require_bootstrap(kind);
    validate(theta);
    const double phi = theta[6];
    const double sd = t == 0 ? theta[7] / std::sqrt(1.0 - phi * phi) : theta[7];
    const double x = (t == 0 ? 0.0 : phi * x_prev) + sd * rng.normal();
    const double eta = linear_trend(theta, t) + x;
    return {x, y * eta - std::exp(eta) - std::lgamma(y + 1.0)};
  }

  void init_stats(std::span<double> s, double x0, double y0) const override {
    std::fill(s.begin(), s.end(), 0.0);
    LatentAr1::init(s, x0);
    fold_observation(s, 0, x0, y0);
  }

  void update_stats(std::span<double> s, double x_prev, double x_new, double y_new) const override {
    const std::size_t t = LatentAr1::update(s, x_prev, x_new);
    if (t >= max_length_) {
      throw InputError("par1 path is longer than the model's max_length");
    }
    fold_observation(s, t, x_new, y_new);
  }

  void log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[6], theta[7]);
    const auto trend = trend_table(theta);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      const std::size_t n = static_cast<std::size_t>(s[latent_slot::kTime]) + 1;
      double value = latent.log_density(s) + s[kCountState] - s[kLogFactorial];
      for (std::size_t j = 0; j < kCovariates; ++j) {
        value += theta[j] * s[kCountCov + j];
      }
      for (std::size_t k = 0; k < n; ++k) {
        value -= std::exp(trend[k] + s[kPath + k]);
      }
      out[i] = value;
    }
  }

  void grad_log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const override {
    validate(theta);
    const LatentAr1 latent(theta[6], theta[7]);
    const auto trend = trend_table(theta);
    for (std::size_t i = 0; i < stats.rows; ++i) {
      const auto s = stats.row(i);
      const std::size_t n = static_cast<std::size_t>(s[latent_slot::kTime]) + 1;
      double* g = out.data() + i * 8;
      for (std::size_t j = 0; j < kCovariates; ++j) {
        g[j] = s[kCountCov + j];
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double rate = std::exp(trend[k] + s[kPath + k]);
        for (std::size_t j = 0; j < kCovariates; ++j) {
          g[j] -= z_[k][j] * rate;
        }
      }
      latent.gradient(s, g[6], g[7]);
    }
  }

 private:
  void require_bootstrap(ProposalKind kind) const {
    if (kind != ProposalKind::bootstrap) {
      throw Unsupported("model par1 supports only the bootstrap proposal");
    }
  }

  [[nodiscard]] double linear_trend(const Parameter& theta, std::size_t t) const {
    const Covariates z = t < max_length_ ? z_[t] : covariates_at(t);
    double eta = 0.0;
    for (std::size_t j = 0; j < kCovariates; ++j) {
      eta += z[j] * theta[j];
    }
    return eta;
  }

  [[nodiscard]] std::vector<double> trend_table(const Parameter& theta) const {
    std::vector<double> eta(max_length_);
    for (std::size_t t = 0; t < max_length_; ++t) {
      eta[t] = linear_trend(theta, t);
    }
    return eta;
  }

  void fold_observation(std::span<double> s, std::size_t t, double x, double y) const {
    s[kCountState] += y * x;
    s[kLogFactorial] += std::lgamma(y + 1.0);
    for (std::size_t j = 0; j < kCovariates; ++j) {
      s[kCountCov + j] += y * z_[t][j];
    }
    s[kPath + t] = x;
  }

  std::size_t max_length_;
  std::vector<Covariates> z_;
};

}  // namespace

std::unique_ptr<Model> make_poisson_ar(std::size_t max_length) { return std::make_unique<PoissonAr>(max_length); }

}  // namespace pisest::models
