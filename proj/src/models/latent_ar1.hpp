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

#ifndef PISEST_SRC_MODELS_LATENT_AR1_HPP
#define PISEST_SRC_MODELS_LATENT_AR1_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>

namespace pisest::models {

/// Layout shared by every model: the stationary Gaussian AR(1) latent chain.
namespace latent_slot {
inline constexpr std::size_t kTime = 0;       // number of transitions t
inline constexpr std::size_t kInitSq = 1;     // x_0^2
inline constexpr std::size_t kPrevSq = 2;     // sum x_{s-1}^2
inline constexpr std::size_t kCross = 3;      // sum x_{s-1} x_s
inline constexpr std::size_t kCurrSq = 4;     // sum x_s^2, s >= 1
inline constexpr std::size_t kCount = 5;
}  // namespace latent_slot

inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;

inline std::optional<std::string> check_latent(double phi, double sigma_x) {
  if (!std::isfinite(phi) || !(std::fabs(phi) < 1.0)) {
    return "phi must satisfy |phi| < 1 for a stationary latent chain";
  }
  if (!std::isfinite(sigma_x) || !(sigma_x > 0.0)) {
    return "sigma_x must be positive";
  }
  return std::nullopt;
}

/// log f(x_0) + sum log f(x_s | x_{s-1}) and its (phi, sigma_x) gradient.
class LatentAr1 {
 public:
  LatentAr1(double phi, double sigma_x)
      : phi_(phi),
        sigma_x_(sigma_x),
        inv_var_(1.0 / (sigma_x * sigma_x)),
        one_minus_phi_sq_(1.0 - phi * phi),
        log_sigma_x_(std::log(sigma_x)),
        half_log_stationary_(0.5 * std::log(1.0 - phi * phi)) {}

  [[nodiscard]] double log_density(std::span<const double> s) const noexcept {
    using namespace latent_slot;
    const double n = s[kTime];
    const double quad = s[kCurrSq] - 2.0 * phi_ * s[kCross] + phi_ * phi_ * s[kPrevSq];
    return -kHalfLogTwoPi + half_log_stationary_ - log_sigma_x_ - 0.5 * s[kInitSq] * one_minus_phi_sq_ * inv_var_ -
           n * (kHalfLogTwoPi + log_sigma_x_) - 0.5 * quad * inv_var_;
  }

  void gradient(std::span<const double> s, double& d_phi, double& d_sigma_x) const noexcept {
    using namespace latent_slot;
    const double n = s[kTime];
    const double quad = s[kCurrSq] - 2.0 * phi_ * s[kCross] + phi_ * phi_ * s[kPrevSq];
    d_phi = -phi_ / one_minus_phi_sq_ + phi_ * s[kInitSq] * inv_var_ + (s[kCross] - phi_ * s[kPrevSq]) * inv_var_;
    d_sigma_x = -(1.0 + n) / sigma_x_ + (s[kInitSq] * one_minus_phi_sq_ + quad) * inv_var_ / sigma_x_;
  }

  [[nodiscard]] double stationary_variance() const noexcept { return sigma_x_ * sigma_x_ / one_minus_phi_sq_; }

  static void init(std::span<double> s, double x0) noexcept {
    using namespace latent_slot;
    s[kTime] = 0.0;
    s[kInitSq] = x0 * x0;
    s[kPrevSq] = 0.0;
    s[kCross] = 0.0;
    s[kCurrSq] = 0.0;
  }

  /// Advances the transition block; returns the new time index.
  static std::size_t update(std::span<double> s, double x_prev, double x_new) noexcept {
    using namespace latent_slot;
    s[kTime] += 1.0;
    s[kPrevSq] += x_prev * x_prev;
    s[kCross] += x_prev * x_new;
    s[kCurrSq] += x_new * x_new;
    return static_cast<std::size_t>(s[kTime]);
  }

 private:
  double phi_;
  double sigma_x_;
  double inv_var_;
  double one_minus_phi_sq_;
  double log_sigma_x_;
  double half_log_stationary_;
};

}  // namespace pisest::models

#endif  // PISEST_SRC_MODELS_LATENT_AR1_HPP
