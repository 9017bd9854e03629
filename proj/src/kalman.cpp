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

#include "pisest/kalman.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pisest/error.hpp"

namespace pisest {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;
constexpr double kTrendScale = 3.0;

// Forward-mode dual number over the three linear-Gaussian parameters.
struct Dual {
  double v = 0.0;
  std::array<double, 3> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  static Dual variable(double value, std::size_t slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }

  friend Dual operator+(Dual a, const Dual& b) {
    a.v += b.v;
    for (std::size_t k = 0; k < 3; ++k) a.d[k] += b.d[k];
    return a;
  }
  friend Dual operator-(Dual a, const Dual& b) {
    a.v -= b.v;
    for (std::size_t k = 0; k < 3; ++k) a.d[k] -= b.d[k];
    return a;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (std::size_t k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    for (std::size_t k = 0; k < 3; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) / b.v;
    return r;
  }
  Dual& operator+=(const Dual& b) { return *this = *this + b; }
};

Dual log(const Dual& a) {
  Dual r(std::log(a.v));
  for (std::size_t k = 0; k < 3; ++k) r.d[k] = a.d[k] / a.v;
  return r;
}

double log(double x) { return std::log(x); }

double value_of(double x) { return x; }
double value_of(const Dual& x) { return x.v; }

void require_linear_gaussian(const Model& model) {
  if (model.kind() != ModelKind::ar1 && model.kind() != ModelKind::ar1_trend) {
    throw Unsupported("the Kalman filter applies only to ar1 and ar1-trend, not " + std::string(model.id()));
  }
}

template <typename Scalar>
struct Filtered {
  Scalar loglik{0.0};
  std::vector<double> step_terms;
  std::vector<double> mean;
  std::vector<double> variance;
};

template <typename Scalar>
Filtered<Scalar> run_filter(std::size_t trend_horizon, const Scalar& phi, const Scalar& sigma_x, const Scalar& sigma_y,
                            const std::vector<double>& y, bool keep_moments) {
  Filtered<Scalar> out;
  const Scalar var_x = sigma_x * sigma_x;
  const Scalar var_y = sigma_y * sigma_y;
  Scalar mean{0.0};
  Scalar var = var_x / (Scalar(1.0) - phi * phi);
  Scalar trend_power{1.0};  // phi^t
  out.step_terms.reserve(y.size());
  if (keep_moments) {
    out.mean.reserve(y.size());
    out.variance.reserve(y.size());
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    const Scalar offset = t < trend_horizon ? Scalar(kTrendScale) * trend_power : Scalar(0.0);
    const Scalar innovation_var = var + var_y;
    const Scalar innovation = Scalar(y[t]) - offset - mean;
    const Scalar term =
        Scalar(-kHalfLogTwoPi) - Scalar(0.5) * log(innovation_var) - Scalar(0.5) * innovation * innovation / innovation_var;
    out.loglik += term;
    out.step_terms.push_back(value_of(term));
    const Scalar gain = var / innovation_var;
    const Scalar filtered_mean = mean + gain * innovation;
    const Scalar filtered_var = var * var_y / innovation_var;
    if (keep_moments) {
      out.mean.push_back(value_of(filtered_mean));
      out.variance.push_back(value_of(filtered_var));
    }
    mean = phi * filtered_mean;
    var = phi * phi * filtered_var + var_x;
    if (t < trend_horizon) {
      trend_power = trend_power * phi;
    }
  }
  return out;
}

Filtered<double> filter_values(const Model& model, const Parameter& theta, const Series& y, bool keep_moments) {
  require_linear_gaussian(model);
  model.validate(theta);
  if (y.y.empty()) {
    throw InputError("the Kalman filter needs at least one observation");
  }
  return run_filter<double>(model.trend_horizon(), theta[0], theta[1], theta[2], y.y, keep_moments);
}

// Central differences of a vector-valued function of theta, one coordinate at a time.
template <typename F>
std::vector<double> central_difference(const Model& model, const Parameter& theta, double h, F&& f) {
  model.validate(theta);
  std::vector<double> grad(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    Parameter up = theta;
    Parameter down = theta;
    up[j] += h;
    down[j] -= h;
    if (!model.is_valid(up.values) || !model.is_valid(down.values)) {
      throw InvalidParameter("parameter coordinate " + theta.names.at(j) +
                             " is within the finite-difference step of the domain boundary");
    }
    grad[j] = (f(up) - f(down)) / (2.0 * h);
  }
  return grad;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

KalmanFilterResult kalman_filter(const Model& model, const Parameter& theta, const Series& y) {
  auto f = filter_values(model, theta, y, true);
  return {f.loglik, std::move(f.step_terms), std::move(f.mean), std::move(f.variance)};
}

double kalman_loglik(const Model& model, const Parameter& theta, const Series& y) {
  return filter_values(model, theta, y, false).loglik;
}

std::vector<double> kalman_loglik_gradient(const Model& model, const Parameter& theta, const Series& y) {
  require_linear_gaussian(model);
  model.validate(theta);
  if (y.y.empty()) {
    throw InputError("the Kalman filter needs at least one observation");
  }
  const auto f = run_filter<Dual>(model.trend_horizon(), Dual::variable(theta[0], 0), Dual::variable(theta[1], 1),
                                  Dual::variable(theta[2], 2), y.y, false);
  return {f.loglik.d[0], f.loglik.d[1], f.loglik.d[2]};
}

std::vector<double> kalman_score(const Model& model, const Parameter& theta, const Series& y, double h) {
  require_linear_gaussian(model);
  return central_difference(model, theta, h, [&](const Parameter& p) { return kalman_loglik(model, p, y); });
}

std::vector<double> kalman_conditional_score(const Model& model, const Parameter& theta, const Series& y,
                                             std::size_t t, double h) {
  require_linear_gaussian(model);
  if (t >= y.size()) {
    throw InputError("conditional score requested at t=" + std::to_string(t) + " beyond the series horizon");
  }
  const Series head = y.prefix(t + 1);
  return central_difference(model, theta, h,
                            [&](const Parameter& p) { return filter_values(model, p, head, false).step_terms[t]; });
}

KalmanMleResult kalman_mle(const Model& model, const Parameter& theta0, const Series& y,
                           const KalmanMleOptions& options) {
  require_linear_gaussian(model);
  model.validate(theta0);
  constexpr std::size_t p = 3;

  if (!options.free.empty() && options.free.size() != p) {
    throw InputError("kalman_mle: the free mask needs one entry per parameter");
  }
  // Fixed coordinates get a zero gradient; the diagonal start of the inverse
  // Hessian then never moves them.
  auto gradient = [&](const Parameter& at) {
    auto g = kalman_loglik_gradient(model, at, y);
    for (std::size_t a = 0; a < options.free.size(); ++a) {
      if (!options.free[a]) g[a] = 0.0;
    }
    return g;
  };

  Parameter theta = theta0;
  double value = kalman_loglik(model, theta, y);
  std::vector<double> grad = gradient(theta);

  // Inverse Hessian approximation of the negated log-likelihood.
  std::array<double, p * p> inv{};
  auto reset_inverse = [&](double scale) {
    inv.fill(0.0);
    for (std::size_t k = 0; k < p; ++k) inv[k * p + k] = scale;
  };
  reset_inverse(1.0 / std::max(1.0, norm2(grad)));

  std::size_t iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    if (norm2(grad) <= options.gradient_tolerance) {
      return {theta, value, grad, iteration};
    }
    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      std::array<double, p> dir{};
      double slope = 0.0;
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) dir[a] += inv[a * p + b] * grad[b];
        slope += dir[a] * grad[a];
      }
      if (!(slope > 0.0)) {
        reset_inverse(1.0 / std::max(1.0, norm2(grad)));
        continue;
      }
      double step = 1.0;
      for (int halving = 0; halving < 80; ++halving, step *= 0.5) {
        Parameter trial = theta;
        for (std::size_t a = 0; a < p; ++a) trial[a] += step * dir[a];
        if (!model.is_valid(trial.values)) continue;
        const double trial_value = kalman_loglik(model, trial, y);
        const bool armijo = trial_value >= value + 1e-4 * step * slope;
        // Near the optimum of a long series the ascent is below the rounding of the value
        // itself; there a flat value with a smaller gradient is accepted instead.
        const bool flat = std::fabs(trial_value - value) <= 1e-12 * std::max(1.0, std::fabs(value));
        if (!armijo && !flat) continue;
        const auto trial_grad = gradient(trial);
        if (!armijo && !(norm2(trial_grad) < norm2(grad))) continue;
        std::array<double, p> s{};
        std::array<double, p> g{};  // change in the gradient of the negated objective
        double sg = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
          s[a] = trial[a] - theta[a];
          g[a] = grad[a] - trial_grad[a];
          sg += s[a] * g[a];
        }
        if (sg > 1e-300) {
          if (iteration == 0) {
            double gg = 0.0;
            for (double v : g) gg += v * v;
            reset_inverse(sg / gg);
          }
          std::array<double, p> hg{};
          double ghg = 0.0;
          for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) hg[a] += inv[a * p + b] * g[b];
            ghg += g[a] * hg[a];
          }
          const double rho = 1.0 / sg;
          for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) {
              inv[a * p + b] += (1.0 + rho * ghg) * rho * s[a] * s[b] - rho * (hg[a] * s[b] + s[a] * hg[b]);
            }
          }
        }
        theta = std::move(trial);
        value = trial_value;
        grad = trial_grad;
        moved = true;
        break;
      }
      if (!moved) {
        reset_inverse(1.0 / std::max(1.0, norm2(grad)));
      }
    }
    if (!moved) {
      break;
    }
  }
  if (norm2(grad) <= options.gradient_tolerance) {
    return {theta, value, grad, iteration};
  }
  throw ConvergenceError("kalman_mle stopped with gradient norm " + std::to_string(norm2(grad)) + " after " +
                             std::to_string(iteration) + " iterations",
                         theta.values);
}

}  // namespace pisest
