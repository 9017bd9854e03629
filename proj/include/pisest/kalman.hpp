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

#ifndef PISEST_KALMAN_HPP
#define PISEST_KALMAN_HPP

#include <cstddef>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/parameter.hpp"
#include "pisest/series.hpp"

/**
 * \file
 * \brief Exact filtering for the linear-Gaussian models (ar1, ar1-trend).
 *
 * These routines are the reference against which every particle estimate in the
 * library is tested. They throw Unsupported for any other model.
 */

namespace pisest {

struct KalmanFilterResult {
  double loglik = 0.0;
  /// log p(y_t | y_{0:t-1}) for t = 0..T.
  std::vector<double> step_terms;
  /// Moments of p(x_t | y_{0:t}).
  std::vector<double> filtered_mean;
  std::vector<double> filtered_variance;
};

KalmanFilterResult kalman_filter(const Model& model, const Parameter& theta, const Series& y);

/// Exact log p(y_{0:T}).
double kalman_loglik(const Model& model, const Parameter& theta, const Series& y);

/// Exact gradient of kalman_loglik by forward-mode differentiation of the filter.
std::vector<double> kalman_loglik_gradient(const Model& model, const Parameter& theta, const Series& y);

/// Finite-difference step used by kalman_score and kalman_conditional_score.
inline constexpr double kKalmanFdStep = 1e-6;

/// Central finite-difference gradient of kalman_loglik. Throws InvalidParameter
/// when a perturbed point leaves the validity domain.
std::vector<double> kalman_score(const Model& model, const Parameter& theta, const Series& y,
                                 double h = kKalmanFdStep);

/// Central finite-difference gradient of log p(y_t | y_{0:t-1}).
std::vector<double> kalman_conditional_score(const Model& model, const Parameter& theta, const Series& y,
                                             std::size_t t, double h = kKalmanFdStep);

struct KalmanMleOptions {
  std::size_t max_iterations = 10000;
  double gradient_tolerance = 1e-6;
  /// Coordinates that are maximised over. Empty means all; the rest stay at theta0.
  std::vector<bool> free;
};

struct KalmanMleResult {
  Parameter theta;
  double loglik = 0.0;
  /// Zero in fixed coordinates.
  std::vector<double> gradient;
  std::size_t iterations = 0;
};

/// Maximises kalman_loglik by quasi-Newton ascent with a backtracking line
/// search. Throws ConvergenceError, carrying the best iterate, on the cap.
KalmanMleResult kalman_mle(const Model& model, const Parameter& theta0, const Series& y,
                           const KalmanMleOptions& options = {});

}  // namespace pisest

#endif  // PISEST_KALMAN_HPP
