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

#ifndef PISEST_SMC_HPP
#define PISEST_SMC_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/parameter.hpp"
#include "pisest/rng.hpp"
#include "pisest/series.hpp"

namespace pisest {

/**
 * N weighted particles at one time index. Each particle carries its current
 * state and the sufficient statistics of its whole path, so no ancestry is kept.
 *
 * Log-weights are unnormalised and accumulate since the last resampling; the
 * likelihood segments committed at resampling times are kept alongside.
 */
struct ParticleCloud {
  std::vector<double> x;
  StatsMatrix stats;
  std::vector<double> logw;
  /// Parameter value under which the current weighted target is expressed.
  Parameter theta_gen;
  /// Number of observations folded in; the time index is observations - 1.
  std::size_t observations = 0;
  /// log(N^-1 sum_i w^(i)) at each past resampling time.
  std::vector<double> loglik_segments;
  /// Observations folded in since the last resampling.
  std::size_t steps_since_resample = 0;

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  [[nodiscard]] std::size_t time() const noexcept { return observations == 0 ? 0 : observations - 1; }

  friend bool operator==(const ParticleCloud&, const ParticleCloud&) = default;
};

/// An empty cloud of N particles ready for the first observation. Requires N >= 2.
ParticleCloud make_cloud(const Model& model, std::size_t particles);

struct LoglikEstimate {
  double value = 0.0;
  /// Segment terms at resampling times, then the trailing segment ending at T.
  std::vector<double> segments;
};

LoglikEstimate loglik_estimate(const ParticleCloud& cloud);

/// log(N^-1 sum exp(logw)), computed with max-subtraction.
double log_mean_weight(std::span<const double> logw);

/// Effective sample size 1 / sum(wbar_i^2), clamped to [1, N]. Throws
/// DegenerateWeights when no weight is positive and finite.
double ess(std::span<const double> logw);

/// Normalised weights, computed with max-subtraction.
std::vector<double> normalized_weights(std::span<const double> logw);

/// N ancestor indices drawn with replacement proportionally to exp(logw), in
/// non-decreasing order.
std::vector<std::size_t> multinomial_ancestors(std::span<const double> logw, std::size_t count, RngStream& rng);

/// Multinomial resampling. Commits the pending likelihood segment and resets
/// all log-weights to zero.
ParticleCloud multinomial_resample(const ParticleCloud& cloud, RngStream rng);

/// Draws x_t for every particle, adds the incremental log-weights and folds the
/// observation into the statistics. The proposal defaults to the model's.
void propagate(const Model& model, ParticleCloud& cloud, const Parameter& theta, double y, const RngStream& step,
               std::optional<ProposalKind> proposal = std::nullopt);

/// Resamples iff ESS / N <= r2, using `step.split(stream_tag::kResample)`.
/// Returns whether a resampling happened.
bool resample_if_needed(ParticleCloud& cloud, double r2, const RngStream& step);

struct SmcStepInfo {
  double ess = 0.0;  // after weighting, before any resampling
  bool resampled = false;
};

/// One step of the filter: propagate, weight and (conditionally) resample.
SmcStepInfo smc_step(const Model& model, ParticleCloud& cloud, const Parameter& theta, double y, double r2,
                     const RngStream& step, std::optional<ProposalKind> proposal = std::nullopt);

struct SmcOptions {
  std::size_t particles = 1000;
  double r2 = 1.0;
  std::optional<ProposalKind> proposal;
};

struct SmcRunResult {
  ParticleCloud cloud;
  LoglikEstimate loglik;
  std::vector<SmcStepInfo> steps;
};

/// Filters y_0..y_T at a fixed parameter. Step t uses `run.split(t)`.
SmcRunResult smc_run(const Model& model, const Parameter& theta, const Series& y, const SmcOptions& options,
                     const RngStream& run);

/// Self-normalised sum_i wbar_i grad log p_theta(x^(i), y) (Fisher's identity).
std::vector<double> fisher_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta);

/// Per-observation score: fisher_score(cloud, theta) minus the partial score of
/// the previous time, which the caller evaluated at the same theta on the cloud
/// before propagation (zero before the first observation).
std::vector<double> conditional_score(const Model& model, std::span<const double> previous_partial,
                                      const ParticleCloud& cloud, const Parameter& theta);

namespace detail {

struct WeightedScore {
  std::vector<double> score;
  double extra_ess = 0.0;
};

/// Shared kernel of fisher_score and pis_score: gradient rows weighted by
/// exp(logw + extra). `extra` may be empty. Reports the ESS of exp(extra).
WeightedScore weighted_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta,
                             std::span<const double> extra);

}  // namespace detail

}  // namespace pisest

#endif  // PISEST_SMC_HPP
