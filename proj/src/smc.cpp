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

#include "pisest/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pisest/error.hpp"

namespace pisest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Largest finite log-weight, or -inf when there is none. NaN counts as zero weight.
double finite_max(std::span<const double> logw) {
  double m = kNegInf;
  for (double v : logw) {
    if (std::isfinite(v) && v > m) {
      m = v;
    }
  }
  return m;
}

}  // namespace

ParticleCloud make_cloud(const Model& model, std::size_t particles) {
  if (particles < 2) {
    throw InputError("a particle cloud needs at least 2 particles");
  }
  ParticleCloud cloud;
  cloud.x.assign(particles, 0.0);
  cloud.stats = StatsMatrix(particles, model.stat_dim());
  cloud.logw.assign(particles, 0.0);
  return cloud;
}

double log_mean_weight(std::span<const double> logw) {
  const double m = finite_max(logw);
  if (m == kNegInf) {
    return kNegInf;
  }
  double sum = 0.0;
  for (double v : logw) {
    if (std::isfinite(v)) {
      sum += std::exp(v - m);
    }
  }
  return m + std::log(sum) - std::log(static_cast<double>(logw.size()));
}

std::vector<double> normalized_weights(std::span<const double> logw) {
  const double m = finite_max(logw);
  if (m == kNegInf) {
    throw DegenerateWeights("all particle weights are zero or not a number");
  }
  std::vector<double> w(logw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    w[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - m) : 0.0;
    sum += w[i];
  }
  for (double& v : w) {
    v /= sum;
  }
  return w;
}

double ess(std::span<const double> logw) {
  if (logw.empty()) {
    throw DegenerateWeights("effective sample size of an empty weight vector");
  }
  const double m = finite_max(logw);
  if (m == kNegInf) {
    throw DegenerateWeights("all particle weights are zero or not a number");
  }
  // (sum w)^2 / sum w^2 on unnormalised weights: exactly N for equal weights.
  double sum = 0.0;
  double sq = 0.0;
  for (double v : logw) {
    if (std::isfinite(v)) {
      const double w = std::exp(v - m);
      sum += w;
      sq += w * w;
    }
  }
  return std::clamp(sum * sum / sq, 1.0, static_cast<double>(logw.size()));
}

std::vector<std::size_t> multinomial_ancestors(std::span<const double> logw, std::size_t count, RngStream& rng) {
  const auto w = normalized_weights(logw);
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) {
      last_positive = i;
    }
  }
  // Sorted uniforms as normalised partial sums of count + 1 exponential spacings.
  std::vector<double> spacing(count + 1);
  double total = 0.0;
  for (double& e : spacing) {
    e = rng.exponential();
    total += e;
  }
  std::vector<std::size_t> ancestors(count);
  std::size_t j = 0;
  double cumulative = w[0];
  double running = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    running += spacing[k];
    const double u = running / total;
    while (u > cumulative && j < last_positive) {
      ++j;
      cumulative += w[j];
    }
    ancestors[k] = j;
  }
  return ancestors;
}

ParticleCloud multinomial_resample(const ParticleCloud& cloud, RngStream rng) {
  const auto ancestors = multinomial_ancestors(cloud.logw, cloud.size(), rng);
  ParticleCloud out;
  out.x.resize(cloud.size());
  for (std::size_t i = 0; i < ancestors.size(); ++i) {
    out.x[i] = cloud.x[ancestors[i]];
  }
  out.stats.gather_from(cloud.stats, ancestors);
  out.logw.assign(cloud.size(), 0.0);
  out.theta_gen = cloud.theta_gen;
  out.observations = cloud.observations;
  out.loglik_segments = cloud.loglik_segments;
  if (cloud.steps_since_resample > 0) {
    out.loglik_segments.push_back(log_mean_weight(cloud.logw));
  }
  out.steps_since_resample = 0;
  return out;
}

LoglikEstimate loglik_estimate(const ParticleCloud& cloud) {
  LoglikEstimate est;
  est.segments = cloud.loglik_segments;
  if (cloud.steps_since_resample > 0) {
    est.segments.push_back(log_mean_weight(cloud.logw));
  }
  for (double s : est.segments) {
    est.value += s;
  }
  return est;
}

void propagate(const Model& model, ParticleCloud& cloud, const Parameter& theta, double y, const RngStream& step,
               std::optional<ProposalKind> proposal) {
  const ProposalKind kind = proposal.value_or(model.default_proposal());
  if (!model.supports(kind)) {
    throw Unsupported("model " + std::string(model.id()) + " does not support the " + std::string(to_string(kind)) +
                      " proposal");
  }
  const std::size_t n = cloud.size();
  const std::size_t t = cloud.observations;
  std::vector<double> x_new(n);
  std::vector<double> log_u(n);
  model.propagate(theta, kind, t, y, cloud.x, x_new, log_u, step);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = cloud.stats.row(i);
    if (t == 0) {
      model.init_stats(row, x_new[i], y);
    } else {
      model.update_stats(row, cloud.x[i], x_new[i], y);
    }
    cloud.logw[i] += log_u[i];
  }
  cloud.x = std::move(x_new);
  cloud.theta_gen = theta;
  ++cloud.observations;
  ++cloud.steps_since_resample;
}

bool resample_if_needed(ParticleCloud& cloud, double r2, const RngStream& step) {
  const double n = static_cast<double>(cloud.size());
  if (ess(cloud.logw) / n > r2) {
    return false;
  }
  cloud = multinomial_resample(cloud, step.split(stream_tag::kResample));
  return true;
}

SmcStepInfo smc_step(const Model& model, ParticleCloud& cloud, const Parameter& theta, double y, double r2,
                     const RngStream& step, std::optional<ProposalKind> proposal) {
  if (!(r2 >= 0.0 && r2 <= 1.0)) {
    throw InputError("resampling threshold r2 must lie in [0, 1]");
  }
  propagate(model, cloud, theta, y, step, proposal);
  SmcStepInfo info;
  info.ess = ess(cloud.logw);
  info.resampled = resample_if_needed(cloud, r2, step);
  return info;
}

SmcRunResult smc_run(const Model& model, const Parameter& theta, const Series& y, const SmcOptions& options,
                     const RngStream& run) {
  model.validate(theta);
  model.validate_series(y);
  SmcRunResult result;
  result.cloud = make_cloud(model, options.particles);
  result.cloud.theta_gen = theta;
  result.steps.reserve(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    result.steps.push_back(smc_step(model, result.cloud, theta, y.y[t], options.r2, run.split(t), options.proposal));
  }
  result.loglik = loglik_estimate(result.cloud);
  return result;
}

namespace detail {

WeightedScore weighted_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta,
                             std::span<const double> extra) {
  const std::size_t n = cloud.size();
  const std::size_t p = model.parameter_dim();
  std::vector<double> combined(cloud.logw.begin(), cloud.logw.end());
  if (!extra.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      combined[i] += extra[i];
    }
  }
  const auto w = normalized_weights(combined);
  std::vector<double> grads(n * p);
  model.grad_log_joint(theta, cloud.stats.view(), grads);
  WeightedScore out;
  out.score.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) {
      continue;
    }
    for (std::size_t j = 0; j < p; ++j) {
      out.score[j] += w[i] * grads[i * p + j];
    }
  }
  out.extra_ess = extra.empty() ? static_cast<double>(n) : ess(extra);
  return out;
}

}  // namespace detail

std::vector<double> fisher_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta) {
  return detail::weighted_score(model, cloud, theta, {}).score;
}

std::vector<double> conditional_score(const Model& model, std::span<const double> previous_partial,
                                      const ParticleCloud& cloud, const Parameter& theta) {
  auto score = fisher_score(model, cloud, theta);
  if (!previous_partial.empty()) {
    for (std::size_t j = 0; j < score.size(); ++j) {
      score[j] -= previous_partial[j];
    }
  }
  return score;
}

}  // namespace pisest
