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

#include "pisest/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "pisest/error.hpp"
#include "pisest/pis.hpp"
#include "pisest/smc.hpp"

namespace pisest {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) {
    return 0.0;
  }
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::vector<double> ParameterBox::sample(RngStream& rng) const {
  if (lower.size() != upper.size()) {
    throw InputError("parameter box bounds differ in length");
  }
  std::vector<double> out(lower.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = lower[j] + (upper[j] - lower[j]) * rng.uniform();
  }
  return out;
}

OfflineTuneResult tune_r_offline(const Model& model, const ParameterBox& region, const Series& y,
                                 const OfflineTuneOptions& options) {
  const std::size_t p = model.parameter_dim();
  if (region.lower.size() != p || region.upper.size() != p) {
    throw InputError("tuning region has the wrong dimension for model " + std::string(model.id()));
  }
  const RngStream root(options.seed);
  const double n = static_cast<double>(options.particles);
  OfflineTuneResult result;
  for (std::size_t s = 0; s < options.samples; ++s) {
    RngStream draw = root.split(stream_tag::kOuter).split(s);
    const Parameter theta = model.make_parameter(region.sample(draw));
    if (!model.is_valid(theta.values)) {
      ++result.skipped;
      continue;
    }
    try {
      const auto run = smc_run(model, theta, y, {options.particles, 1.0, std::nullopt}, root.split(s));
      const auto g = fisher_score(model, run.cloud, theta);
      Parameter moved = theta;
      bool usable = true;
      for (std::size_t j = 0; j < p && usable; ++j) {
        const double h = options.hessian_step * std::max(1.0, std::fabs(theta[j]));
        Parameter up = theta;
        Parameter down = theta;
        up[j] += h;
        down[j] -= h;
        if (!model.is_valid(up.values) || !model.is_valid(down.values)) {
          usable = false;
          break;
        }
        const double curvature =
            (pis_score(model, run.cloud, theta, up).score[j] - pis_score(model, run.cloud, theta, down).score[j]) /
            (2.0 * h);
        if (!(curvature < 0.0) || !std::isfinite(curvature)) {
          usable = false;
          break;
        }
        moved[j] -= options.step_scale * g[j] / curvature;
      }
      if (!usable || !model.is_valid(moved.values)) {
        ++result.skipped;
        continue;
      }
      result.ratios.push_back(ess(log_is_weights(model, run.cloud, theta, moved)) / n);
    } catch (const DegenerateWeights&) {
      ++result.skipped;
    }
  }
  if (result.ratios.empty()) {
    throw Error("tune_r_offline: every sampled parameter was skipped; widen or move the region");
  }
  double sum = 0.0;
  for (double v : result.ratios) {
    sum += v;
  }
  result.r = sum / static_cast<double>(result.ratios.size());
  return result;
}

OnlineTuneResult tune_r1_online(const Model& model, const Parameter& theta0, const std::vector<double>& distances,
                                const Series& y, const OnlineTuneOptions& options) {
  model.validate(theta0);
  model.validate_series(y);
  if (options.cadence == 0) {
    throw InputError("renewal cadence must be at least 1");
  }
  const RngStream root(options.seed);
  const double n = static_cast<double>(options.particles);
  const std::size_t steps = y.size() - 1;
  OnlineTuneResult result;
  std::vector<double> pooled;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    const double d = distances[k];
    const RngStream run = root.split(k);
    ParticleCloud cloud = make_cloud(model, options.particles);
    cloud.theta_gen = theta0;
    Parameter theta = theta0;
    std::vector<double> ratios;
    for (std::size_t t = 0; t < steps; ++t) {
      const RngStream step = run.split(t);
      std::vector<double> previous;
      if (t > 0) {
        previous = fisher_score(model, cloud, theta);
      }
      propagate(model, cloud, theta, y.y[t], step);
      const auto g = conditional_score(model, previous, cloud, theta);
      double norm = 0.0;
      for (double v : g) {
        norm += v * v;
      }
      norm = std::sqrt(norm);
      Parameter next = theta;
      if (norm > 0.0 && std::isfinite(norm)) {
        for (std::size_t j = 0; j < next.size(); ++j) {
          next[j] += d * g[j] / norm;
        }
      }
      if (!model.is_valid(next.values)) {
        next = theta;
      }
      const auto diag = retarget(model, cloud, theta, next);
      ratios.push_back(diag.a_ess / n);
      theta = next;
      if ((t + 1) % options.cadence == 0) {
        auto fresh = smc_run(model, theta, y.prefix(t + 1), {options.particles, 1.0, std::nullopt},
                             run.split(stream_tag::kRenewal).split(t));
        cloud = std::move(fresh.cloud);
      } else {
        resample_if_needed(cloud, 1.0, step);
      }
    }
    const double m = median(ratios);
    const bool keep = !ratios.empty() && m >= options.low && m <= options.high;
    result.distances.push_back(d);
    result.medians.push_back(m);
    result.retained.push_back(keep);
    if (keep) {
      pooled.insert(pooled.end(), ratios.begin(), ratios.end());
    }
  }
  if (pooled.empty()) {
    throw Error("tune_r1_online: every distance gave only small or only large ESS values; widen the grid");
  }
  result.r1 = median(std::move(pooled));
  return result;
}

}  // namespace pisest
