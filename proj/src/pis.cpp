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

#include "pisest/pis.hpp"

#include <cmath>
#include <limits>

#include "pisest/error.hpp"

namespace pisest {

double log_is_weight(const Model& model, const SufficientStats& stats, const Parameter& theta0,
                     const Parameter& theta) {
  return model.log_joint(theta, stats) - model.log_joint(theta0, stats);
}

std::vector<double> log_is_weights(const Model& model, const ParticleCloud& cloud, const Parameter& theta0,
                                   const Parameter& theta) {
  const std::size_t n = cloud.size();
  std::vector<double> at_theta(n);
  std::vector<double> at_theta0(n);
  model.log_joint(theta, cloud.stats.view(), at_theta);
  model.log_joint(theta0, cloud.stats.view(), at_theta0);
  for (std::size_t i = 0; i < n; ++i) {
    at_theta[i] -= at_theta0[i];
  }
  return at_theta;
}

PisScore pis_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta0, const Parameter& theta) {
  const auto la = log_is_weights(model, cloud, theta0, theta);
  try {
    auto ws = detail::weighted_score(model, cloud, theta, la);
    return {std::move(ws.score), ws.extra_ess};
  } catch (const DegenerateWeights&) {
    throw DegenerateWeights("every importance weight underflows: theta is too far from the cloud's parameter");
  }
}

std::vector<CurvePoint> smoothed_loglik_curve(const Model& model, const ParticleCloud& cloud, const Parameter& theta0,
                                              const std::vector<Parameter>& grid) {
  const double base = loglik_estimate(cloud).value;
  const auto w = normalized_weights(cloud.logw);
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  std::vector<double> combined(cloud.size());
  for (const Parameter& theta : grid) {
    const auto la = log_is_weights(model, cloud, theta0, theta);
    for (std::size_t i = 0; i < la.size(); ++i) {
      combined[i] = w[i] > 0.0 ? std::log(w[i]) + la[i] : -std::numeric_limits<double>::infinity();
    }
    // log sum_i wbar_i a_i = log_mean_weight + log N
    const double log_ratio = log_mean_weight(combined) + std::log(static_cast<double>(cloud.size()));
    out.push_back({base + log_ratio, ess(la)});
  }
  return out;
}

RetargetDiagnostic retarget(const Model& model, ParticleCloud& cloud, const Parameter& theta_from,
                            const Parameter& theta_to) {
  if (cloud.theta_gen.values != theta_from.values) {
    throw InputError("retarget: the cloud was not generated under the given source parameter");
  }
  RetargetDiagnostic diag;
  diag.theta_from = theta_from;
  diag.theta_to = theta_to;
  diag.time = cloud.time();
  diag.pre_ess = ess(cloud.logw);
  const auto la = log_is_weights(model, cloud, theta_from, theta_to);
  diag.a_ess = ess(la);
  for (std::size_t i = 0; i < la.size(); ++i) {
    cloud.logw[i] += la[i];
  }
  diag.post_ess = ess(cloud.logw);
  cloud.theta_gen = theta_to;
  return diag;
}

}  // namespace pisest
