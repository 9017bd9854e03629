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

#ifndef PISEST_PIS_HPP
#define PISEST_PIS_HPP

#include <cstddef>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/parameter.hpp"
#include "pisest/smc.hpp"

/**
 * \file
 * \brief Re-weighting a particle cloud from one parameter value to another.
 *
 * Because each particle carries the sufficient statistics of its path, the
 * joint density ratio a = p_theta(x, y) / p_theta0(x, y) is available in closed
 * form for any theta. A cloud targeting the posterior at theta0 therefore also
 * yields self-normalised estimates at nearby theta, with the ESS of the a-weights
 * as the quality signal.
 */

namespace pisest {

/// log p_theta(x_{0:t}, y_{0:t}) - log p_theta0(x_{0:t}, y_{0:t}).
double log_is_weight(const Model& model, const SufficientStats& stats, const Parameter& theta0,
                     const Parameter& theta);

/// log_is_weight for every particle of the cloud.
std::vector<double> log_is_weights(const Model& model, const ParticleCloud& cloud, const Parameter& theta0,
                                   const Parameter& theta);

struct PisScore {
  std::vector<double> score;
  /// ESS of the a-weights alone.
  double a_ess = 0.0;
};

/// Score at theta estimated from a cloud that targets the posterior at theta0.
PisScore pis_score(const Model& model, const ParticleCloud& cloud, const Parameter& theta0, const Parameter& theta);

struct CurvePoint {
  double loglik = 0.0;
  double a_ess = 0.0;
};

/// Log-likelihood at every grid point from a single cloud, offset by the
/// cloud's own likelihood estimate at theta0.
std::vector<CurvePoint> smoothed_loglik_curve(const Model& model, const ParticleCloud& cloud, const Parameter& theta0,
                                              const std::vector<Parameter>& grid);

struct RetargetDiagnostic {
  double pre_ess = 0.0;
  double post_ess = 0.0;
  double a_ess = 0.0;
  Parameter theta_from;
  Parameter theta_to;
  std::size_t time = 0;
};

/// Multiplies the cloud weights by a_{theta_from}(theta_to, .) and records the
/// new generating parameter. Throws InputError when the cloud was not
/// generated under theta_from.
RetargetDiagnostic retarget(const Model& model, ParticleCloud& cloud, const Parameter& theta_from,
                            const Parameter& theta_to);

}  // namespace pisest

#endif  // PISEST_PIS_HPP
