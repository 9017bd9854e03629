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

#ifndef PISEST_SCHEDULE_HPP
#define PISEST_SCHEDULE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "pisest/parameter.hpp"
#include "pisest/rng.hpp"

namespace pisest {

/// Gain sequences gamma_t = c1 / (A + t)^alpha and tau_t = c2 / (A + t)^beta.
struct StepSchedule {
  double c1 = 1e-4;
  double a = 100.0;
  double alpha = 1.0;
  double c2 = 0.05;
  double beta = 1.0 / 6.0;

  /// Throws InputError unless c1 > 0, c2 > 0 and A >= 0 (c1 = 0 is allowed and
  /// freezes the parameter).
  void validate() const;

  [[nodiscard]] double step_size(std::size_t t) const;
  [[nodiscard]] double perturbation(std::size_t t) const;
};

struct SpsaResult {
  std::vector<double> gradient;
  std::vector<int> direction;
  bool failed = false;
};

/// Two-sided simultaneous-perturbation gradient estimate with a Rademacher
/// direction drawn from `rng`. Coordinates with mask[j] == false are neither
/// perturbed nor estimated (an empty mask means all free). A non-finite value
/// at either perturbed point marks the result as failed.
SpsaResult spsa_gradient(const std::function<double(const Parameter&)>& loglik, const Parameter& theta, double tau,
                         RngStream& rng, const std::vector<bool>& mask = {});

}  // namespace pisest

#endif  // PISEST_SCHEDULE_HPP
