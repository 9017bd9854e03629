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

#include "pisest/schedule.hpp"

#include <cmath>

#include "pisest/error.hpp"

namespace pisest {

void StepSchedule::validate() const {
  if (!(c1 >= 0.0) || !std::isfinite(c1)) {
    throw InputError("step schedule: c1 must be a non-negative number");
  }
  if (!(c2 > 0.0) || !std::isfinite(c2)) {
    throw InputError("step schedule: c2 must be positive");
  }
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw InputError("step schedule: A must be non-negative");
  }
  if (a == 0.0 && (alpha > 0.0 || beta > 0.0)) {
    throw InputError("step schedule: A = 0 makes the first gain infinite");
  }
}

double StepSchedule::step_size(std::size_t t) const { return c1 / std::pow(a + static_cast<double>(t), alpha); }

double StepSchedule::perturbation(std::size_t t) const { return c2 / std::pow(a + static_cast<double>(t), beta); }

SpsaResult spsa_gradient(const std::function<double(const Parameter&)>& loglik, const Parameter& theta, double tau,
                         RngStream& rng, const std::vector<bool>& mask) {
  if (!(tau > 0.0)) {
    throw InputError("SPSA perturbation size must be positive");
  }
  const std::size_t p = theta.size();
  SpsaResult out;
  out.direction.assign(p, 0);
  out.gradient.assign(p, 0.0);
  Parameter plus = theta;
  Parameter minus = theta;
  for (std::size_t j = 0; j < p; ++j) {
    if (!mask.empty() && !mask[j]) {
      continue;
    }
    out.direction[j] = rng.rademacher();
    plus[j] += tau * out.direction[j];
    minus[j] -= tau * out.direction[j];
  }
  const double up = loglik(plus);
  const double down = loglik(minus);
  if (!std::isfinite(up) || !std::isfinite(down)) {
    out.failed = true;
    return out;
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (out.direction[j] != 0) {
      out.gradient[j] = (up - down) / (2.0 * tau * out.direction[j]);
    }
  }
  return out;
}

}  // namespace pisest
