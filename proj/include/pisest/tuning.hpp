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

#ifndef PISEST_TUNING_HPP
#define PISEST_TUNING_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/parameter.hpp"
#include "pisest/rng.hpp"
#include "pisest/series.hpp"

namespace pisest {

/// Axis-aligned box of parameter values.
struct ParameterBox {
  std::vector<double> lower;
  std::vector<double> upper;

  /// A uniform draw from the box.
  [[nodiscard]] std::vector<double> sample(RngStream& rng) const;
};

struct OfflineTuneOptions {
  std::size_t samples = 20;
  std::size_t particles = 500;
  /// Multiplies every Newton step. Zero gives zero-length steps.
  double step_scale = 1.0;
  /// Relative finite-difference step for the Hessian diagonal.
  double hessian_step = 1e-4;
  std::uint64_t seed = 1;
};

struct OfflineTuneResult {
  double r = 0.0;
  /// a-ESS / N for every retained sample.
  std::vector<double> ratios;
  std::size_t skipped = 0;
};

/// Draws parameter values from `region`, moves each by one Newton step built
/// from the particle score and a finite-difference Hessian diagonal, and
/// returns the mean a-ESS / N at the moved values. Samples whose Hessian
/// diagonal is not negative are skipped. Throws Error when every sample is.
OfflineTuneResult tune_r_offline(const Model& model, const ParameterBox& region, const Series& y,
                                 const OfflineTuneOptions& options = {});

struct OnlineTuneOptions {
  std::size_t particles = 500;
  /// Renew the particle set every `cadence` steps.
  std::size_t cadence = 100;
  /// A distance is kept only if its median a-ESS / N lies in [low, high].
  double low = 0.05;
  double high = 0.95;
  std::uint64_t seed = 1;
};

struct OnlineTuneResult {
  double r1 = 0.0;
  std::vector<double> distances;
  std::vector<double> medians;
  std::vector<bool> retained;
};

/// Sweeps the data moving theta by a fixed distance d along the normalised
/// conditional score at every step, records a-ESS / N, and returns the median
/// over all distances whose own median is neither too small nor too large.
/// Throws Error when every distance is excluded.
OnlineTuneResult tune_r1_online(const Model& model, const Parameter& theta0, const std::vector<double>& distances,
                                const Series& y, const OnlineTuneOptions& options = {});

}  // namespace pisest

#endif  // PISEST_TUNING_HPP
