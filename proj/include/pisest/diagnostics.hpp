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

#ifndef PISEST_DIAGNOSTICS_HPP
#define PISEST_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/optimizers.hpp"
#include "pisest/parameter.hpp"
#include "pisest/series.hpp"

namespace pisest {

/// Open interval (lower, upper) per parameter; an unset entry is unbounded.
using FailureBounds = std::vector<std::optional<std::pair<double, double>>>;

/// True when theta is flagged, not finite, or outside the bounds.
bool is_failure(const std::vector<double>& theta, bool flagged, const FailureBounds& bounds);

enum class AlignBy { iteration, seconds };

/// Parameter values of one trajectory on a grid: the last record whose key is
/// <= the grid point, or the first record before any.
std::vector<TrajectoryRecord> align_on_grid(const Trajectory& trajectory, const std::vector<double>& grid,
                                            AlignBy by);

/// Evenly spaced grid 0, step, 2 step, ... up to and including `end`.
std::vector<double> uniform_grid(double end, std::size_t points);

struct RmseReport {
  std::vector<double> grid;
  std::vector<std::string> parameter_names;
  /// rmse[g][j]: RMSE of parameter j at grid point g.
  std::vector<std::vector<double>> rmse;
  /// Number of penalised replications at each grid point.
  std::vector<std::size_t> penalised;
  /// Reference of the first replication (all of them when shared).
  std::vector<double> theta_ref;
  std::size_t replications = 0;
  double penalty = 0.0;

  /// Mean over parameters of the RMSE at the last grid point.
  [[nodiscard]] double final_mean() const;
};

inline constexpr double kDefaultPenalty = 0.35 * 0.35;

/// Per-parameter RMSE over replications at each grid point. A failed record
/// (see is_failure) contributes `penalty` as its squared error. Throws
/// InputError when the replications are not aligned on the same grid.
RmseReport rmse(const std::vector<std::vector<TrajectoryRecord>>& aligned, const std::vector<double>& grid,
                const std::vector<double>& theta_ref, const FailureBounds& bounds, double penalty = kDefaultPenalty,
                std::vector<std::string> parameter_names = {});

/// As above with a reference parameter per replication.
RmseReport rmse(const std::vector<std::vector<TrajectoryRecord>>& aligned, const std::vector<double>& grid,
                const std::vector<std::vector<double>>& theta_refs, const FailureBounds& bounds,
                double penalty = kDefaultPenalty, std::vector<std::string> parameter_names = {});

/// Replications whose final parameter is a failure.
std::size_t failure_count(const std::vector<Trajectory>& trajectories, const FailureBounds& bounds);

struct ConsistencyOptions {
  std::vector<std::size_t> particles{250, 1000, 4000};
  std::size_t replications = 50;
  /// Re-weight the cloud to each new parameter (semiGA). When false the cloud
  /// simply moves on under the new parameter (vanilla online GA).
  bool retarget = true;
  std::uint64_t seed = 1;
};

struct ConsistencyReport {
  std::vector<std::size_t> particles;
  /// Root mean squared error of the conditional score, over time, coordinates and replications.
  std::vector<double> rms_error;
  double slope = 0.0;
};

/// Filters y along the prescribed trajectory theta_0..theta_{T-1} and compares
/// the particle conditional score at each t with the exact one at theta_t.
ConsistencyReport consistency_check(const Model& model, const std::vector<Parameter>& trajectory, const Series& y,
                                    const ConsistencyOptions& options);

/// Least-squares slope of log(error) against log(N).
double log_log_slope(const std::vector<std::size_t>& particles, const std::vector<double>& errors);

struct VarianceT0Options {
  std::size_t particles = 10000;
  std::size_t replications = 2000;
  ProposalKind proposal = ProposalKind::bootstrap;
  std::uint64_t seed = 1;
};

struct VarianceT0Report {
  double quadrature = 0.0;   // V_0(f)
  double empirical = 0.0;    // N Var of the self-normalised estimator
  double posterior_mean = 0.0;  // pi(f)
  double relative_error = 0.0;
};

/// Asymptotic variance of the self-normalised estimate of pi(f) at t = 0 for
/// the linear-Gaussian model, by adaptive quadrature and by simulation.
VarianceT0Report variance_t0_check(const Model& model, const Parameter& theta, double y0,
                                   const std::function<double(double)>& f, const VarianceT0Options& options);

/// The quadrature part alone.
double asymptotic_variance_t0(const Model& model, const Parameter& theta, double y0,
                              const std::function<double(double)>& f, ProposalKind proposal);

}  // namespace pisest

#endif  // PISEST_DIAGNOSTICS_HPP
