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

#ifndef PISEST_OPTIMIZERS_HPP
#define PISEST_OPTIMIZERS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pisest/model.hpp"
#include "pisest/parameter.hpp"
#include "pisest/schedule.hpp"
#include "pisest/series.hpp"
#include "pisest/smc.hpp"

namespace pisest {

enum class Algorithm { naive_sga, fisher_sga, adapt_ga, mcml, vanilla_online, semi_ga };

std::string_view to_string(Algorithm algorithm) noexcept;
Algorithm parse_algorithm(std::string_view id);
bool is_online(Algorithm algorithm) noexcept;

/// How TrajectoryRecord::seconds is measured. `work` is a deterministic virtual
/// clock driven by counted particle operations, so budgets and time stamps are
/// reproducible across machines.
enum class ClockKind { wall, work };

std::string_view to_string(ClockKind clock) noexcept;
ClockKind parse_clock(std::string_view id);

struct RunConfig {
  Algorithm algorithm = Algorithm::fisher_sga;
  Parameter theta0;
  std::size_t particles = 500;
  /// adaptGA: inner loop continues while ESS(a) > r N.
  double r = 0.5;
  /// semiGA: renew when the mean of the last `window` a-ESS values is <= r1 N.
  double r1 = 0.5;
  /// Resample when ESS / N <= r2.
  double r2 = 1.0;
  std::size_t window = 1;
  StepSchedule schedule;
  std::uint64_t seed = 1;
  /// Offline outer-iteration cap. Zero means no cap (a budget is then required).
  std::size_t max_iterations = 0;
  /// Clock budget in seconds. Zero means none.
  double budget_seconds = 0.0;
  ClockKind clock = ClockKind::wall;
  /// Work units per virtual second for ClockKind::work.
  double work_rate = 2.0e7;
  /// Online gain multiplier. Zero means the data length.
  double online_multiplier = 0.0;
  /// Online output cadence in steps. Zero means ceil(T / 200).
  std::size_t output_every = 0;
  /// Coordinates that are estimated. Empty means all; the rest stay at theta0.
  std::vector<bool> free;
  std::optional<ProposalKind> proposal;
  double inner_tolerance = 1e-5;
  double outer_tolerance = 1e-4;
  std::size_t inner_cap = 200;

  /// Throws InputError on inconsistent settings.
  void validate(const Model& model) const;
};

namespace event {
inline constexpr unsigned kNone = 0;
inline constexpr unsigned kRegenerate = 1U << 0U;  // fresh particle set (offline iterations)
inline constexpr unsigned kRenewal = 1U << 1U;     // semiGA renewal
inline constexpr unsigned kResample = 1U << 2U;
inline constexpr unsigned kFailure = 1U << 3U;
}  // namespace event

std::string format_events(unsigned flags);
unsigned parse_events(std::string_view text);

struct TrajectoryRecord {
  /// Offline: outer iteration count. Online: observations consumed.
  std::size_t iteration = 0;
  double seconds = 0.0;
  std::vector<double> theta;
  unsigned events = event::kNone;
  double ess_a = 0.0;
  double ess_w = 0.0;
  bool failed = false;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::vector<std::string> parameter_names;
  std::size_t smc_runs = 0;
  std::size_t propagations = 0;  // cloud propagations, one per observation per cloud
  std::size_t renewals = 0;
  std::size_t inner_updates = 0;
  bool failed = false;
  std::string failure_reason;
  /// Online algorithms: the particle set after the last step.
  ParticleCloud cloud;

  [[nodiscard]] const TrajectoryRecord& final() const { return records.back(); }
};

Trajectory naive_sga(const Model& model, const Series& y, const RunConfig& cfg);
/// Naive SGA driven by a caller-supplied log-likelihood (for instance an exact
/// one) instead of particle estimates. Evaluations are not charged to the clock.
Trajectory naive_sga(const Model& model, const Series& y, const RunConfig& cfg,
                     const std::function<double(const Parameter&)>& loglik);
Trajectory fisher_sga(const Model& model, const Series& y, const RunConfig& cfg);
/// Also runs the MCML variant when cfg.algorithm == Algorithm::mcml.
Trajectory adapt_ga_pis(const Model& model, const Series& y, const RunConfig& cfg);
Trajectory vanilla_online_ga(const Model& model, const Series& y, const RunConfig& cfg);
Trajectory semi_ga_pis(const Model& model, const Series& y, const RunConfig& cfg);

/// Dispatches on cfg.algorithm.
Trajectory run_optimizer(const Model& model, const Series& y, const RunConfig& cfg);

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace pisest

#endif  // PISEST_OPTIMIZERS_HPP
