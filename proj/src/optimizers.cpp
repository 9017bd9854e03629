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

#include "pisest/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pisest/error.hpp"
#include "pisest/pis.hpp"
#include "pisest/smc.hpp"

namespace pisest {

namespace {

// Work units charged per particle operation on the virtual clock.
constexpr double kWorkPropagate = 1.0;
constexpr double kWorkGradient = 0.5;
constexpr double kWorkLogJoint = 0.25;

class Clock {
 public:
  Clock(ClockKind kind, double rate) : kind_(kind), rate_(rate), start_(std::chrono::steady_clock::now()) {}

  void charge(double units) { work_ += units; }

  [[nodiscard]] double seconds() const {
    if (kind_ == ClockKind::work) {
      return work_ / rate_;
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  ClockKind kind_;
  double rate_;
  double work_ = 0.0;
  std::chrono::steady_clock::time_point start_;
};

double sup_step(const Parameter& a, const Parameter& b) { return sup_norm_distance(a.values, b.values); }

// State shared by every optimizer: current parameter, clock, trajectory and
// the sticky failure flag.
class Run {
 public:
  Run(const Model& model, const Series& y, const RunConfig& cfg)
      : model(model), y(y), cfg(cfg), clock(cfg.clock, cfg.work_rate), theta(cfg.theta0), root(cfg.seed) {
    cfg.validate(model);
    model.validate(cfg.theta0);
    model.validate_series(y);
    trajectory.parameter_names = model.parameter_names();
    const double scale = std::max(1.0, static_cast<double>(model.stat_dim()) / 6.0);
    gradient_cost_ = kWorkGradient * scale * static_cast<double>(cfg.particles);
    log_joint_cost_ = kWorkLogJoint * scale * static_cast<double>(cfg.particles);
  }

  [[nodiscard]] bool failed() const { return trajectory.failed; }

  [[nodiscard]] bool over_budget() const { return cfg.budget_seconds > 0.0 && clock.seconds() >= cfg.budget_seconds; }

  void fail(const std::string& reason) {
    if (!trajectory.failed) {
      trajectory.failed = true;
      trajectory.failure_reason = reason;
      pending_events |= event::kFailure;
    }
  }

  void record(std::size_t iteration, double ess_a, double ess_w) {
    TrajectoryRecord rec;
    rec.iteration = iteration;
    rec.seconds = clock.seconds();
    if (!trajectory.records.empty()) {
      rec.seconds = std::max(rec.seconds, trajectory.records.back().seconds);
    }
    rec.theta = theta.values;
    rec.events = pending_events;
    rec.ess_a = ess_a;
    rec.ess_w = ess_w;
    rec.failed = trajectory.failed;
    trajectory.records.push_back(std::move(rec));
    pending_events = event::kNone;
  }

  [[nodiscard]] bool is_free(std::size_t j) const { return cfg.free.empty() || cfg.free[j]; }

  /// from + gain * direction on the free coordinates.
  [[nodiscard]] Parameter step_from(const Parameter& from, const std::vector<double>& direction, double gain) const {
    Parameter next = from;
    for (std::size_t j = 0; j < next.size(); ++j) {
      if (is_free(j)) {
        next[j] += gain * direction[j];
      }
    }
    return next;
  }

  /// Null when `candidate` is acceptable; otherwise the failure reason.
  [[nodiscard]] std::optional<std::string> reject(const Parameter& candidate) const {
    if (!candidate.all_finite()) {
      return std::string("parameter update produced a non-finite value");
    }
    if (auto reason = model.check(candidate.values)) {
      return "parameter update left the validity domain: " + *reason;
    }
    return std::nullopt;
  }

  /// Applies an accepted update, or sets the failure flag and keeps theta.
  bool advance_to(const Parameter& candidate) {
    if (auto reason = reject(candidate)) {
      fail(*reason);
      return false;
    }
    theta = candidate;
    return true;
  }

  SmcRunResult smc(const Parameter& at, const Series& data, const RngStream& stream) {
    SmcOptions options{cfg.particles, cfg.r2, cfg.proposal};
    auto result = smc_run(model, at, data, options, stream);
    clock.charge(kWorkPropagate * static_cast<double>(cfg.particles * data.size()));
    ++trajectory.smc_runs;
    trajectory.propagations += data.size();
    return result;
  }

  void charge_gradient() { clock.charge(gradient_cost_); }
  void charge_log_joint() { clock.charge(log_joint_cost_); }
  void charge_propagation() { clock.charge(kWorkPropagate * static_cast<double>(cfg.particles)); }

  [[nodiscard]] bool keep_iterating(std::size_t n) const {
    if (failed() || over_budget()) {
      return false;
    }
    return cfg.max_iterations == 0 || n < cfg.max_iterations;
  }

  const Model& model;
  const Series& y;
  const RunConfig& cfg;
  Clock clock;
  Parameter theta;
  RngStream root;
  Trajectory trajectory;
  unsigned pending_events = event::kNone;

 private:
  double gradient_cost_ = 0.0;
  double log_joint_cost_ = 0.0;
};

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

RngStream outer_stream(const Run& run, std::size_t n) { return run.root.split(stream_tag::kOuter).split(n); }

}  // namespace

std::string_view to_string(Algorithm algorithm) noexcept {
  switch (algorithm) {
    case Algorithm::naive_sga:
      return "naive-sga";
    case Algorithm::fisher_sga:
      return "fisher-sga";
    case Algorithm::adapt_ga:
      return "adaptga";
    case Algorithm::mcml:
      return "mcml";
    case Algorithm::vanilla_online:
      return "vanilla-online";
    case Algorithm::semi_ga:
      return "semiga";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view id) {
  for (auto a : {Algorithm::naive_sga, Algorithm::fisher_sga, Algorithm::adapt_ga, Algorithm::mcml,
                 Algorithm::vanilla_online, Algorithm::semi_ga}) {
    if (to_string(a) == id) {
      return a;
    }
  }
  throw InputError("unknown algorithm '" + std::string(id) +
                   "' (expected naive-sga, fisher-sga, adaptga, mcml, vanilla-online or semiga)");
}

bool is_online(Algorithm algorithm) noexcept {
  return algorithm == Algorithm::vanilla_online || algorithm == Algorithm::semi_ga;
}

std::string_view to_string(ClockKind clock) noexcept { return clock == ClockKind::work ? "work" : "wall"; }

ClockKind parse_clock(std::string_view id) {
  if (id == "wall") {
    return ClockKind::wall;
  }
  if (id == "work") {
    return ClockKind::work;
  }
  throw InputError("unknown clock '" + std::string(id) + "' (expected wall or work)");
}

void RunConfig::validate(const Model& model) const {
  if (theta0.size() != model.parameter_dim()) {
    throw InputError("theta0 has " + std::to_string(theta0.size()) + " entries, model " + std::string(model.id()) +
                     " expects " + std::to_string(model.parameter_dim()));
  }
  if (particles < 2) {
    throw InputError("at least 2 particles are required");
  }
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(r2)) {
    throw InputError("r2 must lie in (0, 1]");
  }
  if (algorithm == Algorithm::adapt_ga && !(r > 0.0 && r < 1.0)) {
    throw InputError("r must lie in (0, 1)");
  }
  if (algorithm == Algorithm::semi_ga && !in_unit(r1)) {
    throw InputError("r1 must lie in (0, 1]");
  }
  if (window == 0) {
    throw InputError("the renewal window K must be at least 1");
  }
  if (!free.empty() && free.size() != theta0.size()) {
    throw InputError("the free-parameter mask has the wrong length");
  }
  if (budget_seconds < 0.0 || !std::isfinite(budget_seconds)) {
    throw InputError("the budget must be a non-negative number of seconds");
  }
  if (!is_online(algorithm) && max_iterations == 0 && budget_seconds == 0.0) {
    throw InputError("offline algorithms need an iteration cap or a time budget");
  }
  if (clock == ClockKind::work && !(work_rate > 0.0)) {
    throw InputError("work_rate must be positive");
  }
  schedule.validate();
}

std::string format_events(unsigned flags) {
  if (flags == event::kNone) {
    return "none";
  }
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if ((flags & bit) != 0U) {
      if (!out.empty()) {
        out += '|';
      }
      out += name;
    }
  };
  add(event::kRegenerate, "regenerate");
  add(event::kRenewal, "renewal");
  add(event::kResample, "resample");
  add(event::kFailure, "failure");
  return out;
}

unsigned parse_events(std::string_view text) {
  unsigned flags = event::kNone;
  while (!text.empty()) {
    const auto bar = text.find('|');
    const auto name = text.substr(0, bar);
    if (name == "regenerate") {
      flags |= event::kRegenerate;
    } else if (name == "renewal") {
      flags |= event::kRenewal;
    } else if (name == "resample") {
      flags |= event::kResample;
    } else if (name == "failure") {
      flags |= event::kFailure;
    } else if (name != "none") {
      throw InputError("unknown trajectory event '" + std::string(name) + "'");
    }
    text = bar == std::string_view::npos ? std::string_view{} : text.substr(bar + 1);
  }
  return flags;
}

namespace {

// `estimate(at, stream)` returns a log-likelihood value or NaN.
template <typename Estimate>
Trajectory naive_sga_loop(Run& run, const RunConfig& cfg, Estimate&& estimate) {
  run.record(0, 0.0, 0.0);
  for (std::size_t n = 0; run.keep_iterating(n); ++n) {
    const RngStream outer = outer_stream(run, n);
    RngStream perturb = outer.split(stream_tag::kPerturb);
    std::size_t evaluation = 0;
    double last_ess = 0.0;
    auto loglik = [&](const Parameter& at) {
      const RngStream stream = outer.split(++evaluation);
      if (!run.model.is_valid(at.values)) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      return estimate(at, stream, last_ess);
    };
    const auto g = spsa_gradient(loglik, run.theta, cfg.schedule.perturbation(n), perturb, cfg.free);
    run.pending_events |= event::kRegenerate;
    if (g.failed || !all_finite(g.gradient)) {
      run.fail("likelihood estimate is not finite at a perturbed parameter");
    } else {
      run.advance_to(run.step_from(run.theta, g.gradient, cfg.schedule.step_size(n)));
    }
    run.record(n + 1, 0.0, last_ess);
  }
  return std::move(run.trajectory);
}

}  // namespace

Trajectory naive_sga(const Model& model, const Series& y, const RunConfig& cfg) {
  Run run(model, y, cfg);
  return naive_sga_loop(run, cfg, [&](const Parameter& at, const RngStream& stream, double& last_ess) {
    try {
      auto result = run.smc(at, y, stream);
      last_ess = result.steps.back().ess;
      return result.loglik.value;
    } catch (const DegenerateWeights&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
}

Trajectory naive_sga(const Model& model, const Series& y, const RunConfig& cfg,
                     const std::function<double(const Parameter&)>& loglik) {
  Run run(model, y, cfg);
  return naive_sga_loop(run, cfg,
                        [&](const Parameter& at, const RngStream&, double&) { return loglik(at); });
}

Trajectory fisher_sga(const Model& model, const Series& y, const RunConfig& cfg) {
  Run run(model, y, cfg);
  run.record(0, 0.0, 0.0);
  for (std::size_t n = 0; run.keep_iterating(n); ++n) {
    double ess_w = 0.0;
    try {
      const auto result = run.smc(run.theta, y, outer_stream(run, n));
      ess_w = result.steps.back().ess;
      const auto g = fisher_score(model, result.cloud, run.theta);
      run.charge_gradient();
      run.pending_events |= event::kRegenerate;
      if (!all_finite(g)) {
        run.fail("score estimate is not finite");
      } else {
        run.advance_to(run.step_from(run.theta, g, cfg.schedule.step_size(n)));
      }
    } catch (const DegenerateWeights& e) {
      run.fail(e.what());
    }
    run.record(n + 1, static_cast<double>(cfg.particles), ess_w);
  }
  return std::move(run.trajectory);
}

Trajectory adapt_ga_pis(const Model& model, const Series& y, const RunConfig& cfg) {
  Run run(model, y, cfg);
  const bool mcml = cfg.algorithm == Algorithm::mcml;
  const double n_particles = static_cast<double>(cfg.particles);
  run.record(0, n_particles, 0.0);
  for (std::size_t n = 0; run.keep_iterating(n); ++n) {
    double ess_w = 0.0;
    double last_a_ess = n_particles;
    const Parameter start = run.theta;
    try {
      const auto result = run.smc(start, y, outer_stream(run, n));
      ess_w = result.steps.back().ess;
      run.pending_events |= event::kRegenerate;
      const double gain = cfg.schedule.step_size(n);
      Parameter current = start;
      std::size_t k = 0;
      // The first update is always taken: at the generating parameter a == 1.
      while (true) {
        PisScore s;
        try {
          s = pis_score(model, result.cloud, start, current);
        } catch (const DegenerateWeights&) {
          break;
        }
        run.charge_gradient();
        run.charge_log_joint();
        last_a_ess = s.a_ess;
        if (k > 0 && !mcml && !(s.a_ess > cfg.r * n_particles)) {
          break;
        }
        if (!all_finite(s.score)) {
          run.fail("score estimate is not finite");
          break;
        }
        const Parameter next = run.step_from(current, s.score, gain);
        if (auto reason = run.reject(next)) {
          run.fail(*reason);
          break;
        }
        const double moved = sup_step(next, current);
        current = next;
        ++k;
        ++run.trajectory.inner_updates;
        if (moved <= cfg.inner_tolerance || k >= cfg.inner_cap) {
          break;
        }
      }
      if (!run.failed()) {
        run.theta = current;
      }
    } catch (const DegenerateWeights& e) {
      run.fail(e.what());
    }
    run.record(n + 1, last_a_ess, ess_w);
    if (!run.failed() && sup_step(run.theta, start) <= cfg.outer_tolerance) {
      break;
    }
  }
  return std::move(run.trajectory);
}

namespace {

struct OnlineCadence {
  std::size_t every;
  std::size_t steps;

  [[nodiscard]] bool due(std::size_t done) const { return done % every == 0 || done == steps; }
};

OnlineCadence online_cadence(const RunConfig& cfg, std::size_t steps) {
  std::size_t every = cfg.output_every;
  if (every == 0) {
    every = std::max<std::size_t>(1, (steps + 199) / 200);
  }
  return {every, steps};
}

double online_gain(const RunConfig& cfg, const Series& y, std::size_t t) {
  const double multiplier = cfg.online_multiplier > 0.0 ? cfg.online_multiplier : static_cast<double>(y.size());
  return multiplier * cfg.schedule.step_size(t);
}

// Shared loop of the two online algorithms. Updates run for t = 0..T-1, so the
// last observation is never consumed.
Trajectory online_ga(const Model& model, const Series& y, const RunConfig& cfg, bool semi) {
  Run run(model, y, cfg);
  const double n_particles = static_cast<double>(cfg.particles);
  const std::size_t steps = y.size() - 1;
  const auto cadence = online_cadence(cfg, steps);
  ParticleCloud cloud = make_cloud(model, cfg.particles);
  cloud.theta_gen = run.theta;
  std::deque<double> window(cfg.window, n_particles);
  double last_a_ess = n_particles;
  double last_ess_w = n_particles;
  run.record(0, last_a_ess, last_ess_w);
  for (std::size_t t = 0; t < steps && !run.over_budget(); ++t) {
    const RngStream step = run.root.split(t);
    const Parameter current = run.theta;
    try {
      std::vector<double> previous;
      if (t > 0) {
        previous = fisher_score(model, cloud, current);
        run.charge_gradient();
      }
      propagate(model, cloud, current, y.y[t], step, cfg.proposal);
      run.charge_propagation();
      ++run.trajectory.propagations;
      last_ess_w = ess(cloud.logw);

      bool moved = false;
      if (!run.failed()) {
        const auto g = conditional_score(model, previous, cloud, current);
        run.charge_gradient();
        if (!all_finite(g)) {
          run.fail("conditional score estimate is not finite");
        } else {
          moved = run.advance_to(run.step_from(current, g, online_gain(cfg, y, t)));
        }
      }

      bool renewed = false;
      if (semi) {
        if (moved) {
          const auto diag = retarget(model, cloud, current, run.theta);
          run.charge_log_joint();
          last_a_ess = diag.a_ess;
        } else {
          last_a_ess = n_particles;
        }
        window.pop_front();
        window.push_back(last_a_ess);
        const double mean_a = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
        if (mean_a <= cfg.r1 * n_particles) {
          const RngStream renewal = run.root.split(stream_tag::kRenewal).split(t);
          auto fresh = run.smc(run.theta, y.prefix(t + 1), renewal);
          cloud = std::move(fresh.cloud);
          if (cloud.steps_since_resample > 0) {
            cloud = multinomial_resample(cloud, renewal.split(stream_tag::kResample));
          }
          std::fill(window.begin(), window.end(), n_particles);
          ++run.trajectory.renewals;
          run.pending_events |= event::kRenewal;
          renewed = true;
        }
      }
      if (!renewed && resample_if_needed(cloud, cfg.r2, step)) {
        run.pending_events |= event::kResample;
      }
    } catch (const DegenerateWeights& e) {
      run.fail(e.what());
      run.record(t + 1, last_a_ess, last_ess_w);
      break;
    }
    if (cadence.due(t + 1)) {
      run.record(t + 1, last_a_ess, last_ess_w);
    }
  }
  run.trajectory.cloud = std::move(cloud);
  return std::move(run.trajectory);
}

}  // namespace

Trajectory vanilla_online_ga(const Model& model, const Series& y, const RunConfig& cfg) {
  return online_ga(model, y, cfg, false);
}

Trajectory semi_ga_pis(const Model& model, const Series& y, const RunConfig& cfg) {
  return online_ga(model, y, cfg, true);
}

Trajectory run_optimizer(const Model& model, const Series& y, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::naive_sga:
      return naive_sga(model, y, cfg);
    case Algorithm::fisher_sga:
      return fisher_sga(model, y, cfg);
    case Algorithm::adapt_ga:
    case Algorithm::mcml:
      return adapt_ga_pis(model, y, cfg);
    case Algorithm::vanilla_online:
      return vanilla_online_ga(model, y, cfg);
    case Algorithm::semi_ga:
      return semi_ga_pis(model, y, cfg);
  }
  throw InputError("unknown algorithm");
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  out << "iter,t_wall";
  for (const auto& name : trajectory.parameter_names) {
    out << ',' << name;
  }
  out << ",event,ess_a,ess_w,failed\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const auto& rec : trajectory.records) {
    out << rec.iteration << ',';
    put(rec.seconds);
    for (double v : rec.theta) {
      out << ',';
      put(v);
    }
    out << ',' << format_events(rec.events) << ',';
    put(rec.ess_a);
    out << ',';
    put(rec.ess_w);
    out << ',' << (rec.failed ? 1 : 0) << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory traj;
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("trajectory CSV is empty");
  }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      header.push_back(cell);
    }
  }
  if (header.size() < 7 || header[0] != "iter" || header[1] != "t_wall" || header[header.size() - 4] != "event" ||
      header[header.size() - 3] != "ess_a" || header[header.size() - 2] != "ess_w" || header.back() != "failed") {
    throw InputError("trajectory CSV header must be iter,t_wall,<parameters>,event,ess_a,ess_w,failed");
  }
  const std::size_t p = header.size() - 6;
  traj.parameter_names.assign(header.begin() + 2, header.begin() + 2 + static_cast<std::ptrdiff_t>(p));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != header.size()) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + " has the wrong number of fields");
    }
    try {
      TrajectoryRecord rec;
      rec.iteration = std::stoull(cells[0]);
      rec.seconds = std::stod(cells[1]);
      for (std::size_t j = 0; j < p; ++j) {
        rec.theta.push_back(std::stod(cells[2 + j]));
      }
      rec.events = parse_events(cells[2 + p]);
      rec.ess_a = std::stod(cells[3 + p]);
      rec.ess_w = std::stod(cells[4 + p]);
      rec.failed = cells[5 + p] == "1";
      traj.failed = traj.failed || rec.failed;
      traj.records.push_back(std::move(rec));
    } catch (const std::logic_error&) {
      throw InputError("trajectory CSV line " + std::to_string(line_no) + " has a malformed number");
    }
  }
  if (traj.records.empty()) {
    throw InputError("trajectory CSV has no records");
  }
  return traj;
}

}  // namespace pisest
