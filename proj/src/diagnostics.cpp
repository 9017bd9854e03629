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

#include "pisest/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pisest/error.hpp"
#include "pisest/kalman.hpp"
#include "pisest/pis.hpp"
#include "pisest/smc.hpp"

namespace pisest {

bool is_failure(const std::vector<double>& theta, bool flagged, const FailureBounds& bounds) {
  if (flagged) {
    return true;
  }
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (!std::isfinite(theta[j])) {
      return true;
    }
    if (j < bounds.size() && bounds[j] && !(theta[j] > bounds[j]->first && theta[j] < bounds[j]->second)) {
      return true;
    }
  }
  return false;
}

std::vector<TrajectoryRecord> align_on_grid(const Trajectory& trajectory, const std::vector<double>& grid,
                                            AlignBy by) {
  if (trajectory.records.empty()) {
    throw InputError("cannot align an empty trajectory");
  }
  auto key = [by](const TrajectoryRecord& r) {
    return by == AlignBy::iteration ? static_cast<double>(r.iteration) : r.seconds;
  };
  std::vector<TrajectoryRecord> out;
  out.reserve(grid.size());
  std::size_t k = 0;
  for (double g : grid) {
    while (k + 1 < trajectory.records.size() && key(trajectory.records[k + 1]) <= g) {
      ++k;
    }
    out.push_back(trajectory.records[k]);
  }
  return out;
}

std::vector<double> uniform_grid(double end, std::size_t points) {
  if (points < 2) {
    return {end};
  }
  std::vector<double> grid(points);
  for (std::size_t g = 0; g < points; ++g) {
    grid[g] = end * static_cast<double>(g) / static_cast<double>(points - 1);
  }
  return grid;
}

double RmseReport::final_mean() const {
  if (rmse.empty() || rmse.back().empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (double v : rmse.back()) {
    sum += v;
  }
  return sum / static_cast<double>(rmse.back().size());
}

RmseReport rmse(const std::vector<std::vector<TrajectoryRecord>>& aligned, const std::vector<double>& grid,
                const std::vector<double>& theta_ref, const FailureBounds& bounds, double penalty,
                std::vector<std::string> parameter_names) {
  return rmse(aligned, grid, std::vector<std::vector<double>>(aligned.size(), theta_ref), bounds, penalty,
              std::move(parameter_names));
}

RmseReport rmse(const std::vector<std::vector<TrajectoryRecord>>& aligned, const std::vector<double>& grid,
                const std::vector<std::vector<double>>& theta_refs, const FailureBounds& bounds, double penalty,
                std::vector<std::string> parameter_names) {
  if (aligned.empty()) {
    throw InputError("rmse needs at least one replication");
  }
  if (theta_refs.size() != aligned.size()) {
    throw InputError("rmse needs one reference parameter per replication");
  }
  const std::vector<double>& theta_ref = theta_refs.front();
  const std::size_t p = theta_ref.size();
  for (const auto& ref : theta_refs) {
    if (ref.size() != p) {
      throw InputError("rmse: reference parameters differ in dimension");
    }
  }
  for (const auto& rep : aligned) {
    if (rep.size() != grid.size()) {
      throw InputError("rmse: replications are not aligned on the output grid");
    }
    for (const auto& rec : rep) {
      if (rec.theta.size() != p) {
        throw InputError("rmse: trajectory dimension differs from the reference parameter");
      }
    }
  }
  RmseReport report;
  report.grid = grid;
  report.parameter_names = std::move(parameter_names);
  report.theta_ref = theta_ref;
  report.replications = aligned.size();
  report.penalty = penalty;
  report.rmse.assign(grid.size(), std::vector<double>(p, 0.0));
  report.penalised.assign(grid.size(), 0);
  const double s = static_cast<double>(aligned.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t rep = 0; rep < aligned.size(); ++rep) {
      const auto& rec = aligned[rep][g];
      const bool failed = is_failure(rec.theta, rec.failed, bounds);
      report.penalised[g] += failed ? 1 : 0;
      for (std::size_t j = 0; j < p; ++j) {
        const double e = rec.theta[j] - theta_refs[rep][j];
        report.rmse[g][j] += failed ? penalty : e * e;
      }
    }
    for (double& v : report.rmse[g]) {
      v = std::sqrt(v / s);
    }
  }
  return report;
}

std::size_t failure_count(const std::vector<Trajectory>& trajectories, const FailureBounds& bounds) {
  std::size_t count = 0;
  for (const auto& traj : trajectories) {
    if (traj.records.empty() || is_failure(traj.final().theta, traj.final().failed || traj.failed, bounds)) {
      ++count;
    }
  }
  return count;
}

double log_log_slope(const std::vector<std::size_t>& particles, const std::vector<double>& errors) {
  if (particles.size() != errors.size() || particles.size() < 2) {
    throw InputError("slope fit needs at least two (N, error) pairs");
  }
  const double n = static_cast<double>(particles.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < particles.size(); ++k) {
    mx += std::log(static_cast<double>(particles[k]));
    my += std::log(errors[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < particles.size(); ++k) {
    const double dx = std::log(static_cast<double>(particles[k])) - mx;
    sxy += dx * (std::log(errors[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConsistencyReport consistency_check(const Model& model, const std::vector<Parameter>& trajectory, const Series& y,
                                    const ConsistencyOptions& options) {
  if (trajectory.empty() || trajectory.size() > y.size()) {
    throw InputError("consistency check needs a trajectory no longer than the series");
  }
  const std::size_t steps = trajectory.size();
  std::vector<std::vector<double>> exact(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    exact[t] = kalman_conditional_score(model, trajectory[t], y, t);
  }
  const RngStream root(options.seed);
  ConsistencyReport report;
  report.particles = options.particles;
  for (std::size_t n : options.particles) {
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t rep = 0; rep < options.replications; ++rep) {
      const RngStream run = root.split(stream_tag::kReplication).split(rep).split(n);
      ParticleCloud cloud = make_cloud(model, n);
      cloud.theta_gen = trajectory[0];
      for (std::size_t t = 0; t < steps; ++t) {
        const Parameter& theta = trajectory[t];
        const RngStream step = run.split(t);
        std::vector<double> previous;
        if (t > 0) {
          previous = fisher_score(model, cloud, theta);
        }
        propagate(model, cloud, theta, y.y[t], step);
        const auto estimate = conditional_score(model, previous, cloud, theta);
        for (std::size_t j = 0; j < estimate.size(); ++j) {
          const double e = estimate[j] - exact[t][j];
          sum_sq += e * e;
          ++count;
        }
        if (t + 1 < steps && options.retarget) {
          retarget(model, cloud, theta, trajectory[t + 1]);
        }
        resample_if_needed(cloud, 1.0, step);
      }
    }
    report.rms_error.push_back(std::sqrt(sum_sq / static_cast<double>(count)));
  }
  report.slope = report.particles.size() >= 2 ? log_log_slope(report.particles, report.rms_error) : 0.0;
  return report;
}

namespace {

void require_ar1(const Model& model) {
  if (model.kind() != ModelKind::ar1 && model.kind() != ModelKind::ar1_trend) {
    throw Unsupported("the t = 0 variance check needs a linear-Gaussian model");
  }
}

double integrate(const std::function<double(double)>& g, double lo, double hi) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 20, 1e-12, &error);
  if (!(error <= 1e-10 * std::max(1.0, std::fabs(value))) || !std::isfinite(value)) {
    throw Error("adaptive quadrature did not reach the requested tolerance");
  }
  return value;
}

}  // namespace

double asymptotic_variance_t0(const Model& model, const Parameter& theta, double y0,
                              const std::function<double(double)>& f, ProposalKind proposal) {
  require_ar1(model);
  model.validate(theta);
  const double phi = theta[0];
  const double prior_var = theta[1] * theta[1] / (1.0 - phi * phi);
  const double obs_var = theta[2] * theta[2];
  const double z = y0 - (model.trend_horizon() > 0 ? 3.0 : 0.0);
  const double post_var = 1.0 / (1.0 / prior_var + 1.0 / obs_var);
  const double post_mean = post_var * z / obs_var;
  const double half_width = 8.0 * std::sqrt(prior_var);
  auto log_post = [&](double x) { return log_normal_density(x, post_mean, post_var); };
  auto log_q = [&](double x) {
    return proposal == ProposalKind::optimal ? log_post(x) : log_normal_density(x, 0.0, prior_var);
  };
  const double mean_f = integrate([&](double x) { return std::exp(log_post(x)) * f(x); }, -half_width, half_width);
  return integrate(
      [&](double x) {
        const double d = f(x) - mean_f;
        return std::exp(2.0 * log_post(x) - log_q(x)) * d * d;
      },
      -half_width, half_width);
}

VarianceT0Report variance_t0_check(const Model& model, const Parameter& theta, double y0,
                                   const std::function<double(double)>& f, const VarianceT0Options& options) {
  VarianceT0Report report;
  report.quadrature = asymptotic_variance_t0(model, theta, y0, f, options.proposal);
  if (options.replications < 2) {
    throw InputError("variance check needs at least two replications");
  }
  const RngStream root(options.seed);
  std::vector<double> estimates(options.replications);
  for (std::size_t rep = 0; rep < options.replications; ++rep) {
    ParticleCloud cloud = make_cloud(model, options.particles);
    propagate(model, cloud, theta, y0, root.split(stream_tag::kReplication).split(rep), options.proposal);
    const auto w = normalized_weights(cloud.logw);
    double est = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      est += w[i] * f(cloud.x[i]);
    }
    estimates[rep] = est;
  }
  double mean = 0.0;
  for (double e : estimates) {
    mean += e;
  }
  mean /= static_cast<double>(estimates.size());
  double var = 0.0;
  for (double e : estimates) {
    var += (e - mean) * (e - mean);
  }
  var /= static_cast<double>(estimates.size() - 1);
  report.posterior_mean = mean;
  report.empirical = static_cast<double>(options.particles) * var;
  report.relative_error = report.quadrature > 0.0 ? std::fabs(report.empirical - report.quadrature) / report.quadrature
                                                  : std::fabs(report.empirical);
  return report;
}

}  // namespace pisest
