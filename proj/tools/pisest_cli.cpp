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


#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pisest/diagnostics.hpp"
#include "pisest/error.hpp"
#include "pisest/experiment.hpp"
#include "pisest/kalman.hpp"
#include "pisest/model.hpp"
#include "pisest/optimizers.hpp"
#include "pisest/pis.hpp"
#include "pisest/series.hpp"
#include "pisest/smc.hpp"
#include "pisest/tuning.hpp"

namespace {

using namespace pisest;
namespace fs = std::filesystem;

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_parameter(const Parameter& theta) {
  for (std::size_t j = 0; j < theta.size(); ++j) {
    std::cout << theta.names[j] << " = " << real(theta[j]) << '\n';
  }
}

// Options shared by every command that reads a series.
struct DataArgs {
  std::string model = "ar1";
  std::string data;
  std::size_t trend_horizon = 256;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model, "ar1, ar1-trend, sv, sv-trend or par1")->capture_default_str();
    cmd->add_option("--data", data, "Series CSV with header t,y[,x]")->required()->check(CLI::ExistingFile);
    cmd->add_option("--trend-horizon", trend_horizon, "Trend models: observations the trend acts on")
        ->capture_default_str();
  }

  [[nodiscard]] Series series() const { return read_series_csv(fs::path(data)); }

  [[nodiscard]] std::unique_ptr<Model> build(const Series& y) const {
    ModelOptions options;
    options.trend_horizon = trend_horizon;
    options.max_length = y.size();
    auto m = make_model(model, options);
    m->validate_series(y);
    return m;
  }
};

std::optional<ProposalKind> proposal_from(const std::string& text) {
  if (text == "default") return std::nullopt;
  return parse_proposal_kind(text);
}

// phi:0.4:1.0:61 -> 61 values of phi from 0.4 to 1.0.
std::vector<Parameter> parse_grid(const std::string& spec, const Parameter& base) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(spec);
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4) throw InputError("grid must look like name:lower:upper:points");
  const std::size_t j = base.index_of(parts[0]);
  const double lo = std::stod(parts[1]);
  const double hi = std::stod(parts[2]);
  const auto points = static_cast<std::size_t>(std::stoul(parts[3]));
  if (points < 2) throw InputError("grid needs at least two points");
  std::vector<Parameter> grid;
  for (std::size_t k = 0; k < points; ++k) {
    Parameter p = base;
    p[j] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    grid.push_back(p);
  }
  return grid;
}

FailureBounds bounds_from(const std::string& text, const Model& model) {
  return parse_failure_bounds(text, model);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle importance sampling estimation for state-space models"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a series and write it as CSV");
  std::string sim_model = "ar1";
  std::string sim_theta;
  std::size_t sim_horizon = 1000;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  std::size_t sim_trend = 256;
  bool sim_latent = false;
  sim->add_option("--model", sim_model)->capture_default_str();
  sim->add_option("--theta", sim_theta, "Comma-separated parameter")->required();
  sim->add_option("--horizon", sim_horizon, "Final time index T")->capture_default_str();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--trend-horizon", sim_trend)->capture_default_str();
  sim->add_flag("--latent", sim_latent, "Also write the latent states");
  sim->add_option("--out", sim_out, "Output file (default stdout)");

  // kalman-loglik / kalman-mle
  auto* kll = app.add_subcommand("kalman-loglik", "Exact log-likelihood of a linear-Gaussian model");
  DataArgs kll_data;
  std::string kll_theta;
  kll_data.add(kll);
  kll->add_option("--theta", kll_theta)->required();

  auto* kmle = app.add_subcommand("kalman-mle", "Exact maximum likelihood estimate");
  DataArgs kmle_data;
  std::string kmle_theta0;
  std::vector<std::string> kmle_free;
  kmle_data.add(kmle);
  kmle->add_option("--theta0", kmle_theta0)->required();
  kmle->add_option("--free", kmle_free, "Parameters to estimate (default all)")->delimiter(',');

  // smc-loglik
  auto* sll = app.add_subcommand("smc-loglik", "Particle filter likelihood estimate and ESS trace");
  DataArgs sll_data;
  std::string sll_theta;
  std::size_t sll_n = 1000;
  double sll_r2 = 1.0;
  std::uint64_t sll_seed = 1;
  std::string sll_proposal = "default";
  sll_data.add(sll);
  sll->add_option("--theta", sll_theta)->required();
  sll->add_option("--n", sll_n)->capture_default_str();
  sll->add_option("--r2", sll_r2)->capture_default_str();
  sll->add_option("--seed", sll_seed)->capture_default_str();
  sll->add_option("--proposal", sll_proposal, "default, bootstrap or optimal")->capture_default_str();

  // loglik-curve
  auto* curve = app.add_subcommand("loglik-curve", "Likelihood curve from one particle set by importance weights");
  DataArgs curve_data;
  std::string curve_theta0;
  std::string curve_grid;
  std::size_t curve_n = 1000;
  std::uint64_t curve_seed = 1;
  curve_data.add(curve);
  curve->add_option("--theta0", curve_theta0)->required();
  curve->add_option("--grid", curve_grid, "name:lower:upper:points")->required();
  curve->add_option("--n", curve_n)->capture_default_str();
  curve->add_option("--seed", curve_seed)->capture_default_str();

  // estimate
  auto* est = app.add_subcommand("estimate", "Run one estimation algorithm and write its trajectory CSV");
  DataArgs est_data;
  std::string est_algo = "adaptga";
  std::string est_theta0;
  RunConfig run;
  std::string est_clock = "wall";
  std::string est_proposal = "default";
  std::vector<std::string> est_free;
  std::string est_out;
  est_data.add(est);
  est->add_option("--algo", est_algo, "naive-sga, fisher-sga, adaptga, mcml, vanilla-online or semiga")
      ->capture_default_str();
  est->add_option("--theta0", est_theta0)->required();
  est->add_option("--n", run.particles)->capture_default_str();
  est->add_option("--r", run.r)->capture_default_str();
  est->add_option("--r1", run.r1)->capture_default_str();
  est->add_option("--r2", run.r2)->capture_default_str();
  est->add_option("--k", run.window, "Renewal window")->capture_default_str();
  est->add_option("--c1", run.schedule.c1)->capture_default_str();
  est->add_option("--c2", run.schedule.c2)->capture_default_str();
  est->add_option("--a", run.schedule.a)->capture_default_str();
  est->add_option("--alpha", run.schedule.alpha)->capture_default_str();
  est->add_option("--beta", run.schedule.beta)->capture_default_str();
  est->add_option("--budget-seconds", run.budget_seconds)->capture_default_str();
  est->add_option("--max-iterations", run.max_iterations)->capture_default_str();
  est->add_option("--clock", est_clock, "wall or work")->capture_default_str();
  est->add_option("--online-multiplier", run.online_multiplier, "0 means the data length")->capture_default_str();
  est->add_option("--output-every", run.output_every)->capture_default_str();
  est->add_option("--free", est_free, "Parameters to estimate (default all)")->delimiter(',');
  est->add_option("--proposal", est_proposal)->capture_default_str();
  est->add_option("--seed", run.seed)->capture_default_str();
  est->add_option("--out", est_out, "Output file (default stdout)");

  // tune-ess
  auto* tune = app.add_subcommand("tune-ess", "Recommend the ESS threshold r (offline) or r1 (online)");
  DataArgs tune_data;
  std::string tune_mode = "offline";
  std::string tune_lower;
  std::string tune_upper;
  std::string tune_theta0;
  std::string tune_distances = "0.002,0.005,0.01,0.02,0.05";
  OfflineTuneOptions tune_off;
  OnlineTuneOptions tune_on;
  tune_data.add(tune);
  tune->add_option("--mode", tune_mode, "offline or online")->check(CLI::IsMember({"offline", "online"}));
  tune->add_option("--lower", tune_lower, "Offline: lower corner of the parameter region");
  tune->add_option("--upper", tune_upper, "Offline: upper corner of the parameter region");
  tune->add_option("--samples", tune_off.samples)->capture_default_str();
  tune->add_option("--theta0", tune_theta0, "Online: starting parameter");
  tune->add_option("--distances", tune_distances, "Online: displacement grid")->capture_default_str();
  tune->add_option("--cadence", tune_on.cadence, "Online: renewal cadence")->capture_default_str();
  std::size_t tune_n = 500;
  std::uint64_t tune_seed = 1;
  tune->add_option("--n", tune_n)->capture_default_str();
  tune->add_option("--seed", tune_seed)->capture_default_str();

  // compare
  auto* cmp = app.add_subcommand("compare", "Run a multi-algorithm experiment from a config file");
  std::string cmp_config;
  std::string cmp_verify;
  cmp->add_option("--config", cmp_config, "Experiment config or a manifest to rerun")->check(CLI::ExistingFile);
  cmp->add_option("--verify", cmp_verify, "Check the output files listed in a manifest")->check(CLI::ExistingFile);

  // verify
  auto* verify = app.add_subcommand("verify", "Empirical checks against exact results");
  verify->require_subcommand(1);
  auto* vc = verify->add_subcommand("consistency", "Conditional-score error against N along a fixed trajectory");
  std::string vc_theta = "0.6,0.7,0.9";
  std::string vc_to = "0.7,0.7,0.9";
  std::size_t vc_horizon = 100;
  std::vector<std::size_t> vc_n{250, 1000, 4000};
  std::size_t vc_reps = 20;
  bool vc_alternate = false;
  bool vc_plain = false;
  std::uint64_t vc_seed = 1;
  vc->add_option("--theta", vc_theta, "Trajectory start")->capture_default_str();
  vc->add_option("--to", vc_to, "Trajectory end")->capture_default_str();
  vc->add_flag("--alternate", vc_alternate, "Alternate between start and end instead of a linear drift");
  vc->add_flag("--no-retarget", vc_plain, "Vanilla online estimator");
  vc->add_option("--horizon", vc_horizon)->capture_default_str();
  vc->add_option("--n", vc_n)->delimiter(',')->capture_default_str();
  vc->add_option("--reps", vc_reps)->capture_default_str();
  vc->add_option("--seed", vc_seed)->capture_default_str();
  auto* vv = verify->add_subcommand("variance-t0", "N Var of the t = 0 estimate of E[x_0 | y_0] against quadrature");
  std::string vv_theta = "0.7,0.7,0.9";
  double vv_y0 = 1.3;
  VarianceT0Options vv_opt;
  vv->add_option("--theta", vv_theta)->capture_default_str();
  vv->add_option("--y0", vv_y0)->capture_default_str();
  vv->add_option("--n", vv_opt.particles)->capture_default_str();
  vv->add_option("--reps", vv_opt.replications)->capture_default_str();
  vv->add_option("--seed", vv_opt.seed)->capture_default_str();

  // rmse
  auto* rm = app.add_subcommand("rmse", "RMSE over trajectory CSVs");
  std::string rm_dir;
  std::string rm_prefix = "traj_";
  std::string rm_ref;
  std::string rm_model = "ar1";
  std::string rm_bounds;
  double rm_penalty = kDefaultPenalty;
  std::string rm_grid = "iteration:50";
  rm->add_option("--traj-dir", rm_dir)->required()->check(CLI::ExistingDirectory);
  rm->add_option("--prefix", rm_prefix, "Only files starting with this")->capture_default_str();
  rm->add_option("--theta-ref", rm_ref)->required();
  rm->add_option("--model", rm_model, "Names the parameters for --bounds")->capture_default_str();
  rm->add_option("--bounds", rm_bounds, "e.g. phi:0.6:1.3");
  rm->add_option("--penalty", rm_penalty)->capture_default_str();
  rm->add_option("--grid", rm_grid, "iteration:<points> or seconds:<points>")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      auto model = make_model(sim_model, {sim_trend, sim_horizon + 1});
      auto s = model->simulate(model->make_parameter(parse_real_list(sim_theta)), sim_horizon, RngStream(sim_seed));
      if (!sim_latent) s.x.reset();
      if (sim_out.empty()) {
        write_series_csv(s, std::cout);
      } else {
        write_series_csv(s, fs::path(sim_out));
      }
    } else if (*kll) {
      const auto y = kll_data.series();
      const auto model = kll_data.build(y);
      std::cout << real(kalman_loglik(*model, model->make_parameter(parse_real_list(kll_theta)), y)) << '\n';
    } else if (*kmle) {
      const auto y = kmle_data.series();
      const auto model = kmle_data.build(y);
      const auto theta0 = model->make_parameter(parse_real_list(kmle_theta0));
      KalmanMleOptions options;
      if (!kmle_free.empty()) {
        options.free.assign(theta0.size(), false);
        for (const auto& name : kmle_free) options.free[theta0.index_of(name)] = true;
      }
      const auto fit = kalman_mle(*model, theta0, y, options);
      print_parameter(fit.theta);
      std::cout << "loglik = " << real(fit.loglik) << "\niterations = " << fit.iterations << '\n';
    } else if (*sll) {
      const auto y = sll_data.series();
      const auto model = sll_data.build(y);
      const auto run = smc_run(*model, model->make_parameter(parse_real_list(sll_theta)), y,
                               {sll_n, sll_r2, proposal_from(sll_proposal)}, RngStream(sll_seed));
      std::cout << "# loglik = " << real(run.loglik.value) << "\nt,ess,resampled\n";
      for (std::size_t t = 0; t < run.steps.size(); ++t) {
        std::cout << t << ',' << real(run.steps[t].ess) << ',' << (run.steps[t].resampled ? 1 : 0) << '\n';
      }
    } else if (*curve) {
      const auto y = curve_data.series();
      const auto model = curve_data.build(y);
      const auto theta0 = model->make_parameter(parse_real_list(curve_theta0));
      const auto grid = parse_grid(curve_grid, theta0);
      const auto run = smc_run(*model, theta0, y, {curve_n, 1.0, std::nullopt}, RngStream(curve_seed));
      const auto points = smoothed_loglik_curve(*model, run.cloud, theta0, grid);
      const std::size_t j = theta0.index_of(curve_grid.substr(0, curve_grid.find(':')));
      std::cout << "theta,loglik_hat,a_ess\n";
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::cout << real(grid[g][j]) << ',' << real(points[g].loglik) << ',' << real(points[g].a_ess) << '\n';
      }
    } else if (*est) {
      const auto y = est_data.series();
      const auto model = est_data.build(y);
      run.algorithm = parse_algorithm(est_algo);
      run.theta0 = model->make_parameter(parse_real_list(est_theta0));
      run.clock = parse_clock(est_clock);
      run.proposal = proposal_from(est_proposal);
      if (!est_free.empty()) {
        run.free.assign(run.theta0.size(), false);
        for (const auto& name : est_free) run.free[run.theta0.index_of(name)] = true;
      }
      const auto traj = run_optimizer(*model, y, run);
      if (est_out.empty()) {
        write_trajectory_csv(traj, std::cout);
      } else {
        std::ofstream out(est_out);
        if (!out) throw InputError("cannot write " + est_out);
        write_trajectory_csv(traj, out);
      }
      if (traj.failed) std::cerr << "run failed: " << traj.failure_reason << '\n';
    } else if (*tune) {
      const auto y = tune_data.series();
      const auto model = tune_data.build(y);
      if (tune_mode == "offline") {
        if (tune_lower.empty() || tune_upper.empty()) throw InputError("offline tuning needs --lower and --upper");
        tune_off.particles = tune_n;
        tune_off.seed = tune_seed;
        const auto r = tune_r_offline(*model, {parse_real_list(tune_lower), parse_real_list(tune_upper)}, y, tune_off);
        std::cout << "r = " << real(r.r) << "\nsamples = " << r.ratios.size() << "\nskipped = " << r.skipped << '\n';
      } else {
        if (tune_theta0.empty()) throw InputError("online tuning needs --theta0");
        tune_on.particles = tune_n;
        tune_on.seed = tune_seed;
        const auto r = tune_r1_online(*model, model->make_parameter(parse_real_list(tune_theta0)),
                                      parse_real_list(tune_distances), y, tune_on);
        std::cout << "# r1 = " << real(r.r1) << "\ndistance,median_ratio,retained\n";
        for (std::size_t k = 0; k < r.distances.size(); ++k) {
          std::cout << real(r.distances[k]) << ',' << real(r.medians[k]) << ',' << (r.retained[k] ? 1 : 0) << '\n';
        }
      }
    } else if (*cmp) {
      if (!cmp_verify.empty()) {
        const auto bad = verify_manifest_checksums(cmp_verify);
        for (const auto& name : bad) std::cout << "mismatch " << name << '\n';
        return bad.empty() ? 0 : 1;
      }
      if (cmp_config.empty()) throw InputError("compare needs --config or --verify");
      const auto result = run_experiment(load_experiment_config(cmp_config));
      std::cout << "algorithm,final_rmse_mean,failures,renewals,smc_runs\n";
      for (const auto& a : result.algorithms) {
        std::cout << to_string(a.algorithm) << ',' << real(a.rmse.final_mean()) << ',' << a.failures << ','
                  << a.renewals << ',' << a.smc_runs << '\n';
      }
      std::cerr << "manifest: " << result.manifest.string() << '\n';
    } else if (*vc) {
      auto model = make_model("ar1");
      const auto from = parse_real_list(vc_theta);
      const auto to = parse_real_list(vc_to);
      const auto y = model->simulate(model->make_parameter(from), vc_horizon, RngStream(vc_seed).split(1));
      std::vector<Parameter> path;
      for (std::size_t t = 0; t < vc_horizon; ++t) {
        std::vector<double> v(from.size());
        const double w = vc_alternate ? static_cast<double>(t % 2)
                                      : static_cast<double>(t) / static_cast<double>(std::max<std::size_t>(1, vc_horizon - 1));
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = from[j] + w * (to[j] - from[j]);
        path.push_back(model->make_parameter(v));
      }
      ConsistencyOptions options;
      options.particles = vc_n;
      options.replications = vc_reps;
      options.retarget = !vc_plain;
      options.seed = vc_seed;
      const auto r = consistency_check(*model, path, y, options);
      std::cout << "particles,rms_error,slope\n";
      for (std::size_t k = 0; k < r.particles.size(); ++k) {
        std::cout << r.particles[k] << ',' << real(r.rms_error[k]) << ',' << real(r.slope) << '\n';
      }
    } else if (*vv) {
      auto model = make_model("ar1");
      const auto theta = model->make_parameter(parse_real_list(vv_theta));
      std::cout << "proposal,quadrature,empirical,relative_error\n";
      for (auto kind : {ProposalKind::bootstrap, ProposalKind::optimal}) {
        vv_opt.proposal = kind;
        const auto r = variance_t0_check(*model, theta, vv_y0, [](double x) { return x; }, vv_opt);
        std::cout << to_string(kind) << ',' << real(r.quadrature) << ',' << real(r.empirical) << ','
                  << real(r.relative_error) << '\n';
      }
    } else if (*rm) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(rm_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".csv" && name.rfind(rm_prefix, 0) == 0) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw InputError("no trajectory files match in " + rm_dir);
      std::vector<Trajectory> trajs;
      for (const auto& f : files) {
        std::ifstream in(f);
        trajs.push_back(read_trajectory_csv(in));
      }
      const auto colon = rm_grid.find(':');
      const AlignBy by = rm_grid.substr(0, colon) == "seconds" ? AlignBy::seconds : AlignBy::iteration;
      const auto points = static_cast<std::size_t>(std::stoul(rm_grid.substr(colon + 1)));
      double end = 0.0;
      for (const auto& t : trajs) {
        end = std::max(end, by == AlignBy::seconds ? t.final().seconds : static_cast<double>(t.final().iteration));
      }
      const auto grid = uniform_grid(end, points);
      std::vector<std::vector<TrajectoryRecord>> aligned;
      for (const auto& t : trajs) aligned.push_back(align_on_grid(t, grid, by));
      const auto model = make_model(rm_model);
      const auto report =
          rmse(aligned, grid, parse_real_list(rm_ref), bounds_from(rm_bounds, *model), rm_penalty, trajs[0].parameter_names);
      std::cout << (by == AlignBy::seconds ? "t_wall" : "iter");
      for (const auto& n : report.parameter_names) std::cout << ',' << n;
      std::cout << ",penalised\n";
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::cout << real(grid[g]);
        for (double v : report.rmse[g]) std::cout << ',' << real(v);
        std::cout << ',' << report.penalised[g] << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
