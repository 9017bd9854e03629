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

#include "pisest/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "pisest/error.hpp"
#include "pisest/kalman.hpp"

namespace pisest {

namespace {

constexpr std::string_view kVersion = "1.0.0";
constexpr std::string_view kChecksumPrefix = "checksum.";

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"model", "ar1"},
      {"trend_horizon", "256"},
      {"data", "simulate"},
      {"horizon", "1000"},
      {"data_seed", "1"},
      {"data_per_replication", "false"},
      {"replications", "10"},
      {"seed", "1"},
      {"algorithms", "fisher-sga"},
      {"reference", "kalman"},
      {"reference_particles", "2000"},
      {"reference_iterations", "200"},
      {"bounds", ""},
      {"penalty", "0.1225"},
      {"grid", "seconds:50"},
      {"output_dir", "experiment_out"},
      {"particles", "500"},
      {"r", "0.5"},
      {"r1", "0.5"},
      {"r2", "1"},
      {"k", "1"},
      {"c1", "0.0001"},
      {"c2", "0.05"},
      {"a", "100"},
      {"alpha", "1"},
      {"beta", "0.16666666666666666"},
      {"budget_seconds", "0"},
      {"max_iterations", "0"},
      {"clock", "wall"},
      {"work_rate", "20000000"},
      {"online_multiplier", "0"},
      {"output_every", "0"},
      {"free", ""},
      {"proposal", "default"},
  };
  return d;
}

const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys = {"theta0",         "particles",      "r",         "r1",
                                             "r2",             "k",              "c1",        "c2",
                                             "a",              "alpha",          "beta",      "budget_seconds",
                                             "max_iterations", "clock",          "work_rate", "online_multiplier",
                                             "output_every",   "free",           "proposal"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

double to_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::logic_error&) {
    throw InputError("config key '" + key + "' expects a number, got '" + text + "'");
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::logic_error&) {
    throw InputError("config key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") {
    return true;
  }
  if (text == "false" || text == "0" || text == "no") {
    return false;
  }
  throw InputError("config key '" + key + "' expects true or false, got '" + text + "'");
}

bool is_known_key(const std::string& key) {
  if (defaults().count(key) != 0 || key == "theta0" || key == "theta_true") {
    return true;
  }
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    return false;
  }
  parse_algorithm(key.substr(0, dot));
  return run_keys().count(key.substr(dot + 1)) != 0;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void write(const std::string& name, const std::string& content, std::map<std::string, std::uint64_t>& sums) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) {
      throw InputError("cannot write " + (dir_ / name).string());
    }
    out << content;
    sums[name] = fnv1a64(content);
  }

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

std::vector<double> reference_for(const ExperimentConfig& cfg, const Model& model, const Series& data,
                                  std::size_t replication) {
  const std::string ref = cfg.get("reference");
  if (ref.rfind("fixed:", 0) == 0) {
    auto values = parse_real_list(ref.substr(6));
    static_cast<void>(model.make_parameter(values));
    return values;
  }
  const Parameter start =
      model.make_parameter(parse_real_list(cfg.has("theta_true") ? cfg.get("theta_true") : cfg.get("theta0")));
  if (ref == "kalman") {
    // With a free mask the reference maximises over the free coordinates only.
    KalmanMleOptions options;
    const auto free = split(cfg.get("free"), ',');
    if (!free.empty()) {
      options.free.assign(start.size(), false);
      for (const auto& name : free) {
        options.free[start.index_of(name)] = true;
      }
    }
    return kalman_mle(model, start, data, options).theta.values;
  }
  if (ref == "fisher-sga") {
    RunConfig run = experiment_run_config(cfg, Algorithm::fisher_sga, model);
    run.theta0 = start;
    run.particles = to_unsigned("reference_particles", cfg.get("reference_particles"));
    run.max_iterations = to_unsigned("reference_iterations", cfg.get("reference_iterations"));
    run.budget_seconds = 0.0;
    run.clock = ClockKind::work;
    run.seed = RngStream(to_unsigned("seed", cfg.get("seed"))).split(stream_tag::kOuter).split(replication).key();
    return fisher_sga(model, data, run).final().theta;
  }
  throw InputError("reference must be kalman, fisher-sga or fixed:<values>, got '" + ref + "'");
}

}  // namespace

std::string ExperimentConfig::get(const std::string& key) const {
  if (auto it = values.find(key); it != values.end()) {
    return it->second;
  }
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    return get(key.substr(dot + 1));
  }
  if (auto it = defaults().find(key); it != defaults().end()) {
    return it->second;
  }
  throw InputError("config key '" + key + "' is required");
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.rfind(kChecksumPrefix, 0) == 0) {
      continue;
    }
    try {
      if (!is_known_key(key)) {
        throw InputError("");
      }
    } catch (const InputError&) {
      throw InputError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    cfg.values[key] = value;
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open config file " + path.string());
  }
  return parse_experiment_config(in);
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> resolved = defaults();
  for (const auto& [k, v] : cfg.values) {
    resolved[k] = v;
  }
  std::string out;
  for (const auto& [k, v] : resolved) {
    out += k + " = " + v + "\n";
  }
  return out;
}

std::unique_ptr<Model> experiment_model(const ExperimentConfig& cfg, std::size_t series_length) {
  ModelOptions options;
  options.trend_horizon = to_unsigned("trend_horizon", cfg.get("trend_horizon"));
  options.max_length = series_length;
  return make_model(cfg.get("model"), options);
}

RunConfig experiment_run_config(const ExperimentConfig& cfg, Algorithm algorithm, const Model& model) {
  const std::string prefix = std::string(to_string(algorithm)) + ".";
  auto get = [&](const std::string& key) { return cfg.get(prefix + key); };
  RunConfig run;
  run.algorithm = algorithm;
  run.theta0 = model.make_parameter(parse_real_list(get("theta0")));
  run.particles = to_unsigned("particles", get("particles"));
  run.r = to_real("r", get("r"));
  run.r1 = to_real("r1", get("r1"));
  run.r2 = to_real("r2", get("r2"));
  run.window = to_unsigned("k", get("k"));
  run.schedule.c1 = to_real("c1", get("c1"));
  run.schedule.c2 = to_real("c2", get("c2"));
  run.schedule.a = to_real("a", get("a"));
  run.schedule.alpha = to_real("alpha", get("alpha"));
  run.schedule.beta = to_real("beta", get("beta"));
  run.budget_seconds = to_real("budget_seconds", get("budget_seconds"));
  run.max_iterations = to_unsigned("max_iterations", get("max_iterations"));
  run.clock = parse_clock(get("clock"));
  run.work_rate = to_real("work_rate", get("work_rate"));
  run.online_multiplier = to_real("online_multiplier", get("online_multiplier"));
  run.output_every = to_unsigned("output_every", get("output_every"));
  const auto free = split(get("free"), ',');
  if (!free.empty()) {
    run.free.assign(run.theta0.size(), false);
    for (const auto& name : free) {
      run.free[run.theta0.index_of(name)] = true;
    }
  }
  const std::string proposal = get("proposal");
  if (proposal != "default") {
    run.proposal = parse_proposal_kind(proposal);
  }
  run.validate(model);
  return run;
}

FailureBounds parse_failure_bounds(const std::string& text, const Model& model) {
  const auto names = model.parameter_names();
  FailureBounds bounds(names.size());
  for (const auto& item : split(text, ';')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) {
      throw InputError("failure bound '" + item + "' must look like name:lower:upper");
    }
    const auto it = std::find(names.begin(), names.end(), parts[0]);
    if (it == names.end()) {
      throw InputError("failure bound names unknown parameter '" + parts[0] + "'");
    }
    bounds[static_cast<std::size_t>(it - names.begin())] =
        std::make_pair(to_real("bounds", parts[1]), to_real("bounds", parts[2]));
  }
  return bounds;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(content);
}

std::vector<std::string> verify_manifest_checksums(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw InputError("cannot open manifest " + manifest.string());
  }
  const auto dir = manifest.parent_path();
  std::vector<std::string> mismatched;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(kChecksumPrefix, 0) != 0) {
      continue;
    }
    const auto eq = line.find('=');
    const std::string name = trim(std::string_view(line).substr(kChecksumPrefix.size(), eq - kChecksumPrefix.size()));
    const std::string expected = trim(std::string_view(line).substr(eq + 1));
    if (!std::filesystem::exists(dir / name) || hex64(file_checksum(dir / name)) != expected) {
      mismatched.push_back(name);
    }
  }
  return mismatched;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::size_t replications = to_unsigned("replications", cfg.get("replications"));
  if (replications == 0) {
    throw InputError("replications must be at least 1");
  }
  const std::uint64_t seed = to_unsigned("seed", cfg.get("seed"));
  const bool per_replication = to_bool("data_per_replication", cfg.get("data_per_replication"));
  const std::string data_source = cfg.get("data");

  // Data sets: one shared series, or one per replication.
  std::vector<Series> datasets;
  std::unique_ptr<Model> model;
  if (data_source == "simulate") {
    const std::size_t horizon = to_unsigned("horizon", cfg.get("horizon"));
    model = experiment_model(cfg, horizon + 1);
    const Parameter truth = model->make_parameter(parse_real_list(cfg.get("theta_true")));
    const RngStream data_root = RngStream(to_unsigned("data_seed", cfg.get("data_seed"))).split(stream_tag::kData);
    for (std::size_t s = 0; s < (per_replication ? replications : 1); ++s) {
      datasets.push_back(model->simulate(truth, horizon, data_root.split(s)));
    }
  } else {
    if (per_replication) {
      throw InputError("data_per_replication needs simulated data");
    }
    datasets.push_back(read_series_csv(data_source));
    model = experiment_model(cfg, datasets.front().size());
  }
  for (const auto& d : datasets) {
    model->validate_series(d);
  }
  auto data_for = [&](std::size_t s) -> const Series& { return datasets[per_replication ? s : 0]; };

  ExperimentResult result;
  OutputWriter writer(cfg.get("output_dir"));
  for (std::size_t s = 0; s < datasets.size(); ++s) {
    std::ostringstream csv;
    write_series_csv(datasets[s], csv);
    writer.write(per_replication ? "data_rep" + std::to_string(s) + ".csv" : "data.csv", csv.str(), result.checksums);
  }
  std::vector<std::vector<double>> shared_reference;
  for (std::size_t s = 0; s < datasets.size(); ++s) {
    shared_reference.push_back(reference_for(cfg, *model, datasets[s], s));
  }
  for (std::size_t s = 0; s < replications; ++s) {
    result.reference.push_back(shared_reference[per_replication ? s : 0]);
  }

  const FailureBounds bounds = parse_failure_bounds(cfg.get("bounds"), *model);
  const double penalty = to_real("penalty", cfg.get("penalty"));
  const auto grid_spec = split(cfg.get("grid"), ':');
  if (grid_spec.size() != 2 || (grid_spec[0] != "seconds" && grid_spec[0] != "iteration")) {
    throw InputError("grid must be seconds:<points> or iteration:<points>");
  }
  const AlignBy align = grid_spec[0] == "seconds" ? AlignBy::seconds : AlignBy::iteration;
  const std::size_t points = to_unsigned("grid", grid_spec[1]);
  const auto names = model->parameter_names();

  std::ostringstream summary;
  summary << "algorithm";
  for (const auto& name : names) {
    summary << ",final_rmse_" << name;
  }
  summary << ",final_rmse_mean,failures,renewals,smc_runs\n";

  for (const auto& id : split(cfg.get("algorithms"), ',')) {
    AlgorithmSummary algo;
    algo.algorithm = parse_algorithm(id);
    const RunConfig base = experiment_run_config(cfg, algo.algorithm, *model);
    for (std::size_t s = 0; s < replications; ++s) {
      RunConfig run = base;
      run.seed = RngStream(seed).split(stream_tag::kReplication).split(s).key();
      Trajectory traj = run_optimizer(*model, data_for(s), run);
      std::ostringstream csv;
      write_trajectory_csv(traj, csv);
      writer.write("traj_" + id + "_rep" + std::to_string(s) + ".csv", csv.str(), result.checksums);
      algo.renewals += traj.renewals;
      algo.smc_runs += traj.smc_runs;
      algo.trajectories.push_back(std::move(traj));
    }
    double end = 0.0;
    if (align == AlignBy::seconds && base.budget_seconds > 0.0) {
      end = base.budget_seconds;
    } else {
      for (const auto& traj : algo.trajectories) {
        end = std::max(end, align == AlignBy::seconds ? traj.final().seconds
                                                      : static_cast<double>(traj.final().iteration));
      }
    }
    const auto grid = uniform_grid(end, points);
    std::vector<std::vector<TrajectoryRecord>> aligned;
    for (const auto& traj : algo.trajectories) {
      aligned.push_back(align_on_grid(traj, grid, align));
    }
    algo.rmse = rmse(aligned, grid, result.reference, bounds, penalty, names);
    algo.failures = failure_count(algo.trajectories, bounds);

    std::ostringstream csv;
    csv << (align == AlignBy::seconds ? "t_wall" : "iter");
    for (const auto& name : names) {
      csv << ',' << name;
    }
    csv << ",mean,penalised\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      csv << format_real(grid[g]);
      double mean = 0.0;
      for (double v : algo.rmse.rmse[g]) {
        csv << ',' << format_real(v);
        mean += v;
      }
      csv << ',' << format_real(mean / static_cast<double>(names.size())) << ',' << algo.rmse.penalised[g] << '\n';
    }
    writer.write("rmse_" + id + ".csv", csv.str(), result.checksums);

    summary << id;
    for (double v : algo.rmse.rmse.back()) {
      summary << ',' << format_real(v);
    }
    summary << ',' << format_real(algo.rmse.final_mean()) << ',' << algo.failures << ',' << algo.renewals << ','
            << algo.smc_runs << '\n';
    result.algorithms.push_back(std::move(algo));
  }
  writer.write("summary.csv", summary.str(), result.checksums);

  std::ostringstream manifest;
  manifest << "# pisest " << kVersion << " experiment manifest\n";
  for (std::size_t s = 0; s < shared_reference.size(); ++s) {
    manifest << "# reference_theta";
    if (per_replication) {
      manifest << ".rep" << s;
    }
    manifest << " = " << format_real_list(shared_reference[s]) << '\n';
  }
  manifest << format_experiment_config(cfg);
  for (const auto& [name, sum] : result.checksums) {
    manifest << kChecksumPrefix << name << " = " << hex64(sum) << '\n';
  }
  result.manifest = writer.dir() / "manifest.txt";
  std::ofstream out(result.manifest);
  out << manifest.str();
  if (!out) {
    throw InputError("cannot write " + result.manifest.string());
  }
  return result;
}

}  // namespace pisest
