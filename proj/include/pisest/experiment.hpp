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

#ifndef PISEST_EXPERIMENT_HPP
#define PISEST_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pisest/diagnostics.hpp"
#include "pisest/model.hpp"
#include "pisest/optimizers.hpp"

/**
 * \file
 * \brief Multi-algorithm comparison runs driven by a key-value config file.
 *
 * Config syntax: one `key = value` per line, `#` starts a comment. Keys:
 *
 *   model, trend_horizon        model id and trend horizon
 *   data                        `simulate` or a CSV path
 *   theta_true, horizon         simulation parameter and final time index T
 *   data_seed                   seed for simulated data
 *   data_per_replication        `true` simulates a fresh series per replication
 *   replications, seed          S and the master seed
 *   algorithms                  comma list of algorithm ids
 *   reference                   `kalman`, `fisher-sga` or `fixed:v1,v2,...`
 *   reference_particles, reference_iterations   long fisher-sga reference run
 *   bounds                      failure bounds, e.g. `phi:0.6:1.3;sigma_y:0:5`
 *   penalty                     squared-error penalty for failed replications
 *   grid                        `seconds:<points>` or `iteration:<points>`
 *   output_dir                  where CSVs and the manifest go
 *
 * plus the run settings theta0, particles, r, r1, r2, k, c1, c2, a, alpha, beta,
 * budget_seconds, max_iterations, clock, work_rate, online_multiplier,
 * output_every, free, proposal. A run setting prefixed by an algorithm id
 * (`adaptga.r = 0.2`) applies to that algorithm only.
 */

namespace pisest {

struct ExperimentConfig {
  /// Canonical key -> value map; unspecified keys take their defaults.
  std::map<std::string, std::string> values;

  [[nodiscard]] std::string get(const std::string& key) const;
  [[nodiscard]] bool has(const std::string& key) const { return values.count(key) != 0; }
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The fully resolved config in file syntax (defaults made explicit).
std::string format_experiment_config(const ExperimentConfig& cfg);

/// The model the config describes.
std::unique_ptr<Model> experiment_model(const ExperimentConfig& cfg, std::size_t series_length);

/// The run settings for one algorithm, with its overrides applied.
RunConfig experiment_run_config(const ExperimentConfig& cfg, Algorithm algorithm, const Model& model);

FailureBounds parse_failure_bounds(const std::string& text, const Model& model);

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::fisher_sga;
  RmseReport rmse;
  std::size_t failures = 0;
  std::size_t renewals = 0;
  std::size_t smc_runs = 0;
  std::vector<Trajectory> trajectories;
};

struct ExperimentResult {
  std::vector<AlgorithmSummary> algorithms;
  /// Reference parameter used for each replication.
  std::vector<std::vector<double>> reference;
  /// Output file name -> FNV-1a 64 checksum.
  std::map<std::string, std::uint64_t> checksums;
  std::filesystem::path manifest;
};

/// Runs every algorithm on identical data for each replication and writes
/// trajectory, RMSE and summary CSVs plus `manifest.txt` to output_dir. The
/// manifest is itself a valid config that reproduces the run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t file_checksum(const std::filesystem::path& path);

/// Recomputes the checksums listed in a manifest; returns the files that differ.
std::vector<std::string> verify_manifest_checksums(const std::filesystem::path& manifest);

}  // namespace pisest

#endif  // PISEST_EXPERIMENT_HPP
