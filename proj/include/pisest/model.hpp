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

#ifndef PISEST_MODEL_HPP
#define PISEST_MODEL_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pisest/parameter.hpp"
#include "pisest/rng.hpp"
#include "pisest/series.hpp"

/**
 * \file
 * \brief Univariate Markov state-space models with fixed-dimension sufficient statistics.
 *
 * A model exposes three families of operations:
 *  - simulation of a (latent, observation) path;
 *  - particle propagation, i.e. drawing x_t from a proposal and returning the
 *    log incremental weight log(g f / q);
 *  - evaluation of the complete-data log density log p(x_{0:t}, y_{0:t}) and
 *    its parameter gradient from a per-path summary vector (the sufficient
 *    statistics), at any parameter value.
 *
 * The last family is what lets a single particle cloud be re-weighted to a new
 * parameter value without touching the latent paths.
 */

namespace pisest {

enum class ModelKind { ar1, ar1_trend, sv, sv_trend, par1 };

enum class ProposalKind { bootstrap, optimal };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(ProposalKind kind) noexcept;
ModelKind parse_model_kind(std::string_view id);
ProposalKind parse_proposal_kind(std::string_view id);

struct ModelOptions {
  /// Trend models: the deterministic trend acts on observations with t < trend_horizon.
  std::size_t trend_horizon = 256;
  /// Poisson AR model: the longest series the model will be asked to filter.
  std::size_t max_length = 0;
};

/// Non-owning view of an N x d row-major matrix of sufficient statistics.
struct StatsView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t dim = 0;

  [[nodiscard]] std::span<const double> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

/// Owning N x d row-major matrix of per-particle sufficient statistics.
class StatsMatrix {
 public:
  StatsMatrix() = default;
  StatsMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }
  [[nodiscard]] StatsView view() const noexcept { return {data_, rows_, dim_}; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

  /// Replaces row i with row ancestors[i] of `source`.
  void gather_from(const StatsMatrix& source, std::span<const std::size_t> ancestors);

  friend bool operator==(const StatsMatrix&, const StatsMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Sufficient statistics of one path x_{0:t}. Entry 0 always holds t.
struct SufficientStats {
  std::vector<double> values;

  [[nodiscard]] std::size_t time() const noexcept { return static_cast<std::size_t>(values.at(0)); }
  [[nodiscard]] StatsView view() const noexcept { return {values, 1, values.size()}; }
  friend bool operator==(const SufficientStats&, const SufficientStats&) = default;
};

struct Proposal {
  double x = 0.0;
  double log_u = 0.0;
};

class Model {
 public:
  virtual ~Model() = default;

  [[nodiscard]] virtual ModelKind kind() const noexcept = 0;
  [[nodiscard]] std::string_view id() const noexcept { return to_string(kind()); }
  [[nodiscard]] virtual std::vector<std::string> parameter_names() const = 0;
  [[nodiscard]] std::size_t parameter_dim() const { return parameter_names().size(); }
  [[nodiscard]] virtual std::size_t stat_dim() const noexcept = 0;
  /// Trend models: number of leading observations carrying the trend. Zero otherwise.
  [[nodiscard]] virtual std::size_t trend_horizon() const noexcept { return 0; }

  /// Reason the parameter is invalid, or nothing when it is valid.
  [[nodiscard]] virtual std::optional<std::string> check(std::span<const double> theta) const = 0;
  [[nodiscard]] bool is_valid(std::span<const double> theta) const { return !check(theta).has_value(); }
  /// Throws InvalidParameter when the parameter is outside the validity domain.
  void validate(const Parameter& theta) const;
  /// Builds a named parameter for this model. Throws InputError on a dimension mismatch.
  [[nodiscard]] Parameter make_parameter(std::vector<double> values) const;

  [[nodiscard]] virtual bool supports(ProposalKind kind) const noexcept { return kind == ProposalKind::bootstrap; }
  [[nodiscard]] virtual ProposalKind default_proposal() const noexcept { return ProposalKind::bootstrap; }

  /// Checks that a data set is admissible (length, count data). Throws InputError.
  virtual void validate_series(const Series& series) const;

  /// Simulates x_{0:T}, y_{0:T} with x_0 drawn from the stationary law.
  [[nodiscard]] virtual Series simulate(const Parameter& theta, std::size_t horizon, RngStream rng) const = 0;

  /// Draws x_t for every particle and writes log incremental weights. Particle i
  /// uses the substream `step.split(stream_tag::kParticles).split(i)`. For t = 0
  /// `x_prev` is ignored.
  virtual void propagate(const Parameter& theta, ProposalKind kind, std::size_t t, double y,
                         std::span<const double> x_prev, std::span<double> x_new, std::span<double> log_u,
                         const RngStream& step) const = 0;

  /// Single-particle proposal draw with an explicit stream.
  [[nodiscard]] virtual Proposal propose(const Parameter& theta, ProposalKind kind, std::size_t t, double x_prev,
                                         double y, RngStream& rng) const = 0;

  /// Statistics of the length-one path (x_0, y_0).
  virtual void init_stats(std::span<double> stats, double x0, double y0) const = 0;
  /// Folds the transition x_prev -> x_new and observation y_new into the statistics.
  virtual void update_stats(std::span<double> stats, double x_prev, double x_new, double y_new) const = 0;

  /// log p(x_{0:t}, y_{0:t}) for every row of `stats`.
  virtual void log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const = 0;
  /// Gradient rows (N x p, row-major) of the complete-data log density.
  virtual void grad_log_joint(const Parameter& theta, StatsView stats, std::span<double> out) const = 0;

  [[nodiscard]] double log_joint(const Parameter& theta, const SufficientStats& stats) const;
  [[nodiscard]] std::vector<double> grad_log_joint(const Parameter& theta, const SufficientStats& stats) const;
  [[nodiscard]] SufficientStats initial_stats(double x0, double y0) const;
  [[nodiscard]] SufficientStats update_stats(const SufficientStats& stats, double x_prev, double x_new,
                                             double y_new) const;
  /// Folds a whole path (x_{0:t}, y_{0:t}) into statistics.
  [[nodiscard]] SufficientStats build_stats(std::span<const double> x, std::span<const double> y) const;
};

std::unique_ptr<Model> make_model(ModelKind kind, const ModelOptions& options = {});
std::unique_ptr<Model> make_model(std::string_view id, const ModelOptions& options = {});

/// Log density of N(x; mean, variance).
double log_normal_density(double x, double mean, double variance) noexcept;

}  // namespace pisest

#endif  // PISEST_MODEL_HPP
