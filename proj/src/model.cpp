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

#include "pisest/model.hpp"

#include <cmath>

#include "models/models.hpp"
#include "pisest/error.hpp"

namespace pisest {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::ar1:
      return "ar1";
    case ModelKind::ar1_trend:
      return "ar1-trend";
    case ModelKind::sv:
      return "sv";
    case ModelKind::sv_trend:
      return "sv-trend";
    case ModelKind::par1:
      return "par1";
  }
  return "unknown";
}

std::string_view to_string(ProposalKind kind) noexcept {
  return kind == ProposalKind::optimal ? "optimal" : "bootstrap";
}

ModelKind parse_model_kind(std::string_view id) {
  for (auto kind : {ModelKind::ar1, ModelKind::ar1_trend, ModelKind::sv, ModelKind::sv_trend, ModelKind::par1}) {
    if (to_string(kind) == id) {
      return kind;
    }
  }
  throw InputError("unknown model id '" + std::string(id) + "' (expected ar1, ar1-trend, sv, sv-trend or par1)");
}

ProposalKind parse_proposal_kind(std::string_view id) {
  if (id == "bootstrap") {
    return ProposalKind::bootstrap;
  }
  if (id == "optimal") {
    return ProposalKind::optimal;
  }
  throw InputError("unknown proposal '" + std::string(id) + "' (expected bootstrap or optimal)");
}

void StatsMatrix::gather_from(const StatsMatrix& source, std::span<const std::size_t> ancestors) {
  rows_ = ancestors.size();
  dim_ = source.dim_;
  data_.resize(rows_ * dim_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* from = source.data_.data() + ancestors[i] * dim_;
    std::copy(from, from + dim_, data_.data() + i * dim_);
  }
}

void Model::validate(const Parameter& theta) const {
  if (theta.size() != parameter_dim()) {
    throw InvalidParameter("model " + std::string(id()) + " expects " + std::to_string(parameter_dim()) +
                           " parameters, got " + std::to_string(theta.size()));
  }
  if (auto reason = check(theta.values)) {
    throw InvalidParameter("invalid parameter for model " + std::string(id()) + ": " + *reason);
  }
}

Parameter Model::make_parameter(std::vector<double> values) const {
  auto names = parameter_names();
  if (values.size() != names.size()) {
    throw InputError("model " + std::string(id()) + " expects " + std::to_string(names.size()) +
                     " parameter values, got " + std::to_string(values.size()));
  }
  return Parameter{std::move(values), std::move(names)};
}

void Model::validate_series(const Series& series) const {
  if (series.y.empty()) {
    throw InputError("series has no observations");
  }
  for (double v : series.y) {
    if (!std::isfinite(v)) {
      throw InputError("series contains a non-finite observation");
    }
  }
}

double Model::log_joint(const Parameter& theta, const SufficientStats& stats) const {
  double out = 0.0;
  log_joint(theta, stats.view(), std::span<double>(&out, 1));
  return out;
}

std::vector<double> Model::grad_log_joint(const Parameter& theta, const SufficientStats& stats) const {
  std::vector<double> out(parameter_dim());
  grad_log_joint(theta, stats.view(), out);
  return out;
}

SufficientStats Model::initial_stats(double x0, double y0) const {
  SufficientStats s{std::vector<double>(stat_dim(), 0.0)};
  init_stats(s.values, x0, y0);
  return s;
}

SufficientStats Model::update_stats(const SufficientStats& stats, double x_prev, double x_new, double y_new) const {
  SufficientStats next = stats;
  update_stats(std::span<double>(next.values), x_prev, x_new, y_new);
  return next;
}

SufficientStats Model::build_stats(std::span<const double> x, std::span<const double> y) const {
  if (x.empty() || x.size() != y.size()) {
    throw InputError("build_stats needs matching, non-empty latent and observation paths");
  }
  SufficientStats s = initial_stats(x[0], y[0]);
  for (std::size_t t = 1; t < x.size(); ++t) {
    update_stats(std::span<double>(s.values), x[t - 1], x[t], y[t]);
  }
  return s;
}

std::unique_ptr<Model> make_model(ModelKind kind, const ModelOptions& options) {
  switch (kind) {
    case ModelKind::ar1:
      return models::make_linear_gaussian(false, options.trend_horizon);
    case ModelKind::ar1_trend:
      return models::make_linear_gaussian(true, options.trend_horizon);
    case ModelKind::sv:
      return models::make_stochastic_volatility(false, options.trend_horizon);
    case ModelKind::sv_trend:
      return models::make_stochastic_volatility(true, options.trend_horizon);
    case ModelKind::par1:
      return models::make_poisson_ar(options.max_length);
  }
  throw InputError("unknown model kind");
}

std::unique_ptr<Model> make_model(std::string_view id, const ModelOptions& options) {
  return make_model(parse_model_kind(id), options);
}

double log_normal_density(double x, double mean, double variance) noexcept {
  const double d = x - mean;
  return -0.91893853320467274178 - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

}  // namespace pisest
