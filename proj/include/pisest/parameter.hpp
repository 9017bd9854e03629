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

#ifndef PISEST_PARAMETER_HPP
#define PISEST_PARAMETER_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pisest {

/// A named real parameter vector. Validity is a property of the model, not of
/// the vector, so construction never fails.
struct Parameter {
  std::vector<double> values;
  std::vector<std::string> names;

  Parameter() = default;
  Parameter(std::vector<double> v, std::vector<std::string> n) : values(std::move(v)), names(std::move(n)) {}

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  [[nodiscard]] std::span<const double> view() const noexcept { return values; }

  /// Index of the named coordinate; throws InputError when absent.
  [[nodiscard]] std::size_t index_of(const std::string& name) const;

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Parses "0.5,0.5,0.7" into a vector of doubles. Throws InputError on junk.
std::vector<double> parse_real_list(const std::string& text);

/// Formats values with 17 significant digits, comma separated.
std::string format_real_list(std::span<const double> values);

double sup_norm_distance(std::span<const double> a, std::span<const double> b);

}  // namespace pisest

#endif  // PISEST_PARAMETER_HPP
