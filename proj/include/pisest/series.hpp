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

#ifndef PISEST_SERIES_HPP
#define PISEST_SERIES_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pisest {

/// Observations y_0..y_T, optionally with the latent path that generated them.
struct Series {
  std::vector<double> y;
  std::optional<std::vector<double>> x;

  /// Number of observations, T + 1.
  [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
  /// The final time index T.
  [[nodiscard]] std::size_t horizon() const noexcept { return y.empty() ? 0 : y.size() - 1; }

  /// The first `count` observations (and latent states, when present).
  [[nodiscard]] Series prefix(std::size_t count) const;
};

/// Reads the `t,y[,x]` CSV format. Rows must be in time order starting at 0.
Series read_series_csv(const std::filesystem::path& path);
Series read_series_csv(std::istream& in);

void write_series_csv(const Series& series, std::ostream& out);
void write_series_csv(const Series& series, const std::filesystem::path& path);

}  // namespace pisest

#endif  // PISEST_SERIES_HPP
