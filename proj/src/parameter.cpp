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

#include "pisest/parameter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "pisest/error.hpp"

namespace pisest {

std::size_t Parameter::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw InputError("unknown parameter name '" + name + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

bool Parameter::all_finite() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    std::string token = text.substr(pos, end - pos);
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (token.empty()) {
      throw InputError("empty entry in real list '" + text + "'");
    }
    double value = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (*first == '+') {
      ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
      throw InputError("cannot parse '" + token + "' as a real number");
    }
    out.push_back(value);
    pos = end + 1;
  }
  return out;
}

std::string format_real_list(std::span<const double> values) {
  std::string out;
  char buffer[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    std::snprintf(buffer, sizeof(buffer), "%.17g", values[i]);
    out += buffer;
  }
  return out;
}

double sup_norm_distance(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace pisest
