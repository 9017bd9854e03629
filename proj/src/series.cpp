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

#include "pisest/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "pisest/error.hpp"
#include "pisest/parameter.hpp"

namespace pisest {

Series Series::prefix(std::size_t count) const {
  Series out;
  count = std::min(count, y.size());
  out.y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(count));
  if (x) {
    out.x = std::vector<double>(x->begin(), x->begin() + static_cast<std::ptrdiff_t>(count));
  }
  return out;
}

Series read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("series CSV is empty");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  bool with_x = false;
  if (line == "t,y,x") {
    with_x = true;
  } else if (line != "t,y") {
    throw InputError("series CSV header must be 't,y' or 't,y,x', got '" + line + "'");
  }
  Series series;
  std::vector<double> xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = parse_real_list(line);
    if (fields.size() != (with_x ? 3U : 2U)) {
      throw InputError("series CSV row " + std::to_string(row) + " has the wrong number of fields");
    }
    if (fields[0] != static_cast<double>(row)) {
      throw InputError("series CSV rows must have t = 0, 1, 2, ...; row " + std::to_string(row) + " has t = " +
                       std::to_string(fields[0]));
    }
    series.y.push_back(fields[1]);
    if (with_x) {
      xs.push_back(fields[2]);
    }
    ++row;
  }
  if (series.y.empty()) {
    throw InputError("series CSV has no observations");
  }
  if (with_x) {
    series.x = std::move(xs);
  }
  return series;
}

Series read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open series file '" + path.string() + "'");
  }
  return read_series_csv(in);
}

void write_series_csv(const Series& series, std::ostream& out) {
  out << (series.x ? "t,y,x\n" : "t,y\n");
  char buffer[64];
  for (std::size_t t = 0; t < series.y.size(); ++t) {
    std::snprintf(buffer, sizeof(buffer), "%zu,%.17g", t, series.y[t]);
    out << buffer;
    if (series.x) {
      std::snprintf(buffer, sizeof(buffer), ",%.17g", (*series.x)[t]);
      out << buffer;
    }
    out << '\n';
  }
}

void write_series_csv(const Series& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot write series file '" + path.string() + "'");
  }
  write_series_csv(series, out);
}

}  // namespace pisest
