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

#ifndef PISEST_ERROR_HPP
#define PISEST_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace pisest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter vector lies outside the model's validity domain.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Every importance weight is zero (or not a number); the cloud carries no mass.
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: CSV files, config files, command-line values.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An operation was requested that the chosen model does not support.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap. Carries the best iterate reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best)
      : Error(what), best_(std::move(best)) {}

  [[nodiscard]] const std::vector<double>& best() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

}  // namespace pisest

#endif  // PISEST_ERROR_HPP
