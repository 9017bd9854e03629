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

#ifndef PISEST_SRC_MODELS_MODELS_HPP
#define PISEST_SRC_MODELS_MODELS_HPP

#include <memory>

#include "pisest/model.hpp"

namespace pisest::models {

std::unique_ptr<Model> make_linear_gaussian(bool with_trend, std::size_t trend_horizon);
std::unique_ptr<Model> make_stochastic_volatility(bool with_trend, std::size_t trend_horizon);
std::unique_ptr<Model> make_poisson_ar(std::size_t max_length);

}  // namespace pisest::models

#endif  // PISEST_SRC_MODELS_MODELS_HPP
