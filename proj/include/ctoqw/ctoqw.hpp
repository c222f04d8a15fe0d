// Copyright 2026 The ctoqw Authors
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


#pragma once

#include "ctoqw/errors.hpp"
#include "ctoqw/linalg.hpp"
#include "ctoqw/model.hpp"
#include "ctoqw/model_io.hpp"
#include "ctoqw/fixtures.hpp"
#include "ctoqw/quadrature.hpp"
#include "ctoqw/semigroup.hpp"
#include "ctoqw/dwell.hpp"
#include "ctoqw/rng.hpp"
#include "ctoqw/stats.hpp"
#include "ctoqw/trajectory.hpp"
#include "ctoqw/superop.hpp"
#include "ctoqw/passage.hpp"
#include "ctoqw/classify.hpp"

namespace ctoqw {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ctoqw
