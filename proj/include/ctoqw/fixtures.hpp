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

// Built-in reference walks.
//
//   two_site_rotation  two qubit sites swapped by sigma_x, with a rotating
//                      no-jump drift.
//   two_state_flip     classical two-state chain, unit rate.
//   biased_line        classical walk on Z, right 3/4, left 1/4, unit rate;
//                      truncated to [-window, window].
//   qubit_trap         walk on N with a qubit at site 1 whose second level is
//                      always sent back to 0; truncated to [0, window].

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ctoqw/model.hpp"
#include "ctoqw/model_io.hpp"

namespace ctoqw::fixtures {

using io::Json;

inline Json two_site_rotation_json() {
  const Json g = Json::array({Json::array({-0.5, 1.0}), Json::array({-1.0, -0.5})});
  const Json sx = Json::array({Json::array({0.0, 1.0}), Json::array({1.0, 0.0})});
  return {{"vertices", Json::array({{{"id", 1}, {"dim", 2}}, {{"id", 2}, {"dim", 2}}})},
          {"effective", {{"1", g}, {"2", g}}},
          {"jumps", Json::array({{{"from", 1}, {"to", 2}, {"matrix", sx}}, {{"from", 2}, {"to", 1}, {"matrix", sx}}})}};
}

inline Json two_state_flip_json() {
  return {{"vertices", Json::array({{{"id", 0}, {"dim", 1}}, {{"id", 1}, {"dim", 1}}})},
          {"jumps", Json::array({{{"from", 0}, {"to", 1}, {"matrix", 1.0}}, {{"from", 1}, {"to", 0}, {"matrix", 1.0}}})}};
}

inline Json biased_line_json(long long window = 30) {
  return {{"lattice",
           {{"window", window},
            {"symmetric", true},
            {"dim", 1},
            {"right", {{"matrix", std::sqrt(3.0) / 2.0}}},
            {"left", {{"matrix", 0.5}}}}}};
}

inline Json qubit_trap_json(long long window = 30) {
  const double r5 = 1.0 / std::sqrt(5.0);
  const double r8 = 1.0 / (2.0 * std::sqrt(2.0));
  return {{"lattice",
           {{"window", window},
            {"symmetric", false},
            {"dim", 1},
            {"right", {{"matrix", std::sqrt(3.0) / 2.0}, {"from", 2}}},
            {"left", {{"matrix", 0.5}, {"from", 3}}}}},
          {"vertices", Json::array({{{"id", 1}, {"dim", 2}}})},
          {"jumps", Json::array({
                        {{"from", 0}, {"to", 1}, {"matrix", Json::array({Json::array({2 * r5}), Json::array({r5})})}},
                        {{"from", 1}, {"to", 0}, {"matrix", Json::array({Json::array({0.0, 1.0})})}},
                        {{"from", 1}, {"to", 2}, {"matrix", Json::array({Json::array({1.0, 0.0})})}},
                        {{"from", 2}, {"to", 1}, {"matrix", Json::array({Json::array({r8}), Json::array({r8})})}},
                    })}};
}

/// Fixture names accepted by `by_name`.
inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"ex2.6", "ex3.4.1", "ex3.4.2", "ex3.4.3"};
  return n;
}

/// Model document by name; `window` applies to the lattice fixtures.
inline Json by_name(const std::string& name, long long window = 30) {
  if (name == "ex2.6") return two_site_rotation_json();
  if (name == "ex3.4.1") return two_state_flip_json();
  if (name == "ex3.4.2") return biased_line_json(window);
  if (name == "ex3.4.3") return qubit_trap_json(window);
  throw ParseError("unknown fixture '" + name + "'");
}

inline WalkModel two_site_rotation() { return io::parse_model(two_site_rotation_json()); }
inline WalkModel two_state_flip() { return io::parse_model(two_state_flip_json()); }
inline WalkModel biased_line(long long window = 30) { return io::parse_model(biased_line_json(window)); }
inline WalkModel qubit_trap(long long window = 30) { return io::parse_model(qubit_trap_json(window)); }

}  // namespace ctoqw::fixtures
