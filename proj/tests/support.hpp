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

// Shared helpers for the test binaries: random models and states.

#pragma once

#include <random>
#include <string>

#include "ctoqw/ctoqw.hpp"

namespace testing_support {

using ctoqw::Complex;
using ctoqw::Index;
using ctoqw::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = scale * Complex(n(rng), n(rng));
  }
  return m;
}

inline Matrix random_hermitian(std::mt19937_64& rng, Index d, double scale = 1.0) {
  const Matrix a = random_matrix(rng, d, d, scale);
  return 0.5 * (a + a.adjoint());
}

inline Matrix random_density(std::mt19937_64& rng, Index d) {
  const Matrix a = random_matrix(rng, d, d);
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

struct RandomModelOptions {
  Index max_vertices = 6;
  Index max_dim = 3;
  double edge_probability = 0.5;
  bool escapes = false;
  bool scalar = false;
  bool ring = true;  ///< always include i -> i+1 so the graph is strongly connected
};

/// A random valid walk: random Hamiltonians and jump operators, G derived.
inline ctoqw::WalkModel random_model(std::mt19937_64& rng, const RandomModelOptions& o = {}) {
  std::uniform_int_distribution<Index> nv(2, o.max_vertices);
  std::uniform_int_distribution<Index> dd(1, o.max_dim);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ctoqw::RawModel raw;
  const Index n = nv(rng);
  for (Index i = 0; i < n; ++i) raw.vertices.push_back({std::to_string(i), o.scalar ? 1 : dd(rng)});
  auto dim = [&](Index i) { return raw.vertices[static_cast<std::size_t>(i)].dim; };
  for (Index i = 0; i < n; ++i) {
    raw.hamiltonians[std::to_string(i)] = random_hermitian(rng, dim(i), 0.7);
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool forced = o.ring && j == (i + 1) % n;
      if (!forced && u(rng) > o.edge_probability) continue;
      raw.jumps.push_back({std::to_string(i), std::to_string(j), random_matrix(rng, dim(j), dim(i), 0.6)});
    }
    if (o.escapes && u(rng) < 0.5) {
      raw.escapes.push_back({std::to_string(i), random_matrix(rng, 1, dim(i), 0.4)});
    }
  }
  return ctoqw::build_walk(raw);
}

inline ctoqw::BlockState random_block_state(std::mt19937_64& rng, const ctoqw::WalkModel& m) {
  ctoqw::BlockState s = ctoqw::BlockState::zero(m);
  double total = 0.0;
  for (Index i = 0; i < m.num_vertices(); ++i) {
    const Matrix a = random_matrix(rng, m.dim(i), m.dim(i));
    s.blocks[static_cast<std::size_t>(i)] = a * a.adjoint();
    total += s.blocks[static_cast<std::size_t>(i)].trace().real();
  }
  for (auto& b : s.blocks) b /= total;
  return s;
}

}  // namespace testing_support
