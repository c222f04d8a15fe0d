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


#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "ctoqw/ctoqw.hpp"
#include "support.hpp"

using namespace ctoqw;
using Catch::Approx;

namespace {

BlockState classical_state(const WalkModel& m, std::initializer_list<double> probs) {
  BlockState s = BlockState::zero(m);
  std::size_t k = 0;
  for (double p : probs) s.blocks[k++](0, 0) = p;
  return s;
}

// Independent oracle: the full Lindbladian on the global space of dimension
// D = sum d_i, built from global operators G = sum G_i (x) |i><i| and
// S = R (x) |j><i|, exponentiated as a D^2 x D^2 matrix.
BlockState global_evolve(const WalkModel& m, const BlockState& mu, double t) {
  std::vector<Index> off{0};
  for (Index i = 0; i < m.num_vertices(); ++i) off.push_back(off.back() + m.dim(i));
  const Index d = off.back();
  Matrix g = Matrix::Zero(d, d);
  for (Index i = 0; i < m.num_vertices(); ++i) g.block(off[i], off[i], m.dim(i), m.dim(i)) = m.effective(i);
  const Matrix id = Matrix::Identity(d, d);
  Matrix l = Eigen::kroneckerProduct(id, g).eval() + Eigen::kroneckerProduct(g.conjugate(), id).eval();
  for (const auto& j : m.jumps()) {
    Matrix s = Matrix::Zero(d, d);
    s.block(off[j.to], off[j.from], m.dim(j.to), m.dim(j.from)) = j.op;
    l += Eigen::kroneckerProduct(s.conjugate(), s).eval();
  }
  Matrix rho = Matrix::Zero(d, d);
  for (Index i = 0; i < m.num_vertices(); ++i) {
    rho.block(off[i], off[i], m.dim(i), m.dim(i)) = mu.blocks[static_cast<std::size_t>(i)];
  }
  const Matrix prop = (t * l).exp();
  Vector v = prop * Eigen::Map<const Vector>(rho.data(), d * d);
  const Matrix out = Eigen::Map<const Matrix>(v.data(), d, d);
  BlockState s = BlockState::zero(m);
  for (Index i = 0; i < m.num_vertices(); ++i) {
    s.blocks[static_cast<std::size_t>(i)] = out.block(off[i], off[i], m.dim(i), m.dim(i));
  }
  return s;
}

}  // namespace

TEST_CASE("lindblad_apply on the two-state chain") {
  const WalkModel m = fixtures::two_state_flip();
  const BlockState d = lindblad_apply(m, classical_state(m, {1.0, 0.0}));
  CHECK(d.blocks[0](0, 0).real() == Approx(-1.0));
  CHECK(d.blocks[1](0, 0).real() == Approx(1.0));
  const BlockState z = lindblad_apply(m, classical_state(m, {0.5, 0.5}));
  CHECK(std::abs(z.blocks[0](0, 0)) < 1e-15);
  CHECK(std::abs(z.blocks[1](0, 0)) < 1e-15);
}

TEST_CASE("lindblad_apply preserves trace") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const WalkModel m = testing_support::random_model(rng);
    const BlockState d = lindblad_apply(m, testing_support::random_block_state(rng, m));
    CHECK(std::abs(d.total_trace()) <= 1e-12);
    CHECK(BlockGenerator(m).trace_defect() <= 1e-10);
  }
}

TEST_CASE("evolve matches the two-state closed form") {
  const WalkModel m = fixtures::two_state_flip();
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    const auto p = position_distribution(evolve(m, classical_state(m, {1.0, 0.0}), t));
    CHECK(p(0) == Approx(0.5 * (1.0 + std::exp(-2.0 * t))).epsilon(1e-12));
  }
  const auto p1 = position_distribution(evolve(m, classical_state(m, {1.0, 0.0}), 1.0));
  CHECK(p1(0) == Approx(0.56767).margin(1e-5));
  CHECK(p1(1) == Approx(0.43233).margin(1e-5));
}

TEST_CASE("evolve at t = 0 returns the input and negative time is rejected") {
  std::mt19937_64 rng(2);
  const WalkModel m = testing_support::random_model(rng);
  const BlockState mu = testing_support::random_block_state(rng, m);
  const BlockState same = evolve(m, mu, 0.0);
  for (std::size_t i = 0; i < mu.blocks.size(); ++i) CHECK(same.blocks[i] == mu.blocks[i]);
  CHECK_THROWS_AS(evolve(m, mu, -0.1), PreconditionError);
}

TEST_CASE("evolve agrees with the global Lindbladian oracle") {
  std::mt19937_64 rng(4);
  testing_support::RandomModelOptions o;
  o.max_vertices = 4;
  for (int trial = 0; trial < 15; ++trial) {
    o.escapes = trial % 3 == 0;
    const WalkModel m = testing_support::random_model(rng, o);
    const BlockState mu = testing_support::random_block_state(rng, m);
    const BlockState a = evolve(m, mu, 0.7);
    const BlockState b = global_evolve(m, mu, 0.7);
    CHECK(block_trace_distance(a, b) < 1e-9);
  }
}

TEST_CASE("evolution is trace preserving, positive and a semigroup") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const WalkModel m = testing_support::random_model(rng);
    const BlockState mu = testing_support::random_block_state(rng, m);
    const double t = u(rng);
    const double s = u(rng);
    const BlockGenerator gen(m);
    const BlockState at_t = gen.evolve(mu, t);
    CHECK(std::abs(at_t.total_trace() - 1.0) <= 1e-10);
    for (const auto& b : at_t.blocks) CHECK(min_hermitian_eigenvalue(b) >= -1e-9);
    const BlockState composed = gen.evolve(gen.evolve(mu, s), t);
    CHECK(block_trace_distance(composed, gen.evolve(mu, t + s)) <= 1e-8);
  }
}

TEST_CASE("classical embeddings evolve like e^{tQ}") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + trial % 4;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i != j) q(i, j) = u(rng);
      }
      q(i, i) = -q.row(i).sum();
    }
    const WalkModel m = classical_embed(q);
    const Eigen::MatrixXd pq = (0.8 * q).exp();
    BlockState mu = BlockState::zero(m);
    mu.blocks[0](0, 0) = 1.0;
    const auto p = position_distribution(evolve(m, mu, 0.8));
    CHECK((p.transpose() - pq.row(0)).norm() <= 1e-9);
  }
}

TEST_CASE("position distribution") {
  const WalkModel m = classical_embed(Eigen::MatrixXd::Zero(4, 4));
  const auto p = position_distribution(classical_state(m, {0.25, 0.25, 0.25, 0.25}));
  for (Index i = 0; i < 4; ++i) CHECK(p(i) == 0.25);
  const auto q = position_distribution(classical_state(m, {0.0, 0.0, 1.0, 0.0}));
  CHECK(q(2) == 1.0);
  CHECK(q.sum() == 1.0);
}

TEST_CASE("zero-jump Dyson term is free evolution") {
  const WalkModel m = fixtures::two_site_rotation();
  BlockState mu = BlockState::zero(m);
  mu.blocks[0] = maximally_mixed(2);
  const auto r = dyson_partial(m, mu, 0.4, 0, 4);
  const Matrix p = expm(0.4 * m.effective(0));
  CHECK((r.state.blocks[0] - p * mu.blocks[0] * p.adjoint()).norm() < 1e-14);
  CHECK(r.state.blocks[1].norm() == 0.0);
  // C = 2 (two sigma_x jumps), so the tail is e^{0.8} - 1.
  CHECK(r.remainder_bound == Approx(std::exp(0.8) - 1.0).epsilon(1e-12));
}

TEST_CASE("Dyson sum converges to evolve on the two-state chain") {
  const WalkModel m = fixtures::two_state_flip();
  const BlockState mu = classical_state(m, {1.0, 0.0});
  const auto r = dyson_partial(m, mu, 0.1, 6, 16);
  CHECK(block_trace_distance(r.state, evolve(m, mu, 0.1)) <= 1e-8);
}

TEST_CASE("Dyson order traces are Poisson weights for unit-rate scalar chains") {
  const WalkModel m = fixtures::two_state_flip();
  const auto r = dyson_partial(m, classical_state(m, {1.0, 0.0}), 0.7, 4, 10);
  double fact = 1.0;
  for (int n = 0; n <= 4; ++n) {
    if (n > 0) fact *= n;
    CHECK(r.order_traces[static_cast<std::size_t>(n)] == Approx(std::exp(-0.7) * std::pow(0.7, n) / fact).epsilon(1e-10));
  }
}

TEST_CASE("Dyson truncation on the rotating pair stays within the remainder bound") {
  const WalkModel m = fixtures::two_site_rotation();
  CHECK(m.rate_constant() == Approx(2.0));
  BlockState mu = BlockState::zero(m);
  mu.blocks[0] = maximally_mixed(2);
  const auto r = dyson_partial(m, mu, 0.2, 5, 8);
  CHECK(std::abs(r.state.total_trace() - 1.0) <= r.remainder_bound + 1e-12);
  CHECK(r.remainder_bound == Approx(poisson_tail_bound(0.4, 5)));
}

TEST_CASE("Dyson sum on random models stays within the bound") {
  std::mt19937_64 rng(10);
  testing_support::RandomModelOptions o;
  o.max_vertices = 4;
  for (int trial = 0; trial < 8; ++trial) {
    o.escapes = trial % 2 == 1;
    const WalkModel m = testing_support::random_model(rng, o);
    const BlockState mu = testing_support::random_block_state(rng, m);
    const double t = std::min(0.5, 1.0 / m.rate_constant());
    const auto r = dyson_partial(m, mu, t, 5, 6);
    CHECK(block_trace_distance(r.state, evolve(m, mu, t)) <= r.remainder_bound + 1e-6);
  }
}

TEST_CASE("Dyson budget is enforced") {
  const WalkModel m = fixtures::two_state_flip();
  const BlockState mu = classical_state(m, {1.0, 0.0});
  CHECK_THROWS_AS(dyson_partial(m, mu, 0.1, 12, 16), PreconditionError);
  CHECK_THROWS_AS(dyson_partial(m, mu, -1.0, 2, 4), PreconditionError);
}

TEST_CASE("Poisson tail bound") {
  CHECK(poisson_tail_bound(1.0, 0) == Approx(std::exp(1.0) - 1.0));
  CHECK(poisson_tail_bound(0.0, 3) == 0.0);
  CHECK(poisson_tail_bound(1.0, 6) == Approx(std::exp(1.0) - (1 + 1 + 0.5 + 1.0 / 6 + 1.0 / 24 + 1.0 / 120 + 1.0 / 720)).epsilon(1e-9));
}
