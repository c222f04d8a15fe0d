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

#include <cmath>
#include <random>

#include "ctoqw/ctoqw.hpp"
#include "support.hpp"

using namespace ctoqw;
using Catch::Approx;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, Complex(v, 0.0)); }

std::vector<Index> offsets(const WalkModel& m) {
  std::vector<Index> off{0};
  for (Index i = 0; i < m.num_vertices(); ++i) off.push_back(off.back() + m.dim(i));
  return off;
}

// Global D x D generators: G = sum G_i (x) |i><i| (optional) and S = R (x) |j><i|.
std::vector<Matrix> global_generators(const WalkModel& m, bool with_effective) {
  const auto off = offsets(m);
  const Index d = off.back();
  std::vector<Matrix> gens;
  if (with_effective) {
    Matrix g = Matrix::Zero(d, d);
    for (Index i = 0; i < m.num_vertices(); ++i) g.block(off[i], off[i], m.dim(i), m.dim(i)) = m.effective(i);
    gens.push_back(g);
  }
  for (const auto& j : m.jumps()) {
    Matrix s = Matrix::Zero(d, d);
    s.block(off[j.to], off[j.from], m.dim(j.to), m.dim(j.from)) = j.op;
    gens.push_back(s);
  }
  return gens;
}

// Dimension of the unital algebra generated by the global operators,
// by brute-force closure of span{I} under left multiplication.
Index burnside_dimension(const WalkModel& m, bool with_effective) {
  const auto gens = global_generators(m, with_effective);
  const Index d = m.total_dim();
  std::vector<Vector> basis;
  std::vector<Matrix> queue{Matrix::Identity(d, d)};
  auto add = [&](const Matrix& x) {
    Vector v = vec(x);
    const double n0 = v.norm();
    if (n0 == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= b.dot(v) * b;
    }
    if (v.norm() <= 1e-9 * n0) return false;
    basis.push_back(v / v.norm());
    return true;
  };
  add(queue.front());
  while (!queue.empty()) {
    const Matrix x = queue.back();
    queue.pop_back();
    for (const auto& g : gens) {
      const Matrix y = g * x;
      if (add(y)) queue.push_back(y);
    }
  }
  return static_cast<Index>(basis.size());
}

void check_witness(const WalkModel& m, const IrreducibilityVerdict& v, bool with_effective) {
  REQUIRE_FALSE(v.irreducible);
  REQUIRE(v.witness.cols() > 0);
  REQUIRE(v.witness.cols() < m.total_dim());
  const Matrix& q = v.witness;
  CHECK((q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).norm() < 1e-10);
  for (const auto& g : global_generators(m, with_effective)) {
    const Matrix gq = g * q;
    CHECK((gq - q * (q.adjoint() * gq)).norm() <= 1e-10 * (1.0 + g.norm()));
  }
}

WalkModel two_copies_of_flip() {
  RawModel raw;
  raw.vertices = {{"a0", 1}, {"a1", 1}, {"b0", 1}, {"b1", 1}};
  raw.jumps = {{"a0", "a1", scalar(1.0)}, {"a1", "a0", scalar(1.0)},
               {"b0", "b1", scalar(1.0)}, {"b1", "b0", scalar(1.0)}};
  return build_walk(raw);
}

}  // namespace

TEST_CASE("jump map of the rotating pair is reducible") {
  const WalkModel m = fixtures::two_site_rotation();
  const auto v = check_discrete_irreducible(m);
  check_witness(m, v, false);
  CHECK(v.algebra_dim == burnside_dimension(m, false));
}

TEST_CASE("rotating pair: drift and jumps share an invariant subspace") {
  // Both effective matrices are -I/2 + [[0,1],[-1,0]] with eigenvectors
  // (1, +-i); sigma_x maps (1, i) to a multiple of (1, -i), so
  // span{(1, i) at site 1, (1, -i) at site 2} is invariant under everything.
  const WalkModel m = fixtures::two_site_rotation();
  const auto v = check_irreducible(m);
  CHECK(v.total_dim == 4);
  CHECK(v.algebra_dim == 8);
  CHECK(burnside_dimension(m, true) == 8);
  check_witness(m, v, true);
  Vector u(4);
  u << 1.0, kI, 1.0, -kI;
  u /= 2.0;
  CHECK((u - v.witness * (v.witness.adjoint() * u)).norm() < 1e-10);
}

TEST_CASE("qubit trap and the scalar walks are irreducible") {
  const auto trap = check_irreducible(fixtures::qubit_trap(30));
  CHECK(trap.irreducible);
  CHECK(trap.algebra_dim == 32 * 32);
  CHECK(trap.witness.cols() == 0);
  CHECK(check_discrete_irreducible(fixtures::two_state_flip()).irreducible);
  CHECK(check_discrete_irreducible(fixtures::two_state_flip()).algebra_dim == 4);
  CHECK(check_irreducible(fixtures::biased_line(10)).irreducible);
}

TEST_CASE("disconnected copies are reducible with a witness on one copy") {
  const WalkModel m = two_copies_of_flip();
  const auto v = check_irreducible(m);
  check_witness(m, v, true);
  CHECK(v.witness.cols() == 2);
  const double on_a = v.witness.topRows(2).norm();
  const double on_b = v.witness.bottomRows(2).norm();
  CHECK(std::min(on_a, on_b) < 1e-12);
}

TEST_CASE("a walk without jumps is reducible") {
  RawModel raw;
  raw.vertices = {{"0", 2}, {"1", 1}};
  const WalkModel m = build_walk(raw);
  const auto v = check_discrete_irreducible(m);
  check_witness(m, v, false);
  const auto c = check_irreducible(m);
  check_witness(m, c, true);
}

TEST_CASE("graded algebra agrees with the Burnside closure on random models") {
  std::mt19937_64 rng(31);
  testing_support::RandomModelOptions o;
  o.max_vertices = 3;
  o.max_dim = 2;
  for (int trial = 0; trial < 40; ++trial) {
    o.ring = trial % 2 == 0;
    o.edge_probability = 0.3;
    const WalkModel m = testing_support::random_model(rng, o);
    const Index d2 = m.total_dim() * m.total_dim();
    for (bool eff : {true, false}) {
      const auto v = eff ? check_irreducible(m) : check_discrete_irreducible(m);
      CHECK(v.irreducible == (burnside_dimension(m, eff) == d2));
      if (!v.irreducible) check_witness(m, v, eff);
    }
  }
}

TEST_CASE("hidden invariant subspaces are found") {
  // Conjugate a block-diagonal (2 + 1) structure by a random unitary per site.
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 3;
    std::vector<Matrix> u;
    for (Index i = 0; i < n; ++i) {
      Eigen::HouseholderQR<Matrix> qr(testing_support::random_matrix(rng, 3, 3));
      u.push_back(qr.householderQ());
    }
    auto block_op = [&](Index d) {
      Matrix x = Matrix::Zero(d, d);
      x.topLeftCorner(2, 2) = testing_support::random_matrix(rng, 2, 2, 0.5);
      x(2, 2) = testing_support::random_matrix(rng, 1, 1, 0.5)(0, 0);
      return x;
    };
    RawModel raw;
    for (Index i = 0; i < n; ++i) raw.vertices.push_back({std::to_string(i), 3});
    for (Index i = 0; i < n; ++i) {
      const Matrix h = hermitian_part(block_op(3));
      raw.hamiltonians[std::to_string(i)] = u[i] * h * u[i].adjoint();
      const Index j = (i + 1) % n;
      raw.jumps.push_back({std::to_string(i), std::to_string(j), u[j] * block_op(3) * u[i].adjoint()});
    }
    const WalkModel m = build_walk(raw);
    const auto v = check_irreducible(m);
    check_witness(m, v, true);
  }
}

TEST_CASE("discrete irreducibility implies irreducibility") {
  std::mt19937_64 rng(33);
  testing_support::RandomModelOptions o;
  o.max_vertices = 5;
  int discrete_irreducible = 0;
  for (int trial = 0; trial < 60; ++trial) {
    o.ring = trial % 3 != 0;
    o.edge_probability = 0.25;
    o.scalar = trial % 4 == 0;
    const WalkModel m = testing_support::random_model(rng, o);
    if (check_discrete_irreducible(m).irreducible) {
      ++discrete_irreducible;
      CHECK(check_irreducible(m).irreducible);
    }
  }
  CHECK(discrete_irreducible > 10);
}

TEST_CASE("trichotomy on the reference walks") {
  const auto r1 = classify_trichotomy(fixtures::two_state_flip(), 0);
  CHECK(r1.recurrence == RecurrenceCase::Recurrent);
  CHECK(r1.lambda == Approx(1.0).margin(1e-10));
  CHECK(r1.perron_min_eig > 0.0);

  const WalkModel line = fixtures::biased_line(30);
  const auto r2 = classify_trichotomy(line, line.index_of("0"));
  CHECK(r2.recurrence == RecurrenceCase::TransientUniform);
  CHECK(r2.lambda == Approx(0.5).margin(1e-6));
  CHECK(r2.m_spectrum(0) == Approx(0.5).margin(1e-6));

  const WalkModel trap = fixtures::qubit_trap(30);
  const auto r3 = classify_trichotomy(trap, trap.index_of("1"));
  CHECK(r3.recurrence == RecurrenceCase::TransientQuantum);
  CHECK(r3.lambda < 1.0 - 1e-3);
  CHECK(r3.m_spectrum(1) == Approx(1.0).margin(1e-6));
  const Vector top = r3.m_eigenvectors.col(1);
  CHECK(std::abs(top(1)) == Approx(1.0).margin(1e-6));
  CHECK(r3.min_choi_eigenvalue >= -1e-9);
}

TEST_CASE("reducible walks are refused") {
  CHECK_THROWS_AS(classify_trichotomy(two_copies_of_flip(), 0), PreconditionError);
  CHECK_THROWS_AS(return_probability_extremes(two_copies_of_flip(), 0), PreconditionError);
}

TEST_CASE("return probability extremes") {
  const auto e1 = return_probability_extremes(fixtures::two_state_flip(), 0);
  CHECK(e1.min_probability == Approx(1.0));
  CHECK(e1.max_probability == Approx(1.0));
  const WalkModel line = fixtures::biased_line(30);
  const auto e2 = return_probability_extremes(line, line.index_of("0"));
  CHECK(e2.min_probability == Approx(0.5).margin(1e-6));
  CHECK(e2.max_probability == Approx(0.5).margin(1e-6));
  const WalkModel trap = fixtures::qubit_trap(30);
  const auto e3 = return_probability_extremes(trap, trap.index_of("1"));
  CHECK(e3.max_probability == Approx(1.0).margin(1e-6));
  CHECK(e3.min_probability == Approx(1.0 / 3.0).margin(1e-6));
  CHECK(std::abs(e3.argmax(1)) == Approx(1.0).margin(1e-6));
  CHECK(std::abs(e3.argmin(0)) == Approx(1.0).margin(1e-6));
}

TEST_CASE("trichotomy properties on random walks") {
  std::mt19937_64 rng(34);
  int seen[3] = {0, 0, 0};
  for (int trial = 0; trial < 40; ++trial) {
    testing_support::RandomModelOptions o;
    o.escapes = trial % 2 == 0;
    o.max_vertices = 4;
    const WalkModel m = testing_support::random_model(rng, o);
    PassageSystem sys(m);
    std::vector<RecurrenceCase> cases;
    for (Index j = 0; j < m.num_vertices(); ++j) {
      const auto rep = classify_trichotomy(sys, j, 1e-8, j == 0);
      cases.push_back(rep.recurrence);
      CHECK(rep.lambda <= 1.0 + 1e-9);
      CHECK(rep.m_spectrum(0) >= -1e-9);
      CHECK(rep.m_spectrum(rep.m_spectrum.size() - 1) <= 1.0 + 1e-9);
      const Matrix rho = testing_support::random_density(rng, m.dim(j));
      const auto occ = expected_occupation(sys, j, j, rho);
      CHECK(occ.infinite == (rep.recurrence == RecurrenceCase::Recurrent));
      if (rep.recurrence == RecurrenceCase::Recurrent) CHECK(rep.perron_min_eig > 0.0);
    }
    // The case does not depend on the base vertex.
    for (auto c : cases) CHECK(c == cases.front());
    ++seen[static_cast<int>(cases.front())];
  }
  CHECK(seen[static_cast<int>(RecurrenceCase::Recurrent)] > 0);
  CHECK(seen[static_cast<int>(RecurrenceCase::TransientUniform)] > 0);
}

TEST_CASE("scalar walks are never specifically quantum") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 5;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> esc(static_cast<std::size_t>(n), 0.0);
    const bool leaky = trial % 2 == 1;
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) {
        if (a != b && (b == (a + 1) % n || u(rng) < 0.3)) q(a, b) = u(rng) + 0.1;
      }
      if (leaky && u(rng) < 0.5) esc[static_cast<std::size_t>(a)] = u(rng);
      q(a, a) = -q.row(a).sum() - esc[static_cast<std::size_t>(a)];
    }
    const WalkModel m = classical_embed(q, esc);
    const auto rep = classify_trichotomy(m, 0);
    CHECK(rep.recurrence != RecurrenceCase::TransientQuantum);
    // A finite irreducible chain is recurrent iff nothing leaks out.
    double leak = 0.0;
    for (double e : esc) leak += e;
    CHECK((rep.recurrence == RecurrenceCase::Recurrent) == (leak == 0.0));
  }
}

TEST_CASE("sure return forces M to act as the identity on the support") {
  const WalkModel trap = fixtures::qubit_trap(30);
  const Index one = trap.index_of("1");
  PassageSystem sys(trap);
  const auto p = sys.first_passage_map(one, one).map;
  const Matrix rho = basis_projector(2, 1);
  REQUIRE(reach_probability(p, rho).value == Approx(1.0).margin(1e-9));
  const Matrix m = p.adjoint_identity();
  CHECK(std::abs(m(1, 1) - 1.0) < 1e-8);
  CHECK(std::abs(m(0, 1)) < 1e-8);
}
