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

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "ctoqw/ctoqw.hpp"
#include "support.hpp"

using namespace ctoqw;
using Catch::Approx;
using testing_support::random_matrix;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, Complex(v, 0.0)); }

RawModel two_state_raw() {
  RawModel raw;
  raw.vertices = {{"0", 1}, {"1", 1}};
  raw.jumps = {{"0", "1", scalar(1.0)}, {"1", "0", scalar(1.0)}};
  return raw;
}

RawModel rotation_raw(double scale_12 = 1.0) {
  Matrix g(2, 2);
  g << -0.5, 1.0, -1.0, -0.5;
  Matrix sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  RawModel raw;
  raw.vertices = {{"1", 2}, {"2", 2}};
  raw.effective = {{"1", g}, {"2", g}};
  raw.jumps = {{"1", "2", Matrix(scale_12 * sx)}, {"2", "1", sx}};
  return raw;
}

}  // namespace

TEST_CASE("build_walk derives the effective matrix from H and the jumps") {
  const WalkModel m = build_walk(two_state_raw());
  CHECK(m.effective(0)(0, 0).real() == Approx(-0.5).margin(1e-15));
  CHECK(m.effective(1)(0, 0).real() == Approx(-0.5).margin(1e-15));
  CHECK(m.rate_constant() == Approx(2.0));
}

TEST_CASE("a vertex without outgoing jumps and zero H is absorbing") {
  RawModel raw;
  raw.vertices = {{"a", 2}, {"b", 1}};
  raw.jumps = {{"a", "b", Matrix::Ones(1, 2) * 0.5}};
  const WalkModel m = build_walk(raw);
  CHECK(m.effective(1).norm() == 0.0);
  CHECK(m.outgoing(1).empty());
}

TEST_CASE("Hamiltonian is recovered when only G is supplied") {
  const WalkModel m = build_walk(rotation_raw());
  Matrix expected(2, 2);
  expected << 0.0, kI, -kI, 0.0;
  CHECK((m.hamiltonian(0) - expected).norm() < 1e-14);
  const auto rep = validate(m);
  CHECK(rep.ok());
  CHECK(rep.max_residual("zero_sum") < 1e-12);
}

TEST_CASE("inconsistent jump scaling breaks the zero-sum identity") {
  const RawModel raw = rotation_raw(1.1);
  CHECK_THROWS_AS(build_walk(raw), ValidationError);
  const auto rep = validate(WalkModel::assemble(raw));
  const auto* z = rep.find("zero_sum[1]");
  REQUIRE(z != nullptr);
  CHECK_FALSE(z->passed);
  CHECK(z->residual == Approx(0.21).margin(1e-12));
  CHECK(rep.find("zero_sum[2]")->passed);
}

TEST_CASE("non-Hermitian Hamiltonian fails its check") {
  RawModel raw;
  raw.vertices = {{"0", 2}};
  Matrix h = Matrix::Zero(2, 2);
  h(0, 1) = 1.0;
  raw.hamiltonians["0"] = h;
  const auto rep = validate(WalkModel::assemble(raw));
  CHECK_FALSE(rep.find("hermitian[0]")->passed);
  CHECK_THROWS_AS(build_walk(raw), ValidationError);
}

TEST_CASE("shape errors are rejected") {
  RawModel raw = two_state_raw();
  raw.jumps[0].op = Matrix::Ones(2, 1);
  CHECK_THROWS_AS(build_walk(raw), ValidationError);
  RawModel dup = two_state_raw();
  dup.vertices.push_back({"0", 1});
  CHECK_THROWS_AS(build_walk(dup), ValidationError);
  RawModel loop = two_state_raw();
  loop.jumps.push_back({"0", "0", scalar(1.0)});
  CHECK_THROWS_AS(build_walk(loop), ValidationError);
  RawModel missing = two_state_raw();
  missing.jumps.push_back({"0", "7", scalar(1.0)});
  CHECK_THROWS_AS(build_walk(missing), ValidationError);
}

TEST_CASE("classical embedding round-trips the generator") {
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 1, -1;
  const WalkModel m = classical_embed(q);
  CHECK(m.effective(0)(0, 0).real() == Approx(-0.5));
  CHECK((classical_rates(m) - q).norm() < 1e-14);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 5;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i != j && u(rng) > 0.6) g(i, j) = u(rng);
      }
      g(i, i) = -g.row(i).sum();
    }
    CHECK((classical_rates(classical_embed(g)) - g).norm() < 1e-12);
  }
}

TEST_CASE("classical embedding of the biased line matches the lattice operators") {
  const Index n = 5;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> esc(n, 0.0);
  for (Index i = 0; i < n; ++i) {
    if (i + 1 < n) q(i, i + 1) = 0.75; else esc[static_cast<std::size_t>(i)] += 0.75;
    if (i > 0) q(i, i - 1) = 0.25; else esc[static_cast<std::size_t>(i)] += 0.25;
    q(i, i) = -1.0;
  }
  const WalkModel m = classical_embed(q, esc);
  for (Index i = 0; i < n; ++i) CHECK(m.effective(i)(0, 0).real() == Approx(-0.5));
  CHECK(std::abs(*m.jump_op(1, 2)->data()) == Approx(std::sqrt(3.0) / 2.0));
  CHECK(std::abs(*m.jump_op(2, 1)->data()) == Approx(0.5));
}

TEST_CASE("classical embedding rejects invalid generators") {
  Eigen::MatrixXd neg(2, 2);
  neg << 1, -1, 1, -1;
  CHECK_THROWS_AS(classical_embed(neg), ValidationError);
  Eigen::MatrixXd leaky(2, 2);
  leaky << -1, 0.5, 1, -1;
  CHECK_THROWS_AS(classical_embed(leaky), ValidationError);
  const WalkModel zero = classical_embed(Eigen::MatrixXd::Zero(3, 3));
  for (Index i = 0; i < 3; ++i) CHECK(zero.effective(i).norm() == 0.0);
}

TEST_CASE("random models satisfy the zero-sum identity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    testing_support::RandomModelOptions o;
    o.escapes = trial % 2 == 0;
    const WalkModel m = testing_support::random_model(rng, o);
    for (Index i = 0; i < m.num_vertices(); ++i) CHECK(zero_sum_residual(m, i) <= 1e-10);
    CHECK(validate(m).ok());
  }
}

TEST_CASE("state validation") {
  const WalkModel m = build_walk(two_state_raw());
  BlockState s = BlockState::zero(m);
  s.blocks[0](0, 0) = 0.5;
  s.blocks[1](0, 0) = 0.5;
  CHECK_NOTHROW(s.validate(m));
  s.blocks[1](0, 0) = 0.6;
  CHECK_THROWS_AS(s.validate(m), ValidationError);
  s.blocks[0](0, 0) = -0.1;
  s.blocks[1](0, 0) = 1.1;
  CHECK_THROWS_AS(s.validate(m), ValidationError);
  SitedState sited{0, scalar(1.0)};
  CHECK_NOTHROW(sited.validate(m));
  CHECK(sited.as_block_state(m).total_trace() == Approx(1.0));
}

TEST_CASE("expm agrees with the Eigen matrix exponential") {
  std::mt19937_64 rng(3);
  for (double scale : {1e-3, 0.3, 1.0, 4.0, 30.0}) {
    for (Index d : {1, 2, 3, 5, 9}) {
      const Matrix a = random_matrix(rng, d, d, scale);
      const Matrix ref = a.exp();
      CHECK((expm(a) - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
    }
  }
  const Matrix h = testing_support::random_hermitian(rng, 4);
  const Matrix n = -kI * h;  // normal
  CHECK((expm(n) - n.exp()).norm() < 1e-12);
}

TEST_CASE("Lyapunov solutions have small residuals") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 4;
    const Matrix a = random_matrix(rng, d, d);
    const Matrix g = -kI * testing_support::random_hermitian(rng, d) - 0.5 * (a.adjoint() * a) -
                     0.1 * Matrix::Identity(d, d);
    const Matrix x = random_matrix(rng, d, d);
    const LyapunovSolver solver(g);
    const Matrix y = solver.solve(x);
    CHECK((g * y + y * g.adjoint() + x).norm() <= 1e-10 * (1.0 + x.norm()));
    CHECK(solver.abscissa() < 0.0);
  }
}

TEST_CASE("Perron data of a positive map") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Matrix> kraus;
    for (int k = 0; k < 3; ++k) kraus.push_back(random_matrix(rng, 3, 3, 0.3));
    const SuperOp p = SuperOp::from_kraus(kraus);
    const auto pr = perron_eigen(p.matrix(), vec(maximally_mixed(3)));
    REQUIRE(pr.converged);
    Eigen::ComplexEigenSolver<Matrix> es(p.matrix());
    double top = 0.0;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) top = std::max(top, std::abs(es.eigenvalues()(k)));
    CHECK(pr.radius == Approx(top).epsilon(1e-8));
    Matrix rho = unvec(pr.eigenvector, 3, 3);
    rho /= rho.trace();
    CHECK(min_hermitian_eigenvalue(hermitian_part(rho)) > -1e-8);
  }
}
