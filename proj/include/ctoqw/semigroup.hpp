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

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "ctoqw/dwell.hpp"
#include "ctoqw/model.hpp"
#include "ctoqw/quadrature.hpp"

namespace ctoqw {

/// Offsets of each vectorized block d_i x d_i inside the stacked vector.
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(const WalkModel& model) {
    offsets_.reserve(static_cast<std::size_t>(model.num_vertices()) + 1);
    Index off = 0;
    for (const auto& v : model.vertices()) {
      offsets_.push_back(off);
      dims_.push_back(v.dim);
      off += v.dim * v.dim;
    }
    offsets_.push_back(off);
  }

  [[nodiscard]] Index size() const { return offsets_.empty() ? 0 : offsets_.back(); }
  [[nodiscard]] Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] Index dim(Index i) const { return dims_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] Index blocks() const { return static_cast<Index>(dims_.size()); }

  [[nodiscard]] Vector pack(const BlockState& s) const {
    Vector v(size());
    for (Index i = 0; i < blocks(); ++i) {
      v.segment(offset(i), dim(i) * dim(i)) = vec(s.blocks[static_cast<std::size_t>(i)]);
    }
    return v;
  }

  [[nodiscard]] BlockState unpack(const Vector& v) const {
    BlockState s;
    s.blocks.reserve(static_cast<std::size_t>(blocks()));
    for (Index i = 0; i < blocks(); ++i) {
      s.blocks.push_back(unvec(v.segment(offset(i), dim(i) * dim(i)), dim(i), dim(i)));
    }
    return s;
  }

  /// Row vector whose product with a packed state gives its total trace.
  [[nodiscard]] Vector trace_functional() const {
    Vector t = Vector::Zero(size());
    for (Index i = 0; i < blocks(); ++i) {
      t.segment(offset(i), dim(i) * dim(i)) = vec(Matrix::Identity(dim(i), dim(i)));
    }
    return t;
  }

 private:
  std::vector<Index> offsets_;
  std::vector<Index> dims_;
};

/// Block i of L(mu): G_i rho(i) + rho(i) G_i^* + sum_j R_j^i rho(j) R_j^{i*}.
/// The result is a family of Hermitian matrices, not a state.
inline BlockState lindblad_apply(const WalkModel& model, const BlockState& mu) {
  BlockState out;
  out.blocks.resize(mu.blocks.size());
  for (Index i = 0; i < model.num_vertices(); ++i) {
    const Matrix& g = model.effective(i);
    const Matrix& rho = mu.blocks[static_cast<std::size_t>(i)];
    Matrix d = g * rho + rho * g.adjoint();
    for (auto k : model.incoming(i)) {
      const auto& j = model.jumps()[k];
      d += j.op * mu.blocks[static_cast<std::size_t>(j.from)] * j.op.adjoint();
    }
    out.blocks[static_cast<std::size_t>(i)] = std::move(d);
  }
  return out;
}

/// The jump part only: block i gets sum_j R_j^i rho(j) R_j^{i*}.
inline BlockState jump_apply(const WalkModel& model, const BlockState& mu) {
  BlockState out = BlockState::zero(model);
  for (const auto& j : model.jumps()) {
    out.blocks[static_cast<std::size_t>(j.to)] +=
        j.op * mu.blocks[static_cast<std::size_t>(j.from)] * j.op.adjoint();
  }
  return out;
}

/// Vectorized restriction of the Lindbladian to block-diagonal states.
class BlockGenerator {
 public:
  explicit BlockGenerator(const WalkModel& model) : layout_(model) {
    const Index n = layout_.size();
    matrix_ = Matrix::Zero(n, n);
    for (Index i = 0; i < model.num_vertices(); ++i) {
      const Index d = model.dim(i);
      const Matrix& g = model.effective(i);
      const Matrix id = Matrix::Identity(d, d);
      matrix_.block(layout_.offset(i), layout_.offset(i), d * d, d * d) =
          kron(id, g) + kron(g.conjugate(), id);
    }
    for (const auto& j : model.jumps()) {
      const Index df = model.dim(j.from);
      const Index dt = model.dim(j.to);
      matrix_.block(layout_.offset(j.to), layout_.offset(j.from), dt * dt, df * df) +=
          sandwich_superop(j.op, j.op);
    }
  }

  [[nodiscard]] const Matrix& matrix() const { return matrix_; }
  [[nodiscard]] const BlockLayout& layout() const { return layout_; }

  /// ||vec(Id)^T L||: zero for trace-preserving generators (no escapes).
  [[nodiscard]] double trace_defect() const {
    return (layout_.trace_functional().transpose() * matrix_).norm();
  }

  [[nodiscard]] BlockState evolve(const BlockState& mu, double t) const {
    if (t < 0.0) throw PreconditionError("evolve: negative time");
    if (t == 0.0) return mu;
    const Matrix prop = expm(t * matrix_);
    BlockState out = layout_.unpack(prop * layout_.pack(mu));
    for (auto& b : out.blocks) b = hermitian_part(b);
    return out;
  }

 private:
  BlockLayout layout_;
  Matrix matrix_;
};

/// e^{tL}(mu). For models with escape channels the result has total trace
/// equal to the probability of still being inside the model.
inline BlockState evolve(const WalkModel& model, const BlockState& mu, double t) {
  if (t < 0.0) throw PreconditionError("evolve: negative time");
  mu.validate(model, model.tolerance(), false);
  if (t == 0.0) return mu;
  return BlockGenerator(model).evolve(mu, t);
}

/// Entry i is Tr rho(i).
inline Eigen::VectorXd position_distribution(const BlockState& mu) {
  Eigen::VectorXd p(static_cast<Index>(mu.blocks.size()));
  for (std::size_t i = 0; i < mu.blocks.size(); ++i) p(static_cast<Index>(i)) = mu.blocks[i].trace().real();
  return p;
}

/// sum_{n > n_max} x^n / n!, summed directly.
inline double poisson_tail_bound(double x, int n_max) {
  double term = 1.0;
  for (int n = 1; n <= n_max + 1; ++n) term *= x / n;
  double sum = 0.0;
  for (int n = n_max + 1; n < n_max + 10000; ++n) {
    sum += term;
    term *= x / (n + 1);
    if (term <= 1e-18 * sum || term == 0.0) break;
  }
  return sum;
}

struct DysonResult {
  BlockState state;
  /// sum_{n > n_max} (Ct)^n / n! with C the rate constant.
  double remainder_bound = 0.0;
  /// Total trace contributed by paths with exactly n jumps, n = 0..n_max.
  std::vector<double> order_traces;
};

namespace detail {

class DysonExpansion {
 public:
  DysonExpansion(const WalkModel& model, const BlockState& mu, int quad_points)
      : layout_(model), unit_rule_(gauss_legendre(quad_points)) {
    for (Index i = 0; i < model.num_vertices(); ++i) {
      dwell_.emplace_back(model.effective(i));
      scalar_g_.push_back(model.dim(i) == 1 ? model.effective(i)(0, 0) : Complex{0.0, 0.0});
    }
    std::vector<Eigen::Triplet<Complex>> trip;
    for (const auto& j : model.jumps()) {
      const Matrix s = sandwich_superop(j.op, j.op);
      for (Index r = 0; r < s.rows(); ++r) {
        for (Index c = 0; c < s.cols(); ++c) {
          if (s(r, c) != Complex{0.0, 0.0}) {
            trip.emplace_back(layout_.offset(j.to) + r, layout_.offset(j.from) + c, s(r, c));
          }
        }
      }
    }
    jumps_.resize(layout_.size(), layout_.size());
    jumps_.setFromTriplets(trip.begin(), trip.end());
    mu_ = layout_.pack(mu);
  }

  [[nodiscard]] const BlockLayout& layout() const { return layout_; }

  // Terms of order 0..depth at time t: term_0(t) = Lambda_t mu and
  // term_{m+1}(t) = int_0^t Lambda_{t-s} J term_m(s) ds, the inner integral by
  // Gauss–Legendre on [0, t] at every nesting level.
  [[nodiscard]] std::vector<Vector> terms(double t, int depth) const {
    std::vector<Vector> out(static_cast<std::size_t>(depth) + 1, Vector::Zero(layout_.size()));
    out[0] = mu_;
    free_evolve(out[0], t);
    if (depth == 0 || t == 0.0) return out;
    const double half = 0.5 * t;
    Vector jumped(layout_.size());
    for (std::size_t k = 0; k < unit_rule_.nodes.size(); ++k) {
      const double s = half * (1.0 + unit_rule_.nodes[k]);
      const double w = half * unit_rule_.weights[k];
      const auto inner = terms(s, depth - 1);
      for (int m = 0; m < depth; ++m) {
        jumped.noalias() = jumps_ * inner[static_cast<std::size_t>(m)];
        free_evolve(jumped, t - s);
        out[static_cast<std::size_t>(m) + 1] += w * jumped;
      }
    }
    return out;
  }

 private:
  void free_evolve(Vector& v, double tau) const {
    for (Index i = 0; i < layout_.blocks(); ++i) {
      const Index d = layout_.dim(i);
      const auto ui = static_cast<std::size_t>(i);
      if (d == 1) {
        v(layout_.offset(i)) *= std::exp(2.0 * tau * scalar_g_[ui].real());
        continue;
      }
      Eigen::Map<Matrix> block(v.data() + layout_.offset(i), d, d);
      const Matrix p = dwell_[ui].propagator(tau);
      block = p * block * p.adjoint();
    }
  }

  BlockLayout layout_;
  QuadratureRule unit_rule_;
  std::vector<DwellPropagator> dwell_;
  std::vector<Complex> scalar_g_;
  Eigen::SparseMatrix<Complex> jumps_;
  Vector mu_;
};

}  // namespace detail

/// Truncated Dyson path sum: contributions of all jump paths with at most
/// n_max jumps, ordered time integrals by nested Gauss–Legendre quadrature
/// (quad_points nodes per jump time). The number of innermost evaluations is
/// quad_points^n_max and must stay within `node_budget`.
inline DysonResult dyson_partial(const WalkModel& model, const BlockState& mu, double t, int n_max,
                                 int quad_points, double node_budget = 5e7) {
  if (t < 0.0) throw PreconditionError("dyson_partial: negative time");
  if (n_max < 0) throw PreconditionError("dyson_partial: n_max must be >= 0");
  if (quad_points < 1) throw PreconditionError("dyson_partial: need at least one quadrature node");
  if (std::pow(static_cast<double>(quad_points), n_max) > node_budget) {
    throw PreconditionError("dyson_partial: n_max " + std::to_string(n_max) + " with " +
                            std::to_string(quad_points) +
                            " nodes exceeds the path enumeration budget");
  }
  mu.validate(model, model.tolerance(), false);
  detail::DysonExpansion expansion(model, mu, quad_points);
  const auto terms = expansion.terms(t, n_max);
  const Vector trace_row = expansion.layout().trace_functional();
  Vector total = Vector::Zero(expansion.layout().size());
  DysonResult res;
  for (const auto& term : terms) {
    res.order_traces.push_back(trace_row.dot(term).real());
    total += term;
  }
  res.state = expansion.layout().unpack(total);
  res.remainder_bound = poisson_tail_bound(model.rate_constant() * t, n_max);
  return res;
}

/// sum_i ||a(i) - b(i)||_1 (trace norm).
inline double block_trace_distance(const BlockState& a, const BlockState& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) s += trace_norm(a.blocks[i] - b.blocks[i]);
  return s;
}

}  // namespace ctoqw
