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

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "ctoqw/errors.hpp"
#include "ctoqw/linalg.hpp"
#include "ctoqw/model.hpp"
#include "ctoqw/passage.hpp"
#include "ctoqw/rng.hpp"

namespace ctoqw {

struct IrreducibilityVerdict {
  bool irreducible = false;
  Matrix witness;         ///< D x r orthonormal basis of a common invariant subspace (r = 0 when irreducible)
  Index algebra_dim = 0;  ///< dimension of the generated algebra, D^2 iff irreducible
  Index total_dim = 0;    ///< D
  double witness_residual = 0.0;
};

namespace detail {

/// A generator of the operator algebra, acting from block `from` to block `to`.
struct AlgebraGenerator {
  Index from;
  Index to;
  const Matrix* op;
};

inline std::vector<AlgebraGenerator> algebra_generators(const WalkModel& model, bool with_effective) {
  std::vector<AlgebraGenerator> gens;
  if (with_effective) {
    for (Index v = 0; v < model.num_vertices(); ++v) gens.push_back({v, v, &model.effective(v)});
  }
  for (const auto& j : model.jumps()) gens.push_back({j.from, j.to, &j.op});
  return gens;
}

inline std::vector<Index> block_offsets(const WalkModel& model) {
  std::vector<Index> off(static_cast<std::size_t>(model.num_vertices()) + 1, 0);
  for (Index v = 0; v < model.num_vertices(); ++v) {
    off[static_cast<std::size_t>(v) + 1] = off[static_cast<std::size_t>(v)] + model.dim(v);
  }
  return off;
}

/// Orthonormal span with two-pass Gram-Schmidt; rejects vectors whose
/// component outside the span is below `rel_tol` times the larger of their
/// norm and `scale`. Products g x should pass scale = |g| |x|, so that a
/// product that vanishes up to rounding is not taken for a new direction.
class SpanBuilder {
 public:
  SpanBuilder(Index n, double rel_tol) : n_(n), tol_(rel_tol) {}

  bool add(Vector v, double scale = 0.0) {
    const double norm0 = v.norm();
    if (!(norm0 > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis_) v -= b.dot(v) * b;
    }
    const double r = v.norm();
    if (r <= tol_ * std::max(norm0, scale) || static_cast<Index>(basis_.size()) >= n_) return false;
    basis_.push_back(v / r);
    return true;
  }

  [[nodiscard]] Index size() const { return static_cast<Index>(basis_.size()); }
  [[nodiscard]] const std::vector<Vector>& basis() const { return basis_; }

  [[nodiscard]] Matrix as_matrix() const {
    Matrix q(n_, size());
    for (Index k = 0; k < size(); ++k) q.col(k) = basis_[static_cast<std::size_t>(k)];
    return q;
  }

 private:
  Index n_;
  double tol_;
  std::vector<Vector> basis_;
};

inline constexpr double kSpanTolerance = 1e-9;

/// Block (target, source) bases of the algebra generated by the identity on
/// each block and the given generators: words along paths starting at each
/// source vertex, spanned target block by target block.
struct GradedAlgebra {
  // spans[source][target] holds vectorized d_target x d_source matrices.
  std::vector<std::vector<SpanBuilder>> spans;

  [[nodiscard]] Index dimension() const {
    Index d = 0;
    for (const auto& row : spans) {
      for (const auto& s : row) d += s.size();
    }
    return d;
  }
};

inline GradedAlgebra graded_algebra(const WalkModel& model, const std::vector<AlgebraGenerator>& gens) {
  const Index nv = model.num_vertices();
  std::vector<std::vector<std::size_t>> from(static_cast<std::size_t>(nv));
  for (std::size_t k = 0; k < gens.size(); ++k) from[static_cast<std::size_t>(gens[k].from)].push_back(k);

  GradedAlgebra alg;
  alg.spans.resize(static_cast<std::size_t>(nv));
  for (Index src = 0; src < nv; ++src) {
    auto& row = alg.spans[static_cast<std::size_t>(src)];
    const Index ds = model.dim(src);
    for (Index t = 0; t < nv; ++t) row.emplace_back(model.dim(t) * ds, kSpanTolerance);
    std::deque<std::pair<Index, Matrix>> queue;
    const Matrix id = Matrix::Identity(ds, ds);
    row[static_cast<std::size_t>(src)].add(vec(id));
    queue.emplace_back(src, id / std::sqrt(static_cast<double>(ds)));
    while (!queue.empty()) {
      auto [at, x] = std::move(queue.front());
      queue.pop_front();
      for (auto k : from[static_cast<std::size_t>(at)]) {
        const auto& g = gens[k];
        Matrix y = (*g.op) * x;
        auto& span = row[static_cast<std::size_t>(g.to)];
        if (span.add(vec(y), g.op->norm() * x.norm())) {
          queue.emplace_back(g.to, unvec(span.basis().back(), model.dim(g.to), ds));
        }
      }
    }
  }
  return alg;
}

/// Smallest subspace containing v and invariant under the generators.
inline Matrix orbit_span(const WalkModel& model, const std::vector<AlgebraGenerator>& gens,
                         const std::vector<Index>& off, const Vector& v) {
  const Index n = off.back();
  SpanBuilder span(n, kSpanTolerance);
  std::deque<Vector> queue;
  if (span.add(v)) queue.push_back(span.basis().back());
  while (!queue.empty()) {
    Vector x = std::move(queue.front());
    queue.pop_front();
    for (const auto& g : gens) {
      const Index fo = off[static_cast<std::size_t>(g.from)];
      const Index to = off[static_cast<std::size_t>(g.to)];
      Vector y = Vector::Zero(n);
      y.segment(to, model.dim(g.to)) = (*g.op) * x.segment(fo, model.dim(g.from));
      if (span.add(y, g.op->norm())) queue.push_back(span.basis().back());
      if (span.size() == n) return span.as_matrix();
    }
  }
  return span.as_matrix();
}

/// max_g ||(I - QQ^*) g Q|| / (1 + ||g||) over the generators.
inline double invariance_residual(const WalkModel& model, const std::vector<AlgebraGenerator>& gens,
                                  const std::vector<Index>& off, const Matrix& q) {
  double worst = 0.0;
  for (const auto& g : gens) {
    const Index fo = off[static_cast<std::size_t>(g.from)];
    const Index to = off[static_cast<std::size_t>(g.to)];
    Matrix gq = Matrix::Zero(q.rows(), q.cols());
    gq.middleRows(to, model.dim(g.to)) = (*g.op) * q.middleRows(fo, model.dim(g.from));
    const Matrix outside = gq - q * (q.adjoint() * gq);
    worst = std::max(worst, op_norm(outside) / (1.0 + op_norm(*g.op)));
  }
  return worst;
}

inline IrreducibilityVerdict irreducibility(const WalkModel& model, bool with_effective) {
  const auto gens = algebra_generators(model, with_effective);
  const auto off = block_offsets(model);
  const Index n = off.back();
  IrreducibilityVerdict out;
  out.total_dim = n;
  const GradedAlgebra alg = graded_algebra(model, gens);
  out.algebra_dim = alg.dimension();
  out.irreducible = out.algebra_dim == n * n;
  if (out.irreducible) {
    out.witness = Matrix(n, 0);
    return out;
  }

  // Every proper invariant subspace of a reducible algebra contains an
  // eigenvector of each element; the orbit of that eigenvector is proper.
  std::vector<Vector> candidates;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    CounterRng rng(0x5EED, trial);
    Matrix x = Matrix::Zero(n, n);
    for (Index s = 0; s < model.num_vertices(); ++s) {
      for (Index t = 0; t < model.num_vertices(); ++t) {
        const auto& span = alg.spans[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
        for (const auto& b : span.basis()) {
          const Complex c(rng.uniform() - 0.5, rng.uniform() - 0.5);
          x.block(off[static_cast<std::size_t>(t)], off[static_cast<std::size_t>(s)], model.dim(t), model.dim(s)) +=
              c * unvec(b, model.dim(t), model.dim(s));
        }
      }
    }
    Eigen::ComplexEigenSolver<Matrix> es(x);
    for (Index k = 0; k < n; ++k) candidates.push_back(es.eigenvectors().col(k));
  }
  for (Index k = 0; k < n; ++k) candidates.push_back(Vector::Unit(n, k));

  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& v : candidates) {
    Matrix q = orbit_span(model, gens, off, v);
    if (q.cols() == 0 || q.cols() == n) continue;
    const double res = invariance_residual(model, gens, off, q);
    if (res <= 1e-10) {
      out.witness = std::move(q);
      out.witness_residual = res;
      return out;
    }
    best_residual = std::min(best_residual, res);
  }
  throw ConvergenceError("irreducibility: algebra is not full but no invariant subspace passed the 1e-10 check"
                         " (best residual " + std::to_string(best_residual) + ")");
}

}  // namespace detail

/// Irreducibility of the semigroup: the algebra generated by the effective
/// matrices and the jump operators is the full matrix algebra.
inline IrreducibilityVerdict check_irreducible(const WalkModel& model) {
  return detail::irreducibility(model, true);
}

/// Irreducibility of the discrete jump map mu -> sum S mu S^*: the same test
/// with the jump operators alone.
inline IrreducibilityVerdict check_discrete_irreducible(const WalkModel& model) {
  return detail::irreducibility(model, false);
}

enum class RecurrenceCase { Recurrent, TransientUniform, TransientQuantum };

inline std::string to_string(RecurrenceCase c) {
  switch (c) {
    case RecurrenceCase::Recurrent:
      return "Recurrent";
    case RecurrenceCase::TransientUniform:
      return "TransientUniform";
    case RecurrenceCase::TransientQuantum:
      return "TransientQuantum";
  }
  return "unknown";
}

struct ClassificationReport {
  RecurrenceCase recurrence = RecurrenceCase::TransientUniform;
  Index base_vertex = 0;
  double lambda = 0.0;          ///< spectral radius of the return map at the base vertex
  Matrix perron_state;          ///< density matrix with P(rho) = lambda rho
  double perron_min_eig = 0.0;  ///< faithfulness margin of perron_state
  double perron_residual = 0.0;
  std::string perron_method;
  Matrix m;                        ///< adjoint of the return map applied to the identity
  Eigen::VectorXd m_spectrum;      ///< ascending
  Matrix m_eigenvectors;           ///< columns match m_spectrum
  double eps_spec = 1e-8;
  PassageDiagnostics passage;
  IrreducibilityVerdict irreducibility;
  double min_choi_eigenvalue = 0.0;
};

namespace detail {

inline void require_irreducible(const WalkModel& model, IrreducibilityVerdict& verdict) {
  verdict = check_irreducible(model);
  if (!verdict.irreducible) {
    throw PreconditionError("classification requires an irreducible walk (algebra dimension " +
                            std::to_string(verdict.algebra_dim) + " < " +
                            std::to_string(verdict.total_dim * verdict.total_dim) + ")");
  }
}

}  // namespace detail

/// Recurrence trichotomy at base vertex j, from the spectral radius of the
/// return map P_{j,j} and the top eigenvalue of P_{j,j}^*(Id).
inline ClassificationReport classify_trichotomy(PassageSystem& sys, Index j, double eps_spec = 1e-8,
                                                bool check_irreducibility = true) {
  const WalkModel& model = sys.model();
  if (!(eps_spec > 0.0)) throw PreconditionError("classify: eps_spec must be positive");
  if (j < 0 || j >= model.num_vertices()) throw PreconditionError("classify: base vertex out of range");
  ClassificationReport rep;
  rep.base_vertex = j;
  rep.eps_spec = eps_spec;
  if (check_irreducibility) detail::require_irreducible(model, rep.irreducibility);

  const Index d = model.dim(j);
  const PassageResult pr = sys.first_passage_map(j, j);
  rep.passage = pr.diagnostics;
  rep.min_choi_eigenvalue = pr.map.min_choi_eigenvalue();
  const auto perron = perron_eigen(pr.map.matrix(), vec(maximally_mixed(d)));
  if (!perron.converged) throw ConvergenceError("classify: spectral radius iteration did not converge");
  rep.lambda = perron.radius;
  rep.perron_residual = perron.residual;
  rep.perron_method = perron.method;
  Matrix rho = unvec(perron.eigenvector, d, d);
  // The Perron eigenmatrix is PSD up to a phase; fix it by the trace.
  const Complex tr = rho.trace();
  if (std::abs(tr) > 0.0) rho /= tr;
  rho = hermitian_part(rho);
  rep.perron_state = rho;
  rep.perron_min_eig = min_hermitian_eigenvalue(rho);

  rep.m = pr.map.adjoint_identity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(rep.m);
  rep.m_spectrum = es.eigenvalues();
  rep.m_eigenvectors = es.eigenvectors();
  const double top = rep.m_spectrum(rep.m_spectrum.size() - 1);

  if (rep.lambda >= 1.0 - eps_spec) {
    rep.recurrence = RecurrenceCase::Recurrent;
  } else if (top >= 1.0 - eps_spec) {
    rep.recurrence = RecurrenceCase::TransientQuantum;
  } else {
    rep.recurrence = RecurrenceCase::TransientUniform;
  }
  return rep;
}

inline ClassificationReport classify_trichotomy(const WalkModel& model, Index j, double eps_spec = 1e-8,
                                                PassageOptions opts = {}) {
  PassageSystem sys(model, opts);
  return classify_trichotomy(sys, j, eps_spec);
}

struct ReturnExtremes {
  double min_probability = 0.0;
  double max_probability = 0.0;
  Vector argmin;  ///< unit vector in the internal space at i attaining the minimum
  Vector argmax;
};

/// Extremes of the return probability Tr P_{i,i}(rho) over density matrices
/// rho at i; they are the extreme eigenvalues of P_{i,i}^*(Id).
inline ReturnExtremes return_probability_extremes(PassageSystem& sys, Index i, bool check_irreducibility = true) {
  const WalkModel& model = sys.model();
  if (i < 0 || i >= model.num_vertices()) throw PreconditionError("return extremes: vertex out of range");
  if (check_irreducibility) {
    IrreducibilityVerdict v;
    detail::require_irreducible(model, v);
  }
  const Matrix m = sys.first_passage_map(i, i).map.adjoint_identity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Index last = m.rows() - 1;
  ReturnExtremes out;
  out.min_probability = std::clamp(es.eigenvalues()(0), 0.0, 1.0);
  out.max_probability = std::clamp(es.eigenvalues()(last), 0.0, 1.0);
  out.argmin = es.eigenvectors().col(0);
  out.argmax = es.eigenvectors().col(last);
  return out;
}

inline ReturnExtremes return_probability_extremes(const WalkModel& model, Index i, PassageOptions opts = {}) {
  PassageSystem sys(model, opts);
  return return_probability_extremes(sys, i);
}

}  // namespace ctoqw
