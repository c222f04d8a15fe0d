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
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctoqw/linalg.hpp"
#include "ctoqw/model.hpp"
#include "ctoqw/superop.hpp"

namespace ctoqw {

/// A jump path with absolute jump times 0 < t_1 < ... < t_n.
struct Path {
  std::vector<Index> vertices;  ///< i_0, ..., i_n
  std::vector<double> times;    ///< t_1, ..., t_n
};

/// R(xi) = R_{i_{n-1}}^{i_n} e^{(t_n - t_{n-1}) G_{i_{n-1}}} ... R_{i_0}^{i_1} e^{t_1 G_{i_0}};
/// the identity on the internal space of i_0 for the empty path.
inline Matrix path_operator(const WalkModel& model, const Path& xi) {
  if (xi.vertices.empty()) throw PreconditionError("path_operator: empty vertex sequence");
  if (xi.times.size() + 1 != xi.vertices.size()) {
    throw PreconditionError("path_operator: need one time per jump");
  }
  Matrix r = Matrix::Identity(model.dim(xi.vertices[0]), model.dim(xi.vertices[0]));
  double last = 0.0;
  for (std::size_t k = 0; k < xi.times.size(); ++k) {
    const Index from = xi.vertices[k];
    const Index to = xi.vertices[k + 1];
    if (!(xi.times[k] >= last)) throw PreconditionError("path_operator: jump times must increase");
    const Matrix* jump = model.jump_op(from, to);
    if (jump == nullptr) {
      throw PreconditionError("path_operator: no jump operator " + model.id(from) + "->" + model.id(to));
    }
    r = (*jump) * expm((xi.times[k] - last) * model.effective(from)) * r;
    last = xi.times[k];
  }
  return r;
}

/// T_t(xi) = e^{(t - t_n) G_{i_n}} R(xi).
inline Matrix path_propagator(const WalkModel& model, const Path& xi, double t) {
  const double last = xi.times.empty() ? 0.0 : xi.times.back();
  if (t < last) throw PreconditionError("path_propagator: t before the last jump");
  return expm((t - last) * model.effective(xi.vertices.back())) * path_operator(model, xi);
}

/// Y = int_0^inf e^{sG} X e^{sG^*} ds, the unique solution of G Y + Y G^* = -X.
class DwellIntegral {
 public:
  explicit DwellIntegral(const Matrix& g, double eps_stab = 1e-9) : g_(g), solver_(g) {
    if (g.rows() > 0 && solver_.abscissa() >= -eps_stab) {
      const Complex ev = solver_.eigenvalue_with_max_real();
      std::ostringstream os;
      os << "non-escaping vertex: eigenvalue " << ev.real() << (ev.imag() < 0 ? "-" : "+")
         << std::abs(ev.imag()) << "i of G touches the imaginary axis; dwell integral diverges";
      throw PreconditionError(os.str());
    }
  }

  [[nodiscard]] Matrix operator()(const Matrix& x) const {
    Matrix y = solver_.solve(x);
    const double res = residual(y, x);
    if (res > 1e-10 * (1.0 + op_norm(x))) {
      throw ConvergenceError("dwell integral: Lyapunov residual " + std::to_string(res) + " too large");
    }
    return y;
  }

  [[nodiscard]] double residual(const Matrix& y, const Matrix& x) const {
    return op_norm(g_ * y + y * g_.adjoint() + x);
  }

  /// The dwell map as a superoperator (d -> d).
  [[nodiscard]] SuperOp superop() const {
    const Index d = g_.rows();
    Matrix m(d * d, d * d);
    for (Index b = 0; b < d; ++b) {
      for (Index a = 0; a < d; ++a) {
        Matrix e = Matrix::Zero(d, d);
        e(a, b) = 1.0;
        m.col(a + b * d) = vec((*this)(e));
      }
    }
    return {d, d, std::move(m)};
  }

 private:
  Matrix g_;
  LyapunovSolver solver_;
};

inline Matrix dwell_integral(const Matrix& g, const Matrix& x, double eps_stab = 1e-9) {
  return DwellIntegral(g, eps_stab)(x);
}

/// J_{k->l}(rho) = R_k^l D_k(rho) R_k^{l*} for every jump of the model, in
/// model.jumps() order. Vertices without outgoing jumps get no kernel.
inline std::vector<SuperOp> jump_kernel(const WalkModel& model, double eps_stab = 1e-9) {
  std::vector<std::optional<SuperOp>> dwell(static_cast<std::size_t>(model.num_vertices()));
  std::vector<SuperOp> out;
  out.reserve(model.jumps().size());
  for (const auto& j : model.jumps()) {
    auto& d = dwell[static_cast<std::size_t>(j.from)];
    if (!d) d = DwellIntegral(model.effective(j.from), eps_stab).superop();
    out.push_back(d->then(SuperOp::sandwich(j.op)));
  }
  return out;
}

struct PassageOptions {
  double tol = 1e-8;
  int max_iter = 1'000'000;
  double eps_stab = 1e-9;
  int stall_iterations = 10;
};

struct PassageDiagnostics {
  std::string method;         ///< "solve" or "series"
  double taboo_radius = 0.0;  ///< spectral radius of the taboo kernel
  int iterations = 0;
  double last_increment = 0.0;
  bool converged = true;
};

struct PassageResult {
  SuperOp map;
  PassageDiagnostics diagnostics;
};

/// One dwell-then-jump step of the walk restricted to paths avoiding a taboo
/// vertex, as a block operator on the matrices at the remaining vertices.
struct TabooKernel {
  Index taboo = 0;
  std::vector<Index> vertices;  ///< the non-taboo vertices, in model order
  std::vector<Index> offsets;   ///< vec offsets, one per entry of `vertices`, plus the total
  Matrix phi;                   ///< one step, non-taboo -> non-taboo

  [[nodiscard]] Index size() const { return offsets.back(); }

  /// Largest eigenvalue over the blocks of Phi^*(Id); at most 1 when sub-stochastic.
  [[nodiscard]] double max_adjoint_identity_eigenvalue() const {
    const Vector out = phi.adjoint() * identity_vector();
    double m = 0.0;
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const Index d = offsets[k + 1] - offsets[k];
      const Index dd = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
      m = std::max(m, max_hermitian_eigenvalue(unvec(out.segment(offsets[k], d), dd, dd)));
    }
    return m;
  }

  [[nodiscard]] Vector identity_vector() const {
    Vector v = Vector::Zero(size());
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const Index d = offsets[k + 1] - offsets[k];
      const Index dd = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(d))));
      v.segment(offsets[k], d) = vec(Matrix::Identity(dd, dd));
    }
    return v;
  }
};

/// Exact first-passage machinery for one model: dwell integrals and jump
/// kernels are computed once and shared across (source, target) pairs.
class PassageSystem {
 public:
  explicit PassageSystem(const WalkModel& model, PassageOptions opts = {})
      : model_(&model), opts_(opts), kernels_(static_cast<std::size_t>(model.jumps().size())) {}

  [[nodiscard]] const WalkModel& model() const { return *model_; }
  [[nodiscard]] const PassageOptions& options() const { return opts_; }

  /// J for jump index k (lazily computed).
  const SuperOp& kernel(std::size_t k) {
    auto& slot = kernels_[k];
    if (!slot) {
      const auto& j = model_->jumps()[k];
      slot = dwell_superop(j.from).then(SuperOp::sandwich(j.op));
    }
    return *slot;
  }

  const SuperOp& dwell_superop(Index v) {
    auto it = dwell_.find(v);
    if (it == dwell_.end()) {
      it = dwell_.emplace(v, DwellIntegral(model_->effective(v), opts_.eps_stab).superop()).first;
    }
    return it->second;
  }

  TabooKernel taboo_kernel(Index j) {
    TabooKernel tk;
    tk.taboo = j;
    std::vector<Index> pos(static_cast<std::size_t>(model_->num_vertices()), -1);
    Index off = 0;
    for (Index v = 0; v < model_->num_vertices(); ++v) {
      if (v == j) continue;
      pos[static_cast<std::size_t>(v)] = static_cast<Index>(tk.vertices.size());
      tk.vertices.push_back(v);
      tk.offsets.push_back(off);
      off += model_->dim(v) * model_->dim(v);
    }
    tk.offsets.push_back(off);
    tk.phi = Matrix::Zero(off, off);
    for (std::size_t k = 0; k < model_->jumps().size(); ++k) {
      const auto& jp = model_->jumps()[k];
      if (jp.from == j || jp.to == j) continue;
      const auto& jk = kernel(k);
      const Index r = tk.offsets[static_cast<std::size_t>(pos[static_cast<std::size_t>(jp.to)])];
      const Index c = tk.offsets[static_cast<std::size_t>(pos[static_cast<std::size_t>(jp.from)])];
      tk.phi.block(r, c, jk.matrix().rows(), jk.matrix().cols()) += jk.matrix();
    }
    positions_ = std::move(pos);
    return tk;
  }

  /// P_{i,j}: first-passage map from the internal space at i to the one at j.
  PassageResult first_passage_map(Index i, Index j) {
    Assembled a = assemble(i, j);
    PassageResult res;
    auto& diag = res.diagnostics;
    const Index n = a.taboo.size();
    const Index src = model_->dim(i);
    const Index dst = model_->dim(j);
    if (n == 0) {
      diag.method = "solve";
      res.map = SuperOp(src, dst, Matrix::Zero(dst * dst, src * src));
      return res;
    }
    const auto perron = perron_eigen(a.taboo.phi, a.taboo.identity_vector(), 1e-10, 20000);
    diag.taboo_radius = perron.converged ? perron.radius : 1.0;
    if (perron.converged && perron.radius < 1.0 - opts_.tol) {
      diag.method = "solve";
      const Matrix lhs = Matrix::Identity(n, n) - a.taboo.phi;
      const Matrix x = lhs.partialPivLu().solve(a.source);
      res.map = SuperOp(src, dst, a.sink * x);
      return res;
    }
    diag.method = "series";
    const auto probes = hermitian_probes(src);
    Matrix x = a.source;
    Matrix acc = a.sink * x;
    int quiet = 0;
    for (int it = 1; it <= opts_.max_iter; ++it) {
      x = a.taboo.phi * x;
      const Matrix inc = a.sink * x;
      acc += inc;
      double worst = 0.0;
      for (const auto& p : probes) {
        worst = std::max(worst, std::abs(unvec(inc * vec(p), dst, dst).trace()));
      }
      diag.iterations = it;
      diag.last_increment = worst;
      quiet = worst < opts_.tol ? quiet + 1 : 0;
      if (quiet >= opts_.stall_iterations) {
        res.map = SuperOp(src, dst, std::move(acc));
        return res;
      }
    }
    diag.converged = false;
    std::ostringstream os;
    os << "first_passage_map: series did not converge in " << opts_.max_iter
       << " iterations (last increment " << diag.last_increment << ")";
    throw ConvergenceError(os.str());
  }

  /// Partial sums of P_{i,j} over paths with at most m jumps, m = 1..max_jumps.
  std::vector<SuperOp> partial_sums(Index i, Index j, int max_jumps) {
    Assembled a = assemble(i, j);
    const Index src = model_->dim(i);
    const Index dst = model_->dim(j);
    std::vector<SuperOp> out;
    const int first = (i == j) ? 2 : 1;  // the walker must leave j before returning
    Matrix acc = Matrix::Zero(dst * dst, src * src);
    Matrix x = a.source;
    for (int m = 1; m <= max_jumps; ++m) {
      if (m >= first) {
        if (m > first) x = a.taboo.phi * x;
        if (a.taboo.size() > 0) acc += a.sink * x;
      }
      out.emplace_back(src, dst, acc);
    }
    return out;
  }

  /// Tr D_j(X) with D_j the dwell integral at j.
  Complex dwell_trace(Index j, const Matrix& x) {
    return unvec(dwell_superop(j).matrix() * vec(x), model_->dim(j), model_->dim(j)).trace();
  }

 private:
  struct Assembled {
    TabooKernel taboo;
    Matrix source;  ///< taboo-space image of the initial state after leaving i
    Matrix sink;    ///< one dwell-then-jump step into j
  };

  Assembled assemble(Index i, Index j) {
    if (i < 0 || i >= model_->num_vertices() || j < 0 || j >= model_->num_vertices()) {
      throw PreconditionError("first passage: vertex out of range");
    }
    Assembled a;
    a.taboo = taboo_kernel(j);
    const Index n = a.taboo.size();
    const Index src = model_->dim(i);
    const Index dst = model_->dim(j);
    const auto& pos = positions_;
    a.source = Matrix::Zero(n, src * src);
    if (i != j) {
      a.source.block(a.taboo.offsets[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])], 0,
                     src * src, src * src) = Matrix::Identity(src * src, src * src);
    } else {
      for (auto k : model_->outgoing(j)) {
        const auto& jp = model_->jumps()[k];
        const auto& jk = kernel(k);
        a.source.block(a.taboo.offsets[static_cast<std::size_t>(pos[static_cast<std::size_t>(jp.to)])], 0,
                       jk.matrix().rows(), jk.matrix().cols()) += jk.matrix();
      }
    }
    a.sink = Matrix::Zero(dst * dst, n);
    for (auto k : model_->incoming(j)) {
      const auto& jp = model_->jumps()[k];
      const auto& jk = kernel(k);
      a.sink.block(0, a.taboo.offsets[static_cast<std::size_t>(pos[static_cast<std::size_t>(jp.from)])],
                   jk.matrix().rows(), jk.matrix().cols()) += jk.matrix();
    }
    return a;
  }

  static std::vector<Matrix> hermitian_probes(Index d) {
    std::vector<Matrix> p;
    for (Index a = 0; a < d; ++a) {
      for (Index b = a; b < d; ++b) {
        Matrix e = Matrix::Zero(d, d);
        if (a == b) {
          e(a, a) = 1.0;
          p.push_back(e);
        } else {
          e(a, b) = e(b, a) = 1.0;
          p.push_back(e);
          e(a, b) = kI;
          e(b, a) = -kI;
          p.push_back(e);
        }
      }
    }
    return p;
  }

  const WalkModel* model_;
  PassageOptions opts_;
  std::vector<std::optional<SuperOp>> kernels_;
  std::map<Index, SuperOp> dwell_;
  std::vector<Index> positions_;
};

inline PassageResult first_passage_map(const WalkModel& model, Index i, Index j, PassageOptions opts = {}) {
  PassageSystem sys(model, opts);
  return sys.first_passage_map(i, j);
}

struct ReachProbability {
  double value = 0.0;
  double clamped_by = 0.0;  ///< |raw - value|
};

/// Tr P(rho) clamped to [0, 1].
inline ReachProbability reach_probability(const SuperOp& p_map, const Matrix& rho) {
  if (rho.rows() != p_map.source_dim()) throw PreconditionError("reach_probability: dimension mismatch");
  const double raw = p_map.apply(rho).trace().real();
  const double v = std::clamp(raw, 0.0, 1.0);
  return {v, std::abs(raw - v)};
}

struct OccupationResult {
  bool infinite = false;
  double value = std::numeric_limits<double>::infinity();
  double return_radius = 0.0;  ///< spectral radius of P_{j,j}
};

/// E_{i,rho}(n_j): expected total time spent at j. Finite iff the return map
/// P_{j,j} has spectral radius below 1 - tol.
inline OccupationResult expected_occupation(PassageSystem& sys, Index i, Index j, const Matrix& rho) {
  const auto& model = sys.model();
  if (rho.rows() != model.dim(i)) throw PreconditionError("expected_occupation: dimension mismatch");
  const Index d = model.dim(j);
  const auto pjj = sys.first_passage_map(j, j).map;
  const auto perron = perron_eigen(pjj.matrix(), vec(Matrix::Identity(d, d)));
  if (!perron.converged) throw ConvergenceError("expected_occupation: spectral radius did not converge");
  OccupationResult out;
  out.return_radius = perron.radius;
  // Touch the dwell integral at j so a non-escaping target fails loudly.
  (void)sys.dwell_superop(j);
  if (perron.radius >= 1.0 - sys.options().tol) {
    out.infinite = true;
    return out;
  }
  const Matrix sigma = (i == j) ? pjj.apply(rho) : sys.first_passage_map(i, j).map.apply(rho);
  const Matrix visits =
      unvec((Matrix::Identity(d * d, d * d) - pjj.matrix()).partialPivLu().solve(vec(sigma)), d, d);
  double value = sys.dwell_trace(j, visits).real();
  if (i == j) value += sys.dwell_trace(j, rho).real();
  out.value = value;
  return out;
}

inline OccupationResult expected_occupation(const WalkModel& model, Index i, Index j, const Matrix& rho,
                                            PassageOptions opts = {}) {
  PassageSystem sys(model, opts);
  return expected_occupation(sys, i, j, rho);
}

}  // namespace ctoqw
