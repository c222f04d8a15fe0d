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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctoqw/errors.hpp"
#include "ctoqw/linalg.hpp"

namespace ctoqw {

struct VertexSpace {
  std::string id;
  Index dim = 1;
};

/// R_i^j: maps the internal space at `from` to the one at `to` (dim_to x dim_from).
struct Jump {
  Index from = 0;
  Index to = 0;
  Matrix op;
};

/// Jump that leaves the model (truncation boundary); the walker is lost.
struct Escape {
  Index from = 0;
  Matrix op;
};

/// Model description as read from input; either the Hamiltonian or the
/// effective matrix G_i may be given per vertex (absent Hamiltonian means 0).
struct RawModel {
  struct RawJump {
    std::string from;
    std::string to;
    Matrix op;
  };
  struct RawEscape {
    std::string from;
    Matrix op;
  };
  std::vector<VertexSpace> vertices;
  std::map<std::string, Matrix> hamiltonians;
  std::map<std::string, Matrix> effective;
  std::vector<RawJump> jumps;
  std::vector<RawEscape> escapes;
  double tolerance = 1e-10;
};

/// A continuous-time open quantum walk restricted to finitely many vertices.
/// Immutable once built.
class WalkModel {
 public:
  WalkModel() = default;

  [[nodiscard]] Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  [[nodiscard]] const std::vector<VertexSpace>& vertices() const { return vertices_; }
  [[nodiscard]] const VertexSpace& vertex(Index i) const { return vertices_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] Index dim(Index i) const { return vertex(i).dim; }
  [[nodiscard]] const std::string& id(Index i) const { return vertex(i).id; }

  [[nodiscard]] Index index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown vertex '" + id + "'");
    return it->second;
  }
  [[nodiscard]] bool contains(const std::string& id) const { return index_.count(id) != 0; }

  [[nodiscard]] const Matrix& hamiltonian(Index i) const { return hamiltonians_.at(static_cast<std::size_t>(i)); }
  /// G_i = -i H_i - 1/2 sum_j R_i^{j*} R_i^j (escapes included).
  [[nodiscard]] const Matrix& effective(Index i) const { return effective_.at(static_cast<std::size_t>(i)); }

  [[nodiscard]] const std::vector<Jump>& jumps() const { return jumps_; }
  [[nodiscard]] const std::vector<Escape>& escapes() const { return escapes_; }
  [[nodiscard]] const std::vector<std::size_t>& outgoing(Index i) const { return outgoing_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<std::size_t>& incoming(Index i) const { return incoming_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<std::size_t>& escapes_from(Index i) const { return escapes_from_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] bool has_escapes() const { return !escapes_.empty(); }

  /// Pointer to R_from^to, or nullptr when the vertices are not joined.
  [[nodiscard]] const Matrix* jump_op(Index from, Index to) const {
    for (auto k : outgoing(from)) {
      if (jumps_[k].to == to) return &jumps_[k].op;
    }
    return nullptr;
  }

  [[nodiscard]] double tolerance() const { return tolerance_; }

  /// D = sum_i d_i.
  [[nodiscard]] Index total_dim() const {
    Index d = 0;
    for (const auto& v : vertices_) d += v.dim;
    return d;
  }

  /// C = sum over jumps (and escapes) of ||R R^*||; bounds the jump intensity.
  [[nodiscard]] double rate_constant() const {
    double c = 0.0;
    for (const auto& j : jumps_) c += op_norm(j.op * j.op.adjoint());
    for (const auto& e : escapes_) c += op_norm(e.op * e.op.adjoint());
    return c;
  }

  /// sum_j R_i^{j*} R_i^j over all outgoing jumps and escapes of vertex i.
  [[nodiscard]] Matrix outflow(Index i) const {
    Matrix s = Matrix::Zero(dim(i), dim(i));
    for (auto k : outgoing(i)) s += jumps_[k].op.adjoint() * jumps_[k].op;
    for (auto k : escapes_from(i)) s += escapes_[k].op.adjoint() * escapes_[k].op;
    return s;
  }

  /// Assembles a model without enforcing the generator identities. G_i is
  /// taken from `raw.effective` when present, otherwise computed from H_i;
  /// missing H_i are recovered from G_i. Only shape errors throw.
  static WalkModel assemble(const RawModel& raw) {
    WalkModel m;
    m.tolerance_ = raw.tolerance;
    if (!(raw.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    m.vertices_ = raw.vertices;
    const std::size_t n = m.vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = m.vertices_[i];
      if (v.dim < 1) throw ValidationError("vertex '" + v.id + "' has dimension < 1");
      if (!m.index_.emplace(v.id, static_cast<Index>(i)).second) {
        throw ValidationError("duplicate vertex id '" + v.id + "'");
      }
    }
    m.outgoing_.assign(n, {});
    m.incoming_.assign(n, {});
    m.escapes_from_.assign(n, {});
    for (const auto& rj : raw.jumps) {
      Jump j{m.index_of(rj.from), m.index_of(rj.to), rj.op};
      if (j.from == j.to) throw ValidationError("self-loop jump at vertex '" + rj.from + "'");
      if (j.op.rows() != m.dim(j.to) || j.op.cols() != m.dim(j.from)) {
        std::ostringstream os;
        os << "jump " << rj.from << "->" << rj.to << " has shape " << j.op.rows() << "x"
           << j.op.cols() << ", expected " << m.dim(j.to) << "x" << m.dim(j.from);
        throw ValidationError(os.str());
      }
      if (m.jump_op(j.from, j.to) != nullptr) {
        throw ValidationError("duplicate jump " + rj.from + "->" + rj.to);
      }
      m.outgoing_[static_cast<std::size_t>(j.from)].push_back(m.jumps_.size());
      m.incoming_[static_cast<std::size_t>(j.to)].push_back(m.jumps_.size());
      m.jumps_.push_back(std::move(j));
    }
    for (const auto& re : raw.escapes) {
      Escape e{m.index_of(re.from), re.op};
      if (e.op.cols() != m.dim(e.from) || e.op.rows() < 1) {
        throw ValidationError("escape operator at '" + re.from + "' has wrong column count");
      }
      m.escapes_from_[static_cast<std::size_t>(e.from)].push_back(m.escapes_.size());
      m.escapes_.push_back(std::move(e));
    }
    m.hamiltonians_.resize(n);
    m.effective_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = m.vertices_[i];
      const Index d = v.dim;
      const Matrix half_outflow = 0.5 * m.outflow(static_cast<Index>(i));
      auto check_shape = [&](const Matrix& x, const char* what) {
        if (x.rows() != d || x.cols() != d) {
          throw ValidationError(std::string(what) + " at vertex '" + v.id + "' is not " +
                                std::to_string(d) + "x" + std::to_string(d));
        }
      };
      auto h_it = raw.hamiltonians.find(v.id);
      auto g_it = raw.effective.find(v.id);
      if (h_it != raw.hamiltonians.end()) check_shape(h_it->second, "Hamiltonian");
      if (g_it != raw.effective.end()) check_shape(g_it->second, "effective matrix");
      if (g_it != raw.effective.end()) {
        m.effective_[i] = g_it->second;
        m.hamiltonians_[i] = h_it != raw.hamiltonians.end()
                                 ? h_it->second
                                 : Matrix(kI * (g_it->second + half_outflow));
      } else {
        m.hamiltonians_[i] = h_it != raw.hamiltonians.end() ? h_it->second : Matrix::Zero(d, d);
        m.effective_[i] = -kI * m.hamiltonians_[i] - half_outflow;
      }
    }
    return m;
  }

 private:
  std::vector<VertexSpace> vertices_;
  std::unordered_map<std::string, Index> index_;
  std::vector<Matrix> hamiltonians_;
  std::vector<Matrix> effective_;
  std::vector<Jump> jumps_;
  std::vector<Escape> escapes_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::vector<std::size_t>> incoming_;
  std::vector<std::vector<std::size_t>> escapes_from_;
  double tolerance_ = 1e-10;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  double residual = 0.0;
  double threshold = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  [[nodiscard]] bool ok() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  [[nodiscard]] const ValidationCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  /// Largest residual among checks whose name starts with `prefix`.
  [[nodiscard]] double max_residual(const std::string& prefix) const {
    double r = 0.0;
    for (const auto& c : checks) {
      if (c.name.rfind(prefix, 0) == 0) r = std::max(r, c.residual);
    }
    return r;
  }

  [[nodiscard]] std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
      if (!c.passed) os << c.name << ": residual " << c.residual << " > " << c.threshold << "\n";
    }
    return os.str();
  }
};

inline double hermiticity_threshold(const Matrix& h) { return 1e-12 * (1.0 + op_norm(h)); }

/// Per-vertex zero-sum residual ||G_i + G_i^* + sum_j R_i^{j*} R_i^j||.
inline double zero_sum_residual(const WalkModel& model, Index i) {
  const Matrix& g = model.effective(i);
  return op_norm(g + g.adjoint() + model.outflow(i));
}

inline ValidationReport validate(const WalkModel& model) {
  ValidationReport rep;
  for (Index i = 0; i < model.num_vertices(); ++i) {
    const auto& id = model.id(i);
    const Matrix& h = model.hamiltonian(i);
    const double hres = hermiticity_residual(h);
    const double hthr = hermiticity_threshold(h);
    rep.checks.push_back({"hermitian[" + id + "]", hres <= hthr, hres, hthr});
    const double zres = zero_sum_residual(model, i);
    rep.checks.push_back({"zero_sum[" + id + "]", zres <= model.tolerance(), zres, model.tolerance()});
    // G_i must agree with its definition from H_i and the outgoing jumps.
    const Matrix expected = -kI * h - 0.5 * model.outflow(i);
    const double gres = op_norm(model.effective(i) - expected);
    rep.checks.push_back({"effective[" + id + "]", gres <= model.tolerance(), gres, model.tolerance()});
  }
  for (const auto& j : model.jumps()) {
    const bool ok = j.from != j.to;
    rep.checks.push_back({"no_self_loop[" + model.id(j.from) + "]", ok, ok ? 0.0 : 1.0, 0.0});
  }
  return rep;
}

/// Builds a model and enforces every structural invariant.
inline WalkModel build_walk(const RawModel& raw) {
  WalkModel m = WalkModel::assemble(raw);
  for (Index i = 0; i < m.num_vertices(); ++i) {
    const Matrix& h = m.hamiltonian(i);
    const double hres = hermiticity_residual(h);
    if (raw.effective.count(m.id(i)) != 0 && raw.hamiltonians.count(m.id(i)) == 0) {
      if (hres > m.tolerance() * (1.0 + op_norm(h))) {
        std::ostringstream os;
        os << "recovered Hamiltonian at vertex '" << m.id(i)
           << "' is not Hermitian (residual " << hres << "); model inconsistent";
        throw ValidationError(os.str());
      }
    }
  }
  const auto rep = validate(m);
  if (!rep.ok()) throw ValidationError("model failed validation:\n" + rep.summary());
  return m;
}

/// Embeds a classical continuous-time Markov chain with generator Q as a walk
/// with one-dimensional internal spaces, R_i^j = sqrt(q_ij). `escape_rates`
/// (optional) gives per-vertex rates of leaving the state space; rows must then
/// satisfy sum_j q_ij + escape_i = 0.
inline WalkModel classical_embed(const Eigen::MatrixXd& q,
                                 const std::vector<double>& escape_rates = {},
                                 const std::vector<std::string>& labels = {}) {
  const Index n = q.rows();
  if (q.cols() != n) throw ValidationError("generator must be square");
  if (!escape_rates.empty() && static_cast<Index>(escape_rates.size()) != n) {
    throw ValidationError("escape rate vector has wrong length");
  }
  if (!labels.empty() && static_cast<Index>(labels.size()) != n) {
    throw ValidationError("label vector has wrong length");
  }
  RawModel raw;
  for (Index i = 0; i < n; ++i) {
    raw.vertices.push_back({labels.empty() ? std::to_string(i) : labels[static_cast<std::size_t>(i)], 1});
  }
  const double scale = 1.0 + q.cwiseAbs().maxCoeff();
  for (Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Index j = 0; j < n; ++j) {
      row += q(i, j);
      if (i == j) continue;
      if (q(i, j) < 0.0) {
        throw ValidationError("negative off-diagonal rate q(" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
      if (q(i, j) > 0.0) {
        raw.jumps.push_back({raw.vertices[static_cast<std::size_t>(i)].id,
                             raw.vertices[static_cast<std::size_t>(j)].id,
                             Matrix::Constant(1, 1, std::sqrt(q(i, j)))});
      }
    }
    const double esc = escape_rates.empty() ? 0.0 : escape_rates[static_cast<std::size_t>(i)];
    if (esc < 0.0) throw ValidationError("negative escape rate");
    if (std::abs(row + esc) > 1e-10 * scale) {
      throw ValidationError("row " + std::to_string(i) + " of the generator is not conservative");
    }
    if (esc > 0.0) {
      raw.escapes.push_back({raw.vertices[static_cast<std::size_t>(i)].id,
                             Matrix::Constant(1, 1, std::sqrt(esc))});
    }
  }
  return build_walk(raw);
}

/// Reads the classical generator back from a model with scalar internal spaces.
inline Eigen::MatrixXd classical_rates(const WalkModel& model) {
  const Index n = model.num_vertices();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (model.dim(i) != 1) throw PreconditionError("classical_rates needs one-dimensional internal spaces");
  }
  for (const auto& j : model.jumps()) {
    const double r = std::norm(j.op(0, 0));
    q(j.from, j.to) += r;
    q(j.from, j.from) -= r;
  }
  for (const auto& e : model.escapes()) q(e.from, e.from) -= e.op.squaredNorm();
  return q;
}

/// Vertex-indexed family of positive matrices (an element of the block-diagonal sector).
struct BlockState {
  std::vector<Matrix> blocks;

  [[nodiscard]] double total_trace() const {
    double t = 0.0;
    for (const auto& b : blocks) t += b.trace().real();
    return t;
  }

  static BlockState zero(const WalkModel& model) {
    BlockState s;
    for (const auto& v : model.vertices()) s.blocks.push_back(Matrix::Zero(v.dim, v.dim));
    return s;
  }

  static BlockState localized(const WalkModel& model, Index vertex, const Matrix& rho) {
    BlockState s = zero(model);
    if (rho.rows() != model.dim(vertex) || rho.cols() != model.dim(vertex)) {
      throw ValidationError("state has wrong dimension for vertex '" + model.id(vertex) + "'");
    }
    s.blocks[static_cast<std::size_t>(vertex)] = rho;
    return s;
  }

  /// Throws ValidationError unless every block is PSD (to -tol) and, when
  /// `unit_trace`, the traces sum to one within tol.
  void validate(const WalkModel& model, double tol = 1e-10, bool unit_trace = true) const {
    if (static_cast<Index>(blocks.size()) != model.num_vertices()) {
      throw ValidationError("block state has wrong number of blocks");
    }
    for (Index i = 0; i < model.num_vertices(); ++i) {
      const auto& b = blocks[static_cast<std::size_t>(i)];
      if (b.rows() != model.dim(i) || b.cols() != model.dim(i)) {
        throw ValidationError("block at vertex '" + model.id(i) + "' has wrong shape");
      }
      if (hermiticity_residual(b) > tol) {
        throw ValidationError("block at vertex '" + model.id(i) + "' is not Hermitian");
      }
      if (min_hermitian_eigenvalue(b) < -tol) {
        throw ValidationError("block at vertex '" + model.id(i) + "' is not positive");
      }
    }
    if (unit_trace && std::abs(total_trace() - 1.0) > tol) {
      throw ValidationError("block state total trace is not 1");
    }
  }
};

/// A walker localized at one vertex with internal density matrix rho.
struct SitedState {
  Index vertex = 0;
  Matrix rho;

  void validate(const WalkModel& model, double tol = 1e-10) const {
    if (vertex < 0 || vertex >= model.num_vertices()) throw ValidationError("vertex out of range");
    if (rho.rows() != model.dim(vertex) || rho.cols() != model.dim(vertex)) {
      throw ValidationError("density matrix has wrong dimension for vertex '" + model.id(vertex) + "'");
    }
    if (hermiticity_residual(rho) > tol || min_hermitian_eigenvalue(rho) < -tol ||
        std::abs(rho.trace().real() - 1.0) > tol) {
      throw ValidationError("not a density matrix at vertex '" + model.id(vertex) + "'");
    }
  }

  [[nodiscard]] BlockState as_block_state(const WalkModel& model) const {
    return BlockState::localized(model, vertex, rho);
  }
};

inline Matrix basis_projector(Index d, Index k) {
  Matrix p = Matrix::Zero(d, d);
  p(k, k) = 1.0;
  return p;
}

inline Matrix maximally_mixed(Index d) { return Matrix::Identity(d, d) / static_cast<double>(d); }

}  // namespace ctoqw
