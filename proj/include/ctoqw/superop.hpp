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

#include "ctoqw/errors.hpp"
#include "ctoqw/linalg.hpp"

namespace ctoqw {

/// Linear map from source_dim x source_dim matrices to target_dim x
/// target_dim matrices, stored as its (target_dim^2 x source_dim^2) matrix in
/// the column-stacking vectorization.
class SuperOp {
 public:
  SuperOp() = default;

  SuperOp(Index source_dim, Index target_dim, Matrix m)
      : src_(source_dim), dst_(target_dim), m_(std::move(m)) {
    if (m_.rows() != dst_ * dst_ || m_.cols() != src_ * src_) {
      throw ValidationError("SuperOp: matrix shape does not match dimensions");
    }
  }

  static SuperOp zero(Index source_dim, Index target_dim) {
    return {source_dim, target_dim, Matrix::Zero(target_dim * target_dim, source_dim * source_dim)};
  }

  static SuperOp identity(Index d) { return {d, d, Matrix::Identity(d * d, d * d)}; }

  /// rho -> A rho A^*.
  static SuperOp sandwich(const Matrix& a) { return {a.cols(), a.rows(), sandwich_superop(a, a)}; }

  /// rho -> sum_k K_k rho K_k^*.
  static SuperOp from_kraus(const std::vector<Matrix>& kraus) {
    if (kraus.empty()) throw ValidationError("from_kraus: empty Kraus list");
    SuperOp s = zero(kraus.front().cols(), kraus.front().rows());
    for (const auto& k : kraus) s.m_ += sandwich_superop(k, k);
    return s;
  }

  [[nodiscard]] Index source_dim() const { return src_; }
  [[nodiscard]] Index target_dim() const { return dst_; }
  [[nodiscard]] const Matrix& matrix() const { return m_; }

  [[nodiscard]] Matrix apply(const Matrix& rho) const { return unvec(m_ * vec(rho), dst_, dst_); }

  /// Hilbert–Schmidt adjoint: Tr(X^* P(rho)) = Tr(P^*(X)^* rho).
  [[nodiscard]] Matrix apply_adjoint(const Matrix& x) const {
    return unvec(m_.adjoint() * vec(x), src_, src_);
  }

  /// P^*(Id); rho -> Tr(P(rho)) equals rho -> Tr(rho M) with M this matrix.
  [[nodiscard]] Matrix adjoint_identity() const {
    return hermitian_part(apply_adjoint(Matrix::Identity(dst_, dst_)));
  }

  /// `next` after `this`.
  [[nodiscard]] SuperOp then(const SuperOp& next) const {
    if (next.src_ != dst_) throw ValidationError("SuperOp::then: dimension mismatch");
    return {src_, next.dst_, next.m_ * m_};
  }

  SuperOp& operator+=(const SuperOp& o) {
    if (o.src_ != src_ || o.dst_ != dst_) throw ValidationError("SuperOp: dimension mismatch");
    m_ += o.m_;
    return *this;
  }

  /// Choi matrix sum_{ab} E_ab (x) P(E_ab), PSD iff the map is completely positive.
  [[nodiscard]] Matrix choi() const {
    Matrix c = Matrix::Zero(src_ * dst_, src_ * dst_);
    for (Index a = 0; a < src_; ++a) {
      for (Index b = 0; b < src_; ++b) {
        // E_ab has vec index a + b*src.
        c.block(a * dst_, b * dst_, dst_, dst_) = unvec(m_.col(a + b * src_), dst_, dst_);
      }
    }
    return c;
  }

  [[nodiscard]] double min_choi_eigenvalue() const { return min_hermitian_eigenvalue(choi()); }

  /// Largest eigenvalue of P^*(Id); at most 1 for trace-nonincreasing maps.
  [[nodiscard]] double max_adjoint_identity_eigenvalue() const {
    return max_hermitian_eigenvalue(adjoint_identity());
  }

  /// Kraus operators from the Choi eigendecomposition (eigenvalues below
  /// `tol` times the largest dropped).
  [[nodiscard]] std::vector<Matrix> kraus(double tol = 1e-12) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(choi()));
    const auto& ev = es.eigenvalues();
    const double top = ev.size() > 0 ? std::max(ev.maxCoeff(), 0.0) : 0.0;
    std::vector<Matrix> out;
    for (Index k = ev.size() - 1; k >= 0; --k) {
      if (ev(k) <= tol * top || ev(k) <= 0.0) continue;
      Matrix kr(dst_, src_);
      const Vector v = std::sqrt(ev(k)) * es.eigenvectors().col(k);
      for (Index a = 0; a < src_; ++a) kr.col(a) = v.segment(a * dst_, dst_);
      out.push_back(std::move(kr));
    }
    return out;
  }

 private:
  Index src_ = 0;
  Index dst_ = 0;
  Matrix m_;
};

}  // namespace ctoqw
