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

#include "ctoqw/linalg.hpp"

namespace ctoqw {

/// Evaluates t -> e^{tG} and the no-jump evolution rho -> e^{tG} rho e^{tG^*}
/// for a fixed effective matrix G. Diagonalizable, well-conditioned G go
/// through a cached eigendecomposition; everything else through expm.
class DwellPropagator {
 public:
  DwellPropagator() = default;

  explicit DwellPropagator(const Matrix& g) : g_(g), d_(g.rows()) {
    if (d_ == 0) return;
    Eigen::ComplexEigenSolver<Matrix> es(g);
    if (es.info() != Eigen::Success) return;
    const Matrix& v = es.eigenvectors();
    Eigen::JacobiSVD<Matrix> svd(v);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e8) return;
    const Matrix vinv = v.inverse();
    const Eigen::VectorXcd lam = es.eigenvalues();
    if ((v * lam.asDiagonal() * vinv - g).norm() > 1e-12 * (1.0 + g.norm())) return;
    v_ = v;
    vinv_ = vinv;
    lambda_ = lam;
    gram_ = v.adjoint() * v;
    diagonal_ = true;
  }

  [[nodiscard]] Index dim() const { return d_; }
  [[nodiscard]] const Matrix& generator() const { return g_; }
  [[nodiscard]] bool diagonalized() const { return diagonal_; }

  [[nodiscard]] Matrix propagator(double t) const {
    if (diagonal_) return v_ * (t * lambda_).array().exp().matrix().asDiagonal() * vinv_;
    return expm(t * g_);
  }

  /// Unnormalized e^{tG} rho e^{tG^*}.
  [[nodiscard]] Matrix evolve(const Matrix& rho, double t) const {
    const Matrix p = propagator(t);
    return p * rho * p.adjoint();
  }

  /// s(t) = Tr(e^{tG} rho e^{tG^*}) as a function of t, for a fixed rho.
  class Survival {
   public:
    [[nodiscard]] double value(double t) const {
      if (owner_->diagonal_) {
        Complex s{0.0, 0.0};
        for (std::size_t k = 0; k < coeff_.size(); ++k) s += coeff_[k] * std::exp(t * rate_[k]);
        return s.real();
      }
      return owner_->evolve(rho_, t).trace().real();
    }

    [[nodiscard]] double derivative(double t) const {
      if (owner_->diagonal_) {
        Complex s{0.0, 0.0};
        for (std::size_t k = 0; k < coeff_.size(); ++k) {
          s += coeff_[k] * rate_[k] * std::exp(t * rate_[k]);
        }
        return s.real();
      }
      const Matrix sigma = owner_->evolve(rho_, t);
      const Matrix& g = owner_->g_;
      return ((g + g.adjoint()) * sigma).trace().real();
    }

    /// Exact limit for diagonalized generators; NaN otherwise.
    [[nodiscard]] double limit() const { return limit_; }

    /// Total decay rate -s'(t)/s(t) bound: ||G + G^*||.
    [[nodiscard]] double max_rate() const { return max_rate_; }

   private:
    friend class DwellPropagator;
    const DwellPropagator* owner_ = nullptr;
    Matrix rho_;
    std::vector<Complex> coeff_;
    std::vector<Complex> rate_;
    double limit_ = std::nan("");
    double max_rate_ = 0.0;
  };

  [[nodiscard]] Survival survival(const Matrix& rho) const {
    Survival s;
    s.owner_ = this;
    s.rho_ = rho;
    s.max_rate_ = op_norm(g_ + g_.adjoint());
    if (!diagonal_) return s;
    const Matrix a = vinv_ * rho * vinv_.adjoint();
    double lim = 0.0;
    constexpr double kFlat = 1e-13;
    for (Index i = 0; i < d_; ++i) {
      for (Index j = 0; j < d_; ++j) {
        const Complex c = a(i, j) * gram_(j, i);
        if (c == Complex{0.0, 0.0}) continue;
        const Complex r = lambda_(i) + std::conj(lambda_(j));
        s.coeff_.push_back(c);
        s.rate_.push_back(r);
        if (std::abs(r.real()) < kFlat && std::abs(r.imag()) < kFlat) lim += c.real();
      }
    }
    s.limit_ = lim;
    return s;
  }

 private:
  Matrix g_;
  Index d_ = 0;
  bool diagonal_ = false;
  Matrix v_;
  Matrix vinv_;
  Matrix gram_;
  Eigen::VectorXcd lambda_;
};

}  // namespace ctoqw
