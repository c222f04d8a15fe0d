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
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctoqw/errors.hpp"

namespace ctoqw {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Column-stacking vectorization: vec(A rho B^*) = (conj(B) (x) A) vec(rho).
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix unvec_square(const Vector& v) {
  const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  return unvec(v, d, d);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Superoperator matrix of rho -> A rho B^*.
inline Matrix sandwich_superop(const Matrix& a, const Matrix& b) { return kron(b.conjugate(), a); }

inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double one_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

/// Sum of singular values.
inline double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double hermiticity_residual(const Matrix& m) { return op_norm(m - m.adjoint()); }

inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_hermitian_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return hermitian_eigenvalues(m).minCoeff();
}

inline double max_hermitian_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return hermitian_eigenvalues(m).maxCoeff();
}

/// Largest real part over the spectrum.
inline double spectral_abscissa(const Matrix& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

inline bool is_normal(const Matrix& m, double tol = 1e-12) {
  const double scale = 1.0 + m.squaredNorm();
  return (m * m.adjoint() - m.adjoint() * m).norm() <= tol * scale;
}

namespace detail {

inline Matrix pade_exp(const Matrix& a) {
  static constexpr std::array<double, 4> b3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7{17297280., 8648640., 1995840., 277200.,
                                            25200.,    1512.,    56.,      1.};
  static constexpr std::array<double, 10> b9{17643225600., 8821612800., 2075673600., 302702400.,
                                             30270240.,    2162160.,    110880.,     3960.,
                                             90.,          1.};
  static constexpr std::array<double, 14> b13{
      64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
      129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
      1323241920.,        40840800.,          960960.,           16380.,
      182.,               1.};
  static constexpr std::array<double, 4> theta{1.495585217958292e-2, 2.539398330063230e-1,
                                               9.504178996162932e-1, 2.097847961257068};
  constexpr double theta13 = 5.371920351148152;

  const Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const double norm = one_norm(a);

  auto low_order = [&](const auto& b) {
    const std::size_t m = b.size() - 1;
    const Matrix a2 = a * a;
    Matrix pow = id;
    Matrix u_inner = Matrix::Zero(n, n);
    Matrix v = Matrix::Zero(n, n);
    for (std::size_t k = 0; k <= m; k += 2) {
      v += b[k] * pow;
      if (k + 1 <= m) u_inner += b[k + 1] * pow;
      pow = pow * a2;
    }
    const Matrix u = a * u_inner;
    return Matrix((v - u).partialPivLu().solve(v + u));
  };

  if (norm <= theta[0]) return low_order(b3);
  if (norm <= theta[1]) return low_order(b5);
  if (norm <= theta[2]) return low_order(b7);
  if (norm <= theta[3]) return low_order(b9);

  int s = 0;
  if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const Matrix as = a / std::ldexp(1.0, s);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const auto& b = b13;
  const Matrix u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
            b[1] * id);
  const Matrix v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// (order chosen from the 1-norm). Normal matrices go through their
/// eigendecomposition instead.
inline Matrix expm(const Matrix& a) {
  const Index n = a.rows();
  if (n == 0) return a;
  if (n == 1) return Matrix::Constant(1, 1, std::exp(a(0, 0)));
  if (is_normal(a)) {
    Eigen::ComplexEigenSolver<Matrix> es(a);
    const Matrix& v = es.eigenvectors();
    // Eigenvectors of a normal matrix with distinct eigenvalues are orthogonal;
    // degenerate clusters may come back skewed, so check before trusting them.
    if ((v.adjoint() * v - Matrix::Identity(n, n)).norm() < 1e-10) {
      return v * es.eigenvalues().array().exp().matrix().asDiagonal() * v.adjoint();
    }
  }
  return detail::pade_exp(a);
}

/// Solves G Y + Y G^* = -X by Bartels–Stewart on the complex Schur form of G.
class LyapunovSolver {
 public:
  explicit LyapunovSolver(const Matrix& g) : d_(g.rows()) {
    if (d_ > 0) {
      Eigen::ComplexSchur<Matrix> schur(g);
      u_ = schur.matrixU();
      t_ = schur.matrixT();
    }
  }

  [[nodiscard]] Index dim() const { return d_; }

  [[nodiscard]] double abscissa() const {
    double a = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < d_; ++k) a = std::max(a, t_(k, k).real());
    return a;
  }

  [[nodiscard]] Complex eigenvalue_with_max_real() const {
    Index best = 0;
    for (Index k = 1; k < d_; ++k) {
      if (t_(k, k).real() > t_(best, best).real()) best = k;
    }
    return t_(best, best);
  }

  [[nodiscard]] Matrix solve(const Matrix& x) const {
    const Matrix c = u_.adjoint() * x * u_;
    Matrix z = Matrix::Zero(d_, d_);
    for (Index a = d_ - 1; a >= 0; --a) {
      for (Index b = d_ - 1; b >= 0; --b) {
        Complex rhs = -c(a, b);
        for (Index k = a + 1; k < d_; ++k) rhs -= t_(a, k) * z(k, b);
        for (Index k = b + 1; k < d_; ++k) rhs -= z(a, k) * std::conj(t_(b, k));
        z(a, b) = rhs / (t_(a, a) + std::conj(t_(b, b)));
      }
    }
    return u_ * z * u_.adjoint();
  }

 private:
  Index d_;
  Matrix u_;
  Matrix t_;
};

/// Result of a leading-eigenpair computation on a (completely) positive map.
struct PerronResult {
  double radius = 0.0;
  Complex eigenvalue{0.0, 0.0};
  Vector eigenvector;
  bool converged = false;
  int iterations = 0;
  std::string method;
  double residual = 0.0;
};

/// Leading eigenpair of a dense matrix that represents a positive map.
/// Shifted power iteration (shift 1 keeps the positive Perron root dominant
/// over peripheral eigenvalues of periodic maps); falls back to a full
/// eigendecomposition when iteration stalls and the matrix is small enough.
inline PerronResult perron_eigen(const Matrix& p, const Vector& start, double tol = 1e-10,
                                 int max_iter = 200000, Index dense_limit = 4096) {
  PerronResult out;
  const Index n = p.rows();
  if (n == 0) {
    out.converged = true;
    out.method = "empty";
    return out;
  }
  if (p.norm() == 0.0) {
    out.eigenvector = start.normalized();
    out.converged = true;
    out.method = "zero";
    return out;
  }
  constexpr double shift = 1.0;
  Vector x = start.norm() > 0 ? Vector(start.normalized()) : Vector(Vector::Ones(n).normalized());
  for (int it = 1; it <= max_iter; ++it) {
    Vector y = p * x;
    const Complex lambda = x.dot(y);  // Rayleigh quotient, x normalized
    const double res = (y - lambda * x).norm();
    if (res <= tol * std::max(1.0, std::abs(lambda)) && it > 2) {
      out.eigenvalue = lambda;
      out.radius = std::abs(lambda);
      out.eigenvector = x;
      out.converged = true;
      out.iterations = it;
      out.method = "power";
      out.residual = res;
      return out;
    }
    y += shift * x;
    const double nrm = y.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    x = y / nrm;
  }
  if (n > dense_limit) {
    out.method = "power";
    out.iterations = max_iter;
    return out;
  }
  Eigen::ComplexEigenSolver<Matrix> es(p);
  const auto& ev = es.eigenvalues();
  Index best = 0;
  for (Index k = 1; k < n; ++k) {
    const double mk = std::abs(ev(k));
    const double mb = std::abs(ev(best));
    // Among peripheral eigenvalues prefer the one closest to the positive axis.
    if (mk > mb * (1 + 1e-12) || (mk >= mb * (1 - 1e-12) && ev(k).real() > ev(best).real())) {
      best = k;
    }
  }
  out.eigenvalue = ev(best);
  out.radius = std::abs(ev(best));
  out.eigenvector = es.eigenvectors().col(best).normalized();
  out.converged = true;
  out.method = "eigendecomposition";
  out.residual = (p * out.eigenvector - out.eigenvalue * out.eigenvector).norm();
  return out;
}

}  // namespace ctoqw
