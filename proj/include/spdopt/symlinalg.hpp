#pragma once

// Dense symmetric / SPD matrix kernels. Every matrix function goes through one
// symmetric eigendecomposition, which SpdMatrix computes once at construction.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "spdopt/errors.hpp"

namespace spdopt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric matrix. Construction symmetrizes via (A + A^T)/2, so the
/// stored entries are exactly symmetric; the arithmetic operators preserve that.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw DimensionError("SymMatrix: expected a non-empty square matrix, got " +
                           std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n), Trusted{}); }
  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n), Trusted{}); }
  static SymMatrix diagonal(const Vector& d) {
    return SymMatrix(Matrix(d.asDiagonal()), Trusted{});
  }

  Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  /// Frobenius pairing tr(A B).
  double dot(const SymMatrix& other) const { return m_.cwiseProduct(other.m_).sum(); }
  double norm() const { return m_.norm(); }
  double trace() const { return m_.trace(); }

  SymMatrix& operator+=(const SymMatrix& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  SymMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

 private:
  struct Trusted {};
  SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

  void check_same(const SymMatrix& o) const {
    if (o.dim() != dim())
      throw DimensionError("SymMatrix: dimension mismatch " + std::to_string(dim()) + " vs " +
                           std::to_string(o.dim()));
  }

  Matrix m_;
};

/// {A}_S = (A + A^T)/2.
inline SymMatrix sym(const Matrix& a) { return SymMatrix(a); }

struct SymEig {
  Matrix vectors;  // orthogonal, columns are eigenvectors
  Vector values;   // descending
};

inline SymEig sym_eig(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
  if (solver.info() != Eigen::Success)
    throw EigenSolverError("sym_eig: eigensolver did not converge",
                           static_cast<int>(30 * a.dim()));
  const Index n = a.dim();
  SymEig out{Matrix(n, n), Vector(n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

/// Q diag(values) Q^T, symmetrized.
inline SymMatrix from_spectrum(const Matrix& q, const Vector& values) {
  return SymMatrix(q * values.asDiagonal() * q.transpose());
}

/// Relative admission threshold: lambda_min > kSpdTol * max(1, lambda_max).
inline constexpr double kSpdTol = 1e-12;

inline bool spd_admissible(const Vector& descending) {
  const double lmax = descending(0);
  const double lmin = descending(descending.size() - 1);
  return std::isfinite(lmax) && std::isfinite(lmin) && lmin > kSpdTol * std::max(1.0, lmax);
}

/// Symmetric positive definite matrix with its eigendecomposition.
/// Immutable: all matrix functions reuse the decomposition computed here.
class SpdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& a) : base_(a), eig_(sym_eig(a)) { check(); }
  explicit SpdMatrix(const Matrix& a) : SpdMatrix(SymMatrix(a)) {}

  /// Build from a known factorization (values need not be sorted).
  static SpdMatrix from_eig(const Matrix& q, const Vector& values) {
    const Index n = values.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values(a) > values(b); });
    SymEig e{Matrix(n, n), Vector(n)};
    for (Index k = 0; k < n; ++k) {
      e.values(k) = values(order[static_cast<std::size_t>(k)]);
      e.vectors.col(k) = q.col(order[static_cast<std::size_t>(k)]);
    }
    SymMatrix base = from_spectrum(e.vectors, e.values);
    return SpdMatrix(std::move(base), std::move(e));
  }

  static SpdMatrix identity(Index n) {
    return from_eig(Matrix::Identity(n, n), Vector::Ones(n));
  }

  Index dim() const { return base_.dim(); }
  const SymMatrix& sym() const { return base_; }
  const Matrix& mat() const { return base_.mat(); }
  const Matrix& eigvecs() const { return eig_.vectors; }
  const Vector& eigvals() const { return eig_.values; }
  double lambda_max() const { return eig_.values(0); }
  double lambda_min() const { return eig_.values(dim() - 1); }
  double cond() const { return lambda_max() / lambda_min(); }
  double log_det() const { return eig_.values.array().log().sum(); }

  /// Q phi(lambda) Q^T.
  template <class Phi>
  SymMatrix apply(Phi&& phi) const {
    Vector v(dim());
    for (Index k = 0; k < dim(); ++k) {
      v(k) = phi(eig_.values(k));
      if (!std::isfinite(v(k)))
        throw DomainError("spd_fn: function not finite at eigenvalue " +
                          std::to_string(eig_.values(k)));
    }
    return from_spectrum(eig_.vectors, v);
  }

  SymMatrix sqrt() const { return apply([](double l) { return std::sqrt(l); }); }
  SymMatrix inv_sqrt() const { return apply([](double l) { return 1.0 / std::sqrt(l); }); }
  SymMatrix inv() const { return apply([](double l) { return 1.0 / l; }); }
  SymMatrix log() const { return apply([](double l) { return std::log(l); }); }
  SymMatrix pow(double alpha) const {
    return apply([alpha](double l) { return std::pow(l, alpha); });
  }

  /// X^{1/2} as an SPD point sharing the eigenbasis.
  SpdMatrix sqrt_spd() const {
    return SpdMatrix::from_eig(eig_.vectors, eig_.values.array().sqrt().matrix());
  }

 private:
  SpdMatrix(SymMatrix base, SymEig eig) : base_(std::move(base)), eig_(std::move(eig)) { check(); }

  void check() const {
    if (!spd_admissible(eig_.values))
      throw NotSpdError("SpdMatrix: not positive definite (lambda_min=" +
                        std::to_string(eig_.values(dim() - 1)) +
                        ", lambda_max=" + std::to_string(eig_.values(0)) + ")");
  }

  SymMatrix base_;
  SymEig eig_;
};

template <class Phi>
SymMatrix spd_fn(const SpdMatrix& x, Phi&& phi) {
  return x.apply(std::forward<Phi>(phi));
}

/// phi applied to the spectrum of a general symmetric matrix.
template <class Phi>
SymMatrix sym_fn(const SymMatrix& a, Phi&& phi) {
  SymEig e = sym_eig(a);
  for (Index k = 0; k < a.dim(); ++k) {
    e.values(k) = phi(e.values(k));
    if (!std::isfinite(e.values(k))) throw DomainError("sym_fn: function not finite");
  }
  return from_spectrum(e.vectors, e.values);
}

inline constexpr double kExpOverflow = 700.0;

inline SpdMatrix expm_sym(const SymMatrix& s) {
  SymEig e = sym_eig(s);
  if (e.values(0) > kExpOverflow)
    throw RangeError("expm_sym: eigenvalue " + std::to_string(e.values(0)) + " overflows exp");
  return SpdMatrix::from_eig(e.vectors, e.values.array().exp().matrix());
}

inline SymMatrix logm(const SpdMatrix& x) { return x.log(); }

/// Solves L X + X L = U in the eigenbasis of X.
inline SymMatrix lyapunov_solve(const SpdMatrix& x, const SymMatrix& u) {
  if (u.dim() != x.dim()) throw DimensionError("lyapunov_solve: dimension mismatch");
  const Matrix& q = x.eigvecs();
  const Vector& l = x.eigvals();
  Matrix ut = q.transpose() * u.mat() * q;
  const Index n = x.dim();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double denom = l(i) + l(j);
      if (!(denom > std::numeric_limits<double>::min()))
        throw IllPosedError("lyapunov_solve: lambda_i + lambda_j vanishes");
      ut(i, j) /= denom;
    }
  }
  return SymMatrix(q * ut * q.transpose());
}

/// Orthogonal polar factor P of Y^{1/2} X^{1/2} (= U V^T from its SVD).
inline Matrix polar_factor(const SpdMatrix& x, const SpdMatrix& y) {
  if (x.dim() != y.dim()) throw DimensionError("polar_factor: dimension mismatch");
  const Matrix m = y.sqrt().mat() * x.sqrt().mat();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Scaling-and-squaring Pade exponential of a general square matrix.
inline Matrix expm_general(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm_general: matrix not square");
  Matrix out = a.exp();
  if (!out.allFinite()) throw RangeError("expm_general: overflow");
  return out;
}

struct ExpFrechet {
  SpdMatrix value;       // exp(S)
  SymMatrix derivative;  // D_V exp(S)
};

/// D_V exp(S), read off the upper-right block of exp([[S, V], [0, S]]).
inline SymMatrix expm_directional(const SymMatrix& s, const SymMatrix& v) {
  if (s.dim() != v.dim()) throw DimensionError("expm_frechet: dimension mismatch");
  const Index n = s.dim();
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = s.mat();
  block.bottomRightCorner(n, n) = s.mat();
  block.topRightCorner(n, n) = v.mat();
  const Matrix e = expm_general(block);
  return SymMatrix(Matrix(e.topRightCorner(n, n)));
}

inline ExpFrechet expm_frechet(const SymMatrix& s, const SymMatrix& v) {
  SpdMatrix value = expm_sym(s);
  return {std::move(value), expm_directional(s, v)};
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

}  // namespace spdopt
