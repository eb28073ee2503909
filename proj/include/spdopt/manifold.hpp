#pragma once

// The three SPD geometries: Affine-Invariant (ai), Bures-Wasserstein (bw) and
// Log-Euclidean (le). Tangent vectors are symmetric matrices for all three;
// for le they live in the parameter space S with X = exp(S).

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "spdopt/symlinalg.hpp"

namespace spdopt {

enum class Geometry { ai, bw, le };

inline std::string_view to_string(Geometry g) {
  switch (g) {
    case Geometry::ai: return "ai";
    case Geometry::bw: return "bw";
    case Geometry::le: return "le";
  }
  return "?";
}

inline Geometry parse_geometry(std::string_view s) {
  if (s == "ai" || s == "AI") return Geometry::ai;
  if (s == "bw" || s == "BW") return Geometry::bw;
  if (s == "le" || s == "LE") return Geometry::le;
  throw UsageError("unknown geometry '" + std::string(s) + "' (expected ai, bw or le)");
}

using TangentVector = SymMatrix;

/// A point of the SPD manifold under one geometry. For le the parameter S is
/// the primary value and X = exp(S) is cached alongside it.
class ManifoldPoint {
 public:
  ManifoldPoint(Geometry g, SpdMatrix x)
      : g_(g), x_(std::move(x)), s_(g == Geometry::le ? logm(x_) : x_.sym()) {}

  static ManifoldPoint from_param(SymMatrix s) { return ManifoldPoint(std::move(s)); }

  Geometry geometry() const { return g_; }
  Index dim() const { return x_.dim(); }
  /// The SPD matrix X.
  const SpdMatrix& spd() const { return x_; }
  /// S for le, X for ai/bw.
  const SymMatrix& param() const { return s_; }

 private:
  explicit ManifoldPoint(SymMatrix s) : g_(Geometry::le), x_(expm_sym(s)), s_(std::move(s)) {}

  Geometry g_;
  SpdMatrix x_;
  SymMatrix s_;
};

namespace detail {

inline void check_dims(const ManifoldPoint& x, const SymMatrix& u) {
  if (u.dim() != x.dim())
    throw DimensionError("tangent vector of dim " + std::to_string(u.dim()) +
                         " at point of dim " + std::to_string(x.dim()));
}

inline void check_same(const ManifoldPoint& x, const ManifoldPoint& y) {
  if (x.geometry() != y.geometry()) throw UsageError("points live in different geometries");
  if (x.dim() != y.dim()) throw DimensionError("points have different dimensions");
}

}  // namespace detail

inline double inner(const ManifoldPoint& x, const TangentVector& u, const TangentVector& v) {
  detail::check_dims(x, u);
  detail::check_dims(x, v);
  switch (x.geometry()) {
    case Geometry::ai: {
      const Matrix xi = x.spd().inv().mat();
      return (xi * u.mat()).cwiseProduct((xi * v.mat()).transpose()).sum();
    }
    case Geometry::bw:
      return 0.5 * lyapunov_solve(x.spd(), u).dot(v);
    case Geometry::le:
      return u.dot(v);
  }
  return 0.0;
}

inline double norm(const ManifoldPoint& x, const TangentVector& u) {
  return std::sqrt(std::max(0.0, inner(x, u, u)));
}

/// Riemannian exponential map. Throws StepTooLongError when the result leaves
/// the admissible set (bw: I + L_X[U] not positive definite).
inline ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& u) {
  detail::check_dims(x, u);
  try {
    switch (x.geometry()) {
      case Geometry::ai: {
        const SpdMatrix& xs = x.spd();
        const Matrix r = xs.sqrt().mat();
        const Matrix ri = xs.inv_sqrt().mat();
        const SpdMatrix e = expm_sym(SymMatrix(ri * u.mat() * ri));
        return ManifoldPoint(Geometry::ai, SpdMatrix(SymMatrix(r * e.mat() * r)));
      }
      case Geometry::bw: {
        const SymMatrix l = lyapunov_solve(x.spd(), u);
        const Index n = x.dim();
        const SymMatrix shifted = SymMatrix::identity(n) + l;
        if (sym_eig(shifted).values(n - 1) <= kSpdTol)
          throw StepTooLongError("bw exp_map: I + L_X[U] is not positive definite");
        const Matrix& xm = x.spd().mat();
        return ManifoldPoint(Geometry::bw,
                             SpdMatrix(SymMatrix(xm + u.mat() + l.mat() * xm * l.mat())));
      }
      case Geometry::le:
        return ManifoldPoint::from_param(x.param() + u);
    }
  } catch (const NotSpdError& e) {
    throw StepTooLongError(std::string("exp_map: result not admissible: ") + e.what());
  } catch (const RangeError& e) {
    throw StepTooLongError(std::string("exp_map: overflow: ") + e.what());
  }
  throw UsageError("exp_map: unknown geometry");
}

/// (XY)^{1/2} = X^{1/2} (X^{1/2} Y X^{1/2})^{1/2} X^{-1/2}.
inline Matrix sqrt_of_product(const SpdMatrix& x, const SpdMatrix& y) {
  const Matrix r = x.sqrt().mat();
  const SpdMatrix mid(SymMatrix(r * y.mat() * r));
  return r * mid.sqrt().mat() * x.inv_sqrt().mat();
}

/// Inverse of exp_map (for bw: inside the injectivity neighbourhood of X).
inline TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y) {
  detail::check_same(x, y);
  switch (x.geometry()) {
    case Geometry::ai: {
      const Matrix r = x.spd().sqrt().mat();
      const Matrix ri = x.spd().inv_sqrt().mat();
      const SpdMatrix mid(SymMatrix(ri * y.spd().mat() * ri));
      return SymMatrix(r * mid.log().mat() * r);
    }
    case Geometry::bw: {
      const Matrix m = sqrt_of_product(x.spd(), y.spd());
      return SymMatrix(m + m.transpose() - 2.0 * x.spd().mat());
    }
    case Geometry::le:
      return y.param() - x.param();
  }
  throw UsageError("log_map: unknown geometry");
}

/// tr((X^{1/2} Y X^{1/2})^{1/2}).
inline double bw_fidelity(const SpdMatrix& x, const SpdMatrix& y) {
  const Matrix r = x.sqrt().mat();
  const SpdMatrix mid(SymMatrix(r * y.mat() * r));
  return mid.eigvals().array().sqrt().sum();
}

inline double bw_distance(const SpdMatrix& x, const SpdMatrix& y) {
  const double d2 = x.sym().trace() + y.sym().trace() - 2.0 * bw_fidelity(x, y);
  return std::sqrt(std::max(0.0, d2));
}

inline double distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  detail::check_same(x, y);
  switch (x.geometry()) {
    case Geometry::ai: {
      const Matrix ri = x.spd().inv_sqrt().mat();
      const SpdMatrix mid(SymMatrix(ri * y.spd().mat() * ri));
      return std::sqrt(mid.eigvals().array().log().square().sum());
    }
    case Geometry::bw:
      return bw_distance(x.spd(), y.spd());
    case Geometry::le:
      return (x.param() - y.param()).norm();
  }
  return 0.0;
}

/// BW geodesic ((1-t)X^{1/2} + t Y^{1/2} P)(...)^T with P the polar factor of
/// Y^{1/2} X^{1/2}. Positive semidefinite for every t; SPD for t in [0, 1].
inline SymMatrix bw_geodesic(const SpdMatrix& x, const SpdMatrix& y, double t) {
  if (x.dim() != y.dim()) throw DimensionError("bw_geodesic: dimension mismatch");
  const Matrix p = polar_factor(x, y);
  const Matrix pi = (1.0 - t) * x.sqrt().mat() + t * (y.sqrt().mat() * p);
  return SymMatrix(pi * pi.transpose());
}

/// McCann interpolation between N(0, X) and N(0, Y):
/// ((1-t)I + tT) X ((1-t)I + tT) with T = Y^{1/2} (Y^{1/2} X Y^{1/2})^{-1/2} Y^{1/2}.
inline SymMatrix wasserstein_interpolation(const SpdMatrix& x, const SpdMatrix& y, double t) {
  if (x.dim() != y.dim()) throw DimensionError("wasserstein_interpolation: dimension mismatch");
  const Matrix ry = y.sqrt().mat();
  const SpdMatrix mid(SymMatrix(ry * x.mat() * ry));
  const Matrix tmap = SymMatrix(ry * mid.inv_sqrt().mat() * ry).mat();
  const Index n = x.dim();
  const Matrix a = (1.0 - t) * Matrix::Identity(n, n) + t * tmap;
  return SymMatrix(a * x.mat() * a);
}

/// Riemannian gradient from the (symmetrized) Euclidean gradient.
/// For le, `eg` is the gradient of f at X = exp(S) and the result is the
/// Euclidean gradient of S -> f(exp(S)).
inline TangentVector egrad_to_rgrad(const ManifoldPoint& x, const SymMatrix& eg) {
  detail::check_dims(x, eg);
  switch (x.geometry()) {
    case Geometry::ai: {
      const Matrix& xm = x.spd().mat();
      return SymMatrix(xm * eg.mat() * xm);
    }
    case Geometry::bw:
      return 4.0 * sym(eg.mat() * x.spd().mat());
    case Geometry::le:
      return expm_directional(x.param(), eg);
  }
  throw UsageError("egrad_to_rgrad: unknown geometry");
}

/// Riemannian Hessian-vector product for ai and bw from the Euclidean
/// gradient `eg` and the Euclidean Hessian applied to U (`ehess_u`).
/// le has no closed form here; use le_fd_hessian.
inline TangentVector ehess_to_rhess(const ManifoldPoint& x, const SymMatrix& eg,
                                    const SymMatrix& ehess_u, const TangentVector& u) {
  detail::check_dims(x, eg);
  detail::check_dims(x, ehess_u);
  detail::check_dims(x, u);
  const Matrix& xm = x.spd().mat();
  switch (x.geometry()) {
    case Geometry::ai:
      return SymMatrix(xm * ehess_u.mat() * xm) + sym(u.mat() * eg.mat() * xm);
    case Geometry::bw: {
      const SymMatrix l = lyapunov_solve(x.spd(), u);
      const SymMatrix grad = 4.0 * sym(eg.mat() * xm);
      const SymMatrix inner_sym = sym(l.mat() * eg.mat());
      return 4.0 * sym(ehess_u.mat() * xm) + 2.0 * sym(eg.mat() * u.mat()) +
             4.0 * sym(xm * inner_sym.mat()) - sym(l.mat() * grad.mat());
    }
    case Geometry::le:
      throw UsageError("ehess_to_rhess: le Hessian is a finite difference of the gradient");
  }
  throw UsageError("ehess_to_rhess: unknown geometry");
}

/// Forward difference (grad(S + hU) - grad(S)) / h in the le parameter space,
/// h = sqrt(eps) (1 + |S|_F) / |U|_F.
template <class GradFn>
TangentVector le_fd_hessian(const ManifoldPoint& x, const TangentVector& grad_x,
                            const TangentVector& u, GradFn&& grad) {
  detail::check_dims(x, u);
  const double un = u.norm();
  if (un == 0.0) return SymMatrix::zero(x.dim());
  const double h = std::sqrt(std::numeric_limits<double>::epsilon()) *
                   (1.0 + x.param().norm()) / std::max(un, 1e-16);
  const ManifoldPoint shifted = ManifoldPoint::from_param(x.param() + h * u);
  return (1.0 / h) * (grad(shifted) - grad_x);
}

/// Identity transport: every tangent space is the space of symmetric matrices.
inline TangentVector transport(const ManifoldPoint& /*x*/, const ManifoldPoint& /*y*/,
                               const TangentVector& u) {
  return u;
}

/// Frobenius distance |X - Y|_F of the SPD values.
inline double frobenius_gap(const ManifoldPoint& x, const SymMatrix& y) {
  return (x.spd().mat() - y.mat()).norm();
}

}  // namespace spdopt
