#pragma once

// Models bind an objective to a geometry and expose what the solvers and
// diagnostics need:
//
//   Point, Tangent, Local                       types
//   inner(x, u, v), exp(x, u), transport(x, y, u)
//   cost(x), linearize(x) -> Local {cost, rgrad, egrad_mod_norm}
//   hess(x, local, u)                           Riemannian Hessian-vector product
//   dist_to_solution(x)                         NaN when no minimizer is known
//   tangent_dim(x), to_coords(x, u), from_coords(x, c)
//   typical_distance()
//
// Coordinates are taken in an orthonormal Frobenius basis of the symmetric
// matrices (E_ii and (E_ij + E_ji)/sqrt 2), weights appended as-is.

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "spdopt/gmm.hpp"
#include "spdopt/problems.hpp"

namespace spdopt {

/// Number of free entries of an n x n symmetric matrix.
inline Index sym_dim(Index n) { return n * (n + 1) / 2; }

inline Vector sym_to_coords(const SymMatrix& u) {
  const Index n = u.dim();
  Vector c(sym_dim(n));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    c(k++) = u(j, j);
    for (Index i = j + 1; i < n; ++i) c(k++) = std::sqrt(2.0) * u(i, j);
  }
  return c;
}

inline SymMatrix sym_from_coords(Index n, const Eigen::Ref<const Vector>& c) {
  if (c.size() != sym_dim(n)) throw DimensionError("sym_from_coords: wrong coordinate count");
  Matrix m(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    m(j, j) = c(k++);
    for (Index i = j + 1; i < n; ++i) m(i, j) = m(j, i) = c(k++) / std::sqrt(2.0);
  }
  return SymMatrix(m);
}

class SpdModel {
 public:
  using Point = ManifoldPoint;
  using Tangent = SymMatrix;

  struct Local {
    double cost = 0.0;
    SymMatrix egrad;
    SymMatrix rgrad;
    double egrad_mod_norm = 0.0;
  };

  SpdModel(ProblemInstance problem, Geometry g) : p_(std::move(problem)), g_(g) {}

  const ProblemInstance& problem() const { return p_; }
  Geometry geometry() const { return g_; }
  Index dim() const { return p_.dim; }

  /// Identity for ai/bw, S = 0 (also X = I) for le.
  Point default_start() const { return point(SpdMatrix::identity(p_.dim)); }
  Point point(const SpdMatrix& x) const { return ManifoldPoint(g_, x); }

  double inner(const Point& x, const Tangent& u, const Tangent& v) const { return spdopt::inner(x, u, v); }
  Point exp(const Point& x, const Tangent& u) const { return exp_map(x, u); }
  Tangent transport(const Point& x, const Point& y, const Tangent& u) const { return spdopt::transport(x, y, u); }

  double cost(const Point& x) const { return p_.cost(x.spd()); }

  Local linearize(const Point& x) const {
    Local l;
    l.cost = p_.cost(x.spd());
    l.egrad = p_.egrad(x.spd());
    l.rgrad = egrad_to_rgrad(x, l.egrad);
    l.egrad_mod_norm = (x.spd().mat() * l.egrad.mat()).norm();
    return l;
  }

  Tangent hess(const Point& x, const Local& l, const Tangent& u) const {
    if (g_ == Geometry::le)
      return le_fd_hessian(x, l.rgrad, u, [this](const Point& y) { return egrad_to_rgrad(y, p_.egrad(y.spd())); });
    return ehess_to_rhess(x, l.egrad, p_.hess_vec(x.spd(), u), u);
  }

  double dist_to_solution(const Point& x) const {
    if (!p_.x_star) return std::numeric_limits<double>::quiet_NaN();
    return frobenius_gap(x, *p_.x_star);
  }

  Index tangent_dim(const Point&) const { return sym_dim(p_.dim); }
  Vector to_coords(const Point&, const Tangent& u) const { return sym_to_coords(u); }
  Tangent from_coords(const Point&, const Vector& c) const { return sym_from_coords(p_.dim, c); }
  double typical_distance() const { return std::sqrt(static_cast<double>(p_.dim)); }

 private:
  ProblemInstance p_;
  Geometry g_;
};

class GmmModel {
 public:
  using Point = ProductPoint;
  using Tangent = ProductTangent;

  struct Local {
    double cost = 0.0;
    GmmGradient egrad;
    ProductTangent rgrad;
    double egrad_mod_norm = 0.0;
  };

  GmmModel(GmmProblem problem, Geometry g) : p_(std::move(problem)), g_(g) {}

  const GmmProblem& problem() const { return p_; }
  Geometry geometry() const { return g_; }

  Point point(const std::vector<SpdMatrix>& s, const Vector& omega) const {
    std::vector<ManifoldPoint> parts;
    for (const auto& m : s) parts.emplace_back(g_, m);
    return ProductPoint(std::move(parts), omega);
  }
  Point point(const GmmInit& init) const { return point(init.s, init.omega); }

  double inner(const Point& x, const Tangent& u, const Tangent& v) const { return spdopt::inner(x, u, v); }
  Point exp(const Point& x, const Tangent& u) const { return exp_map(x, u); }
  Tangent transport(const Point& x, const Point& y, const Tangent& u) const { return spdopt::transport(x, y, u); }

  double cost(const Point& x) const { return p_.cost(x); }

  Local linearize(const Point& x) const {
    Local l;
    l.cost = p_.cost(x);
    l.egrad = p_.egrad(x);
    l.rgrad = to_rgrad(x, l.egrad);
    double s = l.egrad.omega.squaredNorm();
    for (std::size_t j = 0; j < x.num_parts(); ++j)
      s += (x.part(j).spd().mat() * l.egrad.s[j].mat()).squaredNorm();
    l.egrad_mod_norm = std::sqrt(s);
    return l;
  }

  /// Riemannian gradient of the loss restricted to the listed samples.
  Tangent batch_rgrad(const Point& x, const std::vector<Index>& rows) const {
    return to_rgrad(x, p_.egrad_batch(x, rows));
  }
  Index num_samples() const { return p_.num_samples(); }

  Tangent hess(const Point& x, const Local& l, const Tangent& u) const {
    if (g_ == Geometry::le) {
      const double un = u.flat_norm();
      if (un == 0.0) return 0.0 * u;
      double sn = x.weights().squaredNorm();
      for (const auto& part : x.parts()) sn += part.param().mat().squaredNorm();
      const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::sqrt(sn)) / un;
      const Point shifted = exp_map(x, h * u);
      return (1.0 / h) * (to_rgrad(shifted, p_.egrad(shifted)) - l.rgrad);
    }
    const GmmGradient eh = p_.ehess_vec(x, u);
    Tangent out{{}, eh.omega};
    for (std::size_t j = 0; j < x.num_parts(); ++j)
      out.parts.push_back(ehess_to_rhess(x.part(j), l.egrad.s[j], eh.s[j], u.parts[j]));
    return out;
  }

  double dist_to_solution(const Point&) const { return std::numeric_limits<double>::quiet_NaN(); }

  Index tangent_dim(const Point& x) const {
    return static_cast<Index>(x.num_parts()) * sym_dim(x.part_dim()) + x.weights().size();
  }
  Vector to_coords(const Point& x, const Tangent& u) const {
    Vector c(tangent_dim(x));
    const Index block = sym_dim(x.part_dim());
    for (std::size_t j = 0; j < x.num_parts(); ++j)
      c.segment(static_cast<Index>(j) * block, block) = sym_to_coords(u.parts[j]);
    c.tail(u.weights.size()) = u.weights;
    return c;
  }
  Tangent from_coords(const Point& x, const Vector& c) const {
    const Index block = sym_dim(x.part_dim());
    Tangent u{{}, c.tail(x.weights().size())};
    for (std::size_t j = 0; j < x.num_parts(); ++j)
      u.parts.push_back(sym_from_coords(x.part_dim(), c.segment(static_cast<Index>(j) * block, block)));
    return u;
  }
  double typical_distance() const {
    return std::sqrt(static_cast<double>(p_.num_components() * p_.aug_dim()));
  }

 private:
  Tangent to_rgrad(const Point& x, const GmmGradient& g) const {
    Tangent out{{}, g.omega};
    for (std::size_t j = 0; j < x.num_parts(); ++j) out.parts.push_back(egrad_to_rgrad(x.part(j), g.s[j]));
    return out;
  }

  GmmProblem p_;
  Geometry g_;
};

}  // namespace spdopt
