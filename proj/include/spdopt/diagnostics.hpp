#pragma once

// Numerical instruments: Riemannian Hessian spectra (dense and Lanczos),
// condition-number sandwich bounds, the geodesic-triangle comparison
// inequality, geodesic-convexity probes, the BW Gaussian kernel and
// finite-difference certification of problems.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "spdopt/model.hpp"
#include "spdopt/random.hpp"

namespace spdopt {

enum class SpectrumMethod { dense_kronecker, lanczos };

inline std::string_view to_string(SpectrumMethod m) {
  return m == SpectrumMethod::dense_kronecker ? "dense_kronecker" : "lanczos";
}

struct HessianSpectrumReport {
  Geometry geometry = Geometry::ai;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
  SpectrumMethod method = SpectrumMethod::dense_kronecker;
  /// dense: relative asymmetry of the Hessian form before symmetrization;
  /// lanczos: largest Ritz residual of the two extreme pairs.
  double residual = 0.0;
};

/// Largest tangent dimension accepted by the dense method (n = 8).
inline constexpr Index kDenseMaxTangentDim = 36;

namespace detail {

inline HessianSpectrumReport spectrum_report(Geometry g, double lo, double hi, SpectrumMethod m, double res) {
  HessianSpectrumReport r;
  r.geometry = g;
  r.lambda_min = lo;
  r.lambda_max = hi;
  r.kappa = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  r.method = m;
  r.residual = res;
  return r;
}

/// Gram matrix of the metric and the Hessian form <e_k, Hess e_l> on the
/// coordinate basis.
template <class Model>
std::pair<Matrix, Matrix> hessian_forms(const Model& model, const typename Model::Point& x) {
  const Index dim = model.tangent_dim(x);
  const auto l = model.linearize(x);
  std::vector<typename Model::Tangent> basis, images;
  for (Index k = 0; k < dim; ++k) {
    basis.push_back(model.from_coords(x, Vector::Unit(dim, k)));
    images.push_back(model.hess(x, l, basis.back()));
  }
  Matrix gram(dim, dim), form(dim, dim);
  for (Index a = 0; a < dim; ++a) {
    for (Index b = 0; b < dim; ++b) {
      if (b >= a) gram(a, b) = gram(b, a) = model.inner(x, basis[a], basis[b]);
      form(a, b) = model.inner(x, basis[a], images[b]);
    }
  }
  return {gram, form};
}

}  // namespace detail

/// Extreme eigenvalues of the Riemannian Hessian at x from a dense build of
/// the generalized eigenproblem  <e_k, Hess e_l> v = lambda <e_k, e_l> v.
template <class Model>
HessianSpectrumReport hessian_condition_dense(const Model& model, const typename Model::Point& x) {
  const Index dim = model.tangent_dim(x);
  if (dim > kDenseMaxTangentDim)
    throw UsageError("hessian_condition_dense: tangent dimension " + std::to_string(dim) +
                     " too large for the dense build; use the Lanczos method");
  auto [gram, form] = detail::hessian_forms(model, x);
  const double asym = (form - form.transpose()).norm() / std::max(form.norm(), 1e-300);
  const Matrix a = 0.5 * (form + form.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenSolverError("hessian_condition_dense: generalized eigensolve failed", 0);
  const Vector& ev = es.eigenvalues();
  return detail::spectrum_report(model.geometry(), ev.minCoeff(), ev.maxCoeff(), SpectrumMethod::dense_kronecker,
                                 asym);
}

/// Extreme eigenvalues of the Riemannian Hessian by Lanczos in the metric
/// inner product with full reorthogonalization. `iters` defaults to
/// 5 * (matrix size) and is capped at the tangent dimension. On breakdown
/// before the budget the recurrence continues from a fresh random vector
/// (at most three times).
template <class Model>
HessianSpectrumReport hessian_condition_lanczos(const Model& model, const typename Model::Point& x, int iters = 0,
                                                std::uint64_t seed = 7) {
  using Tangent = typename Model::Tangent;
  const Index dim = model.tangent_dim(x);
  const Index matrix_size = static_cast<Index>(std::lround((std::sqrt(8.0 * dim + 1.0) - 1.0) / 2.0));
  Index m = iters > 0 ? iters : 5 * std::max<Index>(matrix_size, 1);
  m = std::min(m, dim);
  const auto l = model.linearize(x);
  Rng rng(seed);
  auto random_tangent = [&] {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector c(dim);
    for (Index k = 0; k < dim; ++k) c(k) = normal(rng);
    return model.from_coords(x, c);
  };
  auto nrm = [&](const Tangent& u) { return std::sqrt(std::max(0.0, model.inner(x, u, u))); };
  std::vector<Tangent> q;
  Vector alpha = Vector::Zero(m), beta = Vector::Zero(m);
  Tangent v = random_tangent();
  v = (1.0 / nrm(v)) * v;
  int restarts = 0;
  double scale = 0.0;
  for (Index j = 0; j < m; ++j) {
    q.push_back(v);
    Tangent w = model.hess(x, l, v);
    alpha(j) = model.inner(x, v, w);
    // Full reorthogonalization (twice) against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) w = w - model.inner(x, qi, w) * qi;
    const double b = nrm(w);
    scale = std::max(scale, std::abs(alpha(j)) + b);
    if (j + 1 == m) {
      beta(j) = b;
      break;
    }
    if (b > 1e-10 * std::max(scale, 1e-300)) {
      beta(j) = b;
      v = (1.0 / b) * w;
      continue;
    }
    // Breakdown: invariant subspace found; continue in its complement.
    beta(j) = 0.0;
    if (restarts == 3) {
      m = j + 1;
      break;
    }
    ++restarts;
    Tangent r = random_tangent();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) r = r - model.inner(x, qi, r) * qi;
    v = (1.0 / nrm(r)) * r;
  }
  Matrix t = Matrix::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    t(j, j) = alpha(j);
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta(j);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(t);
  if (es.info() != Eigen::Success) throw EigenSolverError("hessian_condition_lanczos: Ritz eigensolve failed", 0);
  const Vector& ev = es.eigenvalues();  // ascending
  const double res = std::max(std::abs(beta(m - 1) * es.eigenvectors()(m - 1, 0)),
                              std::abs(beta(m - 1) * es.eigenvectors()(m - 1, m - 1)));
  return detail::spectrum_report(model.geometry(), ev(0), ev(m - 1), SpectrumMethod::lanczos, res);
}

/// Spectral condition number of the Euclidean Hessian on the symmetric
/// subspace (orthonormal Frobenius basis). Infinity when singular.
inline double euclidean_hessian_cond(const ProblemInstance& p, const SpdMatrix& x) {
  const Index n = p.dim;
  const Index dim = sym_dim(n);
  Matrix h(dim, dim);
  for (Index k = 0; k < dim; ++k) h.col(k) = sym_to_coords(p.hess_vec(x, sym_from_coords(n, Vector::Unit(dim, k))));
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly).eigenvalues();
  const double lo = ev.cwiseAbs().minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-12 * hi) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

struct ConditionBoundsReport {
  bool skipped = false;
  std::string skip_reason;
  double kappa_x = 0.0;
  double kappa_h = 0.0;
  double kappa_ai = 0.0;
  double kappa_bw = 0.0;
  bool ai_ok = false;
  bool bw_ok = false;
  bool pass() const { return skipped || (ai_ok && bw_ok); }
};

/// Checks kappa(X)^2/kappa(H) <= kappa_ai <= kappa(X)^2 kappa(H) and
/// kappa(X)/kappa(H) <= kappa_bw <= kappa(X) kappa(H) at x (a critical point),
/// with multiplicative slack `slack`.
inline ConditionBoundsReport condition_bounds_check(const ProblemInstance& p, const SpdMatrix& x, double slack = 1.0 + 1e-8) {
  if (p.dim > 6) throw UsageError("condition_bounds_check: needs n <= 6");
  ConditionBoundsReport r;
  r.kappa_x = x.cond();
  r.kappa_h = euclidean_hessian_cond(p, x);
  if (!std::isfinite(r.kappa_h)) {
    r.skipped = true;
    r.skip_reason = "singular Euclidean Hessian";
    return r;
  }
  const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
  r.kappa_ai = hessian_condition_dense(ai, ai.point(x)).kappa;
  r.kappa_bw = hessian_condition_dense(bw, bw.point(x)).kappa;
  const double kx2 = r.kappa_x * r.kappa_x;
  r.ai_ok = r.kappa_ai * slack >= kx2 / r.kappa_h && r.kappa_ai <= kx2 * r.kappa_h * slack;
  r.bw_ok = r.kappa_bw * slack >= r.kappa_x / r.kappa_h && r.kappa_bw <= r.kappa_x * r.kappa_h * slack;
  return r;
}

struct TriangleSample {
  ManifoldPoint x, y, z;
  double side_x = 0.0;  // d(Y, Z), opposite the vertex X
  double side_y = 0.0;  // |Log_X Y|
  double side_z = 0.0;  // |Log_X Z|
  double theta = 0.0;   // angle at X
};

inline TriangleSample make_triangle(const ManifoldPoint& x, const ManifoldPoint& y, const ManifoldPoint& z) {
  TriangleSample t{x, y, z};
  const SymMatrix u = log_map(x, y);
  const SymMatrix v = log_map(x, z);
  t.side_y = norm(x, u);
  t.side_z = norm(x, v);
  t.side_x = distance(y, z);
  const double c = t.side_y > 0 && t.side_z > 0 ? inner(x, u, v) / (t.side_y * t.side_z) : 1.0;
  t.theta = std::acos(std::clamp(c, -1.0, 1.0));
  return t;
}

/// zeta y^2 + z^2 - 2 y z cos(theta) - x^2 with zeta = 1.
inline double trig_bound_check(const TriangleSample& t) {
  return t.side_y * t.side_y + t.side_z * t.side_z - 2.0 * t.side_y * t.side_z * std::cos(t.theta) -
         t.side_x * t.side_x;
}

/// Exp_I(eps U) for a unit-Frobenius random symmetric U.
inline ManifoldPoint sample_near_identity(Geometry g, Index n, double eps, Rng& rng) {
  const ManifoldPoint id(g, SpdMatrix::identity(n));
  return exp_map(id, eps * random_sym(n, rng, true));
}

struct TrigReport {
  Geometry geometry = Geometry::bw;
  long samples = 0;
  long resampled = 0;
  double min_slack = std::numeric_limits<double>::infinity();
};

inline TrigReport trig_bound_run(Geometry g, Index n, long samples, std::uint64_t seed, double eps = 0.1) {
  TrigReport r;
  r.geometry = g;
  Rng rng(seed);
  while (r.samples < samples) {
    try {
      const auto x = sample_near_identity(g, n, eps, rng);
      const auto y = sample_near_identity(g, n, eps, rng);
      const auto z = sample_near_identity(g, n, eps, rng);
      r.min_slack = std::min(r.min_slack, trig_bound_check(make_triangle(x, y, z)));
      ++r.samples;
    } catch (const Error&) {
      ++r.resampled;
      if (r.resampled > samples) throw;
    }
  }
  return r;
}

struct ConvexityReport {
  long pairs = 0;
  long violations = 0;
  double worst = -std::numeric_limits<double>::infinity();  // max f(gamma(t)) - chord
};

/// Counts chord-inequality violations f(gamma(t)) > (1-t) f(X) + t f(Y) + tol
/// along BW geodesics between random SPD pairs.
inline ConvexityReport gconvexity_probe(const std::function<double(const SymMatrix&)>& f, Index n, long pairs,
                                        const std::vector<double>& t_grid, std::uint64_t seed,
                                        double tol = 1e-9) {
  ConvexityReport r;
  Rng rng(seed);
  for (long k = 0; k < pairs; ++k) {
    const SpdMatrix x = random_spd(n, rng, 0.2, 5.0);
    const SpdMatrix y = random_spd(n, rng, 0.2, 5.0);
    const double fx = f(x.sym()), fy = f(y.sym());
    for (double t : t_grid) {
      const double gap = f(bw_geodesic(x, y, t)) - ((1.0 - t) * fx + t * fy);
      r.worst = std::max(r.worst, gap);
      if (gap > tol) ++r.violations;
    }
    ++r.pairs;
  }
  return r;
}

struct KernelReport {
  Matrix gram;
  double min_eig = 0.0;
};

/// Gram matrix of exp(-d_bw^2 / (2 sigma^2)) and its smallest eigenvalue.
inline KernelReport bw_kernel_gram(const std::vector<SpdMatrix>& pts, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("bw_kernel_gram: sigma must be positive");
  const Index m = static_cast<Index>(pts.size());
  if (m == 0) throw UsageError("bw_kernel_gram: need at least one point");
  KernelReport r{Matrix::Identity(m, m), 0.0};
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      const double d = bw_distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      r.gram(i, j) = r.gram(j, i) = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  r.min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(r.gram, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return r;
}

struct CertificationReport {
  int probes = 0;
  double max_grad_err = 0.0;
  double max_hess_err = 0.0;
  double grad_tol = 1e-6;
  double hess_tol = 1e-3;
  bool pass() const { return max_grad_err <= grad_tol && max_hess_err <= hess_tol; }
};

/// Compares <grad, V> with (f(Exp(hV)) - f(Exp(-hV)))/2h and <Hess[V], V> with
/// the second central difference of f along Exp, for unit-metric-norm random
/// directions at each probe point. Errors are relative to the larger of the
/// two values, floored at the roundoff level of the differences.
template <class Model>
CertificationReport certify_problem(const Model& model, const std::vector<typename Model::Point>& points,
                                    std::uint64_t seed, double h_grad = 1e-5, double h_hess = 1e-4) {
  CertificationReport rep;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& x : points) {
    const auto l = model.linearize(x);
    const Index dim = model.tangent_dim(x);
    Vector c(dim);
    for (Index k = 0; k < dim; ++k) c(k) = normal(rng);
    auto v = model.from_coords(x, c);
    v = (1.0 / std::sqrt(model.inner(x, v, v))) * v;
    const double f0 = l.cost;
    const double noise = std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
    const double fp = model.cost(model.exp(x, h_grad * v));
    const double fm = model.cost(model.exp(x, -h_grad * v));
    const double fd_grad = (fp - fm) / (2.0 * h_grad);
    const double an_grad = model.inner(x, l.rgrad, v);
    const double g_floor = 1e3 * noise / h_grad;
    rep.max_grad_err = std::max(rep.max_grad_err, std::abs(fd_grad - an_grad) /
                                                      std::max({std::abs(fd_grad), std::abs(an_grad), g_floor}));
    const double fp2 = model.cost(model.exp(x, h_hess * v));
    const double fm2 = model.cost(model.exp(x, -h_hess * v));
    const double fd_hess = (fp2 - 2.0 * f0 + fm2) / (h_hess * h_hess);
    const double an_hess = model.inner(x, model.hess(x, l, v), v);
    const double h_floor = 1e3 * noise / (h_hess * h_hess);
    rep.max_hess_err = std::max(rep.max_hess_err, std::abs(fd_hess - an_hess) /
                                                      std::max({std::abs(fd_hess), std::abs(an_hess), h_floor}));
    ++rep.probes;
  }
  return rep;
}

/// max over the grid of |gamma(t) - omega(t)|_F / |X|_F, comparing the
/// polar-factor geodesic with the optimal-transport interpolation.
inline double geodesic_match_error(const SpdMatrix& x, const SpdMatrix& y, const std::vector<double>& t_grid) {
  double worst = 0.0;
  for (double t : t_grid)
    worst = std::max(worst, (bw_geodesic(x, y, t).mat() - wasserstein_interpolation(x, y, t).mat()).norm());
  return worst / x.sym().norm();
}

inline std::vector<double> uniform_grid(int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(points == 1 ? 0.5 : static_cast<double>(k) / (points - 1));
  return g;
}

}  // namespace spdopt
