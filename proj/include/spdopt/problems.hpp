#pragma once

// Benchmark objectives on SPD matrices: cost, Euclidean gradient and
// Euclidean Hessian-vector product. Instances are immutable and share their
// data through shared_ptr, so copies are cheap and safe across threads.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spdopt/symlinalg.hpp"

namespace spdopt {

struct ProblemInstance {
  std::string name;
  Index dim = 0;
  std::function<double(const SpdMatrix&)> cost;
  std::function<SymMatrix(const SpdMatrix&)> egrad;
  /// Euclidean Hessian applied to U. May be empty: hess_vec() then falls back
  /// to a central difference of egrad.
  std::function<SymMatrix(const SpdMatrix&, const SymMatrix&)> ehess_vec;
  /// Known minimizer. A SymMatrix because low-rank targets sit on the boundary
  /// of the cone.
  std::optional<SymMatrix> x_star;

  SymMatrix hess_vec(const SpdMatrix& x, const SymMatrix& u) const {
    if (ehess_vec) return ehess_vec(x, u);
    const double un = u.norm();
    if (un == 0.0) return SymMatrix::zero(x.dim());
    const double step = std::min(1e-6 * (1.0 + x.sym().norm()), 0.5 * x.lambda_min()) / un;
    const SpdMatrix xp(x.sym() + step * u);
    const SpdMatrix xm(x.sym() - step * u);
    return (0.5 / step) * (egrad(xp) - egrad(xm));
  }
};

/// 1/2 |A o X - B|_F^2.
inline ProblemInstance make_wls(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("make_wls: A and B differ in size");
  auto data = std::make_shared<const std::pair<Matrix, Matrix>>(a.mat(), b.mat());
  ProblemInstance p;
  p.name = "wls";
  p.dim = a.dim();
  p.cost = [data](const SpdMatrix& x) {
    return 0.5 * (data->first.cwiseProduct(x.mat()) - data->second).squaredNorm();
  };
  p.egrad = [data](const SpdMatrix& x) {
    const Matrix& w = data->first;
    return SymMatrix((w.cwiseProduct(x.mat()) - data->second).cwiseProduct(w));
  };
  p.ehess_vec = [data](const SpdMatrix&, const SymMatrix& u) {
    const Matrix& w = data->first;
    return SymMatrix(w.cwiseProduct(u.mat()).cwiseProduct(w));
  };
  return p;
}

/// tr(X A X) - tr(X C); minimizers solve A X + X A = C.
inline ProblemInstance make_lyapunov(const SpdMatrix& a, const SymMatrix& c) {
  if (a.dim() != c.dim()) throw DimensionError("make_lyapunov: A and C differ in size");
  auto data = std::make_shared<const std::pair<Matrix, Matrix>>(a.mat(), c.mat());
  ProblemInstance p;
  p.name = "lyapunov";
  p.dim = a.dim();
  p.cost = [data](const SpdMatrix& x) {
    const Matrix& xm = x.mat();
    return (xm * data->first).cwiseProduct(xm).sum() - xm.cwiseProduct(data->second).sum();
  };
  p.egrad = [data](const SpdMatrix& x) {
    const Matrix ax = data->first * x.mat();
    return SymMatrix(ax + ax.transpose() - data->second);
  };
  p.ehess_vec = [data](const SpdMatrix&, const SymMatrix& u) {
    const Matrix au = data->first * u.mat();
    return SymMatrix(au + au.transpose());
  };
  return p;
}

/// (1/2m) sum_i (y_i - a_i^T X a_i)^2 with rank-one measurements A_i = a_i a_i^T.
/// `measurements` holds a_i^T as rows.
inline ProblemInstance make_trace_regression(const Matrix& measurements, const Vector& y) {
  if (measurements.rows() != y.size() || measurements.rows() < 1)
    throw DimensionError("make_trace_regression: need m >= 1 rows matching y");
  struct Data {
    Matrix a;
    Vector y;
  };
  auto data = std::make_shared<const Data>(Data{measurements, y});
  const double inv_m = 1.0 / static_cast<double>(measurements.rows());
  auto quad = [](const Matrix& a, const Matrix& x) -> Vector {
    return (a * x).cwiseProduct(a).rowwise().sum();
  };
  ProblemInstance p;
  p.name = "trace_regression";
  p.dim = measurements.cols();
  p.cost = [data, inv_m, quad](const SpdMatrix& x) {
    return 0.5 * inv_m * (data->y - quad(data->a, x.mat())).squaredNorm();
  };
  p.egrad = [data, inv_m, quad](const SpdMatrix& x) {
    const Vector r = quad(data->a, x.mat()) - data->y;
    return SymMatrix(inv_m * (data->a.transpose() * r.asDiagonal() * data->a));
  };
  p.ehess_vec = [data, inv_m, quad](const SpdMatrix&, const SymMatrix& u) {
    const Vector r = quad(data->a, u.mat());
    return SymMatrix(inv_m * (data->a.transpose() * r.asDiagonal() * data->a));
  };
  return p;
}

struct SamplePair {
  Index i;
  Index j;
};

/// All unordered pairs i < j.
inline std::vector<SamplePair> all_pairs(Index n) {
  std::vector<SamplePair> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) out.push_back({i, j});
  return out;
}

/// log(1 + e^s), overflow-safe.
inline double softplus(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

/// Logistic discriminant metric learning over the given pairs:
/// f(M) = -sum t log p + (1 - t) log(1 - p), p = 1 / (1 + exp(s)),
/// s = (x_i - x_j)^T M (x_i - x_j) (squared Mahalanobis distance).
inline ProblemInstance make_metric_learning(const Matrix& samples, const std::vector<int>& labels,
                                            const std::vector<SamplePair>& pairs) {
  if (samples.rows() < 2 || static_cast<std::size_t>(samples.rows()) != labels.size())
    throw DimensionError("make_metric_learning: need >= 2 labelled samples");
  struct Data {
    Matrix deltas;  // one row per pair
    Vector same;    // t_ij
  };
  Data d{Matrix(static_cast<Index>(pairs.size()), samples.cols()),
         Vector(static_cast<Index>(pairs.size()))};
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& pr = pairs[k];
    d.deltas.row(static_cast<Index>(k)) = samples.row(pr.i) - samples.row(pr.j);
    d.same(static_cast<Index>(k)) =
        labels[static_cast<std::size_t>(pr.i)] == labels[static_cast<std::size_t>(pr.j)] ? 1.0 : 0.0;
  }
  auto data = std::make_shared<const Data>(std::move(d));
  auto scores = [](const Matrix& deltas, const Matrix& m) -> Vector {
    return (deltas * m).cwiseProduct(deltas).rowwise().sum();
  };
  ProblemInstance p;
  p.name = "dml";
  p.dim = samples.cols();
  p.cost = [data, scores](const SpdMatrix& m) {
    const Vector s = scores(data->deltas, m.mat());
    double total = 0.0;
    for (Index k = 0; k < s.size(); ++k) total += softplus(s(k)) - (1.0 - data->same(k)) * s(k);
    return total;
  };
  p.egrad = [data, scores](const SpdMatrix& m) {
    const Vector s = scores(data->deltas, m.mat());
    Vector w(s.size());
    for (Index k = 0; k < s.size(); ++k) w(k) = data->same(k) - 1.0 / (1.0 + std::exp(s(k)));
    return SymMatrix(data->deltas.transpose() * w.asDiagonal() * data->deltas);
  };
  p.ehess_vec = [data, scores](const SpdMatrix& m, const SymMatrix& u) {
    const Vector s = scores(data->deltas, m.mat());
    const Vector su = scores(data->deltas, u.mat());
    Vector w(s.size());
    for (Index k = 0; k < s.size(); ++k) {
      const double pk = 1.0 / (1.0 + std::exp(s(k)));
      w(k) = pk * (1.0 - pk) * su(k);
    }
    return SymMatrix(data->deltas.transpose() * w.asDiagonal() * data->deltas);
  };
  return p;
}

/// tr(X C) - log det X, minimized at C^{-1}.
inline ProblemInstance make_logdet(const SpdMatrix& c) {
  auto cm = std::make_shared<const Matrix>(c.mat());
  ProblemInstance p;
  p.name = "logdet";
  p.dim = c.dim();
  p.cost = [cm](const SpdMatrix& x) {
    if (x.lambda_min() <= 0.0) return std::numeric_limits<double>::infinity();
    return x.mat().cwiseProduct(*cm).sum() - x.log_det();
  };
  p.egrad = [cm](const SpdMatrix& x) { return SymMatrix(*cm) - x.inv(); };
  p.ehess_vec = [](const SpdMatrix& x, const SymMatrix& u) {
    const Matrix xi = x.inv().mat();
    return SymMatrix(xi * u.mat() * xi);
  };
  p.x_star = c.inv();
  return p;
}

/// tr((X - X*) A (X - X*) B) with A, B SPD; Euclidean Hessian A (x) B + B (x) A.
inline ProblemInstance make_quadratic(const SpdMatrix& a, const SpdMatrix& b, const SymMatrix& x_star) {
  struct Data {
    Matrix a, b, xs;
  };
  auto data = std::make_shared<const Data>(Data{a.mat(), b.mat(), x_star.mat()});
  ProblemInstance p;
  p.name = "quadratic";
  p.dim = a.dim();
  p.cost = [data](const SpdMatrix& x) {
    const Matrix d = x.mat() - data->xs;
    return (d * data->a * d).cwiseProduct(data->b).sum();
  };
  p.egrad = [data](const SpdMatrix& x) {
    const Matrix d = x.mat() - data->xs;
    const Matrix adb = data->a * d * data->b;
    return SymMatrix(adb + adb.transpose());
  };
  p.ehess_vec = [data](const SpdMatrix&, const SymMatrix& u) {
    const Matrix aub = data->a * u.mat() * data->b;
    return SymMatrix(aub + aub.transpose());
  };
  p.x_star = x_star;
  return p;
}

/// tr(X A); zero Euclidean Hessian.
inline ProblemInstance make_linear(const SymMatrix& a) {
  auto am = std::make_shared<const Matrix>(a.mat());
  ProblemInstance p;
  p.name = "linear";
  p.dim = a.dim();
  p.cost = [am](const SpdMatrix& x) { return x.mat().cwiseProduct(*am).sum(); };
  p.egrad = [am](const SpdMatrix&) { return SymMatrix(*am); };
  p.ehess_vec = [](const SpdMatrix& x, const SymMatrix&) { return SymMatrix::zero(x.dim()); };
  return p;
}

}  // namespace spdopt
