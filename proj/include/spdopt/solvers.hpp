#pragma once

// Riemannian steepest descent, conjugate gradient, trust region and
// stochastic gradient. Every solver is a template over a model (see
// model.hpp) and never inspects the geometry directly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spdopt/model.hpp"

namespace spdopt {

struct TraceRecord {
  long outer_iter = 0;
  long cum_inner_iters = 0;
  double wall_time = 0.0;
  double loss = 0.0;
  double dist_to_sol = std::numeric_limits<double>::quiet_NaN();
  double egrad_mod_norm = 0.0;
};

struct LineSearchConfig {
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double c1 = 1e-4;
  int max_backtracks = 50;
  /// Start from the minimizer of the local quadratic model along the
  /// direction when its curvature is positive (costs one Hessian product).
  bool model_initial_step = false;
};

struct TrustRegionConfig {
  /// Zero means 10 * model.typical_distance().
  double delta_max = 0.0;
  /// Zero means delta_max / 8.
  double delta0 = 0.0;
  double rho_accept = 0.1;
  double kappa = 0.1;
  double theta = 1.0;
  /// Zero means the tangent-space dimension.
  int max_inner = 0;
};

struct SgdConfig {
  int batch_size = 50;
  double eta0 = 0.1;
  double decay = 0.01;
};

struct SolverConfig {
  int max_outer_iters = 1000;
  double grad_tol = 1e-12;
  double max_time = std::numeric_limits<double>::infinity();
  /// RTR only: stop once this many tCG iterations were spent (0: no cap).
  long max_total_inner = 0;
  /// Write 0 into TraceRecord::wall_time, making traces byte-stable.
  bool record_time = true;
  std::uint64_t seed = 1;
  LineSearchConfig line_search;
  TrustRegionConfig tr;
  SgdConfig sgd;
  /// Called after every record; returning true stops the run.
  std::function<bool(const TraceRecord&)> stop;

  void validate() const {
    if (max_outer_iters < 0 || !(grad_tol >= 0) || !(max_time > 0))
      throw UsageError("SolverConfig: iteration/time limits must be positive");
    const auto& ls = line_search;
    if (!(ls.initial_step > 0) || !(ls.backtrack_factor > 0 && ls.backtrack_factor < 1) ||
        !(ls.c1 > 0 && ls.c1 < 1) || ls.max_backtracks < 1)
      throw UsageError("SolverConfig: invalid line-search parameters");
    if (!(tr.rho_accept > 0 && tr.rho_accept <= 0.25) || !(tr.kappa > 0) || !(tr.theta > 0) ||
        tr.delta_max < 0 || tr.delta0 < 0 || tr.max_inner < 0)
      throw UsageError("SolverConfig: invalid trust-region parameters");
    if (sgd.batch_size < 1 || !(sgd.eta0 > 0) || !(sgd.decay >= 0))
      throw UsageError("SolverConfig: invalid stochastic-gradient parameters");
  }
};

enum class StopReason { grad_tol, max_iters, max_time, max_inner, stalled, callback };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::max_iters: return "max_iters";
    case StopReason::max_time: return "max_time";
    case StopReason::max_inner: return "max_inner";
    case StopReason::stalled: return "stalled";
    case StopReason::callback: return "callback";
  }
  return "?";
}

template <class Point>
struct SolveResult {
  Point x;
  std::vector<TraceRecord> trace;
  StopReason reason = StopReason::max_iters;
};

namespace detail {

class Recorder {
 public:
  explicit Recorder(const SolverConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  /// Appends a record; returns true when the run must stop.
  template <class Model, class Local>
  bool add(std::vector<TraceRecord>& trace, const Model& model, const typename Model::Point& x,
           const Local& l, long outer, long inner) {
    TraceRecord r;
    r.outer_iter = outer;
    r.cum_inner_iters = inner;
    const double t = elapsed();
    r.wall_time = cfg_.record_time ? std::max(t, trace.empty() ? 0.0 : trace.back().wall_time) : 0.0;
    r.loss = l.cost;
    r.dist_to_sol = model.dist_to_solution(x);
    r.egrad_mod_norm = l.egrad_mod_norm;
    trace.push_back(r);
    return cfg_.stop && cfg_.stop(r);
  }

  bool out_of_time() const { return elapsed() > cfg_.max_time; }

 private:
  const SolverConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

template <class Point>
struct LineSearchResult {
  double step = 0.0;  // 0 when no step passed the decrease test
  std::optional<Point> x;
  double cost = 0.0;
  int backtracks = 0;
};

/// Backtracking (Armijo) line search along the geodesic x -> Exp_x(t d).
/// Step-too-long errors from the exponential count as failed trials.
template <class Model, class Local>
LineSearchResult<typename Model::Point> armijo_backtrack(const Model& model, const typename Model::Point& x,
                                                         const Local& l, const typename Model::Tangent& d,
                                                         const LineSearchConfig& ls,
                                                         double initial_step = 0.0) {
  const double slope = model.inner(x, l.rgrad, d);
  if (!(slope < 0.0)) throw NotDescentError("armijo_backtrack: direction is not a descent direction");
  LineSearchResult<typename Model::Point> out;
  double t = initial_step > 0.0 ? initial_step : ls.initial_step;
  for (int k = 0; k <= ls.max_backtracks; ++k, t *= ls.backtrack_factor) {
    out.backtracks = k;
    try {
      auto y = model.exp(x, t * d);
      const double fy = model.cost(y);
      if (fy <= l.cost + ls.c1 * t * slope) {
        out.step = t;
        out.cost = fy;
        out.x.emplace(std::move(y));
        return out;
      }
    } catch (const StepTooLongError&) {
    } catch (const NotSpdError&) {
    }
  }
  return out;
}

/// Riemannian steepest descent with Armijo backtracking.
template <class Model>
SolveResult<typename Model::Point> rsd_solve(const Model& model, const SolverConfig& cfg,
                                             typename Model::Point x0) {
  cfg.validate();
  detail::Recorder rec(cfg);
  SolveResult<typename Model::Point> res{std::move(x0), {}, StopReason::max_iters};
  auto l = model.linearize(res.x);
  if (rec.add(res.trace, model, res.x, l, 0, 0)) return res.reason = StopReason::callback, res;
  for (long it = 1; it <= cfg.max_outer_iters; ++it) {
    if (std::sqrt(std::max(0.0, model.inner(res.x, l.rgrad, l.rgrad))) <= cfg.grad_tol)
      return res.reason = StopReason::grad_tol, res;
    if (rec.out_of_time()) return res.reason = StopReason::max_time, res;
    auto ls = armijo_backtrack(model, res.x, l, -1.0 * l.rgrad, cfg.line_search);
    if (!ls.x) return res.reason = StopReason::stalled, res;
    res.x = std::move(*ls.x);
    l = model.linearize(res.x);
    if (rec.add(res.trace, model, res.x, l, it, it)) return res.reason = StopReason::callback, res;
  }
  return res;
}

/// Riemannian conjugate gradient, Polak-Ribiere+ with identity transport.
/// Restarts with -grad when beta clamps to 0 or the direction is not descent.
template <class Model>
SolveResult<typename Model::Point> rcg_solve(const Model& model, const SolverConfig& cfg,
                                             typename Model::Point x0) {
  cfg.validate();
  detail::Recorder rec(cfg);
  SolveResult<typename Model::Point> res{std::move(x0), {}, StopReason::max_iters};
  auto l = model.linearize(res.x);
  if (rec.add(res.trace, model, res.x, l, 0, 0)) return res.reason = StopReason::callback, res;
  auto d = -1.0 * l.rgrad;
  double gg = model.inner(res.x, l.rgrad, l.rgrad);
  for (long it = 1; it <= cfg.max_outer_iters; ++it) {
    if (std::sqrt(std::max(0.0, gg)) <= cfg.grad_tol) return res.reason = StopReason::grad_tol, res;
    if (rec.out_of_time()) return res.reason = StopReason::max_time, res;
    double t0 = 0.0;
    if (cfg.line_search.model_initial_step) {
      const double curv = model.inner(res.x, d, model.hess(res.x, l, d));
      if (curv > 0.0) t0 = -model.inner(res.x, l.rgrad, d) / curv;
    }
    auto ls = armijo_backtrack(model, res.x, l, d, cfg.line_search, t0);
    if (!ls.x) return res.reason = StopReason::stalled, res;
    auto x_new = std::move(*ls.x);
    auto l_new = model.linearize(x_new);
    const auto g_old = model.transport(res.x, x_new, l.rgrad);
    const auto d_old = model.transport(res.x, x_new, d);
    const double gg_new = model.inner(x_new, l_new.rgrad, l_new.rgrad);
    const double beta = std::max(0.0, (gg_new - model.inner(x_new, l_new.rgrad, g_old)) / gg);
    d = beta * d_old - l_new.rgrad;
    if (!(model.inner(x_new, l_new.rgrad, d) < 0.0)) d = -1.0 * l_new.rgrad;
    res.x = std::move(x_new);
    l = std::move(l_new);
    gg = gg_new;
    if (rec.add(res.trace, model, res.x, l, it, it)) return res.reason = StopReason::callback, res;
  }
  return res;
}

enum class TcgStop { converged, negative_curvature, exceeded_radius, max_inner };

template <class Tangent>
struct TcgResult {
  Tangent u;
  Tangent hu;  // H[u], for the model decrease
  int inner_iters = 0;
  TcgStop reason = TcgStop::converged;
  bool hit_boundary() const {
    return reason == TcgStop::negative_curvature || reason == TcgStop::exceeded_radius;
  }
};

/// Steihaug-Toint truncated CG for min <g,u> + <H u, u>/2 over |u| <= delta.
/// `hess(u)` applies H, `inner(u, v)` is the metric at the current point.
template <class Tangent, class Hess, class Inner>
TcgResult<Tangent> truncated_cg(Hess&& hess, const Tangent& grad, double delta, Inner&& inner, double kappa,
                                double theta, int max_inner) {
  if (!(delta > 0.0)) throw UsageError("truncated_cg: delta must be positive");
  TcgResult<Tangent> out{0.0 * grad, 0.0 * grad, 0, TcgStop::converged};
  Tangent r = grad;
  double rr = inner(r, r);
  const double r0 = std::sqrt(std::max(0.0, rr));
  if (r0 == 0.0) return out;
  Tangent p = -1.0 * r;
  double e_e = 0.0, e_p = 0.0, p_p = rr;
  const double delta2 = delta * delta;
  for (int j = 1; j <= max_inner; ++j) {
    out.inner_iters = j;
    const Tangent hp = hess(p);
    const double php = inner(p, hp);
    const double alpha = rr / php;
    const double e_e_new = e_e + 2.0 * alpha * e_p + alpha * alpha * p_p;
    if (php <= 0.0 || e_e_new >= delta2) {
      const double tau = (-e_p + std::sqrt(std::max(0.0, e_p * e_p + p_p * (delta2 - e_e)))) / p_p;
      out.u += tau * p;
      out.hu += tau * hp;
      out.reason = php <= 0.0 ? TcgStop::negative_curvature : TcgStop::exceeded_radius;
      return out;
    }
    e_e = e_e_new;
    out.u += alpha * p;
    out.hu += alpha * hp;
    r += alpha * hp;
    const double rr_new = inner(r, r);
    const double rn = std::sqrt(std::max(0.0, rr_new));
    if (rn <= r0 * std::min(std::pow(r0, theta), kappa)) {
      out.reason = TcgStop::converged;
      return out;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    p = beta * p - r;
    e_p = beta * (e_p + alpha * p_p);
    p_p = rr + beta * beta * p_p;
  }
  out.reason = TcgStop::max_inner;
  return out;
}

/// Riemannian trust region with a truncated-CG subproblem solver. Every tCG
/// iteration advances cum_inner_iters.
template <class Model>
SolveResult<typename Model::Point> rtr_solve(const Model& model, const SolverConfig& cfg,
                                             typename Model::Point x0) {
  cfg.validate();
  detail::Recorder rec(cfg);
  SolveResult<typename Model::Point> res{std::move(x0), {}, StopReason::max_iters};
  const double delta_max = cfg.tr.delta_max > 0 ? cfg.tr.delta_max : 10.0 * model.typical_distance();
  double delta = cfg.tr.delta0 > 0 ? cfg.tr.delta0 : delta_max / 8.0;
  const int max_inner = cfg.tr.max_inner > 0 ? cfg.tr.max_inner : static_cast<int>(model.tangent_dim(res.x));
  long inner_total = 0;
  auto l = model.linearize(res.x);
  if (rec.add(res.trace, model, res.x, l, 0, 0)) return res.reason = StopReason::callback, res;
  for (long it = 1; it <= cfg.max_outer_iters; ++it) {
    if (std::sqrt(std::max(0.0, model.inner(res.x, l.rgrad, l.rgrad))) <= cfg.grad_tol)
      return res.reason = StopReason::grad_tol, res;
    if (rec.out_of_time()) return res.reason = StopReason::max_time, res;
    if (cfg.max_total_inner > 0 && inner_total >= cfg.max_total_inner)
      return res.reason = StopReason::max_inner, res;
    const auto& x = res.x;
    auto tcg = truncated_cg(
        [&](const typename Model::Tangent& u) { return model.hess(x, l, u); }, l.rgrad, delta,
        [&](const typename Model::Tangent& u, const typename Model::Tangent& v) { return model.inner(x, u, v); },
        cfg.tr.kappa, cfg.tr.theta, max_inner);
    inner_total += tcg.inner_iters;
    const double model_decrease =
        -(model.inner(x, l.rgrad, tcg.u) + 0.5 * model.inner(x, tcg.hu, tcg.u));
    std::optional<typename Model::Point> x_prop;
    double f_prop = std::numeric_limits<double>::infinity();
    try {
      x_prop.emplace(model.exp(x, tcg.u));
      f_prop = model.cost(*x_prop);
    } catch (const StepTooLongError&) {
    } catch (const NotSpdError&) {
    }
    // Regularized ratio keeps rho meaningful when both decreases hit roundoff.
    const double reg = std::max(1.0, std::abs(l.cost)) * std::numeric_limits<double>::epsilon() * 1e3;
    double rho = (l.cost - f_prop + reg) / (model_decrease + reg);
    if (!std::isfinite(rho)) rho = -std::numeric_limits<double>::infinity();
    if (rho < 0.25)
      delta *= 0.25;
    else if (rho > 0.75 && tcg.hit_boundary())
      delta = std::min(2.0 * delta, delta_max);
    if (x_prop && model_decrease > 0.0 && rho > cfg.tr.rho_accept) {
      res.x = std::move(*x_prop);
      l = model.linearize(res.x);
    }
    if (rec.add(res.trace, model, res.x, l, it, inner_total)) return res.reason = StopReason::callback, res;
  }
  return res;
}

/// Riemannian stochastic gradient with step eta_t = eta0 / (1 + eta0 decay t).
/// One outer iteration is one pass over a seeded shuffle of the samples; the
/// trace records the full loss after each pass. A step-too-long error halves
/// the step for that update only.
template <class Model>
SolveResult<typename Model::Point> rsgd_solve(const Model& model, const SolverConfig& cfg,
                                              typename Model::Point x0) {
  cfg.validate();
  detail::Recorder rec(cfg);
  SolveResult<typename Model::Point> res{std::move(x0), {}, StopReason::max_iters};
  const Index n = model.num_samples();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(cfg.seed);
  auto l = model.linearize(res.x);
  if (rec.add(res.trace, model, res.x, l, 0, 0)) return res.reason = StopReason::callback, res;
  long t = 0;
  const std::size_t b = static_cast<std::size_t>(cfg.sgd.batch_size);
  for (long epoch = 1; epoch <= cfg.max_outer_iters; ++epoch) {
    if (rec.out_of_time()) return res.reason = StopReason::max_time, res;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += b, ++t) {
      const std::vector<Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + b)));
      const auto g = model.batch_rgrad(res.x, rows);
      double eta = cfg.sgd.eta0 / (1.0 + cfg.sgd.eta0 * cfg.sgd.decay * static_cast<double>(t));
      for (int k = 0; k <= cfg.line_search.max_backtracks; ++k, eta *= 0.5) {
        try {
          res.x = model.exp(res.x, -eta * g);
          break;
        } catch (const StepTooLongError&) {
        } catch (const NotSpdError&) {
        }
      }
    }
    l = model.linearize(res.x);
    if (!std::isfinite(l.cost)) return res.reason = StopReason::stalled, res;
    if (rec.add(res.trace, model, res.x, l, epoch, epoch)) return res.reason = StopReason::callback, res;
  }
  return res;
}

/// Cumulative mean of the loss column.
inline std::vector<double> running_average(const std::vector<TraceRecord>& trace) {
  std::vector<double> out;
  double s = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    s += trace[k].loss;
    out.push_back(s / static_cast<double>(k + 1));
  }
  return out;
}

}  // namespace spdopt
