#pragma once

// Property runs behind `spdopt diagnose`. Each run returns flat JSON records
// {check, geometry, n, seed, statistic, threshold, pass}; a null threshold
// marks an observational row that always passes.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdopt/harness.hpp"

namespace spdopt {

using CheckRecords = std::vector<nlohmann::json>;

inline nlohmann::json check_record(const std::string& check, const std::string& geometry, Index n,
                                   std::uint64_t seed, double statistic, nlohmann::json threshold, bool pass) {
  nlohmann::json j;
  j["check"] = check;
  j["geometry"] = geometry.empty() ? nlohmann::json(nullptr) : nlohmann::json(geometry);
  j["n"] = n;
  j["seed"] = seed;
  j["statistic"] = std::isfinite(statistic) ? nlohmann::json(statistic) : nlohmann::json(nullptr);
  j["threshold"] = std::move(threshold);
  j["pass"] = pass;
  return j;
}

inline bool all_pass(const CheckRecords& recs) {
  for (const auto& r : recs)
    if (!r.at("pass").get<bool>()) return false;
  return true;
}

inline double rel_gap(double a, double b) { return std::abs(a - b) / std::abs(b); }

/// Hessian condition numbers at the minimizer for AI and BW. logdet and
/// dense wls carry closed-form targets; other problems are observational.
inline CheckRecords check_condnum(const std::string& problem, Index n, double kappa, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.problem = problem;
  cfg.variant = problem == "wls" ? "dense-HighCN" : "";
  cfg.n = n;
  cfg.kappa = kappa > 0 ? kappa : 1e3;
  cfg.seed = seed;
  if (problem == "logdet") cfg.variant = "HighCN";
  if (problem == "gmm") throw UsageError("condnum: gmm has no closed-form minimizer");
  const Experiment e = build_experiment(cfg);
  const ProblemInstance& p = *e.spd;
  const SpdMatrix x = p.x_star ? SpdMatrix(*p.x_star) : SpdMatrix::identity(p.dim);
  const double kx = x.cond();
  CheckRecords out;
  for (Geometry g : {Geometry::ai, Geometry::bw}) {
    const SpdModel model(p, g);
    const bool dense = sym_dim(p.dim) <= kDenseMaxTangentDim;
    const auto rep = dense ? hessian_condition_dense(model, model.point(x))
                           : hessian_condition_lanczos(model, model.point(x), 0, seed);
    double target = std::numeric_limits<double>::quiet_NaN();
    double tol = 1e-6;
    if (problem == "logdet") {
      target = g == Geometry::ai ? 1.0 : kx;
      if (g == Geometry::ai) tol = 1e-8;
    } else if (problem == "wls") {
      target = g == Geometry::ai ? kx * kx : kx;
    }
    const std::string name = std::string("condnum_") + std::string(to_string(rep.method));
    if (std::isnan(target))
      out.push_back(check_record(name, std::string(to_string(g)), p.dim, seed, rep.kappa, nullptr, true));
    else
      out.push_back(check_record(name, std::string(to_string(g)), p.dim, seed, rep.kappa, target,
                                 rel_gap(rep.kappa, target) <= tol));
  }
  return out;
}

/// Sandwich bounds on random quadratics tr((X-X*)A(X-X*)B) and the logdet
/// family, all evaluated at the minimizer.
inline CheckRecords check_condition_bounds(long trials, Index n, std::uint64_t seed) {
  Rng rng(seed);
  long violations = 0, skipped = 0, total = 0;
  auto tally = [&](const ProblemInstance& p, const SpdMatrix& x) {
    const auto rep = condition_bounds_check(p, x);
    ++total;
    if (rep.skipped) ++skipped;
    else if (!rep.pass()) ++violations;
  };
  for (long k = 0; k < trials; ++k) {
    const SpdMatrix a = random_spd(n, rng, 0.1, 10.0);
    const SpdMatrix b = random_spd(n, rng, 0.1, 10.0);
    const SpdMatrix xs = random_spd(n, rng, 0.1, 10.0);
    tally(make_quadratic(a, b, xs.sym()), xs);
  }
  for (double kappa : {1.0, 10.0, 100.0, 1e3}) {
    const SpdMatrix xs = gen_spd_expdecay(n, kappa, seed + static_cast<std::uint64_t>(kappa));
    tally(make_logdet(SpdMatrix::from_eig(xs.eigvecs(), xs.eigvals().cwiseInverse())), xs);
  }
  tally(make_linear(random_spd(n, rng).sym()), random_spd(n, rng));
  CheckRecords out;
  out.push_back(check_record("cond_bounds_violations", "", n, seed, static_cast<double>(violations), 0, violations == 0));
  out.push_back(check_record("cond_bounds_skipped", "", n, seed, static_cast<double>(skipped), nullptr, true));
  out.push_back(check_record("cond_bounds_instances", "", n, seed, static_cast<double>(total), nullptr, true));
  return out;
}

struct NamedFunction {
  std::string name;
  std::function<double(const SymMatrix&)> f;
};

/// Functions that should be geodesically convex under BW, plus the negated
/// quadratic as a control that must show violations.
inline std::pair<std::vector<NamedFunction>, NamedFunction> gconvex_suite(Index n, std::uint64_t seed) {
  Rng rng(seed ^ 0x5bd1e995ULL);
  const Matrix a = random_spd(n, rng, 0.1, 10.0).mat();
  auto eig = [](const SymMatrix& x) { return sym_eig(x).values; };
  std::vector<NamedFunction> fs{
      {"tr(XA)", [a](const SymMatrix& x) { return x.mat().cwiseProduct(a).sum(); }},
      {"tr(XAX)", [a](const SymMatrix& x) { return (x.mat() * a * x.mat()).trace(); }},
      {"-logdet", [eig](const SymMatrix& x) { return -eig(x).array().log().sum(); }},
      {"tr(X^1)", [](const SymMatrix& x) { return x.mat().trace(); }},
      {"tr(X^2)", [eig](const SymMatrix& x) { return eig(x).array().pow(2.0).sum(); }},
      {"tr(X^3)", [eig](const SymMatrix& x) { return eig(x).array().pow(3.0).sum(); }},
      {"tr(exp X)", [eig](const SymMatrix& x) { return eig(x).array().exp().sum(); }},
  };
  NamedFunction control{"-tr(XAX)", [a](const SymMatrix& x) { return -(x.mat() * a * x.mat()).trace(); }};
  return {fs, control};
}

inline CheckRecords check_gconvex(Index n, long pairs, std::uint64_t seed, int grid_points = 11) {
  const auto [fs, control] = gconvex_suite(n, seed);
  const auto grid = uniform_grid(grid_points);
  CheckRecords out;
  for (const auto& nf : fs) {
    const auto rep = gconvexity_probe(nf.f, n, pairs, grid, seed);
    out.push_back(check_record("gconvex:" + nf.name, "bw", n, seed, static_cast<double>(rep.violations), 0,
                               rep.violations == 0));
  }
  const auto rep = gconvexity_probe(control.f, n, pairs, grid, seed);
  auto rec = check_record("gconvex_control:" + control.name, "bw", n, seed, static_cast<double>(rep.violations), 0,
                          rep.violations > 0);
  rec["expect"] = "statistic > threshold";
  out.push_back(std::move(rec));
  return out;
}

/// Minimum trigonometry slack with zeta = 1. Asserted for BW, recorded for AI.
inline CheckRecords check_trig(const std::vector<Index>& ns, long samples, std::uint64_t seed) {
  CheckRecords out;
  for (Index n : ns) {
    for (Geometry g : {Geometry::bw, Geometry::ai}) {
      const auto rep = trig_bound_run(g, n, samples, seed + static_cast<std::uint64_t>(n));
      if (g == Geometry::bw)
        out.push_back(check_record("trig_min_slack", "bw", n, seed, rep.min_slack, -1e-9, rep.min_slack >= -1e-9));
      else
        out.push_back(check_record("trig_min_slack", "ai", n, seed, rep.min_slack, nullptr, true));
    }
  }
  return out;
}

inline CheckRecords check_kernel(Index m, Index n, const std::vector<double>& sigmas, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SpdMatrix> pts;
  for (Index k = 0; k < m; ++k) pts.push_back(random_spd(n, rng, 0.2, 5.0));
  CheckRecords out;
  for (double s : sigmas) {
    const auto rep = bw_kernel_gram(pts, s);
    auto rec = check_record("kernel_min_eig", "bw", n, seed, rep.min_eig, -1e-10, rep.min_eig >= -1e-10);
    rec["sigma"] = s;
    rec["m"] = m;
    out.push_back(std::move(rec));
  }
  return out;
}

inline CheckRecords check_geodesic_match(long pairs, Index n, std::uint64_t seed, int grid_points = 11) {
  Rng rng(seed);
  const auto grid = uniform_grid(grid_points);
  double worst = 0.0;
  for (long k = 0; k < pairs; ++k) {
    const SpdMatrix x = random_spd(n, rng, 0.2, 5.0);
    const SpdMatrix y = random_spd(n, rng, 0.2, 5.0);
    worst = std::max(worst, geodesic_match_error(x, y, grid));
  }
  return {check_record("geodesic_match_rel", "bw", n, seed, worst, 1e-8, worst <= 1e-8)};
}

/// Gradient and Hessian finite-difference certification at random points
/// (not just the identity, where several metric mistakes cancel).
inline CheckRecords check_certify(ExperimentConfig cfg, int probes) {
  const Experiment e = build_experiment(cfg);
  CheckRecords out;
  Rng rng(cfg.seed ^ 0xc2b2ae35ULL);
  for (Geometry g : cfg.geometries) {
    CertificationReport rep;
    Index n = 0;
    if (e.spd) {
      const SpdModel model(*e.spd, g);
      n = e.spd->dim;
      std::vector<SpdModel::Point> pts;
      for (int k = 0; k < probes; ++k) pts.push_back(model.point(random_spd(n, rng)));
      rep = certify_problem(model, pts, cfg.seed);
    } else {
      const GmmModel model(*e.gmm, g);
      n = e.gmm->aug_dim();
      std::vector<GmmModel::Point> pts;
      std::normal_distribution<double> normal(0.0, 0.5);
      for (int k = 0; k < probes; ++k) {
        std::vector<SpdMatrix> s;
        for (int j = 0; j < e.gmm->num_components(); ++j) s.push_back(random_spd(n, rng));
        Vector w(e.gmm->num_components() - 1);
        for (Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
        pts.push_back(model.point(s, w));
      }
      rep = certify_problem(model, pts, cfg.seed);
    }
    const std::string gs(to_string(g));
    out.push_back(check_record("certify_grad:" + cfg.problem, gs, n, cfg.seed, rep.max_grad_err, rep.grad_tol,
                               rep.max_grad_err <= rep.grad_tol));
    out.push_back(check_record("certify_hess:" + cfg.problem, gs, n, cfg.seed, rep.max_hess_err, rep.hess_tol,
                               rep.max_hess_err <= rep.hess_tol));
  }
  return out;
}

}  // namespace spdopt
