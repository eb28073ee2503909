#pragma once

// Experiment assembly for the benchmark CLI: builds problem instances from a
// flat configuration, runs one solver per geometry, and serializes traces
// (CSV) and summaries (JSON).

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdopt/dataset.hpp"
#include "spdopt/diagnostics.hpp"
#include "spdopt/generators.hpp"
#include "spdopt/solvers.hpp"

namespace spdopt {

struct ExperimentConfig {
  std::string problem = "logdet";
  std::string variant;
  std::vector<Geometry> geometries{Geometry::ai, Geometry::bw, Geometry::le};
  std::string solver = "rtr";
  /// Zero entries take the problem's desk-scale default (paper scale with
  /// paper_scale set).
  Index n = 0;
  double kappa = 0.0;
  Index m = 0;
  Index d = 0;
  Index r = 0;
  int components = 3;
  double sigma = 0.1;
  std::uint64_t seed = 1;
  bool paper_scale = false;
  std::string dataset;  // dml: Keel CSV path; empty means synthetic
  int max_iters = 0;    // zero: solver-specific default
  long max_inner = 0;
  double max_time = 300.0;
  double eta0 = 0.0;  // rsgd: zero means grid search
  int batch_size = 50;
  bool record_time = true;
  bool certify = true;
  /// Start spd problems from a seeded random SPD matrix instead of identity.
  bool random_start = false;
  /// Stop a run once every applicable threshold has been reached.
  bool stop_at_thresholds = true;
  int jobs = 1;
};

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::vector<Geometry> parse_geometry_list(const std::string& csv) {
  std::vector<Geometry> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_geometry(item));
  if (out.empty()) throw UsageError("empty geometry list");
  return out;
}

/// A ready-to-run instance. Exactly one of `spd` and `gmm` is set.
struct Experiment {
  ExperimentConfig cfg;
  std::optional<ProblemInstance> spd;
  std::optional<GmmProblem> gmm;
  std::optional<GmmInit> gmm_init;
  double x_star_norm = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline Index pick(Index given, Index desk, Index paper, bool paper_scale) {
  return given > 0 ? given : (paper_scale ? paper : desk);
}

inline double cn_for_variant(const std::string& v, double given) {
  if (given > 0) return given;
  if (v.find("lowcn") != std::string::npos) return 10.0;
  if (v.find("highcn") != std::string::npos) return 1e3;
  throw UsageError("variant '" + v + "' must name LowCN or HighCN (or pass kappa)");
}

}  // namespace detail

inline std::vector<std::string> known_problems() {
  return {"wls", "lyapunov", "trace_regression", "dml", "logdet", "gmm"};
}

inline std::string default_variant(const std::string& problem) {
  if (problem == "wls") return "dense-HighCN";
  if (problem == "lyapunov") return "Ex1Full";
  if (problem == "trace_regression") return "SynFull";
  if (problem == "dml") return "synthetic";
  if (problem == "logdet") return "HighCN";
  if (problem == "gmm") return "synthetic";
  throw UsageError("unknown problem '" + problem + "'");
}

inline Experiment build_experiment(ExperimentConfig cfg) {
  if (cfg.variant.empty()) cfg.variant = default_variant(cfg.problem);
  const std::string v = lower(cfg.variant);
  const bool ps = cfg.paper_scale;
  Experiment e;
  if (cfg.problem == "wls") {
    const Index n = detail::pick(cfg.n, 20, 50, ps);
    const double kappa = detail::cn_for_variant(v, cfg.kappa);
    const SpdMatrix xs = gen_spd_expdecay(n, kappa, cfg.seed);
    SymMatrix a = SymMatrix(Matrix::Ones(n, n));
    if (v.rfind("sparse", 0) == 0)
      a = gen_sparse_mask(n, 0.1, cfg.seed + 1);
    else if (v.rfind("dense", 0) != 0)
      throw UsageError("wls variant must start with dense or sparse");
    ProblemInstance p = make_wls(a, SymMatrix(a.mat().cwiseProduct(xs.mat())));
    p.x_star = xs.sym();
    e.spd = std::move(p);
  } else if (cfg.problem == "lyapunov") {
    const bool ex1 = v.rfind("ex1", 0) == 0;
    if (!ex1 && v.rfind("ex2", 0) != 0) throw UsageError("lyapunov variant must be Ex1Full, Ex1Low, Ex2Full or Ex2Low");
    const bool low = v.find("low") != std::string::npos;
    SymMatrix a = ex1 ? gen_laplace2d(7) : gen_toeplitz(detail::pick(cfg.n, 20, 50, ps));
    const Index n = a.dim();
    const SymMatrix xs = low ? gen_lowrank_diag(n, std::min<Index>(cfg.r > 0 ? cfg.r : 10, n)) : gen_wishart(n, n, cfg.seed);
    const SymMatrix c(a.mat() * xs.mat() + xs.mat() * a.mat());
    ProblemInstance p = make_lyapunov(SpdMatrix(a), c);
    p.x_star = xs;
    e.spd = std::move(p);
  } else if (cfg.problem == "trace_regression") {
    const bool low = v == "synlow";
    if (!low && v != "synfull") throw UsageError("trace_regression variant must be SynFull or SynLow");
    const Index d = detail::pick(cfg.d, 20, 50, ps);
    const Index m = detail::pick(cfg.m, 1000, 1000, ps);
    const Index r = cfg.r > 0 ? cfg.r : (low ? std::max<Index>(1, d / 5) : d);
    const TraceData td = gen_trace_data(m, d, r, cfg.sigma, cfg.seed);
    ProblemInstance p = make_trace_regression(td.measurements, td.y);
    p.x_star = td.x_star;
    e.spd = std::move(p);
  } else if (cfg.problem == "dml") {
    LabelledData data = cfg.dataset.empty()
                            ? gen_classification(detail::pick(cfg.m, 241, 241, ps), detail::pick(cfg.d, 9, 9, ps),
                                                 cfg.components > 0 ? cfg.components : 7, cfg.seed)
                            : load_keel_csv(cfg.dataset);
    const Index nsamp = data.features.rows();
    std::vector<SamplePair> pairs;
    if (nsamp <= 1000) {
      pairs = all_pairs(nsamp);
    } else {
      Rng rng(cfg.seed);
      std::uniform_int_distribution<Index> pickrow(0, nsamp - 1);
      while (pairs.size() < 100000) {
        Index i = pickrow(rng), j = pickrow(rng);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        pairs.push_back({i, j});
      }
    }
    e.spd = make_metric_learning(data.features, data.labels, pairs);
  } else if (cfg.problem == "logdet") {
    const Index n = detail::pick(cfg.n, 20, 50, ps);
    const double kappa = detail::cn_for_variant(v, cfg.kappa);
    const SpdMatrix xs = gen_spd_expdecay(n, kappa, cfg.seed);
    e.spd = make_logdet(SpdMatrix::from_eig(xs.eigvecs(), xs.eigvals().cwiseInverse()));
  } else if (cfg.problem == "gmm") {
    const Index nsamp = detail::pick(cfg.m, 1580, 1580, ps);
    const GmmData data = gen_gmm_data(nsamp, cfg.seed);
    const int k = cfg.components > 0 ? cfg.components : 3;
    e.gmm.emplace(data.samples, k);
    e.gmm_init = kmeanspp_init(data.samples, k, cfg.seed);
  } else {
    throw UsageError("unknown problem '" + cfg.problem + "'");
  }
  if (e.spd && e.spd->x_star) e.x_star_norm = e.spd->x_star->norm();
  e.cfg = std::move(cfg);
  return e;
}

struct Threshold {
  std::string name;
  bool on_dist;  // dist_to_sol <= value * |X*|_F, else egrad_mod_norm <= value
  double value;
};

inline std::vector<Threshold> standard_thresholds() {
  return {{"dist_rel_1e-2", true, 1e-2},  {"dist_rel_1e-4", true, 1e-4}, {"dist_rel_1e-6", true, 1e-6},
          {"egrad_mod_1e-4", false, 1e-4}, {"egrad_mod_1e-8", false, 1e-8}};
}

inline bool threshold_met(const Threshold& t, const TraceRecord& r, double x_star_norm) {
  if (t.on_dist) return std::isfinite(r.dist_to_sol) && r.dist_to_sol <= t.value * x_star_norm;
  return r.egrad_mod_norm <= t.value;
}

/// First record meeting the threshold, if any.
inline std::optional<TraceRecord> first_hit(const std::vector<TraceRecord>& trace, const Threshold& t,
                                            double x_star_norm) {
  for (const auto& r : trace)
    if (threshold_met(t, r, x_star_norm)) return r;
  return std::nullopt;
}

struct GeometryRun {
  Geometry geometry = Geometry::ai;
  std::vector<TraceRecord> trace;
  StopReason reason = StopReason::max_iters;
  double wall_time_s = 0.0;
  double eta0 = 0.0;  // rsgd only
};

class CertificationError : public Error {
 public:
  CertificationError(const std::string& what, CertificationReport rep) : Error(what), report_(rep) {}
  const CertificationReport& report() const { return report_; }

 private:
  CertificationReport report_;
};

namespace detail {

inline SolverConfig solver_config(const Experiment& e) {
  const auto& c = e.cfg;
  SolverConfig s;
  s.seed = c.seed;
  s.record_time = c.record_time;
  s.max_time = c.max_time;
  s.max_total_inner = c.max_inner;
  s.sgd.batch_size = c.batch_size;
  if (c.solver == "rtr")
    s.max_outer_iters = c.max_iters > 0 ? c.max_iters : 500;
  else if (c.solver == "rsgd")
    s.max_outer_iters = c.max_iters > 0 ? c.max_iters : 30;
  else
    s.max_outer_iters = c.max_iters > 0 ? c.max_iters : 3000;
  if (c.stop_at_thresholds) {
    const auto th = standard_thresholds();
    const double xn = e.x_star_norm;
    s.stop = [th, xn](const TraceRecord& r) {
      for (const auto& t : th) {
        if (t.on_dist && !std::isfinite(xn)) continue;
        if (!threshold_met(t, r, xn)) return false;
      }
      return true;
    };
  }
  return s;
}

template <class Model>
SolveResult<typename Model::Point> dispatch(const Model& model, const std::string& solver, const SolverConfig& s,
                                            typename Model::Point x0) {
  if (solver == "rsd") return rsd_solve(model, s, std::move(x0));
  if (solver == "rcg") return rcg_solve(model, s, std::move(x0));
  if (solver == "rtr") return rtr_solve(model, s, std::move(x0));
  if (solver == "rsgd") {
    if constexpr (requires { model.batch_rgrad(x0, std::vector<Index>{}); }) {
      return rsgd_solve(model, s, std::move(x0));
    } else {
      throw UsageError("rsgd needs a problem with minibatches (gmm)");
    }
  }
  throw UsageError("unknown solver '" + solver + "' (expected rsd, rcg, rtr or rsgd)");
}

template <class Model>
void certify_or_throw(const Model& model, const typename Model::Point& x0, std::uint64_t seed) {
  const auto rep = certify_problem(model, std::vector<typename Model::Point>(3, x0), seed);
  if (!rep.pass()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "certification failed (%s): grad err %.3g, hess err %.3g",
                  std::string(to_string(model.geometry())).c_str(), rep.max_grad_err, rep.max_hess_err);
    throw CertificationError(buf, rep);
  }
}

}  // namespace detail

/// Runs the configured solver under one geometry from the standard start
/// (identity, or kmeans++ for gmm). Certifies the problem first unless
/// disabled.
inline GeometryRun run_geometry(const Experiment& e, Geometry g) {
  GeometryRun out;
  out.geometry = g;
  SolverConfig s = detail::solver_config(e);
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](auto&& res) {
    out.trace = std::move(res.trace);
    out.reason = res.reason;
  };
  if (e.spd) {
    if (e.cfg.solver == "rsgd") throw UsageError("rsgd needs a problem with minibatches (gmm)");
    const SpdModel model(*e.spd, g);
    auto x0 = model.default_start();
    if (e.cfg.random_start) {
      Rng rng(e.cfg.seed + 7919);
      x0 = model.point(random_spd(e.spd->dim, rng));
    }
    if (e.cfg.certify) detail::certify_or_throw(model, x0, e.cfg.seed);
    finish(detail::dispatch(model, e.cfg.solver, s, x0));
  } else {
    const GmmModel model(*e.gmm, g);
    const auto x0 = model.point(*e.gmm_init);
    if (e.cfg.certify) detail::certify_or_throw(model, x0, e.cfg.seed);
    if (e.cfg.solver == "rsgd") {
      std::vector<double> grid{e.cfg.eta0};
      if (!(e.cfg.eta0 > 0)) grid = {1.0, 0.5, 0.1, 0.05, 0.01};
      double best = std::numeric_limits<double>::infinity();
      for (double eta : grid) {
        s.sgd.eta0 = eta;
        auto res = rsgd_solve(model, s, x0);
        const double final_loss = res.trace.back().loss;
        if (final_loss < best) {
          best = final_loss;
          out.eta0 = eta;
          finish(std::move(res));
        }
      }
    } else {
      finish(detail::dispatch(model, e.cfg.solver, s, x0));
    }
  }
  out.wall_time_s = e.cfg.record_time
                        ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                        : 0.0;
  return out;
}

/// Runs every configured geometry, `cfg.jobs` at a time. Results keep the
/// configured geometry order.
inline std::vector<GeometryRun> run_experiment(const Experiment& e) {
  std::vector<GeometryRun> out(e.cfg.geometries.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, e.cfg.jobs));
  for (std::size_t start = 0; start < out.size(); start += jobs) {
    std::vector<std::future<GeometryRun>> pending;
    for (std::size_t k = start; k < std::min(out.size(), start + jobs); ++k)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&e, g = e.cfg.geometries[k]] { return run_geometry(e, g); }));
    for (std::size_t k = 0; k < pending.size(); ++k) out[start + k] = pending[k].get();
  }
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kTraceHeader = "outer_iter,cum_inner_iters,time_s,loss,dist_to_sol,egrad_mod_norm";

inline std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : trace) {
    out += std::to_string(r.outer_iter) + "," + std::to_string(r.cum_inner_iters) + "," + format_double(r.wall_time) +
           "," + format_double(r.loss) + "," + format_double(r.dist_to_sol) + "," + format_double(r.egrad_mod_norm) +
           "\n";
  }
  return out;
}

inline std::vector<TraceRecord> parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTraceHeader)
    throw DomainError("trace csv: unexpected header");
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 6) throw DomainError("trace csv: expected 6 columns");
    TraceRecord r;
    r.outer_iter = std::stol(cells[0]);
    r.cum_inner_iters = std::stol(cells[1]);
    r.wall_time = std::stod(cells[2]);
    r.loss = std::stod(cells[3]);
    r.dist_to_sol = std::stod(cells[4]);
    r.egrad_mod_norm = std::stod(cells[5]);
    out.push_back(r);
  }
  return out;
}

inline nlohmann::json threshold_json(const std::vector<TraceRecord>& trace, double x_star_norm) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& t : standard_thresholds()) {
    if (t.on_dist && !std::isfinite(x_star_norm)) {
      j[t.name] = nullptr;
      continue;
    }
    const auto hit = first_hit(trace, t, x_star_norm);
    if (hit)
      j[t.name] = {{"outer_iter", hit->outer_iter}, {"cum_inner_iters", hit->cum_inner_iters}, {"time_s", hit->wall_time}};
    else
      j[t.name] = nullptr;
  }
  return j;
}

inline nlohmann::json run_summary(const Experiment& e, const GeometryRun& run) {
  nlohmann::json j;
  j["problem"] = e.cfg.problem;
  j["variant"] = e.cfg.variant;
  j["geometry"] = std::string(to_string(run.geometry));
  j["solver"] = e.cfg.solver;
  j["thresholds"] = threshold_json(run.trace, e.x_star_norm);
  j["wall_time_s"] = run.wall_time_s;
  j["seed"] = e.cfg.seed;
  j["stop_reason"] = std::string(to_string(run.reason));
  j["x_star_norm"] = std::isfinite(e.x_star_norm) ? nlohmann::json(e.x_star_norm) : nlohmann::json(nullptr);
  j["final"] = {{"outer_iter", run.trace.back().outer_iter},
                {"cum_inner_iters", run.trace.back().cum_inner_iters},
                {"loss", run.trace.back().loss}};
  if (run.eta0 > 0) j["eta0"] = run.eta0;
  return j;
}

/// Ordering of geometries by cumulative inner iterations to a threshold;
/// geometries that never reach it come last in input order.
inline std::vector<std::string> order_by_threshold(const std::vector<nlohmann::json>& summaries, const std::string& key) {
  std::vector<std::pair<long, std::string>> hits;
  std::vector<std::string> misses;
  for (const auto& s : summaries) {
    const auto& t = s.at("thresholds");
    const std::string label = s.at("geometry").get<std::string>() + "/" + s.at("solver").get<std::string>();
    if (t.contains(key) && !t.at(key).is_null())
      hits.emplace_back(t.at(key).at("cum_inner_iters").get<long>(), label);
    else
      misses.push_back(label);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& h : hits) out.push_back(h.second);
  for (auto& m : misses) out.push_back(m);
  return out;
}

/// Merges run summaries of one problem/variant into a comparison record and a
/// markdown table.
inline std::pair<nlohmann::json, std::string> compare_summaries(const std::vector<nlohmann::json>& summaries) {
  if (summaries.empty()) throw UsageError("compare: no summaries given");
  const auto problem = summaries.front().at("problem").get<std::string>();
  const auto variant = summaries.front().at("variant").get<std::string>();
  for (const auto& s : summaries)
    if (s.at("problem") != problem || s.at("variant") != variant)
      throw UsageError("compare: summaries mix problems or variants");
  nlohmann::json j;
  j["problem"] = problem;
  j["variant"] = variant;
  j["runs"] = summaries;
  std::ostringstream md;
  md << "| geometry | solver |";
  const auto th = standard_thresholds();
  for (const auto& t : th) md << " " << t.name << " |";
  md << "\n|---|---|";
  for (std::size_t k = 0; k < th.size(); ++k) md << "---|";
  md << "\n";
  for (const auto& s : summaries) {
    md << "| " << s.at("geometry").get<std::string>() << " | " << s.at("solver").get<std::string>() << " |";
    for (const auto& t : th) {
      const auto& v = s.at("thresholds").at(t.name);
      if (v.is_null())
        md << " - |";
      else
        md << " " << v.at("cum_inner_iters").get<long>() << " (" << format_double(v.at("time_s").get<double>()) << " s) |";
    }
    md << "\n";
  }
  nlohmann::json orders;
  for (const auto& t : th) orders[t.name] = order_by_threshold(summaries, t.name);
  j["orderings"] = orders;
  return {j, md.str()};
}

}  // namespace spdopt
