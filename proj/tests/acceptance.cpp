// Acceptance run: prints one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail 8,9] [--skip-rerun]
//
// Exit status is 0 exactly when the failing criteria equal the --expect-fail
// set, so a known failure that starts passing is reported too.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spdopt/checks.hpp"
#include "spdopt/harness.hpp"

using namespace spdopt;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string digest;  // serialized results, compared byte for byte on rerun
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome from_records(const CheckRecords& recs) {
  Outcome o;
  o.pass = all_pass(recs);
  for (const auto& r : recs) {
    o.digest += r.dump() + "\n";
    if (!r.at("pass").get<bool>()) {
      if (!o.detail.empty()) o.detail += "; ";
      o.detail += r.at("check").get<std::string>();
      if (!r.at("geometry").get<std::string>().empty()) o.detail += "[" + r.at("geometry").get<std::string>() + "]";
      if (r.contains("sigma")) o.detail += "[sigma=" + format_double(r.at("sigma").get<double>()) + "]";
      o.detail += " = " + fmt("%.3g", r.at("statistic").get<double>());
    }
  }
  if (o.pass) o.detail = std::to_string(recs.size()) + " records within threshold";
  return o;
}

void merge(Outcome& into, const Outcome& part) {
  into.pass = into.pass && part.pass;
  into.digest += part.digest;
  if (!part.pass) into.detail += (into.detail.empty() ? "" : "; ") + part.detail;
}

ExperimentConfig base(const std::string& problem, const std::string& variant) {
  ExperimentConfig c;
  c.problem = problem;
  c.variant = variant;
  c.solver = "rtr";
  c.seed = kSeed;
  c.record_time = false;
  return c;
}

GeometryRun run(ExperimentConfig c, Geometry g, long max_inner = 0) {
  c.max_inner = max_inner;
  return run_geometry(build_experiment(c), g);
}

/// Inner iterations to the first record meeting `t`, or -1.
long hit(const GeometryRun& r, const Threshold& t, double xn) {
  const auto h = first_hit(r.trace, t, xn);
  return h ? h->cum_inner_iters : -1;
}

std::string hit_str(long h, long cap) {
  if (h >= 0) return std::to_string(h);
  return cap > 0 ? "none within " + std::to_string(cap) : "never";
}

Threshold threshold(const std::string& name) {
  for (const auto& t : standard_thresholds())
    if (t.name == name) return t;
  throw UsageError("no threshold " + name);
}

/// `leader` reaches `th` in strictly fewer inner iterations than every other
/// geometry. Competitors are capped at the leader's count, which cannot change
/// the verdict.
Outcome leader_first(const ExperimentConfig& c, Geometry leader, const std::string& th_name, const std::string& label) {
  const Threshold th = threshold(th_name);
  const Experiment e = build_experiment(c);
  const GeometryRun lead = run_geometry(e, leader);
  Outcome o;
  o.digest = trace_csv(lead.trace);
  const long h = hit(lead, th, e.x_star_norm);
  o.detail = label + ": " + std::string(to_string(leader)) + " " + hit_str(h, 0);
  if (h < 0) {
    o.pass = false;
    o.detail += fmt(" (best dist/|X*| %.2e)", [&] {
      double best = INFINITY;
      for (const auto& r : lead.trace) best = std::min(best, r.dist_to_sol);
      return best / e.x_star_norm;
    }());
    return o;
  }
  for (Geometry g : {Geometry::ai, Geometry::bw, Geometry::le}) {
    if (g == leader) continue;
    const GeometryRun other = run(c, g, h);
    o.digest += trace_csv(other.trace);
    const long ho = hit(other, th, e.x_star_norm);
    const bool ok = ho < 0 || ho > h;
    o.pass = o.pass && ok;
    o.detail += ", " + std::string(to_string(g)) + " " + hit_str(ho, h);
  }
  return o;
}

Outcome c1_kernels() {
  Rng rng(kSeed);
  double lyap = 0.0, sq = 0.0, le = 0.0, el = 0.0;
  for (int k = 0; k < 100; ++k) {
    const SpdMatrix x = random_spd(50, rng, 0.01, 10.0);
    const SymMatrix u = random_sym(50, rng);
    const Matrix l = lyapunov_solve(x, u).mat();
    lyap = std::max(lyap, (l * x.mat() + x.mat() * l - u.mat()).norm() / u.norm());
    const Matrix r = x.sqrt().mat();
    sq = std::max(sq, relative_error(r * r, x.mat()));
    el = std::max(el, relative_error(expm_sym(logm(x)).mat(), x.mat()));
    SymMatrix s = random_sym(50, rng);
    s *= 5.0 / sym_eig(s).values.cwiseAbs().maxCoeff();
    le = std::max(le, relative_error(logm(expm_sym(s)).mat(), s.mat()));
  }
  Outcome o;
  o.pass = lyap <= 1e-10 && sq <= 1e-9 && le <= 1e-9 && el <= 1e-9;
  o.detail = "lyapunov " + fmt("%.2e", lyap) + ", sqrt " + fmt("%.2e", sq) + ", log(exp) " + fmt("%.2e", le) +
             ", exp(log) " + fmt("%.2e", el);
  o.digest = format_double(lyap) + format_double(sq) + format_double(le) + format_double(el);
  return o;
}

Outcome c2_certification() {
  Outcome o;
  for (const auto& p : known_problems()) merge(o, from_records(check_certify(base(p, ""), 20)));
  if (o.pass) o.detail = "6 problems x {ai, bw, le}, 20 random probes each";
  return o;
}

Outcome c5_logdet_exact() {
  Outcome o;
  for (double kappa : {10.0, 1e3}) merge(o, from_records(check_condnum("logdet", 6, kappa, kSeed)));
  if (o.pass) o.detail = "kappa in {10, 1e3}";
  return o;
}

Outcome c6_wls_closed_form() {
  Outcome o;
  for (double kappa : {10.0, 1e3}) merge(o, from_records(check_condnum("wls", 6, kappa, kSeed)));
  if (o.pass) o.detail = "kappa in {10, 1e3}";
  return o;
}

Outcome c7_wls_rtr() {
  auto c = base("wls", "dense-HighCN");
  c.n = 20;
  c.kappa = 1e3;
  return leader_first(c, Geometry::bw, "dist_rel_1e-6", "inner iterations to dist 1e-6");
}

Outcome c8_logdet_rtr() {
  auto c = base("logdet", "HighCN");
  c.n = 20;
  c.kappa = 1e3;
  const Threshold th = threshold("egrad_mod_1e-8");
  const Experiment e = build_experiment(c);
  const GeometryRun ai = run_geometry(e, Geometry::ai);
  const long a = hit(ai, th, e.x_star_norm);
  Outcome o;
  o.digest = trace_csv(ai.trace);
  if (a < 0) {
    o.pass = false;
    o.detail = "ai never reached egrad_mod 1e-8";
    return o;
  }
  const GeometryRun bw = run(c, Geometry::bw, a);
  const GeometryRun le = run_geometry(e, Geometry::le);
  o.digest += trace_csv(bw.trace) + trace_csv(le.trace);
  const long b = hit(bw, th, e.x_star_norm);
  const long l = hit(le, th, e.x_star_norm);
  const bool ai_first = b < 0 || b > a;
  const bool le_close = l >= 0 && l <= 2 * a;
  o.pass = ai_first && le_close;
  o.detail = "inner iterations to egrad_mod 1e-8: ai " + std::to_string(a) + ", bw " + hit_str(b, a) + ", le " +
             hit_str(l, 0) + (l >= 0 ? fmt(" (le/ai %.2f, limit 2)", static_cast<double>(l) / a) : "");
  return o;
}

Outcome c9_fig2() {
  Outcome o;
  o.detail.clear();
  std::string all;
  for (const char* v : {"Ex1Full", "Ex1Low"}) {
    const Outcome part = leader_first(base("lyapunov", v), Geometry::bw, "dist_rel_1e-4", v);
    o.pass = o.pass && part.pass;
    o.digest += part.digest;
    all += (all.empty() ? "" : "; ") + part.detail + (part.pass ? "" : " FAIL");
  }
  for (const char* v : {"SynFull", "SynLow"}) {
    auto c = base("trace_regression", v);
    c.m = 1000;
    c.d = 20;
    const Outcome part = leader_first(c, Geometry::bw, "dist_rel_1e-4", v);
    o.pass = o.pass && part.pass;
    o.digest += part.digest;
    all += "; " + part.detail + (part.pass ? "" : " FAIL");
  }
  o.detail = "inner iterations to dist 1e-4: " + all;
  return o;
}

Outcome c13_gmm() {
  Outcome o;
  // Likelihood equality under the recovery map.
  const GmmData data = gen_gmm_data(1580, kSeed);
  const GmmProblem prob(data.samples, 3);
  Rng rng(kSeed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpdMatrix> s;
    std::vector<ManifoldPoint> parts;
    for (int j = 0; j < 3; ++j) {
      const Vector mu = 2.0 * gaussian_matrix(2, 1, rng);
      s.push_back(gmm_block_from_moments(mu, random_spd(2, rng, 0.2, 3.0).mat()));
      parts.emplace_back(Geometry::ai, s.back());
    }
    const Vector omega = gaussian_matrix(2, 1, rng);
    const double ll = gmm_classical_loglik(data.samples, recover_gmm_params(s, omega));
    worst = std::max(worst, std::abs(-prob.cost(ProductPoint(parts, omega)) - ll));
  }
  const bool equal = worst <= 1e-9;
  o.digest = format_double(worst);

  // RTR at a fixed inner-iteration budget: loss at the last record within it.
  auto c = base("gmm", "synthetic");
  c.stop_at_thresholds = false;
  const long budget = 2000;
  auto loss_at_budget = [&](Geometry g) {
    const GeometryRun r = run(c, g, budget);
    o.digest += trace_csv(r.trace);
    double loss = r.trace.front().loss;
    for (const auto& rec : r.trace)
      if (rec.cum_inner_iters <= budget) loss = rec.loss;
    return loss;
  };
  const double ll_ai = -loss_at_budget(Geometry::ai);
  const double ll_bw = -loss_at_budget(Geometry::bw);
  // Both runs may converge to the same critical point; allow roundoff.
  const bool ai_ge = ll_ai >= ll_bw - 1e-12 * std::abs(ll_bw);

  // RSGD, batch 50, kmeans++ start.
  auto cs = c;
  cs.solver = "rsgd";
  cs.batch_size = 50;
  bool monotone = true;
  std::string rsgd;
  for (Geometry g : {Geometry::ai, Geometry::bw}) {
    const GeometryRun r = run_geometry(build_experiment(cs), g);
    o.digest += trace_csv(r.trace);
    const auto avg = running_average(r.trace);
    bool ok = avg.back() < avg.front();
    for (std::size_t k = 1; k < avg.size(); ++k) ok = ok && avg[k] <= avg[k - 1];
    monotone = monotone && ok;
    rsgd += std::string(rsgd.empty() ? "" : ", ") + std::string(to_string(g)) + (ok ? " monotone" : " NOT monotone") +
            " (eta0 " + fmt("%g", r.eta0) + ")";
  }
  o.pass = equal && ai_ge && monotone;
  o.detail = "likelihood gap " + fmt("%.2e", worst) + "; mean log-likelihood at 2000 inner: ai " +
             fmt("%.15g", ll_ai) + ", bw " + fmt("%.15g", ll_bw) + "; rsgd running average: " + rsgd;
  return o;
}

struct Criterion {
  int id;
  std::function<Outcome()> run;
};

std::vector<Criterion> criteria() {
  return {
      {1, c1_kernels},
      {2, c2_certification},
      {3, [] { return from_records(check_geodesic_match(100, 10, kSeed)); }},
      {4, [] { return from_records(check_condition_bounds(200, 5, kSeed)); }},
      {5, c5_logdet_exact},
      {6, c6_wls_closed_form},
      {7, c7_wls_rtr},
      {8, c8_logdet_rtr},
      {9, c9_fig2},
      {10, [] { return from_records(check_gconvex(8, 1000, kSeed)); }},
      {11, [] { return from_records(check_trig({3, 5}, 10000, kSeed)); }},
      {12, [] { return from_records(check_kernel(50, 5, {0.1, 1.0, 10.0}, kSeed)); }},
      {13, c13_gmm},
  };
}

std::set<int> parse_ids(const std::string& csv) {
  std::set<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %2d: %s  %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  bool rerun = true;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--expect-fail") && i + 1 < argc)
      expected = parse_ids(argv[++i]);
    else if (!std::strcmp(argv[i], "--skip-rerun"))
      rerun = false;
    else if (std::strcmp(argv[i], "--expect-fail") != 0) {
      std::fprintf(stderr, "usage: acceptance [--expect-fail ids] [--skip-rerun]\n");
      return 2;
    }
  }
  using clock = std::chrono::steady_clock;
  std::set<int> failed;
  std::vector<std::string> digests;
  const auto list = criteria();
  for (const auto& c : list) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("error: ") + ex.what();
    }
    report(c.id, o.pass, o.detail, std::chrono::duration<double>(clock::now() - t0).count());
    if (!o.pass) failed.insert(c.id);
    digests.push_back(o.digest);
  }

  if (rerun) {
    const auto t0 = clock::now();
    std::string differing;
    for (std::size_t k = 0; k < list.size(); ++k) {
      std::string again;
      try {
        again = list[k].run().digest;
      } catch (const std::exception& ex) {
        again = std::string("error: ") + ex.what();
      }
      if (again != digests[k]) differing += (differing.empty() ? "" : ", ") + std::to_string(list[k].id);
    }
    const bool ok = differing.empty();
    report(14, ok, ok ? "criteria 1-13 rerun byte-identical" : "rerun differs for criteria " + differing,
           std::chrono::duration<double>(clock::now() - t0).count());
    if (!ok) failed.insert(14);
  } else {
    std::printf("criterion 14: SKIPPED\n");
  }

  int status = 0;
  for (int id : failed)
    if (!expected.count(id)) std::printf("unexpected failure: criterion %d\n", id), status = 1;
  for (int id : expected)
    if (!failed.count(id)) std::printf("expected failure now passes: criterion %d\n", id), status = 1;
  std::printf("%zu of %zu criteria pass", list.size() + (rerun ? 1 : 0) - failed.size(), list.size() + (rerun ? 1 : 0));
  if (!expected.empty()) {
    std::printf("; known failures:");
    for (int id : expected) std::printf(" %d", id);
  }
  std::printf("\n");
  return status;
}
