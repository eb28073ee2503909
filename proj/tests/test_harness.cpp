#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spdopt/checks.hpp"
#include "spdopt/harness.hpp"

using namespace spdopt;

namespace {

ExperimentConfig small_logdet() {
  ExperimentConfig c;
  c.problem = "logdet";
  c.variant = "HighCN";
  c.n = 6;
  c.kappa = 100.0;
  c.solver = "rtr";
  c.record_time = false;
  return c;
}

nlohmann::json fake_summary(const std::string& geometry, std::optional<long> hit) {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& th : standard_thresholds()) t[th.name] = nullptr;
  if (hit) t["dist_rel_1e-2"] = {{"outer_iter", *hit}, {"cum_inner_iters", *hit}, {"time_s", 0.0}};
  return {{"problem", "wls"}, {"variant", "dense-HighCN"}, {"geometry", geometry}, {"solver", "rtr"},
          {"thresholds", t}};
}

}  // namespace

TEST(BuildExperiment, DefaultsAndSizes) {
  for (const auto& p : known_problems()) EXPECT_FALSE(default_variant(p).empty());
  ExperimentConfig c;
  c.problem = "wls";
  const auto wls = build_experiment(c);
  ASSERT_TRUE(wls.spd);
  EXPECT_EQ(wls.spd->dim, 20);
  EXPECT_EQ(wls.cfg.variant, "dense-HighCN");
  EXPECT_NEAR(SpdMatrix(*wls.spd->x_star).cond(), 1e3, 1e-6);
  c.paper_scale = true;
  EXPECT_EQ(build_experiment(c).spd->dim, 50);
}

TEST(BuildExperiment, Variants) {
  ExperimentConfig c;
  c.problem = "lyapunov";
  c.variant = "Ex1Low";
  const auto ly = build_experiment(c);
  EXPECT_EQ(ly.spd->dim, 49);
  EXPECT_EQ((sym_eig(*ly.spd->x_star).values.array() > 1e-12).count(), 10);

  c.problem = "trace_regression";
  c.variant = "SynLow";
  const auto tr = build_experiment(c);
  EXPECT_EQ(tr.spd->dim, 20);
  EXPECT_EQ((sym_eig(*tr.spd->x_star).values.array() > 1e-10).count(), 4);

  c.problem = "dml";
  c.variant = "";
  const auto dml = build_experiment(c);
  EXPECT_FALSE(dml.spd->x_star);
  EXPECT_TRUE(std::isnan(dml.x_star_norm));

  c.problem = "gmm";
  const auto gmm = build_experiment(c);
  EXPECT_TRUE(gmm.gmm && gmm.gmm_init);
  EXPECT_FALSE(gmm.spd);
}

TEST(BuildExperiment, RejectsUnknownInput) {
  ExperimentConfig c;
  c.problem = "nope";
  EXPECT_THROW(build_experiment(c), UsageError);
  c.problem = "wls";
  c.variant = "diagonal-HighCN";
  EXPECT_THROW(build_experiment(c), UsageError);
  c.variant = "dense";
  EXPECT_THROW(build_experiment(c), UsageError);
  c.problem = "trace_regression";
  c.variant = "SynMid";
  EXPECT_THROW(build_experiment(c), UsageError);
  EXPECT_THROW(parse_geometry_list(""), UsageError);
  EXPECT_THROW(parse_geometry_list("ai,xy"), UsageError);
  EXPECT_EQ(parse_geometry_list("bw,ai").size(), 2u);
}

TEST(TraceCsv, RoundTripsExactly) {
  std::vector<TraceRecord> t(3);
  t[0] = {0, 0, 0.0, 1.0 / 3.0, std::nan(""), 2.5e-300};
  t[1] = {1, 7, 0.125, -1234.5678901234567, 0.1, 1e-17};
  t[2] = {2, 19, 1e10, -0.0, 1e300, 0.0};
  std::istringstream in(trace_csv(t));
  const auto back = parse_trace_csv(in);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].outer_iter, t[k].outer_iter);
    EXPECT_EQ(back[k].cum_inner_iters, t[k].cum_inner_iters);
    EXPECT_EQ(back[k].wall_time, t[k].wall_time);
    EXPECT_EQ(back[k].loss, t[k].loss);
    EXPECT_EQ(back[k].egrad_mod_norm, t[k].egrad_mod_norm);
  }
  EXPECT_TRUE(std::isnan(back[0].dist_to_sol));
  EXPECT_EQ(back[2].dist_to_sol, 1e300);
  EXPECT_EQ(trace_csv(t).substr(0, trace_csv(t).find('\n')), kTraceHeader);
}

TEST(TraceCsv, RejectsMalformedInput) {
  std::istringstream bad_header("iter,loss\n0,1\n");
  EXPECT_THROW(parse_trace_csv(bad_header), DomainError);
  std::istringstream short_row(std::string(kTraceHeader) + "\n0,0,0,1\n");
  EXPECT_THROW(parse_trace_csv(short_row), DomainError);
}

TEST(FormatDouble, SpecialValues) {
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(Thresholds, FirstHit) {
  std::vector<TraceRecord> t(3);
  t[0].dist_to_sol = 1.0;
  t[1].dist_to_sol = 5e-3;
  t[1].cum_inner_iters = 4;
  t[2].dist_to_sol = 1e-7;
  t[2].cum_inner_iters = 9;
  for (auto& r : t) r.egrad_mod_norm = 1.0;
  const auto th = standard_thresholds();
  EXPECT_EQ(first_hit(t, th[0], 1.0)->cum_inner_iters, 4);
  EXPECT_EQ(first_hit(t, th[2], 1.0)->cum_inner_iters, 9);
  EXPECT_FALSE(first_hit(t, th[2], 0.01));
  EXPECT_FALSE(first_hit(t, th[3], 1.0));
  const auto j = threshold_json(t, std::nan(""));
  EXPECT_TRUE(j.at("dist_rel_1e-2").is_null());
}

TEST(RunGeometry, DeterministicWithoutTiming) {
  const auto e = build_experiment(small_logdet());
  const auto a = run_geometry(e, Geometry::bw);
  const auto b = run_geometry(e, Geometry::bw);
  EXPECT_EQ(trace_csv(a.trace), trace_csv(b.trace));
  EXPECT_EQ(a.wall_time_s, 0.0);
  for (const auto& r : a.trace) EXPECT_EQ(r.wall_time, 0.0);
}

TEST(RunGeometry, StopsOnceThresholdsAreMet) {
  const auto e = build_experiment(small_logdet());
  for (Geometry g : {Geometry::ai, Geometry::bw, Geometry::le}) {
    const auto run = run_geometry(e, g);
    EXPECT_EQ(run.reason, StopReason::callback) << to_string(g);
    const auto j = threshold_json(run.trace, e.x_star_norm);
    for (const auto& th : standard_thresholds()) EXPECT_FALSE(j.at(th.name).is_null()) << th.name;
  }
}

TEST(RunGeometry, RandomStartIsSeeded) {
  auto c = small_logdet();
  c.stop_at_thresholds = false;
  c.max_iters = 1;
  const auto plain = run_geometry(build_experiment(c), Geometry::ai);
  c.random_start = true;
  const auto r1 = run_geometry(build_experiment(c), Geometry::ai);
  const auto r2 = run_geometry(build_experiment(c), Geometry::ai);
  EXPECT_NE(plain.trace.front().loss, r1.trace.front().loss);
  EXPECT_EQ(r1.trace.front().loss, r2.trace.front().loss);
}

TEST(RunGeometry, SolverProblemMismatch) {
  auto c = small_logdet();
  c.solver = "rsgd";
  EXPECT_THROW(run_geometry(build_experiment(c), Geometry::ai), UsageError);
  c.solver = "newton";
  EXPECT_THROW(run_geometry(build_experiment(c), Geometry::ai), UsageError);
}

TEST(RunGeometry, NoSolutionMeansNanDistance) {
  ExperimentConfig c;
  c.problem = "dml";
  c.m = 30;
  c.d = 4;
  c.solver = "rsd";
  c.max_iters = 3;
  c.record_time = false;
  const auto e = build_experiment(c);
  const auto run = run_geometry(e, Geometry::bw);
  for (const auto& r : run.trace) EXPECT_TRUE(std::isnan(r.dist_to_sol));
  const auto s = run_summary(e, run);
  EXPECT_TRUE(s.at("x_star_norm").is_null());
  EXPECT_TRUE(s.at("thresholds").at("dist_rel_1e-4").is_null());
}

TEST(RunExperiment, ParallelMatchesSerial) {
  auto c = small_logdet();
  const auto serial = run_experiment(build_experiment(c));
  c.jobs = 3;
  const auto parallel = run_experiment(build_experiment(c));
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(serial[k].geometry, parallel[k].geometry);
    EXPECT_EQ(trace_csv(serial[k].trace), trace_csv(parallel[k].trace));
  }
}

TEST(Compare, OrderingAndTable) {
  const std::vector<nlohmann::json> s{fake_summary("ai", 30), fake_summary("bw", 12), fake_summary("le", std::nullopt)};
  const auto [j, md] = compare_summaries(s);
  EXPECT_EQ(j.at("orderings").at("dist_rel_1e-2"), nlohmann::json({"bw/rtr", "ai/rtr", "le/rtr"}));
  EXPECT_EQ(j.at("runs").size(), 3u);
  EXPECT_NE(md.find("| le | rtr | - |"), std::string::npos);
  EXPECT_NE(md.find("| bw | rtr | 12 (0 s) |"), std::string::npos);
}

TEST(Compare, SingleRunAndErrors) {
  const auto [j, md] = compare_summaries({fake_summary("bw", 5)});
  EXPECT_EQ(j.at("orderings").at("dist_rel_1e-2"), nlohmann::json({"bw/rtr"}));
  EXPECT_THROW(compare_summaries({}), UsageError);
  auto other = fake_summary("ai", 3);
  other["variant"] = "sparse-HighCN";
  EXPECT_THROW(compare_summaries({fake_summary("bw", 5), other}), UsageError);
}

TEST(Checks, RecordsHaveSchema) {
  const auto recs = check_condnum("logdet", 5, 100.0, 3);
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs)
    for (const char* key : {"check", "geometry", "n", "seed", "statistic", "threshold", "pass"})
      EXPECT_TRUE(r.contains(key)) << key;
  EXPECT_TRUE(all_pass(recs));
  EXPECT_TRUE(all_pass(check_condnum("wls", 5, 30.0, 3)));
}

TEST(Checks, Suites) {
  EXPECT_TRUE(all_pass(check_condition_bounds(30, 5, 4)));
  EXPECT_TRUE(all_pass(check_gconvex(5, 50, 4)));
  EXPECT_TRUE(all_pass(check_trig({3}, 500, 4)));
  EXPECT_TRUE(all_pass(check_geodesic_match(5, 6, 4)));
  EXPECT_EQ(check_kernel(10, 3, {0.1, 1.0}, 4).size(), 2u);
  auto c = small_logdet();
  const auto cert = check_certify(c, 2);
  EXPECT_EQ(cert.size(), 6u);
  EXPECT_TRUE(all_pass(cert));
}

TEST(Checks, GmmCertification) {
  ExperimentConfig c;
  c.problem = "gmm";
  c.m = 200;
  c.geometries = {Geometry::ai, Geometry::bw};
  EXPECT_TRUE(all_pass(check_certify(c, 2)));
}

TEST(RunGeometry, GmmStochasticAiAheadOfBw) {
  ExperimentConfig c;
  c.problem = "gmm";
  c.solver = "rsgd";
  c.record_time = false;
  c.stop_at_thresholds = false;
  const auto e = build_experiment(c);
  const auto ai = run_geometry(e, Geometry::ai);
  const auto bw = run_geometry(e, Geometry::bw);
  ASSERT_EQ(ai.trace.size(), bw.trace.size());
  EXPECT_LT(ai.trace.back().loss, bw.trace.back().loss);
  EXPECT_GT(ai.eta0, 0.0);
}
