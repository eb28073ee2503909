// spdopt: run, compare and diagnose SPD optimization experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spdopt/checks.hpp"
#include "spdopt/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spdopt;

namespace {

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SPDOPT_OUT"); env && *env) return env;
  return "spdopt_out";
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::string geometry_csv(const std::vector<Geometry>& gs) {
  std::string s;
  for (Geometry g : gs) s += (s.empty() ? "" : ",") + std::string(to_string(g));
  return s;
}

std::string config_snapshot(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[run]\nproblem=" << c.problem << "\nvariant=" << c.variant << "\ngeometry=\"" << geometry_csv(c.geometries) << '"'
    << "\nsolver=" << c.solver << "\nn=" << c.n << "\nkappa=" << format_double(c.kappa) << "\nm=" << c.m
    << "\nd=" << c.d << "\nr=" << c.r << "\ncomponents=" << c.components << "\nsigma=" << format_double(c.sigma)
    << "\nseed=" << c.seed << "\npaper-scale=" << (c.paper_scale ? "true" : "false");
  if (!c.dataset.empty()) o << "\ndataset=" << c.dataset;
  o << "\nmax-iters=" << c.max_iters << "\nmax-inner=" << c.max_inner << "\nmax-time=" << format_double(c.max_time)
    << "\neta0=" << format_double(c.eta0) << "\nbatch-size=" << c.batch_size
    << "\nrandom-start=" << (c.random_start ? "true" : "false") << "\n";
  return o.str();
}

json environment_stamp() {
  json j;
  j["spdopt"] = "0.1.0";
#ifdef __VERSION__
  j["compiler"] = __VERSION__;
#endif
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  return j;
}

int emit(const CheckRecords& recs) {
  for (const auto& r : recs) std::cout << r.dump() << "\n";
  return all_pass(recs) ? 0 : 1;
}

json load_summary(const fs::path& p) {
  const fs::path file = fs::is_directory(p) ? p / "summary.json" : p;
  std::ifstream in(file);
  if (!in) throw UsageError("compare: cannot read " + file.string());
  return json::parse(in);
}

template <class Rows>
void write_matrix_csv(std::ostream& out, const Rows& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian optimization on SPD matrices under the AI, BW and LE metrics"};
  app.require_subcommand(1);

  // run
  ExperimentConfig cfg;
  std::string geometries = "ai,bw,le";
  std::string out_flag;
  bool no_timing = false, no_certify = false, no_early_stop = false;
  // Config files are only read at the top level; their [run] section feeds
  // the run subcommand, and command-line flags override it.
  app.set_config("--config", "", "key=value file with a [run] section, as written to config.txt");
  auto* run = app.add_subcommand("run", "Run one experiment under several geometries");
  run->add_option("--problem", cfg.problem, "wls, lyapunov, trace_regression, dml, logdet or gmm")->required();
  run->add_option("--variant", cfg.variant, "e.g. dense-HighCN, Ex1Low, SynFull, HighCN");
  run->add_option("--geometry", geometries, "comma-separated subset of ai,bw,le");
  run->add_option("--solver", cfg.solver, "rsd, rcg, rtr or rsgd");
  run->add_option("--n", cfg.n, "matrix size");
  run->add_option("--kappa", cfg.kappa, "condition number of the generated minimizer");
  run->add_option("--m", cfg.m, "number of measurements or samples");
  run->add_option("--d", cfg.d, "feature dimension");
  run->add_option("--r", cfg.r, "rank");
  run->add_option("-K,--components", cfg.components, "mixture components or classes");
  run->add_option("--sigma", cfg.sigma, "measurement noise level");
  run->add_option("--seed", cfg.seed, "random seed")->required();
  run->add_option("--dataset", cfg.dataset, "Keel CSV file for dml")->check(CLI::ExistingFile);
  run->add_option("--max-iters", cfg.max_iters, "outer iteration cap (0: solver default)");
  run->add_option("--max-inner", cfg.max_inner, "cumulative inner iteration cap (0: none)");
  run->add_option("--max-time", cfg.max_time, "wall-clock cap per geometry in seconds");
  run->add_option("--eta0", cfg.eta0, "rsgd initial step (0: grid search)");
  run->add_option("--batch-size", cfg.batch_size, "rsgd minibatch size");
  run->add_flag("--paper-scale", cfg.paper_scale, "use the full problem sizes");
  run->add_flag("--random-start", cfg.random_start, "seeded random SPD start instead of identity");
  run->add_flag("--no-timing", no_timing, "write zero times so reruns are byte-identical");
  run->add_flag("--no-certify", no_certify, "skip the derivative certification");
  run->add_flag("--no-early-stop", no_early_stop, "keep iterating after all thresholds are met");
  run->add_option("--jobs", cfg.jobs, "geometries to run concurrently");
  run->add_option("--out", out_flag, "output root (default: $SPDOPT_OUT or ./spdopt_out)");

  // compare
  std::vector<std::string> compare_paths;
  std::string compare_json;
  auto* compare = app.add_subcommand("compare", "Merge run summaries into one table");
  compare->add_option("paths", compare_paths, "summary.json files or run directories")->required();
  compare->add_option("--json", compare_json, "also write the merged record here");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Numerical checks; exit code 1 on any failure");
  diagnose->require_subcommand(1);
  std::uint64_t dseed = 1;
  Index dn = 0, dm = 50;
  long dsamples = 10000, dpairs = 1000;
  double dkappa = 1e3;
  std::vector<double> dsigmas{0.1, 1.0, 10.0};
  std::string dproblem = "logdet", dgeoms = "ai,bw,le";
  int dprobes = 20;
  auto common = [&](CLI::App* s) { s->add_option("--seed", dseed, "random seed"); };

  auto* condnum = diagnose->add_subcommand("condnum", "Hessian condition numbers at the minimizer");
  common(condnum);
  condnum->add_option("--problem", dproblem, "problem family");
  condnum->add_option("--n", dn, "matrix size (default 6)");
  condnum->add_option("--kappa", dkappa, "condition number of the minimizer");

  auto* bounds = diagnose->add_subcommand("cond-bounds", "Sandwich bounds on random quadratics and logdet");
  common(bounds);
  long dtrials = 200;
  bounds->add_option("--trials", dtrials, "random quadratic instances");
  bounds->add_option("--n", dn, "matrix size (default 5)");

  auto* gconvex = diagnose->add_subcommand("gconvex", "Chord inequality along BW geodesics");
  common(gconvex);
  gconvex->add_option("--n", dn, "matrix size (default 8)");
  gconvex->add_option("--pairs", dpairs, "random pairs per function");

  auto* trig = diagnose->add_subcommand("trig", "Trigonometry slack on small triangles near I");
  common(trig);
  std::vector<Index> dns{3, 5};
  trig->add_option("--n", dns, "matrix sizes");
  trig->add_option("--samples", dsamples, "triangles per size");

  auto* kernel = diagnose->add_subcommand("kernel", "BW Gaussian kernel Gram spectrum");
  common(kernel);
  kernel->add_option("--m", dm, "points");
  kernel->add_option("--n", dn, "matrix size (default 5)");
  kernel->add_option("--sigma", dsigmas, "bandwidths");

  auto* gmatch = diagnose->add_subcommand("geodesic-match", "BW geodesic versus Gaussian interpolation");
  common(gmatch);
  gmatch->add_option("--pairs", dpairs, "random pairs");
  gmatch->add_option("--n", dn, "matrix size (default 10)");

  auto* certify = diagnose->add_subcommand("certify", "Finite-difference gradient and Hessian checks");
  common(certify);
  certify->add_option("--problem", dproblem, "problem family");
  certify->add_option("--geometry", dgeoms, "comma-separated subset of ai,bw,le");
  certify->add_option("--n", dn, "matrix size");
  certify->add_option("--probes", dprobes, "random points");

  // gen-data
  std::string gkind, gout;
  Index gn = 20, gm = 1000, gd = 20, gr = 0;
  double gkappa = 1e3, gsigma = 0.1;
  int gclasses = 7;
  std::uint64_t gseed = 1;
  auto* gen = app.add_subcommand("gen-data", "Write a generated matrix or dataset as CSV");
  gen->add_option("--kind", gkind, "expdecay, wishart, laplace2d, toeplitz, trace, classification or gmm")
      ->required();
  gen->add_option("--n", gn, "matrix size (laplace2d: points per side)");
  gen->add_option("--kappa", gkappa, "expdecay condition number");
  gen->add_option("--m", gm, "samples");
  gen->add_option("--d", gd, "dimension");
  gen->add_option("--r", gr, "rank (default: full)");
  gen->add_option("--sigma", gsigma, "trace noise level");
  gen->add_option("--classes", gclasses, "classification classes");
  gen->add_option("--seed", gseed, "random seed");
  gen->add_option("--out", gout, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.geometries = parse_geometry_list(geometries);
      cfg.record_time = !no_timing;
      cfg.certify = !no_certify;
      cfg.stop_at_thresholds = !no_early_stop;
      if (cfg.variant.empty()) cfg.variant = default_variant(cfg.problem);
      const Experiment e = build_experiment(cfg);
      const auto runs = run_experiment(e);
      const fs::path dir = output_root(out_flag) / (cfg.problem + "-" + cfg.variant + "-" + cfg.solver + "-seed" +
                                                    std::to_string(cfg.seed));
      fs::create_directories(dir);
      write_file(dir / "config.txt", config_snapshot(e.cfg));
      std::vector<json> summaries;
      for (const auto& r : runs) {
        write_file(dir / ("trace_" + std::string(to_string(r.geometry)) + "_" + cfg.solver + ".csv"),
                   trace_csv(r.trace));
        summaries.push_back(run_summary(e, r));
      }
      auto [merged, table] = compare_summaries(summaries);
      merged["environment"] = environment_stamp();
      write_file(dir / "summary.json", merged.dump(2) + "\n");
      write_file(dir / "comparison.md", table);
      std::cout << table << "\nwrote " << dir.string() << "\n";
      return 0;
    }
    if (*compare) {
      std::vector<json> summaries;
      for (const auto& p : compare_paths) {
        const json s = load_summary(p);
        if (s.contains("runs"))
          for (const auto& r : s.at("runs")) summaries.push_back(r);
        else
          summaries.push_back(s);
      }
      auto [merged, table] = compare_summaries(summaries);
      std::cout << table;
      for (const auto& [key, order] : merged.at("orderings").items()) {
        std::cout << key << ":";
        for (const auto& g : order) std::cout << " " << g.get<std::string>();
        std::cout << "\n";
      }
      if (!compare_json.empty()) write_file(compare_json, merged.dump(2) + "\n");
      return 0;
    }
    if (*diagnose) {
      if (*condnum) return emit(check_condnum(dproblem, dn > 0 ? dn : 6, dkappa, dseed));
      if (*bounds) return emit(check_condition_bounds(dtrials, dn > 0 ? dn : 5, dseed));
      if (*gconvex) return emit(check_gconvex(dn > 0 ? dn : 8, dpairs, dseed));
      if (*trig) return emit(check_trig(dns, dsamples, dseed));
      if (*kernel) return emit(check_kernel(dm, dn > 0 ? dn : 5, dsigmas, dseed));
      if (*gmatch) return emit(check_geodesic_match(dpairs, dn > 0 ? dn : 10, dseed));
      if (*certify) {
        ExperimentConfig c;
        c.problem = dproblem;
        c.variant = default_variant(dproblem);
        c.geometries = parse_geometry_list(dgeoms);
        c.n = dn;
        c.seed = dseed;
        if (dproblem == "trace_regression") c.m = 200;
        return emit(check_certify(c, dprobes));
      }
    }
    if (*gen) {
      std::ofstream file;
      if (!gout.empty()) {
        file.open(gout, std::ios::binary);
        if (!file) throw Error("cannot write " + gout);
      }
      std::ostream& out = gout.empty() ? std::cout : file;
      if (gkind == "expdecay") {
        write_matrix_csv(out, gen_spd_expdecay(gn, gkappa, gseed).mat());
      } else if (gkind == "wishart") {
        write_matrix_csv(out, gen_wishart(gn, gr > 0 ? gr : gn, gseed).mat());
      } else if (gkind == "laplace2d") {
        write_matrix_csv(out, gen_laplace2d(gn).mat());
      } else if (gkind == "toeplitz") {
        write_matrix_csv(out, gen_toeplitz(gn).mat());
      } else if (gkind == "trace") {
        const TraceData td = gen_trace_data(gm, gd, gr > 0 ? gr : gd, gsigma, gseed);
        Matrix rows(gm, gd + 1);
        rows << td.measurements, td.y;
        write_matrix_csv(out, rows);
      } else if (gkind == "classification") {
        const LabelledData data = gen_classification(gm, gd, gclasses, gseed);
        for (Index j = 0; j < gd; ++j) out << "f" << j + 1 << ",";
        out << "class\n";
        for (Index i = 0; i < data.features.rows(); ++i) {
          for (Index j = 0; j < gd; ++j) out << format_double(data.features(i, j)) << ",";
          out << "c" << data.labels[static_cast<std::size_t>(i)] << "\n";
        }
      } else if (gkind == "gmm") {
        const GmmData data = gen_gmm_data(gm, gseed);
        write_matrix_csv(out, data.samples);
      } else {
        throw UsageError("gen-data: unknown kind '" + gkind + "'");
      }
      return 0;
    }
  } catch (const CertificationError& e) {
    std::cerr << "spdopt: " << e.what() << "\n";
    return 3;
  } catch (const UsageError& e) {
    std::cerr << "spdopt: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "spdopt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
