#include <gtest/gtest.h>

#include <cmath>

#include "spdopt/diagnostics.hpp"
#include "spdopt/generators.hpp"

using namespace spdopt;

namespace {

ProblemInstance logdet_with_minimizer(const SpdMatrix& xs) {
  return make_logdet(SpdMatrix::from_eig(xs.eigvecs(), xs.eigvals().cwiseInverse()));
}

ProblemInstance wls_ones(const SpdMatrix& xs) {
  const Index n = xs.dim();
  return make_wls(SymMatrix(Matrix::Ones(n, n)), xs.sym());
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Model whose Hessian is the identity map at every point.
struct IdentityHessianModel : SpdModel {
  using SpdModel::SpdModel;
  Tangent hess(const Point&, const Local&, const Tangent& u) const { return u; }
};

ProblemInstance zero_problem(Index n) {
  ProblemInstance p;
  p.name = "zero";
  p.dim = n;
  p.cost = [](const SpdMatrix&) { return 0.0; };
  p.egrad = [n](const SpdMatrix&) { return SymMatrix::zero(n); };
  p.ehess_vec = [n](const SpdMatrix&, const SymMatrix&) { return SymMatrix::zero(n); };
  return p;
}

}  // namespace

TEST(DenseCondition, LogdetAtMinimizer) {
  for (double kappa : {10.0, 1e3}) {
    const SpdMatrix xs = gen_spd_expdecay(6, kappa, 2);
    const ProblemInstance p = logdet_with_minimizer(xs);
    const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
    EXPECT_LE(rel(hessian_condition_dense(ai, ai.point(xs)).kappa, 1.0), 1e-8);
    EXPECT_LE(rel(hessian_condition_dense(bw, bw.point(xs)).kappa, kappa), 1e-6);
  }
}

TEST(DenseCondition, WlsOnesAtMinimizer) {
  const SpdMatrix xs = gen_spd_expdecay(6, 100.0, 3);
  const ProblemInstance p = wls_ones(xs);
  const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
  EXPECT_LE(rel(hessian_condition_dense(ai, ai.point(xs)).kappa, 1e4), 1e-6);
  EXPECT_LE(rel(hessian_condition_dense(bw, bw.point(xs)).kappa, 100.0), 1e-6);
}

TEST(DenseCondition, HandComputedTwoByTwo) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 10.0;
  const SpdMatrix xs(d);
  const ProblemInstance p = wls_ones(xs);
  const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
  EXPECT_NEAR(hessian_condition_dense(ai, ai.point(xs)).kappa, 100.0, 1e-10);
  EXPECT_NEAR(hessian_condition_dense(bw, bw.point(xs)).kappa, 10.0, 1e-10);
}

TEST(DenseCondition, ScaleInvariance) {
  const SpdMatrix xs = gen_spd_expdecay(5, 30.0, 4);
  for (double c : {0.01, 1.0, 250.0}) {
    const SpdMatrix cx(SymMatrix(Matrix(c * xs.mat())));
    const ProblemInstance p = wls_ones(cx);
    const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
    EXPECT_LE(rel(hessian_condition_dense(ai, ai.point(cx)).kappa, 900.0), 1e-6);
    EXPECT_LE(rel(hessian_condition_dense(bw, bw.point(cx)).kappa, 30.0), 1e-6);
  }
}

TEST(DenseCondition, RefusesLargeTangentSpace) {
  const SpdMatrix xs = gen_spd_expdecay(9, 10.0, 1);
  const SpdModel ai(logdet_with_minimizer(xs), Geometry::ai);
  EXPECT_THROW(hessian_condition_dense(ai, ai.point(xs)), UsageError);
}

TEST(Lanczos, IdentityHessian) {
  const IdentityHessianModel m(zero_problem(4), Geometry::ai);
  const auto rep = hessian_condition_lanczos(m, m.point(SpdMatrix::identity(4)));
  EXPECT_NEAR(rep.lambda_min, 1.0, 1e-12);
  EXPECT_NEAR(rep.lambda_max, 1.0, 1e-12);
}

TEST(Lanczos, AgreesWithDenseOnAllProblems) {
  const Index n = 5;
  const SpdMatrix xs = gen_spd_expdecay(n, 50.0, 6);
  const TraceData td = gen_trace_data(80, n, n, 0.1, 6);
  const LabelledData cls = gen_classification(40, n, 3, 6);
  std::vector<ProblemInstance> problems{
      wls_ones(xs), make_lyapunov(SpdMatrix(gen_toeplitz(n)), xs.sym()),
      make_trace_regression(td.measurements, td.y), make_metric_learning(cls.features, cls.labels, all_pairs(40)),
      logdet_with_minimizer(xs)};
  Rng rng(6);
  for (const auto& p : problems) {
    for (Geometry g : {Geometry::ai, Geometry::bw}) {
      const SpdModel m(p, g);
      const auto x = m.point(p.x_star ? SpdMatrix(*p.x_star) : random_spd(n, rng, 0.05, 0.5));
      const auto d = hessian_condition_dense(m, x);
      const auto l = hessian_condition_lanczos(m, x);
      EXPECT_LE(std::abs(l.lambda_min - d.lambda_min), 1e-6 * std::abs(d.lambda_max)) << p.name;
      EXPECT_LE(rel(l.lambda_max, d.lambda_max), 1e-6) << p.name;
      EXPECT_LE(d.residual, 1e-8) << p.name << " Hessian form not symmetric";
    }
  }
  const GmmData data = gen_gmm_data(200, 6);
  const GmmProblem gp(data.samples, 3);
  for (Geometry g : {Geometry::ai, Geometry::bw}) {
    const GmmModel m(gp, g);
    const auto x = m.point(kmeanspp_init(data.samples, 3, 6));
    const auto d = hessian_condition_dense(m, x);
    const auto l = hessian_condition_lanczos(m, x, static_cast<int>(m.tangent_dim(x)));
    EXPECT_LE(std::abs(l.lambda_min - d.lambda_min), 1e-6 * std::abs(d.lambda_max)) << "gmm";
    EXPECT_LE(rel(l.lambda_max, d.lambda_max), 1e-6) << "gmm";
  }
}

TEST(Lanczos, QuadraticAiWorseConditionedThanBw) {
  Rng rng(7);
  const SpdMatrix xs = gen_spd_expdecay(6, 100.0, 7);
  const SpdMatrix a = random_spd(6, rng);
  // tr((X - X*) A (X - X*) I): Euclidean Hessian A (x) I + I (x) A.
  const ProblemInstance p = make_quadratic(a, SpdMatrix::identity(6), xs.sym());
  const SpdModel ai(p, Geometry::ai), bw(p, Geometry::bw);
  EXPECT_GE(hessian_condition_lanczos(ai, ai.point(xs)).kappa, hessian_condition_lanczos(bw, bw.point(xs)).kappa);
}

TEST(ConditionBounds, LogdetInsideBounds) {
  const SpdMatrix xs = gen_spd_expdecay(5, 100.0, 8);
  const auto rep = condition_bounds_check(logdet_with_minimizer(xs), xs);
  EXPECT_FALSE(rep.skipped);
  EXPECT_TRUE(rep.pass());
  EXPECT_LE(rel(rep.kappa_bw, 100.0), 1e-6);
}

TEST(ConditionBounds, LinearIsSkipped) {
  Rng rng(9);
  const auto rep = condition_bounds_check(make_linear(random_spd(4, rng).sym()), random_spd(4, rng));
  EXPECT_TRUE(rep.skipped);
}

TEST(ConditionBounds, RandomQuadraticsHaveNoViolations) {
  Rng rng(10);
  for (int k = 0; k < 200; ++k) {
    const SpdMatrix a = random_spd(5, rng, 0.1, 10.0), b = random_spd(5, rng, 0.1, 10.0);
    const SpdMatrix xs = random_spd(5, rng, 0.1, 10.0);
    EXPECT_TRUE(condition_bounds_check(make_quadratic(a, b, xs.sym()), xs).pass());
  }
}

TEST(Trig, DegenerateTriangle) {
  Rng rng(11);
  const auto x = sample_near_identity(Geometry::bw, 4, 0.1, rng);
  const auto y = sample_near_identity(Geometry::bw, 4, 0.1, rng);
  const auto t = make_triangle(x, y, y);
  EXPECT_NEAR(t.side_x, 0.0, 1e-7);
  EXPECT_GE(trig_bound_check(t), -1e-12);
}

TEST(Trig, BwSlackNonnegative) {
  for (Index n : {3, 5}) EXPECT_GE(trig_bound_run(Geometry::bw, n, 2000, 12).min_slack, -1e-9);
}

TEST(Trig, AiSlackIsRecorded) {
  const auto rep = trig_bound_run(Geometry::ai, 3, 500, 13);
  EXPECT_EQ(rep.samples, 500);
  EXPECT_TRUE(std::isfinite(rep.min_slack));
}

TEST(GConvexity, ConvexFunctionsAndControl) {
  Rng rng(14);
  const Matrix a = random_spd(8, rng).mat();
  const auto grid = uniform_grid(11);
  auto lin = [&](const SymMatrix& x) { return x.mat().cwiseProduct(a).sum(); };
  auto negld = [](const SymMatrix& x) { return -sym_eig(x).values.array().log().sum(); };
  auto control = [&](const SymMatrix& x) { return -(x.mat() * a * x.mat()).trace(); };
  EXPECT_EQ(gconvexity_probe(lin, 8, 300, grid, 14).violations, 0);
  EXPECT_EQ(gconvexity_probe(negld, 8, 300, grid, 15).violations, 0);
  EXPECT_GT(gconvexity_probe(control, 8, 300, grid, 16).violations, 0);
}

TEST(Kernel, Examples) {
  Rng rng(17);
  const auto one = bw_kernel_gram({random_spd(3, rng)}, 1.0);
  EXPECT_EQ(one.gram.rows(), 1);
  EXPECT_EQ(one.gram(0, 0), 1.0);
  std::vector<SpdMatrix> pts;
  for (int k = 0; k < 50; ++k) pts.push_back(random_spd(5, rng, 0.2, 5.0));
  for (double s : {0.1, 1.0}) EXPECT_GE(bw_kernel_gram(pts, s).min_eig, -1e-10) << "sigma " << s;
  pts.push_back(pts.front());
  const auto dup = bw_kernel_gram(pts, 0.1);
  EXPECT_GE(dup.min_eig, -1e-10);
  EXPECT_LE(dup.min_eig, 1e-8);
  EXPECT_THROW(bw_kernel_gram({}, 1.0), UsageError);
  EXPECT_THROW(bw_kernel_gram(pts, 0.0), UsageError);
}

// The Gaussian kernel of d_bw is not positive definite at every bandwidth:
// squared BW distance is not conditionally negative definite.
TEST(Kernel, WideBandwidthCounterexample) {
  Rng rng(17);
  std::vector<SpdMatrix> pts;
  for (int k = 0; k < 50; ++k) pts.push_back(random_spd(5, rng, 0.2, 5.0));
  const Index m = 50;
  Matrix d2(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const double d = bw_distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      d2(i, j) = d * d;
    }
  const Matrix centre = Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / m);
  const Matrix cd = centre * d2 * centre;
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(cd, Eigen::EigenvaluesOnly).eigenvalues()(m - 1);
  EXPECT_GT(top, 1e-6 * d2.norm());
  EXPECT_LT(bw_kernel_gram(pts, 10.0).min_eig, -1e-4);
}

TEST(Certify, LogdetPassesAtRandomPoints) {
  Rng rng(18);
  const SpdMatrix xs = gen_spd_expdecay(5, 100.0, 18);
  for (Geometry g : {Geometry::ai, Geometry::bw, Geometry::le}) {
    const SpdModel m(logdet_with_minimizer(xs), g);
    std::vector<SpdModel::Point> pts;
    for (int k = 0; k < 5; ++k) pts.push_back(m.point(random_spd(5, rng)));
    const auto rep = certify_problem(m, pts, 18);
    EXPECT_TRUE(rep.pass()) << to_string(g) << " " << rep.max_grad_err << " " << rep.max_hess_err;
  }
}

TEST(Certify, ZeroFunction) {
  const SpdModel m(zero_problem(3), Geometry::bw);
  const auto x = m.default_start();
  const auto l = m.linearize(x);
  EXPECT_EQ(l.rgrad.norm(), 0.0);
  Rng rng(19);
  EXPECT_EQ(m.hess(x, l, random_sym(3, rng)).norm(), 0.0);
  EXPECT_TRUE(certify_problem(m, {x}, 19).pass());
}

TEST(Certify, BrokenGradientFails) {
  Rng rng(20);
  const SpdMatrix xs = random_spd(4, rng);
  ProblemInstance p = make_quadratic(random_spd(4, rng), random_spd(4, rng), xs.sym());
  const auto good = p.egrad;
  p.egrad = [good](const SpdMatrix& x) { return 0.5 * good(x); };
  for (Geometry g : {Geometry::ai, Geometry::bw, Geometry::le}) {
    const SpdModel m(p, g);
    EXPECT_FALSE(certify_problem(m, {m.point(random_spd(4, rng)), m.point(random_spd(4, rng))}, 20).pass())
        << to_string(g);
  }
}

TEST(GeodesicMatch, SmallError) {
  Rng rng(21);
  const auto grid = uniform_grid(11);
  for (int k = 0; k < 10; ++k)
    EXPECT_LE(geodesic_match_error(random_spd(10, rng, 0.2, 5.0), random_spd(10, rng, 0.2, 5.0), grid), 1e-8);
}
