// Minimizes tr(XC) - log det X with RTR under each metric and prints how many
// inner iterations each needed, along with the Hessian condition number at
// the minimizer.

#include <cstdio>

#include "spdopt/spdopt.hpp"

int main() {
  using namespace spdopt;
  const Index n = 6;
  const SpdMatrix xs = gen_spd_expdecay(n, 100.0, 3);
  const ProblemInstance p = make_logdet(SpdMatrix::from_eig(xs.eigvecs(), xs.eigvals().cwiseInverse()));

  std::printf("kappa(X*) = %.3g\n", xs.cond());
  for (Geometry g : {Geometry::ai, Geometry::bw, Geometry::le}) {
    const SpdModel model(p, g);
    SolverConfig cfg;
    cfg.max_outer_iters = 200;
    cfg.grad_tol = 1e-10;
    cfg.record_time = false;
    const auto res = rtr_solve(model, cfg, model.default_start());
    const auto& last = res.trace.back();
    std::printf("%s: %ld outer, %ld inner, |X - X*|_F = %.2e (%s)", std::string(to_string(g)).c_str(),
                last.outer_iter, last.cum_inner_iters, last.dist_to_sol, std::string(to_string(res.reason)).c_str());
    if (g != Geometry::le) std::printf(", kappa* = %.4g", hessian_condition_dense(model, model.point(xs)).kappa);
    std::printf("\n");
  }
  return 0;
}
