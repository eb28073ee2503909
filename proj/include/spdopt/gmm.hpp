#pragma once

// Gaussian mixture model in the augmented reparameterization. Sample x in R^d
// becomes y = [x; 1] and component j is described by an SPD S_j of size d+1
// with density
//   q(y; S) = (2 pi)^{-d/2} det(S)^{1/2} exp(1/2 - y^T S y / 2).
// Mixing weights are softmax(omega) with omega_K fixed at 0. The objective is
// the negative mean log-likelihood over the samples.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "spdopt/product.hpp"
#include "spdopt/random.hpp"

namespace spdopt {

/// Softmax of [omega; 0].
inline Vector mixture_weights(const Vector& omega) {
  Vector full(omega.size() + 1);
  full.head(omega.size()) = omega;
  full(omega.size()) = 0.0;
  const double mx = full.maxCoeff();
  Vector e = (full.array() - mx).exp();
  return e / e.sum();
}

struct GmmGradient {
  std::vector<SymMatrix> s;
  Vector omega;
};

struct GaussianComponent {
  Vector mean;
  Matrix cov;
  double weight = 0.0;
  /// False when the recovered covariance is not positive definite.
  bool cov_pd = true;
};

/// (mu, Sigma) -> S = [[Sigma + mu mu^T, mu], [mu^T, 1]]^{-1}.
inline SpdMatrix gmm_block_from_moments(const Vector& mu, const Matrix& sigma) {
  const Index d = mu.size();
  Matrix big(d + 1, d + 1);
  big.topLeftCorner(d, d) = sigma + mu * mu.transpose();
  big.topRightCorner(d, 1) = mu;
  big.bottomLeftCorner(1, d) = mu.transpose();
  big(d, d) = 1.0;
  return SpdMatrix(SpdMatrix(SymMatrix(big)).inv());
}

/// Inverse of the block map: mu from the last column of S^{-1}, Sigma from the
/// top-left block minus mu mu^T; weights from softmax(omega).
inline std::vector<GaussianComponent> recover_gmm_params(const std::vector<SpdMatrix>& s,
                                                         const Vector& omega) {
  if (static_cast<Index>(s.size()) != omega.size() + 1)
    throw DimensionError("recover_gmm_params: need K matrices and K-1 weights");
  const Vector pi = mixture_weights(omega);
  std::vector<GaussianComponent> out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Index d = s[j].dim() - 1;
    if (d < 1) throw DimensionError("recover_gmm_params: augmented size must be >= 2");
    const Matrix big = s[j].inv().mat();
    GaussianComponent c;
    c.mean = big.topRightCorner(d, 1);
    c.cov = big.topLeftCorner(d, d) - c.mean * c.mean.transpose();
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    c.weight = pi(static_cast<Index>(j));
    c.cov_pd = spd_admissible(sym_eig(SymMatrix(c.cov)).values);
    out.push_back(std::move(c));
  }
  return out;
}

/// Mean classical log-likelihood (1/N) sum_i log sum_j w_j N(x_i; mu_j, Sigma_j).
inline double gmm_classical_loglik(const Matrix& x, const std::vector<GaussianComponent>& comps) {
  const Index n = x.rows();
  const Index d = x.cols();
  const std::size_t k = comps.size();
  Matrix logp(n, static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const SpdMatrix sig{SymMatrix(comps[j].cov)};
    const Matrix prec = sig.inv().mat();
    const double cst = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI) - 0.5 * sig.log_det() +
                       std::log(comps[j].weight);
    const Matrix c = x.rowwise() - comps[j].mean.transpose();
    logp.col(static_cast<Index>(j)) = cst - 0.5 * ((c * prec).cwiseProduct(c).rowwise().sum()).array();
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double mx = logp.row(i).maxCoeff();
    total += mx + std::log((logp.row(i).array() - mx).exp().sum());
  }
  return total / static_cast<double>(n);
}

class GmmProblem {
 public:
  /// `samples` holds raw x_i^T as rows.
  GmmProblem(const Matrix& samples, int components) : k_(components) {
    if (components < 1) throw UsageError("GmmProblem: need K >= 1");
    if (samples.rows() < 1 || samples.cols() < 1) throw DimensionError("GmmProblem: empty sample matrix");
    Matrix y(samples.rows(), samples.cols() + 1);
    y.leftCols(samples.cols()) = samples;
    y.col(samples.cols()).setOnes();
    y_ = std::make_shared<const Matrix>(std::move(y));
  }

  int num_components() const { return k_; }
  Index sample_dim() const { return y_->cols() - 1; }
  Index aug_dim() const { return y_->cols(); }
  Index num_samples() const { return y_->rows(); }
  const Matrix& augmented() const { return *y_; }

  double cost(const ProductPoint& p) const { return eval(p, all_rows()).cost; }

  GmmGradient egrad(const ProductPoint& p) const { return gradient(p, all_rows()); }

  /// Gradient of the mean loss over the listed sample rows.
  GmmGradient egrad_batch(const ProductPoint& p, const std::vector<Index>& rows) const {
    return gradient(p, rows);
  }

  /// Euclidean Hessian of the full loss applied to (U_1..U_K, w).
  GmmGradient ehess_vec(const ProductPoint& p, const ProductTangent& dir) const {
    check(p);
    const auto rows = all_rows();
    const Eval e = eval(p, rows);
    const Matrix& y = *y_;
    const Index n = y.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Vector pi = e.pi;
    Vector wfull = Vector::Zero(k_);
    wfull.head(k_ - 1) = dir.weights;
    const double wbar = pi.dot(wfull);
    // a_ij = <G_ij, U_j> + (w_j - sum_k pi_k w_k), G_ij = S_j^{-1}/2 - y_i y_i^T / 2.
    Matrix a(n, k_);
    for (int j = 0; j < k_; ++j) {
      const Matrix& u = dir.parts[static_cast<std::size_t>(j)].mat();
      const double tr_term = 0.5 * e.s_inv[static_cast<std::size_t>(j)].cwiseProduct(u).sum();
      a.col(j) = (tr_term - 0.5 * ((y * u).cwiseProduct(y).rowwise().sum()).array()) + (wfull(j) - wbar);
    }
    const Vector ra = e.r.cwiseProduct(a).rowwise().sum();
    const Matrix dr = e.r.cwiseProduct(a.colwise() - ra);
    GmmGradient out{{}, Vector(k_ - 1)};
    for (int j = 0; j < k_; ++j) {
      const std::size_t js = static_cast<std::size_t>(j);
      const Matrix& si = e.s_inv[js];
      const double sdr = dr.col(j).sum();
      const double sr = e.r.col(j).sum();
      const Matrix yd = y.transpose() * dr.col(j).asDiagonal() * y;
      Matrix d = 0.5 * sdr * si - 0.5 * yd - 0.5 * sr * (si * dir.parts[js].mat() * si);
      out.s.push_back(SymMatrix(-inv_n * d));
    }
    for (int j = 0; j + 1 < k_; ++j)
      out.omega(j) = -inv_n * (dr.col(j).sum() - static_cast<double>(n) * pi(j) * (wfull(j) - wbar));
    return out;
  }

  /// Responsibilities r_ij (N x K).
  Matrix responsibilities(const ProductPoint& p) const { return eval(p, all_rows()).r; }

 private:
  struct Eval {
    double cost = 0.0;
    Matrix r;  // responsibilities of the listed rows
    Vector pi;
    std::vector<Matrix> s_inv;
  };

  std::vector<Index> all_rows() const {
    std::vector<Index> rows(static_cast<std::size_t>(y_->rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
  }

  void check(const ProductPoint& p) const {
    if (static_cast<int>(p.num_parts()) != k_ || p.weights().size() != k_ - 1 || p.part_dim() != aug_dim())
      throw DimensionError("GmmProblem: point does not match K and d+1");
  }

  Eval eval(const ProductPoint& p, const std::vector<Index>& rows) const {
    check(p);
    if (rows.empty()) throw UsageError("GmmProblem: empty batch");
    const Index d = sample_dim();
    const Index m = static_cast<Index>(rows.size());
    Matrix yb(m, aug_dim());
    for (Index i = 0; i < m; ++i) yb.row(i) = y_->row(rows[static_cast<std::size_t>(i)]);
    Eval e;
    e.pi = mixture_weights(p.weights());
    Matrix logp(m, k_);
    for (int j = 0; j < k_; ++j) {
      const SpdMatrix& s = p.part(static_cast<std::size_t>(j)).spd();
      e.s_inv.push_back(s.inv().mat());
      const double cst = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI) + 0.5 * s.log_det() + 0.5 +
                         std::log(e.pi(j));
      logp.col(j) = cst - 0.5 * ((yb * s.mat()).cwiseProduct(yb).rowwise().sum()).array();
    }
    e.r.resize(m, k_);
    double total = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double mx = logp.row(i).maxCoeff();
      const double lse = mx + std::log((logp.row(i).array() - mx).exp().sum());
      total += lse;
      e.r.row(i) = (logp.row(i).array() - lse).exp();
    }
    e.cost = -total / static_cast<double>(m);
    return e;
  }

  GmmGradient gradient(const ProductPoint& p, const std::vector<Index>& rows) const {
    const Eval e = eval(p, rows);
    const Index m = static_cast<Index>(rows.size());
    const double inv_m = 1.0 / static_cast<double>(m);
    Matrix yb(m, aug_dim());
    for (Index i = 0; i < m; ++i) yb.row(i) = y_->row(rows[static_cast<std::size_t>(i)]);
    GmmGradient g{{}, Vector(k_ - 1)};
    for (int j = 0; j < k_; ++j) {
      const double sr = e.r.col(j).sum();
      const Matrix yry = yb.transpose() * e.r.col(j).asDiagonal() * yb;
      g.s.push_back(SymMatrix(-inv_m * (0.5 * sr * e.s_inv[static_cast<std::size_t>(j)] - 0.5 * yry)));
    }
    for (int j = 0; j + 1 < k_; ++j) g.omega(j) = -inv_m * (e.r.col(j).sum() - static_cast<double>(m) * e.pi(j));
    return g;
  }

  int k_;
  std::shared_ptr<const Matrix> y_;
};

struct GmmInit {
  std::vector<SpdMatrix> s;
  Vector omega;
};

/// kmeans++ seeding followed by one hard assignment; each cluster's sample
/// mean, covariance (plus a small ridge) and share become the start point.
inline GmmInit kmeanspp_init(const Matrix& x, int components, std::uint64_t seed) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (components < 1 || n < components) throw UsageError("kmeanspp_init: need N >= K >= 1");
  Rng rng(seed);
  std::vector<Index> centers;
  std::uniform_int_distribution<Index> first(0, n - 1);
  centers.push_back(first(rng));
  Vector d2 = (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < components) {
    std::discrete_distribution<Index> pick(d2.data(), d2.data() + n);
    const Index c = d2.sum() > 0.0 ? pick(rng) : first(rng);
    centers.push_back(c);
    d2 = d2.cwiseMin((x.rowwise() - x.row(c)).rowwise().squaredNorm());
  }
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(components));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < components; ++j) {
      const double dj = (x.row(i) - x.row(centers[static_cast<std::size_t>(j)])).squaredNorm();
      if (dj < bd) bd = dj, best = j;
    }
    members[static_cast<std::size_t>(best)].push_back(i);
  }
  const Matrix global_cov = [&] {
    const Matrix c = x.rowwise() - x.colwise().mean();
    return Matrix(c.transpose() * c / static_cast<double>(n));
  }();
  GmmInit out;
  Vector share(components);
  for (int j = 0; j < components; ++j) {
    const auto& idx = members[static_cast<std::size_t>(j)];
    Vector mu = x.row(centers[static_cast<std::size_t>(j)]).transpose();
    Matrix cov = global_cov;
    if (idx.size() > static_cast<std::size_t>(d)) {
      Matrix pts(static_cast<Index>(idx.size()), d);
      for (std::size_t i = 0; i < idx.size(); ++i) pts.row(static_cast<Index>(i)) = x.row(idx[i]);
      mu = pts.colwise().mean().transpose();
      const Matrix c = pts.rowwise() - mu.transpose();
      cov = c.transpose() * c / static_cast<double>(idx.size());
    }
    cov += 1e-6 * (1.0 + cov.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
    out.s.push_back(gmm_block_from_moments(mu, cov));
    share(j) = std::max<double>(static_cast<double>(idx.size()), 1.0);
  }
  out.omega = (share.head(components - 1).array() / share(components - 1)).log();
  return out;
}

struct GmmData {
  Matrix samples;
  std::vector<int> labels;
  std::vector<GaussianComponent> truth;
};

/// Synthetic mixture in R^2: three anisotropic components, weights
/// (0.5, 0.3, 0.2). Default size is 1580 samples.
inline GmmData gen_gmm_data(Index n, std::uint64_t seed) {
  if (n < 3) throw UsageError("gen_gmm_data: need at least 3 samples");
  std::vector<GaussianComponent> truth(3);
  truth[0] = {(Vector(2) << -3.0, 0.0).finished(), (Matrix(2, 2) << 1.5, 0.6, 0.6, 0.6).finished(), 0.5, true};
  truth[1] = {(Vector(2) << 2.5, 2.5).finished(), (Matrix(2, 2) << 0.4, -0.2, -0.2, 1.2).finished(), 0.3, true};
  truth[2] = {(Vector(2) << 2.0, -3.0).finished(), (Matrix(2, 2) << 0.8, 0.0, 0.0, 0.2).finished(), 0.2, true};
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::discrete_distribution<int> comp({0.5, 0.3, 0.2});
  GmmData out{Matrix(n, 2), std::vector<int>(static_cast<std::size_t>(n)), truth};
  std::vector<Matrix> chol;
  for (const auto& c : truth) chol.push_back(Eigen::LLT<Matrix>(c.cov).matrixL());
  for (Index i = 0; i < n; ++i) {
    const int j = comp(rng);
    Vector z(2);
    z << normal(rng), normal(rng);
    out.samples.row(i) = (truth[static_cast<std::size_t>(j)].mean + chol[static_cast<std::size_t>(j)] * z).transpose();
    out.labels[static_cast<std::size_t>(i)] = j;
  }
  return out;
}

}  // namespace spdopt
