#pragma once

// Data generators for the benchmark problems. Every generator that draws
// random numbers takes an explicit seed.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spdopt/random.hpp"

namespace spdopt {

/// Q diag(lambda) Q^T with lambda_i = kappa^{-(i-1)/(n-1)} and Haar Q.
inline SpdMatrix gen_spd_expdecay(Index n, double kappa, std::uint64_t seed) {
  if (n < 1) throw UsageError("gen_spd_expdecay: n must be >= 1");
  if (!(kappa >= 1.0)) throw UsageError("gen_spd_expdecay: kappa must be >= 1");
  Rng rng(seed);
  Vector lambda(n);
  for (Index i = 0; i < n; ++i)
    lambda(i) = n == 1 ? 1.0 : std::pow(kappa, -static_cast<double>(i) / static_cast<double>(n - 1));
  return SpdMatrix::from_eig(haar_orthogonal(n, rng), lambda);
}

/// G G^T with G an n x r standard Gaussian matrix (rank min(n, r)).
inline SymMatrix gen_wishart(Index n, Index r, std::uint64_t seed) {
  if (n < 1 || r < 1) throw UsageError("gen_wishart: n and r must be >= 1");
  Rng rng(seed);
  const Matrix g = gaussian_matrix(n, r, rng);
  return SymMatrix(g * g.transpose());
}

/// diag(1 x r, 0 x (n - r)).
inline SymMatrix gen_lowrank_diag(Index n, Index r) {
  if (r < 0 || r > n) throw UsageError("gen_lowrank_diag: need 0 <= r <= n");
  Vector d = Vector::Zero(n);
  d.head(r).setOnes();
  return SymMatrix::diagonal(d);
}

/// 5-point finite-difference Laplacian on a p x p interior grid (n = p^2),
/// diagonal 4 and -1 for grid neighbours.
inline SymMatrix gen_laplace2d(Index p) {
  if (p < 1) throw UsageError("gen_laplace2d: need at least one interior point per side");
  const Index n = p * p;
  Matrix a = Matrix::Zero(n, n);
  for (Index r = 0; r < p; ++r) {
    for (Index c = 0; c < p; ++c) {
      const Index k = r * p + c;
      a(k, k) = 4.0;
      if (c + 1 < p) a(k, k + 1) = a(k + 1, k) = -1.0;
      if (r + 1 < p) a(k, k + p) = a(k + p, k) = -1.0;
    }
  }
  return SymMatrix(a);
}

/// Symmetric Toeplitz matrix with first column (4, -1, -1/2, -1/4, ...),
/// strictly diagonally dominant and ill-conditioned as n grows.
inline SymMatrix gen_toeplitz(Index n) {
  if (n < 1) throw UsageError("gen_toeplitz: n must be >= 1");
  Vector col(n);
  col(0) = 4.0;
  for (Index k = 1; k < n; ++k) col(k) = -std::pow(2.0, 1.0 - static_cast<double>(k));
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = col(std::abs(i - j));
  return SymMatrix(a);
}

/// Symmetric weight mask with roughly `density` nonzeros, diagonal always set,
/// nonzero weights uniform in [0.1, 1].
inline SymMatrix gen_sparse_mask(Index n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    a(i, i) = weight(rng);
    for (Index j = i + 1; j < n; ++j)
      if (unif(rng) < density) a(i, j) = a(j, i) = weight(rng);
  }
  return SymMatrix(a);
}

struct TraceData {
  Matrix measurements;  // rows a_i^T
  Vector y;
  SymMatrix x_star;
};

/// y_i = a_i^T X* a_i + sigma eps_i with a_i ~ N(0, I_d) and X* a rank-r Wishart.
inline TraceData gen_trace_data(Index m, Index d, Index r, double sigma, std::uint64_t seed) {
  if (m < 1 || d < 1 || r < 1) throw UsageError("gen_trace_data: m, d, r must be >= 1");
  TraceData out{Matrix(), Vector(), gen_wishart(d, r, seed)};
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  out.measurements = gaussian_matrix(m, d, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.y = (out.measurements * out.x_star.mat()).cwiseProduct(out.measurements).rowwise().sum();
  for (Index i = 0; i < m; ++i) out.y(i) += sigma * normal(rng);
  return out;
}

struct LabelledData {
  Matrix features;  // N x d
  std::vector<int> labels;
};

/// Per-column z-score normalization (population standard deviation; constant
/// columns are only centred).
inline void zscore_columns(Matrix& x) {
  const double n = static_cast<double>(x.rows());
  for (Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const double sd = std::sqrt(x.col(j).squaredNorm() / n);
    if (sd > 0.0) x.col(j) /= sd;
  }
}

/// Gaussian class blobs with anisotropic spread, z-scored.
inline LabelledData gen_classification(Index n, Index d, int classes, std::uint64_t seed) {
  if (n < 2 || d < 1 || classes < 1) throw UsageError("gen_classification: bad sizes");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix means = 2.0 * gaussian_matrix(classes, d, rng);
  Vector scales(d);
  for (Index j = 0; j < d; ++j) scales(j) = std::pow(4.0, static_cast<double>(j) / std::max<Index>(d - 1, 1)) * 0.5;
  LabelledData out{Matrix(n, d), std::vector<int>(static_cast<std::size_t>(n))};
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % classes);
    out.labels[static_cast<std::size_t>(i)] = c;
    for (Index j = 0; j < d; ++j) out.features(i, j) = means(c, j) + scales(j) * normal(rng);
  }
  zscore_columns(out.features);
  return out;
}

}  // namespace spdopt
