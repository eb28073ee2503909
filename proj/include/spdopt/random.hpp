#pragma once

// Seeded random matrices. All generators draw from std::mt19937_64 so a seed
// fixes every value on a given standard library.

#include <cmath>
#include <cstdint>
#include <random>

#include "spdopt/symlinalg.hpp"

namespace spdopt {

using Rng = std::mt19937_64;

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
/// of R's diagonal folded into Q).
inline Matrix haar_orthogonal(Index n, Rng& rng) {
  const Matrix g = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k)
    if (r(k, k) < 0) q.col(k) *= -1.0;
  return q;
}

/// Symmetric matrix with i.i.d. N(0,1) upper triangle, scaled to unit
/// Frobenius norm when `normalize` is set.
inline SymMatrix random_sym(Index n, Rng& rng, bool normalize = false) {
  const Matrix g = gaussian_matrix(n, n, rng);
  SymMatrix s(g);
  if (normalize) s *= 1.0 / s.norm();
  return s;
}

/// Random SPD matrix Q diag(lambda) Q^T with log-uniform spectrum in [lo, hi].
inline SpdMatrix random_spd(Index n, Rng& rng, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> unif(std::log(lo), std::log(hi));
  Vector lambda(n);
  for (Index k = 0; k < n; ++k) lambda(k) = std::exp(unif(rng));
  return SpdMatrix::from_eig(haar_orthogonal(n, rng), lambda);
}

}  // namespace spdopt
