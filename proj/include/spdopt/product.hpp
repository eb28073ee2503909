#pragma once

// Product of K SPD factors (one geometry, one dimension) with a Euclidean
// weight vector. The metric is the sum of the factor metrics and the dot
// product on the weights; exp/log act componentwise.

#include <vector>

#include "spdopt/manifold.hpp"

namespace spdopt {

struct ProductTangent {
  std::vector<SymMatrix> parts;
  Vector weights;

  static ProductTangent zero(std::size_t k, Index n, Index nweights) {
    return {std::vector<SymMatrix>(k, SymMatrix::zero(n)), Vector::Zero(nweights)};
  }

  ProductTangent& operator+=(const ProductTangent& o) {
    check(o);
    for (std::size_t j = 0; j < parts.size(); ++j) parts[j] += o.parts[j];
    weights += o.weights;
    return *this;
  }
  ProductTangent& operator-=(const ProductTangent& o) {
    check(o);
    for (std::size_t j = 0; j < parts.size(); ++j) parts[j] -= o.parts[j];
    weights -= o.weights;
    return *this;
  }
  ProductTangent& operator*=(double s) {
    for (auto& p : parts) p *= s;
    weights *= s;
    return *this;
  }

  friend ProductTangent operator+(ProductTangent a, const ProductTangent& b) { return a += b; }
  friend ProductTangent operator-(ProductTangent a, const ProductTangent& b) { return a -= b; }
  friend ProductTangent operator*(double s, ProductTangent a) { return a *= s; }
  friend ProductTangent operator*(ProductTangent a, double s) { return a *= s; }
  friend ProductTangent operator-(ProductTangent a) { return a *= -1.0; }

  /// Frobenius / Euclidean norm of the stacked components.
  double flat_norm() const {
    double s = weights.squaredNorm();
    for (const auto& p : parts) s += p.mat().squaredNorm();
    return std::sqrt(s);
  }

 private:
  void check(const ProductTangent& o) const {
    if (o.parts.size() != parts.size() || o.weights.size() != weights.size())
      throw DimensionError("ProductTangent: shape mismatch");
  }
};

class ProductPoint {
 public:
  ProductPoint(std::vector<ManifoldPoint> parts, Vector weights)
      : parts_(std::move(parts)), weights_(std::move(weights)) {
    if (parts_.empty()) throw DimensionError("ProductPoint: needs at least one SPD factor");
    for (const auto& p : parts_) {
      if (p.geometry() != parts_.front().geometry())
        throw UsageError("ProductPoint: factors must share a geometry");
      if (p.dim() != parts_.front().dim())
        throw DimensionError("ProductPoint: factors must share a dimension");
    }
    if (!weights_.allFinite()) throw DomainError("ProductPoint: non-finite weights");
  }

  Geometry geometry() const { return parts_.front().geometry(); }
  std::size_t num_parts() const { return parts_.size(); }
  Index part_dim() const { return parts_.front().dim(); }
  const std::vector<ManifoldPoint>& parts() const { return parts_; }
  const ManifoldPoint& part(std::size_t j) const { return parts_[j]; }
  const Vector& weights() const { return weights_; }

 private:
  std::vector<ManifoldPoint> parts_;
  Vector weights_;
};

inline double inner(const ProductPoint& x, const ProductTangent& u, const ProductTangent& v) {
  double s = u.weights.dot(v.weights);
  for (std::size_t j = 0; j < x.num_parts(); ++j) s += inner(x.part(j), u.parts[j], v.parts[j]);
  return s;
}

inline double norm(const ProductPoint& x, const ProductTangent& u) {
  return std::sqrt(std::max(0.0, inner(x, u, u)));
}

inline ProductPoint exp_map(const ProductPoint& x, const ProductTangent& u) {
  std::vector<ManifoldPoint> parts;
  parts.reserve(x.num_parts());
  for (std::size_t j = 0; j < x.num_parts(); ++j) parts.push_back(exp_map(x.part(j), u.parts[j]));
  return ProductPoint(std::move(parts), x.weights() + u.weights);
}

inline ProductTangent log_map(const ProductPoint& x, const ProductPoint& y) {
  ProductTangent out{{}, y.weights() - x.weights()};
  for (std::size_t j = 0; j < x.num_parts(); ++j) out.parts.push_back(log_map(x.part(j), y.part(j)));
  return out;
}

inline double distance(const ProductPoint& x, const ProductPoint& y) {
  double s = (x.weights() - y.weights()).squaredNorm();
  for (std::size_t j = 0; j < x.num_parts(); ++j) {
    const double d = distance(x.part(j), y.part(j));
    s += d * d;
  }
  return std::sqrt(s);
}

inline ProductTangent transport(const ProductPoint&, const ProductPoint&, const ProductTangent& u) {
  return u;
}

}  // namespace spdopt
