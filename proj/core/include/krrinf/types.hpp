#pragma once

#include <span>

#include <Eigen/Dense>

namespace krrinf {

/// n x d design matrix, one input point per row.
using Design = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Non-owning view of a point in R^d.
using Point = std::span<const double>;

inline Point row_of(const Design& X, Eigen::Index i) {
  return Point(X.row(i).data(), static_cast<std::size_t>(X.cols()));
}

inline Point as_point(const Vector& v) {
  return Point(v.data(), static_cast<std::size_t>(v.size()));
}

/// Axis-aligned box [lo_k, hi_k] per coordinate.
struct Box {
  Vector lo;
  Vector hi;

  Eigen::Index dim() const { return lo.size(); }
  bool contains(Point x) const {
    for (Eigen::Index k = 0; k < lo.size(); ++k) {
      const double v = x[static_cast<std::size_t>(k)];
      if (v < lo[k] || v > hi[k]) return false;
    }
    return true;
  }
};

}  // namespace krrinf
