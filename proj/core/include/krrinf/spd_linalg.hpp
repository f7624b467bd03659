#pragma once

#include <Eigen/Cholesky>

#include "krrinf/types.hpp"

namespace krrinf {

/// Cholesky factor A = L L^T of a symmetric positive-definite matrix.
/// Immutable once built; concurrent solves are safe.
class SpdFactor {
 public:
  /// Throws NotPositiveDefinite when a pivot is not strictly positive and
  /// InvalidArgument when A is not square or not symmetric to 1e-12 relative.
  static SpdFactor factor(const Matrix& A);

  Eigen::Index size() const { return n_; }
  double reference_scale() const { return scale_; }
  Matrix lower() const { return llt_.matrixL(); }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& B) const;

  /// w^T A^-2 w computed as ||A^-1 w||^2.
  double quad_form_inv_sq(const Vector& w) const;

  /// diag(A^-1).
  Vector inverse_diagonal() const;

 private:
  SpdFactor() = default;

  Eigen::Index n_ = 0;
  double scale_ = 0.0;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace krrinf
