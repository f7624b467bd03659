#include "krrinf/spd_linalg.hpp"

#include <cmath>
#include <string>

#include "krrinf/errors.hpp"

namespace krrinf {

SpdFactor SpdFactor::factor(const Matrix& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("factor: matrix must be square");
  const Eigen::Index n = A.rows();
  if (n == 0) throw InvalidArgument("factor: empty matrix");
  if (!A.allFinite()) throw InvalidArgument("factor: matrix has non-finite entries");

  SpdFactor f;
  f.n_ = n;
  f.scale_ = A.diagonal().maxCoeff();
  const double amax = A.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (std::abs(A(i, j) - A(j, i)) > 1e-12 * amax) {
        throw InvalidArgument("factor: matrix is not symmetric");
      }
    }
  }
  if (!(f.scale_ > 0.0)) throw NotPositiveDefinite("factor: non-positive diagonal entry");
  f.llt_.compute(A);
  if (f.llt_.info() != Eigen::Success) {
    throw NotPositiveDefinite("factor: matrix is not positive definite (is lambda > 0?)");
  }
  const auto L = f.llt_.matrixLLT();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) {
      throw NotPositiveDefinite("factor: pivot " + std::to_string(i) + " is not positive");
    }
  }
  return f;
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != n_) throw InvalidArgument("solve: dimension mismatch");
  return llt_.solve(b);
}

Matrix SpdFactor::solve(const Matrix& B) const {
  if (B.rows() != n_) throw InvalidArgument("solve: dimension mismatch");
  return llt_.solve(B);
}

double SpdFactor::quad_form_inv_sq(const Vector& w) const {
  if (w.size() != n_) throw InvalidArgument("quad_form_inv_sq: dimension mismatch");
  return llt_.solve(w).squaredNorm();
}

Vector SpdFactor::inverse_diagonal() const {
  Matrix Linv = Matrix::Identity(n_, n_);
  llt_.matrixL().solveInPlace(Linv);
  return Linv.colwise().squaredNorm().transpose();
}

}  // namespace krrinf
