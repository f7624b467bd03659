#pragma once

#include <utility>
#include <vector>

#include "krrinf/krr.hpp"
#include "krrinf/types.hpp"

namespace krrinf {

struct OptimumResult {
  Vector x_min;
  double f_min = 0.0;
  Matrix hessian;  // H_hat at x_min
  Matrix cov;      // COV_hat at x_min
  int grid_per_axis = 0;
  int newton_iters = 0;            // accepted Newton steps
  bool refinement_skipped = false; // Hessian not positive definite at the grid point
};

struct OptimumOptions {
  int grid_per_axis = 0;  // 0: 512 for d = 1, 64 otherwise
  int newton_iters = 20;
};

/// Dense grid scan of f_hat over `box` followed by projected Newton steps with
/// step halving. Fills x_min, f_min and the search metadata only.
OptimumResult find_min(const KrrFit& fit, const Box& box, int grid_per_axis, int newton_iters);

/// d^2 f_hat / dx dx^T at x, symmetrised.
Matrix hessian_hat(const KrrFit& fit, Point x);

/// sigma_hat^2 dK/dx(x, X) A^-2 dK/dx^T(X, x): covariance of the gradient estimate.
Matrix optimum_cov(const KrrFit& fit, Point x);

/// find_min plus H_hat and COV_hat at the minimiser.
OptimumResult estimate_optimum(const KrrFit& fit, const Box& box, const OptimumOptions& opts = {});

/// Throws SingularHessian when H_hat is numerically singular.
void check_hessian(const KrrFit& fit, const Matrix& hessian);

/// Per-coordinate intervals x_min_i +- z sqrt(S_ii), S = H^-1 COV H^-1.
std::vector<std::pair<double, double>> optimum_ci(const KrrFit& fit, const OptimumResult& result,
                                                  double level);

/// COV_hat^{-1/2} H_hat (x_min_hat - x_true).
Vector standardized_optimum_stat(const OptimumResult& result, Point x_true);

}  // namespace krrinf
