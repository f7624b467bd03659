#pragma once

#include <vector>

#include "krrinf/kernels.hpp"
#include "krrinf/spd_linalg.hpp"
#include "krrinf/types.hpp"

namespace krrinf {

struct Dataset {
  Design X;  // n x d
  Vector Y;  // n

  Eigen::Index size() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }

  /// Throws InvalidArgument unless n >= 1, shapes agree and all entries are finite.
  void validate() const;
};

/// Kernel ridge regression fit
///   f_hat(x) = K(x, X) (K(X, X) + lambda n I)^-1 Y
/// together with the residual-based noise estimate
///   sigma_hat^2 = (1/n) sum_i (y_i - f_hat(x_i))^2.
class KrrFit {
 public:
  KrrFit(Dataset data, MaternKernel kernel, double lambda, SpdFactor factor, Vector alpha);

  const Dataset& data() const { return data_; }
  const MaternKernel& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  const SpdFactor& factor() const { return factor_; }
  /// (K + lambda n I)^-1 Y
  const Vector& alpha() const { return alpha_; }
  double sigma_hat_sq() const { return sigma_hat_sq_; }

  /// f_hat at the design points, via Y - lambda n alpha.
  Vector fitted() const;

 private:
  Dataset data_;
  MaternKernel kernel_;
  double lambda_;
  SpdFactor factor_;
  Vector alpha_;
  double sigma_hat_sq_;
};

/// K(X, X) + lambda n I.
Matrix regularized_gram(const Matrix& K, double lambda);

KrrFit fit(Dataset data, const MaternKernel& kernel, double lambda);

/// Same as fit() but reuses a precomputed Gram matrix K(X, X).
KrrFit fit_with_gram(Dataset data, const MaternKernel& kernel, double lambda, const Matrix& K);

double predict(const KrrFit& f, Point x);
double predict_deriv(const KrrFit& f, const MultiIndex& alpha, Point x);
Vector predict_gradient(const KrrFit& f, Point x);
Matrix predict_hessian(const KrrFit& f, Point x);

/// Closed-form leave-one-out score (1/n) sum_i ((y_i - f_hat(x_i)) / (1 - H_ii))^2
/// with smoother H = K (K + lambda n I)^-1. Throws DegenerateLeverage if any
/// 1 - H_ii <= 1e-12.
double loocv_score(const Dataset& data, const MaternKernel& kernel, double lambda);
double loocv_score_with_gram(const Dataset& data, const Matrix& K, double lambda);

struct HyperparamChoice {
  MaternKernel kernel;
  double lambda;
  double score;
};

inline const std::vector<double> kDefaultPhiGrid = {0.5, 1.0, 2.0, 4.0, 8.0};
inline const std::vector<double> kDefaultLambdaMultipliers = {0.05, 0.1, 0.25, 0.5, 1.0,
                                                               2.0,  5.0, 10.0, 25.0};

/// Grid search over phi and lambda = c / n minimising loocv_score.
/// Ties go to the smaller lambda, then the smaller phi.
HyperparamChoice select_hyperparams(const Dataset& data, double nu,
                                    const std::vector<double>& phi_grid,
                                    const std::vector<double>& lambda_multipliers);

}  // namespace krrinf
