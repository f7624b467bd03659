#include "krrinf/krr.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "krrinf/errors.hpp"

namespace krrinf {

void Dataset::validate() const {
  if (X.rows() < 1) throw InvalidArgument("dataset must contain at least one point");
  if (X.cols() < 1) throw InvalidArgument("dataset must have at least one feature column");
  if (Y.size() != X.rows()) throw InvalidArgument("X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw InvalidArgument("dataset has non-finite entries");
}

KrrFit::KrrFit(Dataset data, MaternKernel kernel, double lambda, SpdFactor factor, Vector alpha)
    : data_(std::move(data)),
      kernel_(kernel),
      lambda_(lambda),
      factor_(std::move(factor)),
      alpha_(std::move(alpha)) {
  const double n = static_cast<double>(data_.size());
  // y_i - f_hat(x_i) = lambda n alpha_i
  sigma_hat_sq_ = (lambda_ * n) * (lambda_ * n) * alpha_.squaredNorm() / n;
}

Vector KrrFit::fitted() const {
  return data_.Y - (lambda_ * static_cast<double>(data_.size())) * alpha_;
}

Matrix regularized_gram(const Matrix& K, double lambda) {
  Matrix A = K;
  A.diagonal().array() += lambda * static_cast<double>(K.rows());
  return A;
}

KrrFit fit_with_gram(Dataset data, const MaternKernel& kernel, double lambda, const Matrix& K) {
  data.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be > 0");
  if (data.dim() != kernel.dim()) throw InvalidArgument("kernel and data dimensions differ");
  if (K.rows() != data.size() || K.cols() != data.size()) {
    throw InvalidArgument("Gram matrix does not match the dataset");
  }
  SpdFactor factor = SpdFactor::factor(regularized_gram(K, lambda));
  Vector alpha = factor.solve(data.Y);
  return KrrFit(std::move(data), kernel, lambda, std::move(factor), std::move(alpha));
}

KrrFit fit(Dataset data, const MaternKernel& kernel, double lambda) {
  data.validate();
  if (data.dim() != kernel.dim()) throw InvalidArgument("kernel and data dimensions differ");
  const Matrix K = gram(kernel, data.X);
  return fit_with_gram(std::move(data), kernel, lambda, K);
}

double predict(const KrrFit& f, Point x) {
  const Design& X = f.data().X;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) acc += f.alpha()[i] * f.kernel()(x, row_of(X, i));
  return acc;
}

double predict_deriv(const KrrFit& f, const MultiIndex& alpha, Point x) {
  if (alpha.order() > 2) throw InvalidArgument("predict_deriv supports |alpha| <= 2");
  if (alpha.order() == 0) return predict(f, x);
  const Design& X = f.data().X;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    acc += f.alpha()[i] * f.kernel().deriv(alpha, x, row_of(X, i));
  }
  return acc;
}

Vector predict_gradient(const KrrFit& f, Point x) {
  const Design& X = f.data().X;
  Vector g = Vector::Zero(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    g += f.alpha()[i] * f.kernel().gradient(x, row_of(X, i));
  }
  return g;
}

Matrix predict_hessian(const KrrFit& f, Point x) {
  const Design& X = f.data().X;
  Matrix h = Matrix::Zero(X.cols(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    h += f.alpha()[i] * f.kernel().hessian(x, row_of(X, i));
  }
  return 0.5 * (h + h.transpose());
}

double loocv_score_with_gram(const Dataset& data, const Matrix& K, double lambda) {
  if (!(lambda > 0.0)) throw DegenerateLeverage("loocv: lambda must be > 0");
  const SpdFactor factor = SpdFactor::factor(regularized_gram(K, lambda));
  const Vector alpha = factor.solve(data.Y);
  const Vector inv_diag = factor.inverse_diagonal();
  const double ln = lambda * static_cast<double>(data.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    // 1 - H_ii = lambda n [A^-1]_ii, y_i - f_hat(x_i) = lambda n alpha_i
    const double one_minus_h = ln * inv_diag[i];
    if (!(one_minus_h > 1e-12)) {
      throw DegenerateLeverage("loocv: leverage of point " + std::to_string(i) + " is ~1");
    }
    const double r = alpha[i] / inv_diag[i];
    acc += r * r;
  }
  return acc / static_cast<double>(data.size());
}

double loocv_score(const Dataset& data, const MaternKernel& kernel, double lambda) {
  data.validate();
  return loocv_score_with_gram(data, gram(kernel, data.X), lambda);
}

HyperparamChoice select_hyperparams(const Dataset& data, double nu,
                                    const std::vector<double>& phi_grid,
                                    const std::vector<double>& lambda_multipliers) {
  data.validate();
  if (phi_grid.empty() || lambda_multipliers.empty()) {
    throw InvalidArgument("hyperparameter grids must be non-empty");
  }
  const double n = static_cast<double>(data.size());
  std::optional<HyperparamChoice> best;
  for (double phi : phi_grid) {
    const MaternKernel kernel(nu, phi, data.dim());
    const Matrix K = gram(kernel, data.X);
    for (double c : lambda_multipliers) {
      const double lambda = c / n;
      double score;
      try {
        score = loocv_score_with_gram(data, K, lambda);
      } catch (const NumericalError&) {
        continue;
      }
      const bool better =
          !best || score < best->score ||
          (score == best->score &&
           (lambda < best->lambda ||
            (lambda == best->lambda && phi < best->kernel.phi())));
      if (better) best = HyperparamChoice{kernel, lambda, score};
    }
  }
  if (!best) throw DegenerateLeverage("all hyperparameter candidates are degenerate");
  return *best;
}

}  // namespace krrinf
