#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "krrinf/kernels.hpp"
#include "krrinf/krr.hpp"
#include "krrinf/types.hpp"

namespace krrinf {

/// f -> f(x0)
struct PointEval {
  Vector x0;
};

/// f -> D^alpha f(x0)
struct DerivEval {
  Vector x0;
  MultiIndex alpha;
};

/// f -> integral over `box` of f(s) h(s) ds, tensor Gauss-Legendre with
/// `quad_order` nodes per axis. Supported for d <= 2.
struct L2Inner {
  std::function<double(Point)> h;
  Box box;
  int quad_order = 60;
};

/// A linear functional l(f) = <f, g>_H, identified by its representer g.
class Functional {
 public:
  using Kind = std::variant<PointEval, DerivEval, L2Inner>;

  explicit Functional(Kind kind);

  static Functional point(Vector x0);
  static Functional deriv(Vector x0, MultiIndex alpha);
  static Functional l2(std::function<double(Point)> h, Box box, int quad_order = 60);

  const Kind& kind() const { return kind_; }
  int dim() const;
  /// Derivative order carried by the functional (0 for point and L2 kinds).
  int order() const;

  /// g evaluated at each row of Z.
  Vector representer_at(const MaternKernel& kernel, const Design& Z) const;

  /// ||g||_H^2 via the reproducing property.
  double rkhs_norm_sq(const MaternKernel& kernel) const;

 private:
  Kind kind_;
};

/// A functional together with its weight vector g(X) on a fixed design.
struct BoundFunctional {
  Functional functional;
  Vector weights;
};

BoundFunctional bind(const Functional& functional, const MaternKernel& kernel, const Design& X);
BoundFunctional bind(const Functional& functional, const KrrFit& fit);

struct FunctionalEstimate {
  double value;
  double var_hat;
  double level;
  double ci_lo;
  double ci_hi;
};

/// <f_hat, g>_H = g(X)^T (K + lambda n I)^-1 Y
double estimate(const KrrFit& fit, const BoundFunctional& g);

/// sigma^2 g(X)^T (K + lambda n I)^-2 g(X)
double var_exact(const KrrFit& fit, double sigma_sq, const BoundFunctional& g);

/// var_exact with sigma_hat^2 from the fit.
double var_hat(const KrrFit& fit, const BoundFunctional& g);

/// value +- z_{alpha/2} sqrt(var_hat)
FunctionalEstimate confidence_interval(const KrrFit& fit, const BoundFunctional& g,
                                       double level);
/// Same interval with a caller-supplied variance (e.g. known sigma^2).
FunctionalEstimate confidence_interval(double value, double variance, double level);

/// sigma^2 (w_i^T A^-2 w_j)_ij for functionals bound to the same fit.
Matrix cov_matrix(const KrrFit& fit, std::span<const BoundFunctional> gs, double sigma_sq);
Matrix cov_matrix(const KrrFit& fit, std::span<const BoundFunctional> gs);

/// KRR applied to the noiseless data g(X): coeff = (K + lambda n I)^-1 g(X),
/// g_hat(X) = K coeff.
struct NoiselessKrr {
  double lambda;
  Vector g_at_X;
  Vector coeff;
  Vector ghat_at_X;
};

NoiselessKrr noiseless_fit(const Design& X, const MaternKernel& kernel, double lambda,
                           const BoundFunctional& g);
NoiselessKrr noiseless_fit(const Matrix& K, double lambda, const Vector& g_at_X);

struct IdentityCheck {
  double lhs;
  double rhs;
  double rel_err;
};

/// Compares sigma^2 g^T A^-2 g with sigma^2 n^-1 lambda^-2 ||g_hat - g||_n^2.
IdentityCheck var_identity_check(const KrrFit& fit, const BoundFunctional& g, double sigma_sq);

/// f = sum_j c_j K(., z_j): known exactly in the RKHS.
struct KernelExpansion {
  Design centers;
  Vector coeffs;

  Vector evaluate(const MaternKernel& kernel, const Design& X) const;
};

/// Bias computed as g^T A^-1 F - <f, g>_H and as <g_hat - g, f>_H.
IdentityCheck bias_oracle(const Design& X, const MaternKernel& kernel, double lambda,
                          const KernelExpansion& f, const Functional& g);

/// sup over the RKHS unit ball of |BIAS_f| = ||g_hat - g||_H.
double worst_case_bias(const Design& X, const MaternKernel& kernel, double lambda,
                       const Functional& g);
double worst_case_bias(const Design& X, const MaternKernel& kernel, const Matrix& K,
                       double lambda, const Functional& g);

}  // namespace krrinf
