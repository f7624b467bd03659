#pragma once

#include <vector>

#include "krrinf/types.hpp"

namespace krrinf {

/// Multi-index alpha = (alpha_1, ..., alpha_d) selecting a partial derivative.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> alpha);

  static MultiIndex zero(std::size_t dim);
  static MultiIndex unit(std::size_t dim, std::size_t axis);

  std::size_t dim() const { return alpha_.size(); }
  int order() const { return order_; }
  int operator[](std::size_t k) const { return alpha_[k]; }
  const std::vector<int>& values() const { return alpha_; }

  MultiIndex operator+(const MultiIndex& other) const;
  bool operator==(const MultiIndex&) const = default;

 private:
  std::vector<int> alpha_;
  int order_ = 0;
};

/// Isotropic Matern correlation
///   Phi(r) = (2 sqrt(nu) phi r)^nu K_nu(2 sqrt(nu) phi r) / (Gamma(nu) 2^(nu-1)).
/// Supported smoothness: nu in {1/2, 1, 3/2, 2, 5/2, 3, 7/2}.
class MaternKernel {
 public:
  MaternKernel(double nu, double phi, int dim);

  double nu() const { return nu_; }
  double phi() const { return phi_; }
  int dim() const { return dim_; }

  /// Highest radial derivative order that is continuous at r = 0.
  int max_derivative_order() const;

  /// d^k Phi / dr^k at distance r, k in {0, 1, 2}.
  double radial(double r, int deriv_order = 0) const;

  double operator()(Point x, Point y) const;

  /// Partial derivative of K(x, y) in the first argument, |alpha| <= 2.
  double deriv(const MultiIndex& alpha, Point x, Point y) const;

  /// D^alpha_x D^beta_y K(x, y), |alpha| + |beta| <= 2.
  double cross_deriv(const MultiIndex& alpha, const MultiIndex& beta, Point x, Point y) const;

  /// Gradient of K(x, y) in x, length d.
  Vector gradient(Point x, Point y) const;

  /// Hessian of K(x, y) in x, d x d symmetric.
  Matrix hessian(Point x, Point y) const;

 private:
  struct Profile {
    double p0;   // z^nu K_nu(z)
    double p1;   // z^(nu-1) K_(nu-1)(z)
    double zp1;  // z * p1
    double p2;   // z^nu K_(nu-2)(z)
  };
  Profile profile(double z) const;
  void check_order(int order) const;

  double nu_;
  double phi_;
  int dim_;
  int twice_nu_;
  double scale_;  // 2 sqrt(nu) phi
  double norm_;   // 1 / (Gamma(nu) 2^(nu-1))
};

/// Threshold on z = 2 sqrt(nu) phi r below which truncated Taylor series are used.
inline constexpr double kSmallArgument = 1e-4;

Matrix gram(const MaternKernel& kernel, const Design& X);

/// K(A, B) for two point sets.
Matrix cross_gram(const MaternKernel& kernel, const Design& A, const Design& B);

/// Representer weights g(X) for the functionals f -> f(x0) and f -> D^alpha f(x0).
Vector point_weights(const MaternKernel& kernel, Point x0, const Design& X);
Vector deriv_weights(const MaternKernel& kernel, const MultiIndex& alpha, Point x0,
                     const Design& X);

/// g(X) for f -> integral of h f: entry i is sum_q w_q h(s_q) K(s_q, x_i).
/// `weighted_h` holds w_q h(s_q) at the quadrature nodes.
Vector l2_weights(const MaternKernel& kernel, const Design& nodes, const Vector& weighted_h,
                  const Design& X);

}  // namespace krrinf
