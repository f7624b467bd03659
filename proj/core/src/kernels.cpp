#include "krrinf/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "krrinf/bessel.hpp"
#include "krrinf/errors.hpp"

namespace krrinf {

MultiIndex::MultiIndex(std::vector<int> alpha) : alpha_(std::move(alpha)) {
  for (int a : alpha_) {
    if (a < 0) throw InvalidArgument("multi-index entries must be non-negative");
    order_ += a;
  }
}

MultiIndex MultiIndex::zero(std::size_t dim) { return MultiIndex(std::vector<int>(dim, 0)); }

MultiIndex MultiIndex::unit(std::size_t dim, std::size_t axis) {
  std::vector<int> a(dim, 0);
  a.at(axis) = 1;
  return MultiIndex(std::move(a));
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.dim() != dim()) throw InvalidArgument("multi-index dimension mismatch");
  std::vector<int> sum(alpha_);
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += other.alpha_[k];
  return MultiIndex(std::move(sum));
}

namespace {

constexpr double kSqrtHalfPi = 1.2533141373155002512;  // sqrt(pi / 2)

// sum_k (n+k)! / (k! (n-k)!) 2^-k z^(n-k), so that
// z^(n+1/2) K_(n+1/2)(z) = sqrt(pi/2) e^-z poly(z).
double half_integer_poly(int n, double z) {
  switch (n) {
    case 0: return 1.0;
    case 1: return z + 1.0;
    case 2: return (z + 3.0) * z + 3.0;
    case 3: return ((z + 6.0) * z + 15.0) * z + 15.0;
    default: break;
  }
  throw InvalidArgument("half-integer order out of range");
}

// z^j K_j(z) for j = 0..3 near the origin, truncated after the z^2 terms.
double small_z_scaled_k(int j, double z) {
  constexpr double gamma = std::numbers::egamma;
  if (j == 0) {
    if (z == 0.0) return std::numeric_limits<double>::infinity();
    const double lg = std::log(0.5 * z) + gamma;
    return -lg * (1.0 + 0.25 * z * z) + 0.25 * z * z;
  }
  if (j == 1) {
    if (z == 0.0) return 1.0;
    return 1.0 + 0.5 * z * z * (std::log(0.5 * z) + gamma - 0.5);
  }
  const double lead = std::ldexp(std::tgamma(double(j)), j - 1);
  return lead * (1.0 - z * z / (4.0 * (j - 1)));
}

void check_dim(Point x, Point y, int dim) {
  if (x.size() != static_cast<std::size_t>(dim) || y.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("point dimension does not match kernel dimension " +
                          std::to_string(dim));
  }
}

}  // namespace

MaternKernel::MaternKernel(double nu, double phi, int dim) : nu_(nu), phi_(phi), dim_(dim) {
  if (!(nu > 0.0)) throw InvalidArgument("Matern smoothness nu must be positive");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw InvalidArgument("Matern scale phi must be positive");
  if (dim < 1) throw InvalidArgument("kernel dimension must be >= 1");
  const double twice = 2.0 * nu;
  twice_nu_ = static_cast<int>(std::lround(twice));
  const bool supported = std::abs(twice - twice_nu_) < 1e-12 && twice_nu_ >= 1 && twice_nu_ <= 7;
  if (!supported) {
    throw InvalidArgument("unsupported Matern smoothness nu = " + std::to_string(nu) +
                          " (supported: 1/2, 1, 3/2, 2, 5/2, 3, 7/2)");
  }
  nu_ = 0.5 * twice_nu_;
  scale_ = 2.0 * std::sqrt(nu_) * phi_;
  norm_ = 1.0 / (std::tgamma(nu_) * std::pow(2.0, nu_ - 1.0));
}

int MaternKernel::max_derivative_order() const {
  if (twice_nu_ == 1) return 0;
  if (twice_nu_ == 2) return 1;
  return 2;
}

void MaternKernel::check_order(int order) const {
  if (order < 0 || order > 2) throw InvalidArgument("derivative order must be 0, 1 or 2");
  if (order > max_derivative_order()) {
    throw InvalidArgument("Matern kernel with nu = " + std::to_string(nu_) +
                          " has no continuous derivative of order " + std::to_string(order));
  }
}

MaternKernel::Profile MaternKernel::profile(double z) const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (twice_nu_ % 2 == 1) {
    const int n = (twice_nu_ - 1) / 2;
    const double e = kSqrtHalfPi * std::exp(-z);
    Profile p{};
    p.p0 = e * half_integer_poly(n, z);
    if (n >= 1) {
      p.p1 = e * half_integer_poly(n - 1, z);
      p.zp1 = z * p.p1;
    } else {
      p.p1 = z > 0.0 ? e / z : std::numeric_limits<double>::infinity();
      p.zp1 = e;
    }
    if (n >= 2) {
      p.p2 = z * z * e * half_integer_poly(n - 2, z);
    } else if (n == 1) {
      p.p2 = z * e;
    } else {
      p.p2 = nan;
    }
    return p;
  }

  const int m = twice_nu_ / 2;
  double s[4];  // s[j] = z^j K_j(z), j <= m
  if (z < kSmallArgument) {
    for (int j = 0; j <= m; ++j) s[j] = small_z_scaled_k(j, z);
  } else if (z > 745.0) {
    for (int j = 0; j <= m; ++j) s[j] = 0.0;
  } else {
    double prev = bessel::k0(z);
    double cur = bessel::k1(z);
    s[0] = prev;
    double zp = z;
    if (m >= 1) s[1] = z * cur;
    for (int j = 1; j < m; ++j) {
      const double next = prev + (2.0 * j / z) * cur;
      prev = cur;
      cur = next;
      zp *= z;
      s[j + 1] = zp * cur;
    }
  }
  Profile p{};
  p.p0 = s[m];
  p.p1 = s[m - 1];
  p.zp1 = z == 0.0 ? 0.0 : z * s[m - 1];
  switch (m) {
    case 1: p.p2 = s[1]; break;
    case 2: p.p2 = z == 0.0 ? 0.0 : z * z * s[0]; break;
    default: p.p2 = z * z * s[1]; break;
  }
  return p;
}

double MaternKernel::radial(double r, int deriv_order) const {
  if (!(r >= 0.0)) throw InvalidArgument("distance must be non-negative");
  check_order(deriv_order);
  if (r == 0.0 && deriv_order == 0) return 1.0;
  const Profile p = profile(scale_ * r);
  switch (deriv_order) {
    case 0: return norm_ * p.p0;
    case 1: return -scale_ * norm_ * p.zp1;
    default: return scale_ * scale_ * norm_ * (p.p2 - p.p1);
  }
}

double MaternKernel::operator()(Point x, Point y) const {
  check_dim(x, y, dim_);
  double r2 = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double u = x[k] - y[k];
    r2 += u * u;
  }
  if (r2 == 0.0) return 1.0;
  return norm_ * profile(scale_ * std::sqrt(r2)).p0;
}

double MaternKernel::deriv(const MultiIndex& alpha, Point x, Point y) const {
  check_dim(x, y, dim_);
  if (alpha.dim() != static_cast<std::size_t>(dim_)) {
    throw InvalidArgument("multi-index dimension does not match kernel dimension");
  }
  if (alpha.order() > 2) throw InvalidArgument("derivative order |alpha| > 2 is not supported");
  if (alpha.order() == 0) return (*this)(x, y);
  check_order(alpha.order());

  double r2 = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double u = x[k] - y[k];
    r2 += u * u;
  }
  const double r = std::sqrt(r2);
  int first = -1;
  int second = -1;
  for (int k = 0; k < dim_; ++k) {
    for (int c = 0; c < alpha[k]; ++c) (first < 0 ? first : second) = k;
  }

  const double a2n = scale_ * scale_ * norm_;
  if (alpha.order() == 1) {
    // odd radial term vanishes at the origin
    if (r == 0.0) return 0.0;
    const Profile p = profile(scale_ * r);
    return -a2n * p.p1 * (x[first] - y[first]);
  }
  const Profile p = profile(scale_ * r);
  double value = first == second ? -a2n * p.p1 : 0.0;
  if (r > 0.0) value += a2n * p.p2 * (x[first] - y[first]) * (x[second] - y[second]) / r2;
  return value;
}

double MaternKernel::cross_deriv(const MultiIndex& alpha, const MultiIndex& beta, Point x,
                                 Point y) const {
  if (alpha.order() + beta.order() > 2) {
    throw InvalidArgument("total derivative order |alpha| + |beta| > 2 is not supported");
  }
  const double v = deriv(alpha + beta, x, y);
  return beta.order() % 2 == 0 ? v : -v;
}

Vector MaternKernel::gradient(Point x, Point y) const {
  check_dim(x, y, dim_);
  check_order(1);
  Vector g = Vector::Zero(dim_);
  double r2 = 0.0;
  for (int k = 0; k < dim_; ++k) {
    g[k] = x[k] - y[k];
    r2 += g[k] * g[k];
  }
  if (r2 == 0.0) return g;
  const Profile p = profile(scale_ * std::sqrt(r2));
  return (-scale_ * scale_ * norm_ * p.p1) * g;
}

Matrix MaternKernel::hessian(Point x, Point y) const {
  check_dim(x, y, dim_);
  check_order(2);
  Vector u(dim_);
  for (int k = 0; k < dim_; ++k) u[k] = x[k] - y[k];
  const double r2 = u.squaredNorm();
  const Profile p = profile(scale_ * std::sqrt(r2));
  const double a2n = scale_ * scale_ * norm_;
  Matrix h = Matrix::Identity(dim_, dim_) * (-a2n * p.p1);
  if (r2 > 0.0) h.noalias() += (a2n * p.p2 / r2) * (u * u.transpose());
  return h;
}

Matrix gram(const MaternKernel& kernel, const Design& X) {
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(row_of(X, i), row_of(X, j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Matrix cross_gram(const MaternKernel& kernel, const Design& A, const Design& B) {
  Matrix K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) K(i, j) = kernel(row_of(A, i), row_of(B, j));
  }
  return K;
}

Vector point_weights(const MaternKernel& kernel, Point x0, const Design& X) {
  Vector w(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) w[i] = kernel(x0, row_of(X, i));
  return w;
}

Vector deriv_weights(const MaternKernel& kernel, const MultiIndex& alpha, Point x0,
                     const Design& X) {
  // g = D^alpha_y K(., y)|_{y = x0}, so g(x_i) = D^alpha_x K(x0, x_i) by symmetry.
  Vector w(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) w[i] = kernel.deriv(alpha, x0, row_of(X, i));
  return w;
}

Vector l2_weights(const MaternKernel& kernel, const Design& nodes, const Vector& weighted_h,
                  const Design& X) {
  if (nodes.rows() != weighted_h.size()) throw InvalidArgument("quadrature size mismatch");
  if (nodes.cols() != X.cols()) throw InvalidArgument("quadrature dimension mismatch");
  Vector w = Vector::Zero(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index q = 0; q < nodes.rows(); ++q) {
      if (weighted_h[q] == 0.0) continue;
      acc += weighted_h[q] * kernel(row_of(nodes, q), row_of(X, i));
    }
    w[i] = acc;
  }
  return w;
}

}  // namespace krrinf
