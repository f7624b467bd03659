#include "krrinf/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "krrinf/errors.hpp"
#include "krrinf/normal.hpp"
#include "krrinf/quadrature.hpp"

namespace krrinf {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vector weighted_h_at_nodes(const L2Inner& l2, const QuadratureRule& rule) {
  Vector wh(rule.weights.size());
  for (Eigen::Index q = 0; q < wh.size(); ++q) {
    wh[q] = rule.weights[q] * l2.h(row_of(rule.nodes, q));
  }
  return wh;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

}  // namespace

Functional::Functional(Kind kind) : kind_(std::move(kind)) {
  std::visit(Overloaded{
                 [](const PointEval& p) {
                   if (p.x0.size() < 1) throw InvalidArgument("point functional needs x0");
                 },
                 [](const DerivEval& p) {
                   if (p.x0.size() < 1) throw InvalidArgument("derivative functional needs x0");
                   if (p.alpha.dim() != static_cast<std::size_t>(p.x0.size())) {
                     throw InvalidArgument("multi-index length must equal dim(x0)");
                   }
                   if (p.alpha.order() > 2) {
                     throw InvalidArgument("derivative functionals support |alpha| <= 2");
                   }
                 },
                 [](const L2Inner& p) {
                   if (!p.h) throw InvalidArgument("L2 functional needs an integrand h");
                   if (p.box.dim() < 1 || p.box.hi.size() != p.box.lo.size()) {
                     throw InvalidArgument("L2 functional box is malformed");
                   }
                   if (p.box.dim() > 2) {
                     throw InvalidArgument("L2 functionals are supported for d <= 2 only");
                   }
                   if (p.quad_order < 2) throw InvalidArgument("quad_order must be >= 2");
                 },
             },
             kind_);
}

Functional Functional::point(Vector x0) { return Functional(PointEval{std::move(x0)}); }

Functional Functional::deriv(Vector x0, MultiIndex alpha) {
  return Functional(DerivEval{std::move(x0), std::move(alpha)});
}

Functional Functional::l2(std::function<double(Point)> h, Box box, int quad_order) {
  return Functional(L2Inner{std::move(h), std::move(box), quad_order});
}

int Functional::dim() const {
  return std::visit(Overloaded{
                        [](const PointEval& p) { return static_cast<int>(p.x0.size()); },
                        [](const DerivEval& p) { return static_cast<int>(p.x0.size()); },
                        [](const L2Inner& p) { return static_cast<int>(p.box.dim()); },
                    },
                    kind_);
}

int Functional::order() const {
  if (const auto* p = std::get_if<DerivEval>(&kind_)) return p->alpha.order();
  return 0;
}

Vector Functional::representer_at(const MaternKernel& kernel, const Design& Z) const {
  if (dim() != kernel.dim() || Z.cols() != kernel.dim()) {
    throw InvalidArgument("functional, kernel and design dimensions must agree");
  }
  return std::visit(Overloaded{
                        [&](const PointEval& p) { return point_weights(kernel, as_point(p.x0), Z); },
                        [&](const DerivEval& p) {
                          return deriv_weights(kernel, p.alpha, as_point(p.x0), Z);
                        },
                        [&](const L2Inner& p) {
                          const QuadratureRule rule = tensor_gauss_legendre(p.box, p.quad_order);
                          return l2_weights(kernel, rule.nodes, weighted_h_at_nodes(p, rule), Z);
                        },
                    },
                    kind_);
}

double Functional::rkhs_norm_sq(const MaternKernel& kernel) const {
  return std::visit(
      Overloaded{
          [&](const PointEval& p) { return kernel(as_point(p.x0), as_point(p.x0)); },
          [&](const DerivEval& p) {
            return kernel.cross_deriv(p.alpha, p.alpha, as_point(p.x0), as_point(p.x0));
          },
          [&](const L2Inner& p) {
            const QuadratureRule rule = tensor_gauss_legendre(p.box, p.quad_order);
            const Vector wh = weighted_h_at_nodes(p, rule);
            return wh.dot(l2_weights(kernel, rule.nodes, wh, rule.nodes));
          },
      },
      kind_);
}

BoundFunctional bind(const Functional& functional, const MaternKernel& kernel, const Design& X) {
  return BoundFunctional{functional, functional.representer_at(kernel, X)};
}

BoundFunctional bind(const Functional& functional, const KrrFit& fit) {
  return bind(functional, fit.kernel(), fit.data().X);
}

double estimate(const KrrFit& fit, const BoundFunctional& g) {
  if (g.weights.size() != fit.alpha().size()) throw InvalidArgument("functional not bound to fit");
  return g.weights.dot(fit.alpha());
}

double var_exact(const KrrFit& fit, double sigma_sq, const BoundFunctional& g) {
  if (!(sigma_sq >= 0.0)) throw InvalidArgument("sigma^2 must be non-negative");
  return sigma_sq * fit.factor().quad_form_inv_sq(g.weights);
}

double var_hat(const KrrFit& fit, const BoundFunctional& g) {
  return var_exact(fit, fit.sigma_hat_sq(), g);
}

FunctionalEstimate confidence_interval(double value, double variance, double level) {
  const double z = two_sided_z(level);
  const double half = z * std::sqrt(std::max(variance, 0.0));
  return FunctionalEstimate{value, variance, level, value - half, value + half};
}

FunctionalEstimate confidence_interval(const KrrFit& fit, const BoundFunctional& g,
                                       double level) {
  two_sided_z(level);  // validate before any work
  return confidence_interval(estimate(fit, g), var_hat(fit, g), level);
}

Matrix cov_matrix(const KrrFit& fit, std::span<const BoundFunctional> gs, double sigma_sq) {
  const auto k = static_cast<Eigen::Index>(gs.size());
  Matrix W(fit.alpha().size(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (gs[static_cast<std::size_t>(j)].weights.size() != W.rows()) {
      throw InvalidArgument("functional not bound to fit");
    }
    W.col(j) = gs[static_cast<std::size_t>(j)].weights;
  }
  const Matrix S = fit.factor().solve(W);
  Matrix C = sigma_sq * (S.transpose() * S);
  return 0.5 * (C + C.transpose());
}

Matrix cov_matrix(const KrrFit& fit, std::span<const BoundFunctional> gs) {
  return cov_matrix(fit, gs, fit.sigma_hat_sq());
}

NoiselessKrr noiseless_fit(const Matrix& K, double lambda, const Vector& g_at_X) {
  if (g_at_X.size() != K.rows()) throw InvalidArgument("noiseless_fit: size mismatch");
  const SpdFactor factor = SpdFactor::factor(regularized_gram(K, lambda));
  NoiselessKrr out{lambda, g_at_X, factor.solve(g_at_X), Vector()};
  out.ghat_at_X = K * out.coeff;
  return out;
}

NoiselessKrr noiseless_fit(const Design& X, const MaternKernel& kernel, double lambda,
                           const BoundFunctional& g) {
  return noiseless_fit(gram(kernel, X), lambda, g.weights);
}

IdentityCheck var_identity_check(const KrrFit& fit, const BoundFunctional& g, double sigma_sq) {
  const double lhs = var_exact(fit, sigma_sq, g);
  const NoiselessKrr nk = noiseless_fit(fit.data().X, fit.kernel(), fit.lambda(), g);
  const double n = static_cast<double>(fit.data().size());
  const double emp_norm_sq = (nk.ghat_at_X - nk.g_at_X).squaredNorm() / n;
  const double rhs = sigma_sq / (n * fit.lambda() * fit.lambda()) * emp_norm_sq;
  return {lhs, rhs, relative_gap(lhs, rhs)};
}

Vector KernelExpansion::evaluate(const MaternKernel& kernel, const Design& X) const {
  return cross_gram(kernel, X, centers) * coeffs;
}

IdentityCheck bias_oracle(const Design& X, const MaternKernel& kernel, double lambda,
                          const KernelExpansion& f, const Functional& g) {
  if (g.order() > 1) throw InvalidArgument("bias_oracle supports |alpha| <= 1");
  const Vector g_at_Z = g.representer_at(kernel, f.centers);
  const double lf = f.coeffs.dot(g_at_Z);  // <f, g>_H

  // g^T(X) (K + lambda n I)^-1 F - <f, g>_H
  const Matrix K = gram(kernel, X);
  const SpdFactor factor = SpdFactor::factor(regularized_gram(K, lambda));
  const Vector g_at_X = g.representer_at(kernel, X);
  const Vector F = f.evaluate(kernel, X);
  const double direct = g_at_X.dot(factor.solve(F)) - lf;

  // <g_hat - g, f>_H = sum_j c_j (g_hat - g)(z_j)
  const NoiselessKrr nk = noiseless_fit(K, lambda, g_at_X);
  const Vector ghat_at_Z = cross_gram(kernel, f.centers, X) * nk.coeff;
  const double inner = f.coeffs.dot(ghat_at_Z - g_at_Z);
  return {direct, inner, relative_gap(direct, inner)};
}

double worst_case_bias(const Design& X, const MaternKernel& kernel, const Matrix& K,
                       double lambda, const Functional& g) {
  if (g.order() > 1) throw InvalidArgument("worst_case_bias supports |alpha| <= 1");
  const Vector g_at_X = g.representer_at(kernel, X);
  const NoiselessKrr nk = noiseless_fit(K, lambda, g_at_X);
  const double gg = g.rkhs_norm_sq(kernel);
  const double ghat_g = nk.coeff.dot(g_at_X);
  const double ghat_ghat = nk.coeff.dot(nk.ghat_at_X);
  const double radicand = gg - 2.0 * ghat_g + ghat_ghat;
  if (radicand < -1e-10 * std::max(1.0, gg)) {
    throw NumericalError("worst_case_bias: negative squared norm " + std::to_string(radicand));
  }
  return std::sqrt(std::max(radicand, 0.0));
}

double worst_case_bias(const Design& X, const MaternKernel& kernel, double lambda,
                       const Functional& g) {
  return worst_case_bias(X, kernel, gram(kernel, X), lambda, g);
}

}  // namespace krrinf
