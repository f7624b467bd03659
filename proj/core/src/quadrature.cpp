#include "krrinf/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "krrinf/errors.hpp"

namespace krrinf {

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw InvalidArgument("quadrature order must be >= 1");
  QuadratureRule rule{Design(order, 1), Vector(order)};
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration on P_order from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes(i, 0) = -x;
    rule.weights[i] = w;
    rule.nodes(order - 1 - i, 0) = x;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes(order / 2, 0) = 0.0;
  return rule;
}

QuadratureRule tensor_gauss_legendre(const Box& box, int order) {
  const Eigen::Index d = box.dim();
  if (d < 1) throw InvalidArgument("quadrature box must have dimension >= 1");
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!std::isfinite(box.lo[k]) || !std::isfinite(box.hi[k]) || !(box.hi[k] > box.lo[k])) {
      throw InvalidArgument("quadrature box must be finite with hi > lo");
    }
  }
  const QuadratureRule base = gauss_legendre(order);
  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < d; ++k) total *= order;

  QuadratureRule rule{Design(total, d), Vector(total)};
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (Eigen::Index q = 0; q < total; ++q) {
    double w = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double half_width = 0.5 * (box.hi[k] - box.lo[k]);
      const double mid = 0.5 * (box.hi[k] + box.lo[k]);
      const int j = idx[static_cast<std::size_t>(k)];
      rule.nodes(q, k) = mid + half_width * base.nodes(j, 0);
      w *= half_width * base.weights[j];
    }
    rule.weights[q] = w;
    // last axis varies fastest
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < order) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return rule;
}

}  // namespace krrinf
