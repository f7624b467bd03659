#pragma once

#include "krrinf/types.hpp"

namespace krrinf {

struct QuadratureRule {
  Design nodes;   // one node per row
  Vector weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
QuadratureRule gauss_legendre(int order);

/// Tensor-product Gauss-Legendre rule with `order` nodes per axis mapped onto `box`.
QuadratureRule tensor_gauss_legendre(const Box& box, int order);

}  // namespace krrinf
