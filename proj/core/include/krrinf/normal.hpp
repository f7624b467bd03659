#pragma once

namespace krrinf {

double normal_cdf(double x);

/// Standard-normal quantile: Acklam's rational approximation followed by one
/// Halley step against erfc, absolute error well below 1e-8 on (0, 1).
double normal_quantile(double p);

/// Upper alpha/2 quantile z for a two-sided interval at the given level in (0, 1).
double two_sided_z(double level);

}  // namespace krrinf
