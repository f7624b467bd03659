#pragma once

namespace krrinf::bessel {

/// Modified Bessel function of the second kind, orders 0 and 1, for z > 0.
/// Power series for z <= 2, Steed's continued fraction (CF2) above.
double k0(double z);
double k1(double z);

/// K_n(z) for integer n >= 0 by upward recurrence from K_0, K_1.
double k_int(int n, double z);

/// K_{n+1/2}(z) from the terminating closed form, n >= 0.
double k_half(int n, double z);

}  // namespace krrinf::bessel
