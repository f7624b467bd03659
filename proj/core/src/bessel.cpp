#include "krrinf/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "krrinf/errors.hpp"

namespace krrinf::bessel {

namespace {

constexpr double kEps = 1e-17;
constexpr int kMaxIter = 500;

struct Pair {
  double k0;
  double k1;
};

Pair series(double z) {
  const double t = 0.25 * z * z;
  const double log_half = std::log(0.5 * z);
  constexpr double gamma = std::numbers::egamma;

  // I0, I1 and the harmonic-number sums share the same t^k / (k!)^2 structure.
  double term0 = 1.0;  // t^k / (k!)^2
  double term1 = 1.0;  // t^k / (k! (k+1)!)
  double harmonic = 0.0;
  double i0 = 1.0;
  double i1 = 1.0;
  double k0_tail = 0.0;
  double k1_tail = 1.0 - 2.0 * gamma;  // psi(1) + psi(2)
  for (int k = 1; k < kMaxIter; ++k) {
    term0 *= t / (double(k) * k);
    term1 *= t / (double(k) * (k + 1));
    harmonic += 1.0 / k;
    i0 += term0;
    i1 += term1;
    k0_tail += harmonic * term0;
    const double psi_sum = -2.0 * gamma + 2.0 * harmonic + 1.0 / (k + 1);
    k1_tail += psi_sum * term1;
    if (term0 < kEps * i0 && term1 < kEps * i1) break;
  }
  i1 *= 0.5 * z;
  const double k0 = -(log_half + gamma) * i0 + k0_tail;
  const double k1 = 1.0 / z + log_half * i1 - 0.25 * z * k1_tail;
  return {k0, k1};
}

// Steed's method for the second continued fraction with Temme's normalisation,
// specialised to order 0; returns K_0 and K_1.
Pair continued_fraction(double z) {
  const double a1 = 0.25;
  double b = 2.0 * (1.0 + z);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < kMaxIter; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-16) break;
  }
  h *= a1;
  const double k0 = std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z) / s;
  const double k1 = k0 * (z + 0.5 - h) / z;
  return {k0, k1};
}

Pair k01(double z) {
  if (!(z > 0.0)) throw InvalidArgument("bessel K requires z > 0");
  if (z > 745.0) return {0.0, 0.0};
  return z <= 2.0 ? series(z) : continued_fraction(z);
}

}  // namespace

double k0(double z) { return k01(z).k0; }

double k1(double z) { return k01(z).k1; }

double k_int(int n, double z) {
  if (n < 0) n = -n;
  const auto [km, kn] = k01(z);
  if (n == 0) return km;
  double prev = km;
  double cur = kn;
  for (int j = 1; j < n; ++j) {
    const double next = prev + (2.0 * j / z) * cur;
    prev = cur;
    cur = next;
  }
  return cur;
}

double k_half(int n, double z) {
  if (n < 0) throw InvalidArgument("k_half requires n >= 0");
  if (!(z > 0.0)) throw InvalidArgument("bessel K requires z > 0");
  // (n+k)! / (k! (n-k)!) (2z)^-k, accumulated by the term ratio.
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < n; ++k) {
    term *= double(n + k + 1) * double(n - k) / double(k + 1) / (2.0 * z);
    sum += term;
  }
  return std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z) * sum;
}

}  // namespace krrinf::bessel
