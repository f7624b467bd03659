#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include <krrinf/errors.hpp>
#include <krrinf/normal.hpp>
#include <krrinf/rng.hpp>

using namespace krrinf;

namespace {

// Straight transcription of the published xoshiro256** reference.
struct ReferenceXoshiro {
  std::uint64_t s[4];
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

// Oracle for the standard-normal quantile: bisection on erfc to machine precision.
double quantile_oracle(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double c = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (c < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("SplitMix64 reference outputs") {
  std::uint64_t state = 1234567;
  const std::uint64_t expect[] = {6457827717110365317ULL, 3203168211198807973ULL, 9817491932198370423ULL,
                                  4593380528125082431ULL, 16408922859458223821ULL};
  for (std::uint64_t e : expect) CHECK(splitmix64(state) == e);
}

TEST_CASE("xoshiro256** matches the reference transcription") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    std::uint64_t sm = seed;
    ReferenceXoshiro ref{{splitmix64(sm), splitmix64(sm), splitmix64(sm), splitmix64(sm)}};
    Rng rng(seed);
    for (int i = 0; i < 1000; ++i) CHECK(rng.next() == ref.next());
  }
}

TEST_CASE("uniform draws") {
  Rng rng(7);
  double s1 = 0.0, s2 = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    const double v = rng.uniform_open();
    CHECK_UNARY(v > 0.0 && v < 1.0);
    s1 += u;
    s2 += u * u;
  }
  CHECK(std::abs(s1 / n - 0.5) < 2e-3);
  CHECK(std::abs(s2 / n - s1 * s1 / n / n - 1.0 / 12) < 2e-3);
}

TEST_CASE("normal draws") {
  Rng a(11), b(11);
  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    const double z = a.normal();
    CHECK(z == b.normal());
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
    below += z < 1.0;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.01);
  CHECK(std::abs(s4 / n - 3.0) < 0.05);
  CHECK(std::abs(double(below) / n - normal_cdf(1.0)) < 2e-3);
}

TEST_CASE("substreams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL, 2ULL}) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(substream_seed(base, i));
  }
  CHECK(seen.size() == 3000);
  CHECK(substream_seed(5, 9) == substream_seed(5, 9));
  CHECK(substream_seed(5, 9) != substream_seed(9, 5));
}

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(two_sided_z(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(two_sided_z(0.9) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  for (double p : {1e-12, 1e-8, 1e-4, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999, 1 - 1e-8}) {
    CHECK(std::abs(normal_quantile(p) - quantile_oracle(p)) < 1e-8);
  }
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-12);
  }
  CHECK(normal_quantile(0.0) == -std::numeric_limits<double>::infinity());
  CHECK(normal_quantile(1.0) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(normal_quantile(1.5), InvalidArgument);
  CHECK_THROWS_AS(two_sided_z(-0.1), InvalidArgument);
}
