#include "krrinf/testbed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "extrema_data.hpp"
#include "krrinf/errors.hpp"
#include "krrinf/rng.hpp"

namespace krrinf {

namespace {

constexpr double kPi = std::numbers::pi;

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// x^p (1-x)^q with the convention that a zero coefficient kills the term.
double mono(double coeff, double x, double p, double q) {
  if (coeff == 0.0) return 0.0;
  return coeff * std::pow(x, p) * std::pow(1.0 - x, q);
}

double beta_deriv(double a, double b, int order, double x) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (order == 0) return beta_pdf(a, b, x);
  const double c = std::exp(-log_beta(a, b));
  if (order == 1) {
    return c * (mono(a - 1.0, x, a - 2.0, b - 1.0) - mono(b - 1.0, x, a - 1.0, b - 2.0));
  }
  return c * (mono((a - 1.0) * (a - 2.0), x, a - 3.0, b - 1.0) -
              mono(2.0 * (a - 1.0) * (b - 1.0), x, a - 2.0, b - 2.0) +
              mono((b - 1.0) * (b - 2.0), x, a - 1.0, b - 3.0));
}

double f3_trig(int order, double x) {
  const double w1 = 32.0 * kPi;
  const double w2 = 16.0 * kPi;
  const double w3 = 64.0 * kPi;
  const double t1 = w1 * x - 4.0 * kPi / 3.0;
  switch (order) {
    case 0:
      return 8.0 * std::sin(t1) - 6.0 * std::cos(w2 * x) - 0.2 * std::cos(w3 * x);
    case 1:
      return 8.0 * w1 * std::cos(t1) + 6.0 * w2 * std::sin(w2 * x) + 0.2 * w3 * std::sin(w3 * x);
    default:
      return -8.0 * w1 * w1 * std::sin(t1) + 6.0 * w2 * w2 * std::cos(w2 * x) +
             0.2 * w3 * w3 * std::cos(w3 * x);
  }
}

double f4_deriv(int order, double x) {
  const double u = 1.0 - 2.0 * x;
  const double e = 5.0 * std::exp(-2.0 * u * u);
  switch (order) {
    case 0: return e * u;
    case 1: return -2.0 * e * (1.0 - 4.0 * u * u);
    default: return 4.0 * e * (16.0 * u * u * u - 12.0 * u);
  }
}

double f5_deriv(int order, double x) {
  const double w = 8.5;
  switch (order) {
    case 0: return std::sin(w * x) + std::cos(w * x) + std::log(2.0 + x);
    case 1: return w * (std::cos(w * x) - std::sin(w * x)) + 1.0 / (2.0 + x);
    default: return -w * w * (std::sin(w * x) + std::cos(w * x)) - 1.0 / ((2.0 + x) * (2.0 + x));
  }
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("malformed number in extrema data: " + std::string(s));
  }
  return v;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

double beta_pdf(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta_pdf requires a, b > 0");
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x > 0.0 && x < 1.0) {
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
  }
  return std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0) * std::exp(-log_beta(a, b));
}

TestFunctionId parse_test_function(std::string_view name) {
  if (name == "f1") return TestFunctionId::f1;
  if (name == "f2") return TestFunctionId::f2;
  if (name == "f3") return TestFunctionId::f3;
  if (name == "f4") return TestFunctionId::f4;
  if (name == "f5") return TestFunctionId::f5;
  throw InvalidArgument("unknown test function '" + std::string(name) + "'");
}

std::string to_string(TestFunctionId id) {
  return "f" + std::to_string(static_cast<int>(id) + 1);
}

std::string to_string(ExtremumKind kind) { return kind == ExtremumKind::min ? "min" : "max"; }

ExtremumKind parse_extremum_kind(std::string_view name) {
  if (name == "min") return ExtremumKind::min;
  if (name == "max") return ExtremumKind::max;
  throw InvalidArgument("unknown extremum kind '" + std::string(name) + "'");
}

Box test_function_domain(TestFunctionId id) {
  Box box{Vector(1), Vector(1)};
  box.lo[0] = id == TestFunctionId::f5 ? -1.0 : 0.0;
  box.hi[0] = 1.0;
  return box;
}

double eval_test_function_deriv(TestFunctionId id, int order, double x) {
  if (order < 0 || order > 2) throw InvalidArgument("test function derivative order must be <= 2");
  const Box dom = test_function_domain(id);
  if (!(x >= dom.lo[0] && x <= dom.hi[0])) {
    throw InvalidArgument(to_string(id) + ": x outside the domain");
  }
  switch (id) {
    case TestFunctionId::f1:
      return 1.8 * (beta_deriv(10, 5, order, x) + beta_deriv(7, 7, order, x) +
                    beta_deriv(5, 10, order, x));
    case TestFunctionId::f2:
      return 2.4 * beta_deriv(30, 17, order, x) + 2.8 * beta_deriv(4, 11, order, x);
    case TestFunctionId::f3:
      return 1.4 * beta_deriv(15, 30, order, x) + f3_trig(order, x);
    case TestFunctionId::f4:
      return f4_deriv(order, x);
    case TestFunctionId::f5:
      return f5_deriv(order, x);
  }
  throw InvalidArgument("unknown test function");
}

double eval_test_function(TestFunctionId id, double x) { return eval_test_function_deriv(id, 0, x); }

ExtremumKind default_extremum_kind(TestFunctionId) {
  // Every test function has a unique interior global maximum; the minima of f1,
  // f2, f4 and f5 sit on the boundary and those of f3 are near-ties.
  return ExtremumKind::max;
}

Extremum compute_extremum(TestFunctionId id, ExtremumKind kind) {
  const Box dom = test_function_domain(id);
  const double lo = dom.lo[0];
  const double hi = dom.hi[0];
  const double sign = kind == ExtremumKind::min ? 1.0 : -1.0;
  const auto target = [&](double x) { return sign * eval_test_function(id, x); };

  constexpr long kCells = 1L << 20;
  const double step = (hi - lo) / kCells;
  long best_i = 0;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= kCells; ++i) {
    const double v = target(lo + step * i);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i == 0 || best_i == kCells) {
    throw NumericalError(to_string(id) + ": extremum lies on the domain boundary");
  }

  // Fourth-order central difference of the target.
  const double h = 1e-4 * (hi - lo);
  const auto slope = [&](double x) {
    return (8.0 * (target(x + h) - target(x - h)) - (target(x + 2 * h) - target(x - 2 * h))) /
           (12.0 * h);
  };
  double a = lo + step * (best_i - 1);
  double b = lo + step * (best_i + 1);
  if (!(slope(a) < 0.0 && slope(b) > 0.0)) {
    throw NumericalError(to_string(id) + ": derivative does not change sign around the scan optimum");
  }
  for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon(); ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    (slope(m) < 0.0 ? a : b) = m;
  }
  const double x_star = 0.5 * (a + b);
  const double curvature = std::abs(eval_test_function_deriv(id, 2, x_star));
  const double f_star = eval_test_function(id, x_star);
  const double roundoff = 2.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f_star)) / h;
  const double tolerance = std::max(b - a, roundoff / std::max(curvature, 1e-300));
  return Extremum{x_star, f_star, kind, tolerance};
}

std::string extrema_csv(const std::vector<std::pair<TestFunctionId, Extremum>>& rows) {
  std::ostringstream os;
  os << "# Reference extrema of the test functions: scan of 2^20+1 grid points followed by\n"
        "# bisection on a fourth-order central-difference derivative. Regenerate with\n"
        "# `krrinf extrema --out data`.\n";
  os << "id,x_star,f_star,kind,tolerance\n";
  for (const auto& [id, e] : rows) {
    os << to_string(id) << ',' << shortest(e.x_star) << ',' << shortest(e.f_star) << ','
       << to_string(e.kind) << ',' << shortest(e.tolerance) << '\n';
  }
  return os.str();
}

Extremum registered_extremum(TestFunctionId id) {
  std::istringstream in{std::string(detail::kExtremaCsv)};
  std::string line;
  const std::string key = to_string(id);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 5) throw InvalidArgument("malformed extrema data row: " + line);
    if (cols[0] != key) continue;
    return Extremum{parse_double(cols[1]), parse_double(cols[2]), parse_extremum_kind(cols[3]),
                    parse_double(cols[4])};
  }
  throw InvalidArgument("no registered extremum for " + key);
}

DesignFamily parse_design_family(std::string_view name) {
  if (name == "iid_uniform") return DesignFamily::iid_uniform;
  if (name == "jittered_grid") return DesignFamily::jittered_grid;
  throw InvalidArgument("unknown design family '" + std::string(name) + "'");
}

NoiseFamily parse_noise_family(std::string_view name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "student_t3") return NoiseFamily::student_t3;
  throw InvalidArgument("unknown noise family '" + std::string(name) + "'");
}

std::string to_string(DesignFamily f) {
  return f == DesignFamily::iid_uniform ? "iid_uniform" : "jittered_grid";
}

std::string to_string(NoiseFamily f) { return f == NoiseFamily::gaussian ? "gaussian" : "student_t3"; }

Design gen_design(const DesignSpec& spec) {
  if (spec.n < 1) throw InvalidArgument("design size n must be >= 1");
  const Eigen::Index d = spec.box.dim();
  if (d < 1 || spec.box.hi.size() != d) throw InvalidArgument("design box is malformed");
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!(spec.box.hi[k] > spec.box.lo[k])) throw InvalidArgument("design box needs hi > lo");
  }
  Rng rng(spec.seed);
  Design X(spec.n, d);
  const Vector width = spec.box.hi - spec.box.lo;

  if (spec.family == DesignFamily::iid_uniform) {
    for (Eigen::Index i = 0; i < spec.n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) X(i, k) = spec.box.lo[k] + width[k] * rng.uniform();
    }
    return X;
  }

  // Balanced slabs: split the points into k = ceil(m^(1/r)) slabs along the
  // current axis with counts differing by at most one, then recurse on the
  // remaining r - 1 axes inside each slab. Every cell is occupied.
  std::vector<std::pair<Vector, Vector>> cells;
  cells.reserve(static_cast<std::size_t>(spec.n));
  Vector lo = Vector::Zero(d);
  Vector hi = Vector::Ones(d);
  auto split = [&](auto&& self, Eigen::Index count, Eigen::Index axis) -> void {
    const Eigen::Index remaining = d - axis;
    Eigen::Index k = 1;
    while (true) {
      Eigen::Index t = 1;
      for (Eigen::Index j = 0; j < remaining && t < count; ++j) t *= k;
      if (t >= count) break;
      ++k;
    }
    if (remaining == 1) k = count;
    const double a = lo[axis];
    const double b = hi[axis];
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index c = (j + 1) * count / k - j * count / k;
      lo[axis] = a + (b - a) * double(j) / double(k);
      hi[axis] = a + (b - a) * double(j + 1) / double(k);
      if (remaining == 1) {
        cells.emplace_back(lo, hi);
      } else {
        self(self, c, axis + 1);
      }
    }
    lo[axis] = a;
    hi[axis] = b;
  };
  split(split, spec.n, 0);

  for (Eigen::Index i = 0; i < spec.n; ++i) {
    const auto& [clo, chi] = cells[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < d; ++k) {
      const double jitter = 0.4 * (rng.uniform() - 0.5);
      const double t = 0.5 * (clo[k] + chi[k]) + jitter * (chi[k] - clo[k]);
      X(i, k) = spec.box.lo[k] + width[k] * t;
    }
  }
  return X;
}

Vector gen_noise(const NoiseSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  Vector e = Vector::Zero(n);
  if (spec.sigma == 0.0) return e;
  Rng rng(seed);
  if (spec.family == NoiseFamily::gaussian) {
    for (Eigen::Index i = 0; i < n; ++i) e[i] = spec.sigma * rng.normal();
    return e;
  }
  const double scale = spec.sigma / std::sqrt(3.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = rng.normal();
    double chi2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double g = rng.normal();
      chi2 += g * g;
    }
    e[i] = scale * z / std::sqrt(chi2 / 3.0);
  }
  return e;
}

}  // namespace krrinf
