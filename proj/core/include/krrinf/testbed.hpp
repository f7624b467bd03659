#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "krrinf/types.hpp"

namespace krrinf {

/// Density of Beta(a, b) at x; 0 outside [0, 1].
double beta_pdf(double a, double b, double x);

enum class TestFunctionId { f1, f2, f3, f4, f5 };
enum class ExtremumKind { min, max };

TestFunctionId parse_test_function(std::string_view name);
std::string to_string(TestFunctionId id);
std::string to_string(ExtremumKind kind);
ExtremumKind parse_extremum_kind(std::string_view name);

struct Extremum {
  double x_star;
  double f_star;
  ExtremumKind kind;
  double tolerance;
};

/// One-dimensional reference regression functions:
///   f1 = 1.8 [b(10,5) + b(7,7) + b(5,10)]                     on [0, 1]
///   f2 = 2.4 b(30,17) + 2.8 b(4,11)                          on [0, 1]
///   f3 = 1.4 b(15,30) + 8 sin(32 pi x - 4 pi / 3)
///        - 6 cos(16 pi x) - 0.2 cos(64 pi x)                 on [0, 1]
///   f4 = 5 exp(-2 (1 - 2x)^2) (1 - 2x)                        on [0, 1]
///   f5 = sin(8.5 x) + cos(8.5 x) + log(2 + x)                 on [-1, 1]
/// with b(a, b) the Beta(a, b) density.
Box test_function_domain(TestFunctionId id);

/// Throws InvalidArgument when x lies outside the domain.
double eval_test_function(TestFunctionId id, double x);

/// Analytic derivative of order 0, 1 or 2.
double eval_test_function_deriv(TestFunctionId id, int order, double x);

/// Ground-truth extremum bundled with the library (data/extrema.csv).
Extremum registered_extremum(TestFunctionId id);

/// Recomputes the extremum: scan of 2^20 + 1 grid points, then bisection on a
/// central-difference derivative inside the bracketing cells.
Extremum compute_extremum(TestFunctionId id, ExtremumKind kind);

/// Kind registered for each function (max for all five).
ExtremumKind default_extremum_kind(TestFunctionId id);

/// CSV text in the data-file format: id,x_star,f_star,kind,tolerance.
std::string extrema_csv(const std::vector<std::pair<TestFunctionId, Extremum>>& rows);

enum class DesignFamily { iid_uniform, jittered_grid };
enum class NoiseFamily { gaussian, student_t3 };

DesignFamily parse_design_family(std::string_view name);
NoiseFamily parse_noise_family(std::string_view name);
std::string to_string(DesignFamily f);
std::string to_string(NoiseFamily f);

struct DesignSpec {
  DesignFamily family = DesignFamily::iid_uniform;
  Eigen::Index n = 0;
  Box box;
  std::uint64_t seed = 0;
};

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double sigma = 0.0;
};

/// iid_uniform: independent uniform draws in the box.
/// jittered_grid: the box is cut into n cells (ceil(n^(1/d)) slabs along the first
/// axis with balanced point counts, recursively along the others) and each cell
/// holds one point displaced uniformly by at most 0.2 cell widths per axis from
/// its centre.
Design gen_design(const DesignSpec& spec);

/// Zero-mean noise with standard deviation sigma. Student-t3 draws are
/// normal / sqrt(chi2_3 / 3) scaled by sigma / sqrt(3).
Vector gen_noise(const NoiseSpec& spec, Eigen::Index n, std::uint64_t seed);

}  // namespace krrinf
