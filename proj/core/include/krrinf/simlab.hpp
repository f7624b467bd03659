#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "krrinf/kernels.hpp"
#include "krrinf/krr.hpp"
#include "krrinf/testbed.hpp"

namespace krrinf {

/// lambda as a function of n: fixed value, c / n, or c log(n) / n.
struct LambdaRule {
  enum class Kind { fixed, per_n, log_n_over_n };
  Kind kind = Kind::per_n;
  double value = 1.0;

  double at(Eigen::Index n) const;
};

/// Kernel and smoothing-parameter choice for each replication.
///   none:            Matern(nu, phi) with the scenario's lambda rule
///   per_replication: LOOCV grid search on every replicated dataset
///   pilot:           LOOCV grid search once, on an independent pilot dataset
struct KernelChoice {
  enum class Cv { none, per_replication, pilot };
  Cv cv = Cv::none;
  double nu = 3.0;
  double phi = 1.0;
  std::vector<double> phi_grid = kDefaultPhiGrid;
  std::vector<double> lambda_multipliers = kDefaultLambdaMultipliers;
};

/// What each replication estimates.
///   point / deriv:   f(x0) or f^(order)(x0) with the plug-in interval
///   optimum:         location of the registered extremum with the sandwich interval
///   variance_term:   g^T (K + lambda n I)^-1 E standardised by its exact variance
struct Target {
  enum class Kind { point, deriv, optimum, variance_term };
  Kind kind = Kind::optimum;
  double x0 = 0.5;
  int order = 1;
};

struct Scenario {
  TestFunctionId function = TestFunctionId::f1;
  DesignFamily design = DesignFamily::iid_uniform;
  NoiseSpec noise{NoiseFamily::gaussian, 0.5};
  Eigen::Index n = 100;
  int replications = 800;
  LambdaRule lambda;
  KernelChoice kernel;
  Target target;
  double level = 0.95;
  std::uint64_t base_seed = 1;
  /// Use the true sigma^2 in the variance instead of sigma_hat^2.
  bool known_sigma = false;
  int grid_per_axis = 512;
  int newton_iters = 20;

  void validate() const;
  /// Canonical one-line description; its FNV-1a hash identifies the scenario.
  std::string canonical() const;
  std::string hash() const;
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double truth = 0.0;
  bool covered = false;
  std::vector<double> stat;
  double phi = 0.0;
  double lambda = 0.0;
  double sigma_hat_sq = 0.0;
};

/// Hyperparameters used by every replication when cv is none or pilot.
HyperparamChoice scenario_hyperparams(const Scenario& s);

/// Runs all replications; replication r draws from substream_seed(base_seed, r),
/// so the output does not depend on `workers`. Failures become flagged records.
std::vector<ReplicationRecord> run_scenario(const Scenario& s, int workers = 1);

struct CoverageSummary {
  double cp;
  double mean_width;
  std::size_t used;
  std::size_t failed;
  double failure_rate;
};

/// Throws InvalidArgument when no replication succeeded.
CoverageSummary coverage(const std::vector<ReplicationRecord>& records);
double mean_ci_width(const std::vector<ReplicationRecord>& records);

/// (Phi^-1((i - 0.5) / N), x_(i)) for the sorted sample; N >= 20.
std::vector<std::pair<double, double>> qq_data(std::vector<double> sample);

/// sup_x |F_N(x) - Phi(x)| against the standard normal; N >= 20.
double ks_statistic(std::vector<double> sample);

struct RateFit {
  double slope;
  double intercept;
  double r2;
};

/// Least squares of log y on log x; >= 3 points, all positive.
RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys);

/// max over a grid on `box` of |D^alpha f_hat - D^alpha f|; `truth` returns D^alpha f.
double uniform_error(const KrrFit& fit, const std::function<double(Point)>& truth,
                     const MultiIndex& alpha, const Box& box, int grid_per_axis);

struct RateTable {
  std::string x_name;
  std::string y_name;
  std::vector<double> xs;
  std::vector<double> ys;
  RateFit fit;
};

/// VAR / sigma^2 of the point evaluation at x0 as lambda varies, one fixed design.
RateTable variance_vs_lambda(Eigen::Index n, DesignFamily design, const MaternKernel& kernel,
                             double x0, const std::vector<double>& lambdas, std::uint64_t seed);

/// ||g_hat - g||_H for the point evaluation at x0 as lambda varies, one fixed design.
RateTable worst_case_bias_vs_lambda(Eigen::Index n, DesignFamily design, const MaternKernel& kernel,
                                    double x0, const std::vector<double>& lambdas,
                                    std::uint64_t seed);

/// Median over `reps` of the sup-norm error of D^order f_hat on a uniform grid.
RateTable uniform_error_vs_n(TestFunctionId function, const NoiseSpec& noise,
                             const MaternKernel& kernel, const LambdaRule& lambda,
                             const std::vector<Eigen::Index>& ns, int reps, int order,
                             int grid_per_axis, std::uint64_t seed, int workers = 1);

/// log-spaced values from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, int count);

// CSV emitters: mandatory header, shortest round-trip decimals.
std::string format_double(double v);
std::string coverage_csv(const Scenario& s, const std::vector<ReplicationRecord>& records);
std::string records_csv(const std::vector<ReplicationRecord>& records);
std::string qq_csv(const std::vector<std::pair<double, double>>& points, double ks);
std::string rate_csv(const RateTable& table);

}  // namespace krrinf
