#include "krrinf/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "krrinf/errors.hpp"
#include "krrinf/functionals.hpp"
#include "krrinf/normal.hpp"
#include "krrinf/optimum.hpp"
#include "krrinf/rng.hpp"

namespace krrinf {

namespace {

constexpr std::uint64_t kPilotStream = ~std::uint64_t{0};

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
// handled exactly once; the first exception is rethrown after joining.
template <class Body>
void parallel_for(int count, int workers, Body&& body) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Dataset simulate_dataset(const Scenario& s, std::uint64_t seed, Vector* noise_out = nullptr) {
  DesignSpec ds{s.design, s.n, test_function_domain(s.function), substream_seed(seed, 0)};
  Dataset data{gen_design(ds), Vector()};
  Vector noise = gen_noise(s.noise, s.n, substream_seed(seed, 1));
  data.Y.resize(s.n);
  for (Eigen::Index i = 0; i < s.n; ++i) {
    data.Y[i] = eval_test_function(s.function, data.X(i, 0)) + noise[i];
  }
  if (noise_out) *noise_out = std::move(noise);
  return data;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string target_name(Target::Kind k) {
  switch (k) {
    case Target::Kind::point: return "point";
    case Target::Kind::deriv: return "deriv";
    case Target::Kind::optimum: return "optimum";
    case Target::Kind::variance_term: return "variance_term";
  }
  return "?";
}

std::string cv_name(KernelChoice::Cv c) {
  switch (c) {
    case KernelChoice::Cv::none: return "none";
    case KernelChoice::Cv::per_replication: return "per_replication";
    case KernelChoice::Cv::pilot: return "pilot";
  }
  return "?";
}

std::string lambda_name(LambdaRule::Kind k) {
  switch (k) {
    case LambdaRule::Kind::fixed: return "fixed";
    case LambdaRule::Kind::per_n: return "per_n";
    case LambdaRule::Kind::log_n_over_n: return "log_n_over_n";
  }
  return "?";
}

ReplicationRecord run_replication(const Scenario& s, int r,
                                  const std::optional<HyperparamChoice>& fixed) {
  ReplicationRecord rec;
  rec.index = r;
  rec.seed = substream_seed(s.base_seed, static_cast<std::uint64_t>(r));
  try {
    Vector noise;
    Dataset data = simulate_dataset(s, rec.seed, &noise);
    const bool maximize = s.target.kind == Target::Kind::optimum &&
                          registered_extremum(s.function).kind == ExtremumKind::max;
    if (maximize) data.Y = -data.Y;

    const HyperparamChoice hp =
        fixed ? *fixed
              : select_hyperparams(data, s.kernel.nu, s.kernel.phi_grid, s.kernel.lambda_multipliers);
    rec.phi = hp.kernel.phi();
    rec.lambda = hp.lambda;
    const KrrFit f = fit(std::move(data), hp.kernel, hp.lambda);
    rec.sigma_hat_sq = f.sigma_hat_sq();
    const double sigma_sq = s.noise.sigma * s.noise.sigma;

    switch (s.target.kind) {
      case Target::Kind::point:
      case Target::Kind::deriv: {
        const int order = s.target.kind == Target::Kind::point ? 0 : s.target.order;
        Vector x0(1);
        x0[0] = s.target.x0;
        const Functional g = order == 0 ? Functional::point(x0)
                                        : Functional::deriv(x0, MultiIndex({order}));
        const BoundFunctional bg = bind(g, f);
        const double value = estimate(f, bg);
        const double var = s.known_sigma ? var_exact(f, sigma_sq, bg) : var_hat(f, bg);
        const FunctionalEstimate ci = confidence_interval(value, var, s.level);
        rec.estimate = value;
        rec.ci_lo = ci.ci_lo;
        rec.ci_hi = ci.ci_hi;
        rec.truth = eval_test_function_deriv(s.function, order, s.target.x0);
        if (var > 0.0) rec.stat = {(value - rec.truth) / std::sqrt(var)};
        break;
      }
      case Target::Kind::variance_term: {
        Vector x0(1);
        x0[0] = s.target.x0;
        const BoundFunctional bg = bind(Functional::point(x0), f);
        const double term = bg.weights.dot(f.factor().solve(noise));
        const double var = s.known_sigma ? var_exact(f, sigma_sq, bg) : var_hat(f, bg);
        const FunctionalEstimate ci = confidence_interval(term, var, s.level);
        rec.estimate = term;
        rec.ci_lo = ci.ci_lo;
        rec.ci_hi = ci.ci_hi;
        rec.truth = 0.0;
        if (var > 0.0) rec.stat = {term / std::sqrt(var)};
        break;
      }
      case Target::Kind::optimum: {
        const Extremum ext = registered_extremum(s.function);
        const OptimumResult res =
            estimate_optimum(f, test_function_domain(s.function), {s.grid_per_axis, s.newton_iters});
        const auto ci = optimum_ci(f, res, s.level);
        rec.estimate = res.x_min[0];
        rec.ci_lo = ci[0].first;
        rec.ci_hi = ci[0].second;
        rec.truth = ext.x_star;
        const double xt[1] = {ext.x_star};
        const Vector stat = standardized_optimum_stat(res, Point(xt, 1));
        rec.stat.assign(stat.data(), stat.data() + stat.size());
        break;
      }
    }
    rec.covered = rec.ci_lo <= rec.truth && rec.truth <= rec.ci_hi;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.covered = false;
    rec.failure = e.what();
  }
  return rec;
}

}  // namespace

double LambdaRule::at(Eigen::Index n) const {
  const double dn = static_cast<double>(n);
  switch (kind) {
    case Kind::fixed: return value;
    case Kind::per_n: return value / dn;
    case Kind::log_n_over_n: return value * std::log(dn) / dn;
  }
  return value;
}

void Scenario::validate() const {
  if (n < 1) throw InvalidArgument("scenario n must be >= 1");
  if (replications < 1) throw InvalidArgument("scenario replications must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("scenario level must lie in (0, 1)");
  if (!(noise.sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  if (!(lambda.value > 0.0)) throw InvalidArgument("lambda value must be > 0");
  if (kernel.cv != KernelChoice::Cv::none &&
      (kernel.phi_grid.empty() || kernel.lambda_multipliers.empty())) {
    throw InvalidArgument("cross-validation grids must be non-empty");
  }
  MaternKernel(kernel.nu, kernel.phi, 1);  // validates nu and phi
  if (target.kind == Target::Kind::deriv && (target.order < 1 || target.order > 2)) {
    throw InvalidArgument("derivative target order must be 1 or 2");
  }
  if (target.kind == Target::Kind::point || target.kind == Target::Kind::deriv ||
      target.kind == Target::Kind::variance_term) {
    const Box dom = test_function_domain(function);
    if (!(target.x0 >= dom.lo[0] && target.x0 <= dom.hi[0])) {
      throw InvalidArgument("target x0 lies outside the test function domain");
    }
  }
  if (grid_per_axis < 16) throw InvalidArgument("grid_per_axis must be >= 16");
}

std::string Scenario::canonical() const {
  std::ostringstream os;
  os << "function=" << to_string(function) << ";design=" << to_string(design)
     << ";noise=" << to_string(noise.family) << ";sigma=" << format_double(noise.sigma)
     << ";n=" << n << ";replications=" << replications << ";lambda=" << lambda_name(lambda.kind)
     << ':' << format_double(lambda.value) << ";cv=" << cv_name(kernel.cv)
     << ";nu=" << format_double(kernel.nu) << ";phi=" << format_double(kernel.phi) << ";phi_grid=";
  for (double v : kernel.phi_grid) os << format_double(v) << ' ';
  os << ";lambda_multipliers=";
  for (double v : kernel.lambda_multipliers) os << format_double(v) << ' ';
  os << ";target=" << target_name(target.kind) << ":x0=" << format_double(target.x0)
     << ":order=" << target.order << ";level=" << format_double(level) << ";seed=" << base_seed
     << ";known_sigma=" << known_sigma << ";grid=" << grid_per_axis << ";newton=" << newton_iters;
  return os.str();
}

std::string Scenario::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HyperparamChoice scenario_hyperparams(const Scenario& s) {
  switch (s.kernel.cv) {
    case KernelChoice::Cv::none:
      return HyperparamChoice{MaternKernel(s.kernel.nu, s.kernel.phi, 1), s.lambda.at(s.n),
                              std::numeric_limits<double>::quiet_NaN()};
    case KernelChoice::Cv::pilot: {
      Dataset pilot = simulate_dataset(s, substream_seed(s.base_seed, kPilotStream));
      if (s.target.kind == Target::Kind::optimum &&
          registered_extremum(s.function).kind == ExtremumKind::max) {
        pilot.Y = -pilot.Y;
      }
      return select_hyperparams(pilot, s.kernel.nu, s.kernel.phi_grid, s.kernel.lambda_multipliers);
    }
    case KernelChoice::Cv::per_replication:
      break;
  }
  throw InvalidArgument("per-replication cross-validation has no scenario-wide hyperparameters");
}

std::vector<ReplicationRecord> run_scenario(const Scenario& s, int workers) {
  s.validate();
  std::optional<HyperparamChoice> fixed;
  if (s.kernel.cv != KernelChoice::Cv::per_replication) fixed = scenario_hyperparams(s);
  std::vector<ReplicationRecord> records(static_cast<std::size_t>(s.replications));
  parallel_for(s.replications, workers, [&](int r) {
    records[static_cast<std::size_t>(r)] = run_replication(s, r, fixed);
  });
  return records;
}

CoverageSummary coverage(const std::vector<ReplicationRecord>& records) {
  if (records.empty()) throw InvalidArgument("coverage of an empty record set");
  std::size_t used = 0;
  std::size_t hits = 0;
  double width = 0.0;
  for (const auto& r : records) {
    if (!r.ok) continue;
    ++used;
    hits += r.covered ? 1 : 0;
    width += r.ci_hi - r.ci_lo;
  }
  if (used == 0) throw InvalidArgument("every replication failed; coverage is undefined");
  const std::size_t failed = records.size() - used;
  return CoverageSummary{double(hits) / double(used), width / double(used), used, failed,
                         double(failed) / double(records.size())};
}

double mean_ci_width(const std::vector<ReplicationRecord>& records) {
  return coverage(records).mean_width;
}

std::vector<std::pair<double, double>> qq_data(std::vector<double> sample) {
  if (sample.size() < 20) throw InvalidArgument("Q-Q data needs at least 20 values");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out.emplace_back(normal_quantile((double(i) + 0.5) / N), sample[i]);
  }
  return out;
}

double ks_statistic(std::vector<double> sample) {
  if (sample.size() < 20) throw InvalidArgument("KS statistic needs at least 20 values");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = normal_cdf(sample[i]);
    d = std::max({d, (double(i) + 1.0) / N - F, F - double(i) / N});
  }
  return d;
}

RateFit rate_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("rate_fit: xs and ys differ in length");
  if (xs.size() < 3) throw InvalidArgument("rate_fit needs at least 3 points");
  const std::size_t m = xs.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidArgument("rate_fit needs positive inputs");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= double(m);
  my /= double(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("rate_fit needs at least two distinct x values");
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return RateFit{slope, my - slope * mx, r2};
}

double uniform_error(const KrrFit& fit, const std::function<double(Point)>& truth,
                     const MultiIndex& alpha, const Box& box, int grid_per_axis) {
  const int d = fit.data().dim();
  if (box.dim() != d) throw InvalidArgument("uniform_error: box dimension mismatch");
  if (d == 1 && grid_per_axis < 512) throw InvalidArgument("uniform_error needs >= 512 grid points");
  if (grid_per_axis < 2) throw InvalidArgument("uniform_error needs >= 2 grid points per axis");
  Eigen::Index total = 1;
  for (int k = 0; k < d; ++k) total *= grid_per_axis;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vector x(d);
  double worst = 0.0;
  for (Eigen::Index q = 0; q < total; ++q) {
    for (int k = 0; k < d; ++k) {
      x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * idx[static_cast<std::size_t>(k)] /
                             double(grid_per_axis - 1);
    }
    const double err = std::abs(predict_deriv(fit, alpha, as_point(x)) - truth(as_point(x)));
    worst = std::max(worst, err);
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < grid_per_axis) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return worst;
}

std::vector<double> log_space(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > 0.0) || count < 2) throw InvalidArgument("log_space: bad range");
  std::vector<double> v(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

RateTable variance_vs_lambda(Eigen::Index n, DesignFamily design, const MaternKernel& kernel,
                             double x0, const std::vector<double>& lambdas, std::uint64_t seed) {
  Box box{Vector::Zero(1), Vector::Ones(1)};
  const Design X = gen_design({design, n, box, seed});
  const Matrix K = gram(kernel, X);
  Vector p(1);
  p[0] = x0;
  const Vector w = point_weights(kernel, as_point(p), X);
  RateTable t{"lambda", "var_over_sigma_sq", lambdas, {}, {}};
  for (double lambda : lambdas) {
    const SpdFactor factor = SpdFactor::factor(regularized_gram(K, lambda));
    t.ys.push_back(factor.quad_form_inv_sq(w));
  }
  t.fit = rate_fit(t.xs, t.ys);
  return t;
}

RateTable worst_case_bias_vs_lambda(Eigen::Index n, DesignFamily design, const MaternKernel& kernel,
                                    double x0, const std::vector<double>& lambdas,
                                    std::uint64_t seed) {
  Box box{Vector::Zero(1), Vector::Ones(1)};
  const Design X = gen_design({design, n, box, seed});
  const Matrix K = gram(kernel, X);
  Vector p(1);
  p[0] = x0;
  const Functional g = Functional::point(p);
  RateTable t{"lambda", "worst_case_bias", lambdas, {}, {}};
  for (double lambda : lambdas) t.ys.push_back(worst_case_bias(X, kernel, K, lambda, g));
  t.fit = rate_fit(t.xs, t.ys);
  return t;
}

RateTable uniform_error_vs_n(TestFunctionId function, const NoiseSpec& noise,
                             const MaternKernel& kernel, const LambdaRule& lambda,
                             const std::vector<Eigen::Index>& ns, int reps, int order,
                             int grid_per_axis, std::uint64_t seed, int workers) {
  if (reps < 1) throw InvalidArgument("uniform_error_vs_n needs reps >= 1");
  const Box box = test_function_domain(function);
  RateTable t{"n", "median_uniform_error", {}, {}, {}};
  for (Eigen::Index n : ns) {
    std::vector<double> errs(static_cast<std::size_t>(reps));
    const std::uint64_t nseed = substream_seed(seed, static_cast<std::uint64_t>(n));
    parallel_for(reps, workers, [&](int r) {
      const std::uint64_t rs = substream_seed(nseed, static_cast<std::uint64_t>(r));
      Dataset data{gen_design({DesignFamily::iid_uniform, n, box, substream_seed(rs, 0)}), Vector()};
      const Vector e = gen_noise(noise, n, substream_seed(rs, 1));
      data.Y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) data.Y[i] = eval_test_function(function, data.X(i, 0)) + e[i];
      const KrrFit f = fit(std::move(data), kernel, lambda.at(n));
      errs[static_cast<std::size_t>(r)] = uniform_error(
          f, [&](Point x) { return eval_test_function_deriv(function, order, x[0]); },
          MultiIndex({order}), box, grid_per_axis);
    });
    t.xs.push_back(static_cast<double>(n));
    t.ys.push_back(median(errs));
  }
  t.fit = rate_fit(t.xs, t.ys);
  return t;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string coverage_csv(const Scenario& s, const std::vector<ReplicationRecord>& records) {
  const CoverageSummary c = coverage(records);
  std::ostringstream os;
  os << "scenario_hash,function,n,sigma,noise,target,replications,cp,mean_width,failure_rate\n";
  os << s.hash() << ',' << to_string(s.function) << ',' << s.n << ',' << format_double(s.noise.sigma)
     << ',' << to_string(s.noise.family) << ',' << target_name(s.target.kind) << ','
     << records.size() << ',' << format_double(c.cp) << ',' << format_double(c.mean_width) << ','
     << format_double(c.failure_rate) << '\n';
  return os.str();
}

std::string records_csv(const std::vector<ReplicationRecord>& records) {
  std::ostringstream os;
  os << "index,seed,ok,estimate,ci_lo,ci_hi,truth,covered,phi,lambda,sigma_hat_sq,stat,failure\n";
  for (const auto& r : records) {
    os << r.index << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << format_double(r.estimate) << ','
       << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << ',' << format_double(r.truth)
       << ',' << (r.covered ? 1 : 0) << ',' << format_double(r.phi) << ','
       << format_double(r.lambda) << ',' << format_double(r.sigma_hat_sq) << ',';
    for (std::size_t k = 0; k < r.stat.size(); ++k) os << (k ? ";" : "") << format_double(r.stat[k]);
    os << ',' << sanitize(r.failure) << '\n';
  }
  return os.str();
}

std::string qq_csv(const std::vector<std::pair<double, double>>& points, double ks) {
  std::ostringstream os;
  os << "# ks=" << format_double(ks) << " n=" << points.size() << '\n';
  os << "theoretical,empirical\n";
  for (const auto& [t, e] : points) os << format_double(t) << ',' << format_double(e) << '\n';
  return os.str();
}

std::string rate_csv(const RateTable& table) {
  std::ostringstream os;
  os << "# x=" << table.x_name << " y=" << table.y_name << '\n';
  os << "x,y,fitted_slope,intercept,r2\n";
  for (std::size_t i = 0; i < table.xs.size(); ++i) {
    os << format_double(table.xs[i]) << ',' << format_double(table.ys[i]) << ','
       << format_double(table.fit.slope) << ',' << format_double(table.fit.intercept) << ','
       << format_double(table.fit.r2) << '\n';
  }
  return os.str();
}

}  // namespace krrinf
