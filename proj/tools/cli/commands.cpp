#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include <krrinf/errors.hpp>
#include <krrinf/functionals.hpp>
#include <krrinf/optimum.hpp>

#include "cli_errors.hpp"
#include "csv_input.hpp"
#include "model_cache.hpp"
#include "schema.hpp"

namespace krrinf::cli {

using nlohmann::json;

namespace fs = std::filesystem;

namespace {

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj[key].get<T>() : fallback;
}

Vector to_vector(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

Box parse_box(const json& b, const std::string& ptr, Eigen::Index dim) {
  Box box{to_vector(b["lo"]), to_vector(b["hi"])};
  if (box.lo.size() != dim || box.hi.size() != dim) {
    throw ConfigError(ptr + ": box must have " + std::to_string(dim) + " coordinates per corner");
  }
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (!(box.lo[k] < box.hi[k])) throw ConfigError(ptr + ": box needs lo < hi in every coordinate");
  }
  return box;
}

LambdaRule parse_lambda(const json& block) {
  LambdaRule rule;
  const std::string r = block["rule"].get<std::string>();
  rule.kind = r == "fixed"  ? LambdaRule::Kind::fixed
              : r == "per_n" ? LambdaRule::Kind::per_n
                             : LambdaRule::Kind::log_n_over_n;
  rule.value = block["value"].get<double>();
  return rule;
}

struct FitSpec {
  double nu = 3.0;
  double phi = 1.0;
  bool cv = false;
  std::vector<double> phi_grid = kDefaultPhiGrid;
  std::vector<double> lambda_multipliers = kDefaultLambdaMultipliers;
  LambdaRule lambda{LambdaRule::Kind::per_n, 1.0};
};

FitSpec parse_fit_spec(const json& doc) {
  FitSpec spec;
  if (doc.contains("kernel")) {
    const json& k = doc["kernel"];
    spec.nu = get_or(k, "nu", spec.nu);
    spec.phi = get_or(k, "phi", spec.phi);
    const std::string cv = get_or<std::string>(k, "cv", "none");
    if (cv != "none" && cv != "loocv") {
      throw ConfigError("/kernel/cv: '" + cv + "' applies to scenarios; use 'none' or 'loocv' here");
    }
    spec.cv = cv == "loocv";
    spec.phi_grid = get_or(k, "phi_grid", spec.phi_grid);
    spec.lambda_multipliers = get_or(k, "lambda_multipliers", spec.lambda_multipliers);
  }
  if (doc.contains("lambda")) spec.lambda = parse_lambda(doc["lambda"]);
  return spec;
}

struct FitOutcome {
  KrrFit fit;
  double loocv;
};

FitOutcome fit_dataset(Dataset data, const FitSpec& spec) {
  if (spec.cv) {
    const HyperparamChoice hp = select_hyperparams(data, spec.nu, spec.phi_grid, spec.lambda_multipliers);
    return {fit(std::move(data), hp.kernel, hp.lambda), hp.score};
  }
  const MaternKernel kernel(spec.nu, spec.phi, data.dim());
  const double lambda = spec.lambda.at(data.size());
  double score = std::numeric_limits<double>::quiet_NaN();
  try {
    score = loocv_score(data, kernel, lambda);
  } catch (const DegenerateLeverage&) {
  }
  return {fit(std::move(data), kernel, lambda), score};
}

Dataset load_dataset(const RunContext& ctx) {
  Dataset data = read_dataset(ctx.resolve(ctx.doc["data"]["path"].get<std::string>()));
  try {
    data.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return data;
}

/// Fit from "data" when present, otherwise from "model_cache". With `negate`
/// the response is sign-flipped before fitting.
FitOutcome obtain_fit(const RunContext& ctx, bool negate = false) {
  if (ctx.doc.contains("data")) {
    Dataset data = load_dataset(ctx);
    if (negate) data.Y = -data.Y;
    return fit_dataset(std::move(data), parse_fit_spec(ctx.doc));
  }
  if (ctx.doc.contains("model_cache")) {
    KrrFit cached = load_model(ctx.resolve(ctx.doc["model_cache"].get<std::string>()));
    if (!negate) return {std::move(cached), std::numeric_limits<double>::quiet_NaN()};
    Dataset data = cached.data();
    data.Y = -data.Y;
    return {fit(std::move(data), cached.kernel(), cached.lambda()),
            std::numeric_limits<double>::quiet_NaN()};
  }
  throw ConfigError("/data: required (or /model_cache)");
}

Box data_bounds(const Dataset& data) {
  return Box{data.X.colwise().minCoeff().transpose(), data.X.colwise().maxCoeff().transpose()};
}

void write_text(const RunContext& ctx, const std::string& name, const std::string& text) {
  if (!ctx.out) return;
  std::error_code ec;
  fs::create_directories(*ctx.out, ec);
  const fs::path path = *ctx.out / name;
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw DataError("cannot write " + path.string());
}

const json& require_block(const RunContext& ctx, const char* key, const char* command) {
  if (!ctx.doc.contains(key)) {
    throw ConfigError(std::string("/") + key + ": required for the " + command + " command");
  }
  return ctx.doc[key];
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

fs::path RunContext::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::uint64_t RunContext::seed_or(std::uint64_t fallback) const {
  if (seed) return *seed;
  if (doc.contains("seed")) return doc["seed"].get<std::uint64_t>();
  return fallback;
}

json parse_config_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON (" + e.what() + ")");
  }
  const auto issues = SchemaValidator(config_schema()).validate(doc);
  if (!issues.empty()) {
    std::ostringstream msg;
    msg << source << ": config does not match the schema";
    for (const auto& issue : issues) {
      msg << "\n  " << (issue.pointer.empty() ? "/" : issue.pointer) << ": " << issue.message;
    }
    throw ConfigError(msg.str());
  }
  return doc;
}

RunContext load_context(const std::optional<fs::path>& config_path, std::optional<std::uint64_t> seed,
                        std::optional<int> workers, std::optional<fs::path> out) {
  RunContext ctx;
  if (config_path) {
    std::ifstream in(*config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + config_path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    ctx.doc = parse_config_text(ss.str(), config_path->string());
    ctx.base_dir = config_path->has_parent_path() ? config_path->parent_path() : fs::path(".");
  }
  ctx.seed = seed;
  if (workers) {
    if (*workers < 1) throw ConfigError("--workers must be >= 1");
    ctx.workers = *workers;
  } else {
    ctx.workers = get_or(ctx.doc, "workers", 1);
  }
  if (out) {
    ctx.out = *out;
  } else if (ctx.doc.contains("out")) {
    ctx.out = ctx.resolve(ctx.doc["out"].get<std::string>());
  }
  return ctx;
}

Scenario parse_scenario(const json& b, std::uint64_t seed) {
  Scenario s;
  s.function = parse_test_function(b["function"].get<std::string>());
  if (b.contains("design")) s.design = parse_design_family(b["design"].get<std::string>());
  s.noise.family = parse_noise_family(b["noise"]["family"].get<std::string>());
  s.noise.sigma = b["noise"]["sigma"].get<double>();
  s.n = b["n"].get<Eigen::Index>();
  s.replications = get_or(b, "replications", s.replications);
  if (b.contains("lambda")) s.lambda = parse_lambda(b["lambda"]);
  if (b.contains("kernel")) {
    const json& k = b["kernel"];
    s.kernel.nu = get_or(k, "nu", s.kernel.nu);
    s.kernel.phi = get_or(k, "phi", s.kernel.phi);
    const std::string cv = get_or<std::string>(k, "cv", "none");
    s.kernel.cv = cv == "none"    ? KernelChoice::Cv::none
                  : cv == "pilot" ? KernelChoice::Cv::pilot
                                  : KernelChoice::Cv::per_replication;
    s.kernel.phi_grid = get_or(k, "phi_grid", s.kernel.phi_grid);
    s.kernel.lambda_multipliers = get_or(k, "lambda_multipliers", s.kernel.lambda_multipliers);
  }
  if (b.contains("target")) {
    const json& t = b["target"];
    const std::string kind = t["kind"].get<std::string>();
    s.target.kind = kind == "point"   ? Target::Kind::point
                    : kind == "deriv" ? Target::Kind::deriv
                    : kind == "optimum" ? Target::Kind::optimum
                                        : Target::Kind::variance_term;
    s.target.x0 = get_or(t, "x0", s.target.x0);
    s.target.order = get_or(t, "order", s.target.order);
  }
  s.level = get_or(b, "level", s.level);
  s.known_sigma = get_or(b, "known_sigma", s.known_sigma);
  s.grid_per_axis = get_or(b, "grid_per_axis", s.grid_per_axis);
  s.newton_iters = get_or(b, "newton_iters", s.newton_iters);
  s.base_seed = seed;
  s.validate();
  return s;
}

int cmd_fit(const RunContext& ctx, std::ostream& out, std::ostream&) {
  require_block(ctx, "data", "fit");
  const FitOutcome r = obtain_fit(ctx);
  const KrrFit& f = r.fit;
  std::ostringstream s;
  s << "n=" << f.data().size() << '\n'
    << "d=" << f.data().dim() << '\n'
    << "nu=" << fmt(f.kernel().nu()) << '\n'
    << "phi=" << fmt(f.kernel().phi()) << '\n'
    << "lambda=" << fmt(f.lambda()) << '\n'
    << "sigma_hat_sq=" << fmt(f.sigma_hat_sq()) << '\n'
    << "loocv=" << fmt(r.loocv) << '\n';
  out << s.str();
  write_text(ctx, "fit_summary.txt", s.str());
  if (ctx.doc.contains("model_cache")) {
    save_model(ctx.resolve(ctx.doc["model_cache"].get<std::string>()), f);
  } else if (ctx.out) {
    save_model(*ctx.out / "model.json", f);
  }
  return kExitOk;
}

int cmd_infer(const RunContext& ctx, std::ostream& out, std::ostream& err) {
  const json& list = require_block(ctx, "functionals", "infer");
  const FitOutcome r = obtain_fit(ctx);
  const KrrFit& f = r.fit;
  const int d = f.data().dim();
  const Box bounds = data_bounds(f.data());

  std::ostringstream csv;
  csv << "estimate,var_hat,lo,hi\n";
  for (std::size_t j = 0; j < list.size(); ++j) {
    const json& spec = list[j];
    const std::string ptr = "/functionals/" + std::to_string(j);
    const std::string kind = spec["kind"].get<std::string>();
    const double level = get_or(spec, "level", 0.95);

    std::optional<Functional> g;
    if (kind == "point" || kind == "deriv") {
      if (!spec.contains("x0")) throw ConfigError(ptr + "/x0: required for kind '" + kind + "'");
      const Vector x0 = to_vector(spec["x0"]);
      if (x0.size() != d) {
        throw ConfigError(ptr + "/x0: expected " + std::to_string(d) + " coordinates");
      }
      if (!bounds.contains(as_point(x0))) {
        err << "warning: " << ptr << "/x0 lies outside the data bounding box; "
            << "the asymptotic interval assumes an interior point\n";
      }
      std::vector<int> alpha(static_cast<std::size_t>(d), 0);
      if (kind == "deriv") {
        if (!spec.contains("alpha")) throw ConfigError(ptr + "/alpha: required for kind 'deriv'");
        alpha = spec["alpha"].get<std::vector<int>>();
        if (static_cast<int>(alpha.size()) != d) {
          throw ConfigError(ptr + "/alpha: expected " + std::to_string(d) + " entries");
        }
      }
      const MultiIndex a(alpha);
      g = a.order() == 0 ? Functional::point(x0) : Functional::deriv(x0, a);
    } else {
      if (d != 1) throw ConfigError(ptr + ": tabulated h is supported for one-dimensional data only");
      if (!spec.contains("h")) throw ConfigError(ptr + "/h: required for kind 'l2'");
      const std::string h = spec["h"].get<std::string>();
      const std::string prefix = "table:";
      if (h.rfind(prefix, 0) != 0) throw ConfigError(ptr + "/h: expected \"table:<path>\"");
      const LinearTable table = read_linear_table(ctx.resolve(h.substr(prefix.size())));
      Box box{Vector::Constant(1, table.lo()), Vector::Constant(1, table.hi())};
      if (spec.contains("box")) box = parse_box(spec["box"], ptr + "/box", 1);
      g = Functional::l2([table](Point x) { return table(x[0]); }, box,
                         get_or(spec, "quad_order", 60));
    }
    const FunctionalEstimate e = confidence_interval(f, bind(*g, f), level);
    csv << fmt(e.value) << ',' << fmt(e.var_hat) << ',' << fmt(e.ci_lo) << ',' << fmt(e.ci_hi) << '\n';
  }
  out << csv.str();
  write_text(ctx, "infer.csv", csv.str());
  return kExitOk;
}

int cmd_optimum(const RunContext& ctx, std::ostream& out, std::ostream&) {
  const json empty = json::object();
  const json& spec = ctx.doc.contains("optimum") ? ctx.doc["optimum"] : empty;
  const bool maximize = get_or(spec, "maximize", false);
  const double level = get_or(spec, "level", 0.95);
  const FitOutcome r = obtain_fit(ctx, maximize);
  const KrrFit& f = r.fit;
  const int d = f.data().dim();
  if (f.data().Y.maxCoeff() == f.data().Y.minCoeff()) {
    throw SingularHessian("constant response: the fitted surface has no isolated optimum");
  }

  Box box;
  if (spec.contains("box")) {
    box = parse_box(spec["box"], "/optimum/box", d);
  } else {
    box = data_bounds(f.data());
    for (int k = 0; k < d; ++k) {
      const double w = box.hi[k] - box.lo[k];
      if (!(w > 0.0)) throw DataError("feature column " + std::to_string(k + 1) + " has zero spread");
      box.lo[k] += 0.005 * w;
      box.hi[k] -= 0.005 * w;
    }
  }
  OptimumOptions opts;
  opts.grid_per_axis = get_or(spec, "grid_per_axis", 0);
  opts.newton_iters = get_or(spec, "newton_iters", 20);
  const OptimumResult res = estimate_optimum(f, box, opts);
  const auto ci = optimum_ci(f, res, level);
  const double sign = maximize ? -1.0 : 1.0;

  json report;
  report["maximize"] = maximize;
  report["level"] = level;
  report["nu"] = f.kernel().nu();
  report["phi"] = f.kernel().phi();
  report["lambda"] = f.lambda();
  report["x_hat"] = std::vector<double>(res.x_min.data(), res.x_min.data() + d);
  report["f_hat"] = sign * res.f_min;
  json ci_json = json::array();
  for (const auto& [lo, hi] : ci) ci_json.push_back({lo, hi});
  report["ci"] = ci_json;
  json H = json::array();
  json C = json::array();
  for (int i = 0; i < d; ++i) {
    json hrow = json::array();
    json crow = json::array();
    for (int j = 0; j < d; ++j) {
      hrow.push_back(sign * res.hessian(i, j));
      crow.push_back(res.cov(i, j));
    }
    H.push_back(hrow);
    C.push_back(crow);
  }
  report["hessian"] = H;
  report["cov"] = C;
  report["grid_per_axis"] = res.grid_per_axis;
  report["newton_iters"] = res.newton_iters;
  report["refinement_skipped"] = res.refinement_skipped;

  std::ostringstream csv;
  for (int k = 0; k < d; ++k) csv << "x_hat_" << k + 1 << ',';
  csv << "f_hat";
  for (int k = 0; k < d; ++k) csv << ",ci_lo_" << k + 1 << ",ci_hi_" << k + 1;
  csv << '\n';
  for (int k = 0; k < d; ++k) csv << fmt(res.x_min[k]) << ',';
  csv << fmt(sign * res.f_min);
  for (const auto& [lo, hi] : ci) csv << ',' << fmt(lo) << ',' << fmt(hi);
  csv << '\n';

  const std::string text = report.dump(2) + "\n";
  out << text;
  write_text(ctx, "optimum.json", text);
  write_text(ctx, "optimum.csv", csv.str());
  return kExitOk;
}

int cmd_simulate(const RunContext& ctx, std::ostream& out, std::ostream& err) {
  const Scenario s = parse_scenario(require_block(ctx, "scenario", "simulate"), ctx.seed_or(1));
  const auto records = run_scenario(s, ctx.workers);
  const CoverageSummary c = coverage(records);
  if (c.failed > 0) err << "note: " << c.failed << " of " << records.size() << " replications failed\n";
  const std::string cov = coverage_csv(s, records);
  out << cov;
  write_text(ctx, "coverage.csv", cov);
  if (get_or(ctx.doc["scenario"], "write_records", true)) {
    write_text(ctx, "records.csv", records_csv(records));
  }
  return kExitOk;
}

int cmd_qq(const RunContext& ctx, std::ostream& out, std::ostream&) {
  const Scenario s = parse_scenario(require_block(ctx, "scenario", "qq"), ctx.seed_or(1));
  const json empty = json::object();
  const json& spec = ctx.doc.contains("qq") ? ctx.doc["qq"] : empty;
  const auto component = get_or<std::size_t>(spec, "component", 0);
  const auto records = run_scenario(s, ctx.workers);
  std::vector<double> stats;
  for (const auto& r : records) {
    if (r.ok && r.stat.size() > component) stats.push_back(r.stat[component]);
  }
  if (stats.size() < 20) {
    throw NumericalError("only " + std::to_string(stats.size()) +
                         " replications produced a statistic; Q-Q output needs at least 20");
  }
  const std::string csv = qq_csv(qq_data(stats), ks_statistic(stats));
  out << csv;
  write_text(ctx, "qq.csv", csv);
  return kExitOk;
}

int cmd_rates(const RunContext& ctx, std::ostream& out, std::ostream&) {
  const json& b = require_block(ctx, "rates", "rates");
  const std::string experiment = b["experiment"].get<std::string>();
  const std::uint64_t seed = ctx.seed_or(1);
  RateTable table;
  if (experiment == "uniform_error_vs_n") {
    const TestFunctionId id = parse_test_function(get_or<std::string>(b, "function", "f1"));
    NoiseSpec noise{NoiseFamily::gaussian, 0.5};
    if (b.contains("noise")) {
      noise.family = parse_noise_family(b["noise"]["family"].get<std::string>());
      noise.sigma = b["noise"]["sigma"].get<double>();
    }
    LambdaRule rule{LambdaRule::Kind::log_n_over_n, 1.0};
    if (b.contains("lambda")) rule = parse_lambda(b["lambda"]);
    const MaternKernel kernel(get_or(b, "nu", 3.0), get_or(b, "phi", 1.0), 1);
    const auto ns = get_or(b, "ns", std::vector<Eigen::Index>{250, 500, 1000, 2000, 4000});
    table = uniform_error_vs_n(id, noise, kernel, rule, ns, get_or(b, "reps", 20), get_or(b, "order", 0),
                               get_or(b, "grid_per_axis", 512), seed, ctx.workers);
  } else {
    const auto n = get_or<Eigen::Index>(b, "n", 2000);
    const DesignFamily design = parse_design_family(get_or<std::string>(b, "design", "iid_uniform"));
    const MaternKernel kernel(get_or(b, "nu", 3.0), get_or(b, "phi", 0.6), 1);
    const double x0 = get_or(b, "x0", 0.5);
    const auto lambdas = log_space(get_or(b, "lambda_lo", 1e-4), get_or(b, "lambda_hi", 1e-1),
                                   get_or(b, "lambda_count", 8));
    table = experiment == "variance_vs_lambda"
                ? variance_vs_lambda(n, design, kernel, x0, lambdas, seed)
                : worst_case_bias_vs_lambda(n, design, kernel, x0, lambdas, seed);
  }
  const std::string csv = rate_csv(table);
  out << csv;
  write_text(ctx, "rates.csv", csv);
  return kExitOk;
}

int cmd_extrema(const RunContext& ctx, std::ostream& out, std::ostream&) {
  std::vector<std::pair<TestFunctionId, Extremum>> rows;
  for (auto id : {TestFunctionId::f1, TestFunctionId::f2, TestFunctionId::f3, TestFunctionId::f4,
                  TestFunctionId::f5}) {
    rows.emplace_back(id, compute_extremum(id, default_extremum_kind(id)));
  }
  const std::string csv = extrema_csv(rows);
  out << csv;
  write_text(ctx, "extrema.csv", csv);
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"krrinf: kernel ridge regression with inference for linear functionals and optima"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir;

  using Handler = int (*)(const RunContext&, std::ostream&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"fit", "Fit KRR to a CSV dataset and print a summary", cmd_fit},
      {"infer", "Estimates and confidence intervals for linear functionals", cmd_infer},
      {"optimum", "Estimate the minimiser (or maximiser) with a confidence interval", cmd_optimum},
      {"simulate", "Monte Carlo coverage study for a scenario", cmd_simulate},
      {"rates", "Empirical convergence-rate table", cmd_rates},
      {"qq", "Normal Q-Q data and KS statistic of standardised replication statistics", cmd_qq},
      {"extrema", "Recompute the reference extrema of the test functions", cmd_extrema},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  std::vector<std::array<CLI::Option*, 4>> opts;
  for (const auto& [name, desc, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    opts.push_back({sub->add_option("--config", config, "JSON config file"),
                    sub->add_option("--seed", seed, "Base seed (overrides the config)"),
                    sub->add_option("--workers", workers, "Worker threads for replications"),
                    sub->add_option("--out", out_dir, "Directory for output files")});
    subs.emplace_back(sub, handler);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i].first->parsed()) continue;
      const auto& o = opts[i];
      const RunContext ctx = load_context(
          o[0]->count() ? std::optional<fs::path>(config) : std::nullopt,
          o[1]->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
          o[2]->count() ? std::optional<int>(workers) : std::nullopt,
          o[3]->count() ? std::optional<fs::path>(out_dir) : std::nullopt);
      return subs[i].second(ctx, out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}

}  // namespace krrinf::cli
