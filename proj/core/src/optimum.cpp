#include "krrinf/optimum.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "krrinf/errors.hpp"
#include "krrinf/functionals.hpp"
#include "krrinf/normal.hpp"

namespace krrinf {

namespace {

void check_box(const Box& box, int dim) {
  if (box.dim() != dim || box.hi.size() != box.lo.size()) {
    throw InvalidArgument("search box dimension does not match the data");
  }
  for (int k = 0; k < dim; ++k) {
    if (!std::isfinite(box.lo[k]) || !std::isfinite(box.hi[k]) || !(box.hi[k] > box.lo[k])) {
      throw InvalidArgument("search box must be finite with hi > lo");
    }
  }
}

Vector project(const Box& box, Vector x) { return x.cwiseMax(box.lo).cwiseMin(box.hi); }

bool positive_definite(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  return ev.minCoeff() > 1e-10 * ev.cwiseAbs().maxCoeff() && ev.minCoeff() > 0.0;
}

}  // namespace

OptimumResult find_min(const KrrFit& fit, const Box& box, int grid_per_axis, int newton_iters) {
  const int d = fit.data().dim();
  check_box(box, d);
  if (grid_per_axis < 16) throw InvalidArgument("grid_per_axis must be >= 16");
  if (newton_iters < 0) throw InvalidArgument("newton_iters must be >= 0");

  Eigen::Index total = 1;
  for (int k = 0; k < d; ++k) total *= grid_per_axis;

  // Lexicographic scan with strict improvement keeps the smallest grid point on ties.
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vector x(d);
  Vector best_x(d);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index q = 0; q < total; ++q) {
    for (int k = 0; k < d; ++k) {
      const double t = double(idx[static_cast<std::size_t>(k)]) / (grid_per_axis - 1);
      x[k] = box.lo[k] + t * (box.hi[k] - box.lo[k]);
    }
    const double v = predict(fit, as_point(x));
    if (v < best) {
      best = v;
      best_x = x;
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < grid_per_axis) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }

  OptimumResult result;
  result.grid_per_axis = grid_per_axis;
  result.x_min = best_x;
  result.f_min = best;

  const double box_scale = (box.hi - box.lo).maxCoeff();
  for (int it = 0; it < newton_iters; ++it) {
    const Matrix h = predict_hessian(fit, as_point(result.x_min));
    if (!positive_definite(h)) {
      if (it == 0) result.refinement_skipped = true;
      break;
    }
    const Vector g = predict_gradient(fit, as_point(result.x_min));
    const Vector step = -h.ldlt().solve(g);
    if (!step.allFinite() || step.norm() < 1e-14 * box_scale) break;
    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving <= 20; ++halving, t *= 0.5) {
      const Vector cand = project(box, result.x_min + t * step);
      const double v = predict(fit, as_point(cand));
      if (v <= result.f_min) {
        const bool moved = (cand - result.x_min).norm() > 0.0;
        result.x_min = cand;
        result.f_min = v;
        accepted = moved;
        break;
      }
    }
    if (!accepted) break;
    ++result.newton_iters;
  }
  return result;
}

Matrix hessian_hat(const KrrFit& fit, Point x) { return predict_hessian(fit, x); }

Matrix optimum_cov(const KrrFit& fit, Point x) {
  const int d = fit.data().dim();
  Vector x0(d);
  for (int k = 0; k < d; ++k) x0[k] = x[static_cast<std::size_t>(k)];
  std::vector<BoundFunctional> grads;
  grads.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    grads.push_back(bind(Functional::deriv(x0, MultiIndex::unit(d, k)), fit));
  }
  return cov_matrix(fit, grads);
}

OptimumResult estimate_optimum(const KrrFit& fit, const Box& box, const OptimumOptions& opts) {
  const int grid = opts.grid_per_axis > 0 ? opts.grid_per_axis : (fit.data().dim() == 1 ? 512 : 64);
  OptimumResult r = find_min(fit, box, grid, opts.newton_iters);
  r.hessian = hessian_hat(fit, as_point(r.x_min));
  r.cov = optimum_cov(fit, as_point(r.x_min));
  return r;
}

void check_hessian(const KrrFit& fit, const Matrix& hessian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hessian, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().cwiseAbs();
  // |d^2 f_hat| <= |Phi''(0)| * sum |alpha_i| bounds the Hessian scale
  const double scale = std::abs(fit.kernel().radial(0.0, 2)) * fit.alpha().lpNorm<1>();
  const double largest = ev.maxCoeff();
  if (!(largest > 1e-10 * scale) || !(ev.minCoeff() > 1e-10 * largest)) {
    throw SingularHessian("Hessian of f_hat is singular at the optimum (flat or multi-modal fit)");
  }
}

std::vector<std::pair<double, double>> optimum_ci(const KrrFit& fit, const OptimumResult& result,
                                                  double level) {
  const double z = two_sided_z(level);
  check_hessian(fit, result.hessian);
  const Matrix hinv = result.hessian.inverse();
  const Matrix S = hinv * result.cov * hinv.transpose();
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index k = 0; k < result.x_min.size(); ++k) {
    const double half = z * std::sqrt(std::max(S(k, k), 0.0));
    out.emplace_back(result.x_min[k] - half, result.x_min[k] + half);
  }
  return out;
}

Vector standardized_optimum_stat(const OptimumResult& result, Point x_true) {
  const Eigen::Index d = result.x_min.size();
  if (static_cast<Eigen::Index>(x_true.size()) != d) throw InvalidArgument("x_true dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> es(result.cov);
  const Vector ev = es.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || !(ev.minCoeff() > 1e-14 * ev.maxCoeff())) {
    throw SingularCovariance("COV_hat is singular; standardized statistic undefined");
  }
  const Matrix inv_sqrt =
      es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Vector diff(d);
  for (Eigen::Index k = 0; k < d; ++k) diff[k] = result.x_min[k] - x_true[static_cast<std::size_t>(k)];
  return inv_sqrt * (result.hessian * diff);
}

}  // namespace krrinf
