#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <krrinf/errors.hpp>
#include <krrinf/krr.hpp>
#include <krrinf/rng.hpp>
#include <krrinf/testbed.hpp>

using namespace krrinf;

namespace {

Dataset make_data(TestFunctionId id, int n, double sigma, std::uint64_t seed) {
  DesignSpec ds;
  ds.n = n;
  ds.box = test_function_domain(id);
  ds.seed = substream_seed(seed, 0);
  Dataset data{gen_design(ds), Vector(n)};
  const Vector e = gen_noise({NoiseFamily::gaussian, sigma}, n, substream_seed(seed, 1));
  for (int i = 0; i < n; ++i) data.Y[i] = eval_test_function(id, data.X(i, 0)) + e[i];
  return data;
}

Dataset random_2d(int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data{Design(n, 2), Vector(n)};
  for (int i = 0; i < n; ++i) {
    data.X(i, 0) = rng.uniform();
    data.X(i, 1) = rng.uniform();
    data.Y[i] = std::sin(3 * data.X(i, 0)) + data.X(i, 1) + 0.1 * rng.normal();
  }
  return data;
}

}  // namespace

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset({Design(0, 1), Vector(0)}).validate(), InvalidArgument);
  CHECK_THROWS_AS(Dataset({Design(2, 1), Vector(3)}).validate(), InvalidArgument);
  Dataset bad{Design::Zero(2, 1), Vector::Zero(2)};
  bad.Y[1] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(fit(Dataset{Design::Zero(2, 1), Vector::Zero(2)}, MaternKernel(3, 1, 1), 0.0),
                  InvalidArgument);
  CHECK_THROWS_AS(fit(Dataset{Design::Zero(2, 2), Vector::Zero(2)}, MaternKernel(3, 1, 1), 0.1),
                  InvalidArgument);
}

TEST_CASE("single observation") {
  Dataset d{Design(1, 1), Vector(1)};
  d.X(0, 0) = 0.3;
  d.Y[0] = 2.0;
  const MaternKernel k(2.5, 1.0, 1);
  const double lambda = 0.7;
  const KrrFit f = fit(d, k, lambda);
  for (double x : {0.0, 0.3, 0.55, 1.0}) {
    const double x1 = 0.3;
    const double expect = k(Point(&x, 1), Point(&x1, 1)) * 2.0 / (1.0 + lambda);
    CHECK(predict(f, Point(&x, 1)) == doctest::Approx(expect).epsilon(1e-14));
  }
  // residual y - y / (1 + lambda)
  const double r = 2.0 * lambda / (1.0 + lambda);
  CHECK(f.sigma_hat_sq() == doctest::Approx(r * r).epsilon(1e-14));
}

TEST_CASE("near interpolation for tiny lambda") {
  const Dataset d = make_data(TestFunctionId::f4, 30, 0.3, 4);
  const KrrFit f = fit(d, MaternKernel(1.5, 4.0, 1), 1e-10);
  const double ymax = d.Y.cwiseAbs().maxCoeff();
  for (int i = 0; i < 30; ++i) CHECK(std::abs(predict(f, row_of(d.X, i)) - d.Y[i]) <= 1e-4 * ymax);
}

TEST_CASE("zero response and linearity") {
  Dataset d = make_data(TestFunctionId::f1, 40, 0.5, 2);
  const MaternKernel k(3.0, 2.0, 1);
  Dataset zero = d;
  zero.Y.setZero();
  const KrrFit f0 = fit(zero, k, 0.01);
  CHECK(f0.sigma_hat_sq() == 0.0);
  CHECK(f0.alpha().cwiseAbs().maxCoeff() == 0.0);
  CHECK(loocv_score(zero, k, 0.01) == 0.0);

  Dataset twice = d;
  twice.Y *= 2.0;
  const KrrFit f1 = fit(d, k, 0.01);
  const KrrFit f2 = fit(twice, k, 0.01);
  for (double x = 0.0; x <= 1.0; x += 0.05) {
    CHECK(predict(f2, Point(&x, 1)) == 2.0 * predict(f1, Point(&x, 1)));
    CHECK(predict(f0, Point(&x, 1)) == 0.0);
  }
}

TEST_CASE("coefficients solve the regularized system") {
  const Dataset d = random_2d(80, 9);
  const MaternKernel k(2.5, 1.5, 2);
  const double lambda = 1e-3;
  const KrrFit f = fit(d, k, lambda);
  const Matrix A = regularized_gram(gram(k, d.X), lambda);
  CHECK((A * f.alpha() - d.Y).norm() <= 1e-8 * d.Y.norm());
  CHECK(f.sigma_hat_sq() >= 0.0);

  // f_hat(x_i) = (K alpha)_i = y_i - lambda n alpha_i
  const Vector Kalpha = gram(k, d.X) * f.alpha();
  const Vector fitted = f.fitted();
  for (int i = 0; i < 80; ++i) {
    const double p = predict(f, row_of(d.X, i));
    CHECK(std::abs(p - Kalpha[i]) <= 1e-9 * std::max(1.0, std::abs(p)));
    CHECK(std::abs(p - fitted[i]) <= 1e-9 * std::max(1.0, std::abs(p)));
  }
  const double rss = (d.Y - fitted).squaredNorm();
  CHECK(f.sigma_hat_sq() == doctest::Approx(rss / 80.0).epsilon(1e-12));

  const KrrFit g = fit_with_gram(d, k, lambda, gram(k, d.X));
  CHECK((g.alpha() - f.alpha()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("derivative predictions match finite differences") {
  const Dataset d = random_2d(60, 12);
  const MaternKernel k(3.0, 1.0, 2);
  const KrrFit f = fit(d, k, 1e-3);
  Rng rng(5);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    Vector x(2);
    x << 0.1 + 0.8 * rng.uniform(), 0.1 + 0.8 * rng.uniform();
    CHECK(predict_deriv(f, MultiIndex({0, 0}), as_point(x)) == predict(f, as_point(x)));
    const Vector grad = predict_gradient(f, as_point(x));
    const Matrix hess = predict_hessian(f, as_point(x));
    for (int i = 0; i < 2; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (predict(f, as_point(xp)) - predict(f, as_point(xm))) / (2 * h);
      const double an = predict_deriv(f, MultiIndex::unit(2, i), as_point(x));
      CHECK(std::abs(an - fd) <= 1e-5 * std::max(std::abs(an), 1e-2));
      CHECK(grad[i] == an);
      for (int j = 0; j < 2; ++j) {
        const MultiIndex ej = MultiIndex::unit(2, j);
        const double fd2 = (predict_deriv(f, ej, as_point(xp)) - predict_deriv(f, ej, as_point(xm))) / (2 * h);
        const double an2 = predict_deriv(f, MultiIndex::unit(2, i) + ej, as_point(x));
        CHECK(std::abs(an2 - fd2) <= 1e-5 * std::max(std::abs(an2), 1.0));
        CHECK(std::abs(hess(i, j) - an2) <= 1e-12 * std::max(1.0, std::abs(an2)));
      }
    }
  }
  CHECK_THROWS_AS(predict_deriv(f, MultiIndex({2, 1}), row_of(d.X, 0)), InvalidArgument);
}

TEST_CASE("closed-form LOOCV equals brute force refits") {
  const MaternKernel k(2.5, 1.0, 1);
  const double lambda = 0.05;
  auto brute = [&](const Dataset& d) {
    const Eigen::Index n = d.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<Eigen::Index> keep;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) keep.push_back(j);
      Matrix A(keep.size(), keep.size());
      Vector y(keep.size()), kx(keep.size());
      for (std::size_t a = 0; a < keep.size(); ++a) {
        y[a] = d.Y[keep[a]];
        kx[a] = k(row_of(d.X, i), row_of(d.X, keep[a]));
        for (std::size_t b = 0; b < keep.size(); ++b) A(a, b) = k(row_of(d.X, keep[a]), row_of(d.X, keep[b]));
        A(a, a) += lambda * n;  // penalty scale of the full fit
      }
      const double pred = kx.dot(A.ldlt().solve(y));
      s += (d.Y[i] - pred) * (d.Y[i] - pred);
    }
    return s / n;
  };

  Dataset two{Design(2, 1), Vector(2)};
  two.X << 0.25, 0.75;
  two.Y << 1.0, -0.5;
  CHECK(std::abs(loocv_score(two, k, lambda) - brute(two)) <= 1e-10);

  const Dataset d = make_data(TestFunctionId::f2, 25, 0.5, 8);
  CHECK(loocv_score(d, k, lambda) == doctest::Approx(brute(d)).epsilon(1e-9));
  CHECK(loocv_score(d, k, lambda) >= 0.0);
}

TEST_CASE("LOOCV is invariant to row permutations") {
  const Dataset d = make_data(TestFunctionId::f3, 50, 0.5, 3);
  Dataset p = d;
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());
  for (int i = 0; i < 50; ++i) {
    p.X(i, 0) = d.X(perm[i], 0);
    p.Y[i] = d.Y[perm[i]];
  }
  const MaternKernel k(3.0, 2.0, 1);
  CHECK(loocv_score(p, k, 0.01) == doctest::Approx(loocv_score(d, k, 0.01)).epsilon(1e-12));
}

TEST_CASE("degenerate leverage") {
  const Dataset d = make_data(TestFunctionId::f1, 20, 0.5, 1);
  CHECK_THROWS_AS(loocv_score(d, MaternKernel(0.5, 8.0, 1), 1e-300), DegenerateLeverage);
}

TEST_CASE("hyperparameter selection") {
  const Dataset d = make_data(TestFunctionId::f1, 100, 0.5, 21);
  SUBCASE("single-element grids") {
    const HyperparamChoice c = select_hyperparams(d, 3.0, {2.0}, {0.5});
    CHECK(c.kernel.phi() == 2.0);
    CHECK(c.lambda == 0.5 / 100);
    CHECK(c.score == loocv_score(d, MaternKernel(3.0, 2.0, 1), 0.005));
  }
  SUBCASE("argmin over the grid") {
    const std::vector<double> phis = {0.5, 1.0, 2.0};
    const std::vector<double> mults = {0.1, 1.0, 10.0};
    const HyperparamChoice c = select_hyperparams(d, 3.0, phis, mults);
    double best = INFINITY;
    for (double phi : phis)
      for (double m : mults) best = std::min(best, loocv_score(d, MaternKernel(3.0, phi, 1), m / 100));
    CHECK(c.score == best);
    CHECK(c.score == loocv_score(d, c.kernel, c.lambda));
  }
  SUBCASE("scaling Y scales scores by four and keeps the argmin") {
    Dataset twice = d;
    twice.Y *= 2.0;
    const HyperparamChoice a = select_hyperparams(d, 3.0, kDefaultPhiGrid, kDefaultLambdaMultipliers);
    const HyperparamChoice b = select_hyperparams(twice, 3.0, kDefaultPhiGrid, kDefaultLambdaMultipliers);
    CHECK(a.kernel.phi() == b.kernel.phi());
    CHECK(a.lambda == b.lambda);
    CHECK(b.score == doctest::Approx(4.0 * a.score).epsilon(1e-12));
  }
  SUBCASE("ties go to smaller lambda then smaller phi") {
    Dataset zero = d;
    zero.Y.setZero();
    const HyperparamChoice c = select_hyperparams(zero, 3.0, {4.0, 1.0, 2.0}, {5.0, 0.5, 1.0});
    CHECK(c.kernel.phi() == 1.0);
    CHECK(c.lambda == 0.5 / 100);
  }
  SUBCASE("empty grids are rejected") {
    CHECK_THROWS_AS(select_hyperparams(d, 3.0, {}, {1.0}), InvalidArgument);
    CHECK_THROWS_AS(select_hyperparams(d, 3.0, {1.0}, {}), InvalidArgument);
  }
}

TEST_CASE("selected lambda is usually interior for f1 at n = 300") {
  int interior = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Dataset d = make_data(TestFunctionId::f1, 300, 0.5, 1000 + s);
    const HyperparamChoice c = select_hyperparams(d, 3.0, kDefaultPhiGrid, kDefaultLambdaMultipliers);
    const double m = c.lambda * 300;
    if (m > kDefaultLambdaMultipliers.front() * 1.0000001 && m < kDefaultLambdaMultipliers.back() * 0.9999999)
      ++interior;
  }
  MESSAGE("interior selections: " << interior << " of 50");
  CHECK(interior >= 40);
}

TEST_CASE("noise variance estimate at n = 2000") {
  std::vector<double> est;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const Dataset d = make_data(TestFunctionId::f1, 2000, 0.5, 500 + r);
    // phi = 4 keeps the smoothing bias of the peaked f1 small at lambda = 1/n
    est.push_back(fit(d, MaternKernel(3.0, 4.0, 1), 1.0 / 2000).sigma_hat_sq());
  }
  std::nth_element(est.begin(), est.begin() + 10, est.end());
  const double hi = est[10];
  std::nth_element(est.begin(), est.begin() + 9, est.end());
  const double median = 0.5 * (est[9] + hi);
  CHECK(std::abs(median - 0.25) <= 0.15 * 0.25);
}

TEST_CASE("empirical norm of the fit shrinks as lambda grows") {
  const std::vector<double> lambdas = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset d = random_2d(40, 300 + s);
    const MaternKernel k(2.5, 1.0, 2);
    double prev = INFINITY;
    for (double lambda : lambdas) {
      const double norm = fit(d, k, lambda).fitted().norm();
      CHECK(norm <= prev * (1 + 1e-12));
      prev = norm;
    }
  }
}
