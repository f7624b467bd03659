#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include <krrinf/errors.hpp>
#include <krrinf/functionals.hpp>
#include <krrinf/normal.hpp>
#include <krrinf/rng.hpp>
#include <krrinf/testbed.hpp>

using namespace krrinf;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v[0] = x;
  return v;
}

Dataset make_f1(int n, double sigma, std::uint64_t seed) {
  DesignSpec ds;
  ds.n = n;
  ds.box = test_function_domain(TestFunctionId::f1);
  ds.seed = substream_seed(seed, 0);
  Dataset data{gen_design(ds), Vector(n)};
  const Vector e = gen_noise({NoiseFamily::gaussian, sigma}, n, substream_seed(seed, 1));
  for (int i = 0; i < n; ++i) data.Y[i] = eval_test_function(TestFunctionId::f1, data.X(i, 0)) + e[i];
  return data;
}

Design uniform_design(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Design X(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) X(i, k) = rng.uniform();
  return X;
}

Box unit_box(int d) { return Box{Vector::Zero(d), Vector::Ones(d)}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("binding") {
  const MaternKernel k(2.5, 1.0, 1);
  const Design X = uniform_design(30, 1, 1);
  const Matrix K = gram(k, X);
  const Vector xj = X.row(7).transpose();

  const BoundFunctional p = bind(Functional::point(xj), k, X);
  CHECK((p.weights - K.col(7)).cwiseAbs().maxCoeff() == 0.0);
  const BoundFunctional d0 = bind(Functional::deriv(xj, MultiIndex({0})), k, X);
  CHECK((d0.weights - p.weights).cwiseAbs().maxCoeff() == 0.0);

  auto one = [](Point) { return 1.0; };
  const MaternKernel k3(3.0, 1.0, 1);
  const Vector w40 = bind(Functional::l2(one, unit_box(1), 40), k3, X).weights;
  const Vector w80 = bind(Functional::l2(one, unit_box(1), 80), k3, X).weights;
  CHECK((w40 - w80).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK_THROWS_AS(bind(Functional::l2(one, unit_box(3), 10), MaternKernel(2.5, 1.0, 3), uniform_design(5, 3, 2)),
                  InvalidArgument);
  CHECK_THROWS_AS(Functional::l2(one, unit_box(1), 1), InvalidArgument);
  CHECK_THROWS_AS(bind(Functional::point(Vector::Zero(2)), k, X), InvalidArgument);
  CHECK(Functional::deriv(xj, MultiIndex({2})).order() == 2);
  CHECK(Functional::l2(one, unit_box(1)).order() == 0);
}

TEST_CASE("estimates agree with predictions") {
  const Dataset d = make_f1(80, 0.5, 3);
  const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.01);
  for (double x : {0.1, 0.37, 0.5, 0.93}) {
    const Vector x0 = vec1(x);
    const double e = estimate(f, bind(Functional::point(x0), f));
    CHECK(std::abs(e - predict(f, as_point(x0))) <= 1e-12 * std::max(1.0, std::abs(e)));
    for (int o : {1, 2}) {
      const double ed = estimate(f, bind(Functional::deriv(x0, MultiIndex({o})), f));
      const double pd = predict_deriv(f, MultiIndex({o}), as_point(x0));
      CHECK(std::abs(ed - pd) <= 1e-12 * std::max(1.0, std::abs(pd)));
    }
  }
  auto zero = [](Point) { return 0.0; };
  CHECK(estimate(f, bind(Functional::l2(zero, unit_box(1)), f)) == 0.0);
}

TEST_CASE("L2 functional of a fit matches a Riemann sum of the prediction") {
  const Dataset d = make_f1(60, 0.5, 5);
  const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.01);
  auto h = [](Point s) { return std::cos(3.0 * s[0]); };
  const double e = estimate(f, bind(Functional::l2(h, unit_box(1), 60), f));
  const int m = 200000;
  double riemann = 0.0;
  for (int i = 0; i < m; ++i) {
    const double s = (i + 0.5) / m;
    riemann += std::cos(3.0 * s) * predict(f, Point(&s, 1));
  }
  riemann /= m;
  CHECK(std::abs(e - riemann) <= 1e-8 * std::max(1.0, std::abs(riemann)));
}

TEST_CASE("exact variance") {
  SUBCASE("single observation") {
    Dataset d{Design(1, 1), Vector(1)};
    d.X(0, 0) = 0.2;
    d.Y[0] = 1.0;
    const MaternKernel k(1.5, 1.0, 1);
    const double lambda = 0.3;
    const KrrFit f = fit(d, k, lambda);
    const Vector x0 = vec1(0.6);
    const BoundFunctional g = bind(Functional::point(x0), f);
    const double kx = k(as_point(x0), row_of(d.X, 0));
    CHECK(var_exact(f, 2.0, g) == doctest::Approx(2.0 * kx * kx / ((1 + lambda) * (1 + lambda))).epsilon(1e-14));
    CHECK(var_exact(f, 0.0, g) == 0.0);
    CHECK(var_exact(f, 3.0, g) == doctest::Approx(1.5 * var_exact(f, 2.0, g)).epsilon(1e-15));
  }
  SUBCASE("Monte Carlo over 200000 noise draws") {
    const int n = 50;
    Design X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = (i + 0.5) / n;
    const Dataset d{X, Vector::Zero(n)};
    const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.02);
    const double sigma = 0.5;
    for (const Functional& fn : {Functional::point(vec1(0.43)), Functional::deriv(vec1(0.43), MultiIndex({1}))}) {
      const BoundFunctional g = bind(fn, f);
      // The estimate is linear in Y, so its noise part is (A^-1 g)^T e.
      const Vector u = f.factor().solve(g.weights);
      Rng rng(77);
      const int draws = 200000;
      double s1 = 0.0, s2 = 0.0;
      Vector e(n);
      for (int r = 0; r < draws; ++r) {
        for (int i = 0; i < n; ++i) e[i] = sigma * rng.normal();
        const double v = u.dot(e);
        s1 += v;
        s2 += v * v;
      }
      const double mean = s1 / draws;
      const double var = (s2 - draws * mean * mean) / (draws - 1);
      const double exact = var_exact(f, sigma * sigma, g);
      CHECK(std::abs(var / exact - 1.0) <= 0.02);
    }
  }
}

TEST_CASE("plug-in variance") {
  const MaternKernel k(3.0, 4.0, 1);
  const Dataset d = make_f1(100, 0.5, 9);
  const KrrFit f = fit(d, k, 0.01);
  const BoundFunctional g = bind(Functional::point(vec1(0.5)), f);
  CHECK(var_hat(f, g) == doctest::Approx(var_exact(f, f.sigma_hat_sq(), g)).epsilon(1e-15));

  Dataset zero = d;
  zero.Y.setZero();
  const KrrFit f0 = fit(zero, k, 0.01);
  CHECK(var_hat(f0, bind(Functional::point(vec1(0.5)), f0)) == 0.0);
  const FunctionalEstimate ci = confidence_interval(f0, bind(Functional::point(vec1(0.5)), f0), 0.95);
  CHECK(ci.ci_lo == ci.value);
  CHECK(ci.ci_hi == ci.value);

  int within = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Dataset dr = make_f1(500, 0.5, 1000 + r);
    const KrrFit fr = fit(dr, k, 1.0 / 500);
    const BoundFunctional gr = bind(Functional::point(vec1(0.5)), fr);
    const double ratio = var_hat(fr, gr) / var_exact(fr, 0.25, gr);
    within += (ratio >= 0.7 && ratio <= 1.3);
  }
  CHECK(within >= 180);
}

TEST_CASE("confidence intervals") {
  CHECK(two_sided_z(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(std::abs(two_sided_z(0.95) - 1.959963984540054) <= 1e-8);
  CHECK_THROWS_AS(two_sided_z(1.0), InvalidArgument);
  CHECK_THROWS_AS(two_sided_z(0.0), InvalidArgument);

  const Dataset d = make_f1(100, 0.5, 2);
  const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.01);
  const BoundFunctional g = bind(Functional::point(vec1(0.3)), f);
  const FunctionalEstimate ci = confidence_interval(f, g, 0.9);
  CHECK(ci.level == 0.9);
  CHECK(ci.value == estimate(f, g));
  CHECK(ci.var_hat == var_hat(f, g));
  CHECK(ci.ci_lo <= ci.value);
  CHECK(ci.value <= ci.ci_hi);
  CHECK(ci.ci_hi - ci.ci_lo == doctest::Approx(2 * two_sided_z(0.9) * std::sqrt(ci.var_hat)).epsilon(1e-14));
  CHECK_THROWS_AS(confidence_interval(f, g, 1.5), InvalidArgument);
}

TEST_CASE("interval width shrinks with n") {
  const MaternKernel k(3.0, 2.0, 1);
  std::vector<double> w250, w1000;
  for (std::uint64_t r = 0; r < 20; ++r) {
    for (int n : {250, 1000}) {
      const KrrFit f = fit(make_f1(n, 0.5, 70 + r), k, 1.0 / n);
      const FunctionalEstimate ci = confidence_interval(f, bind(Functional::point(vec1(0.5)), f), 0.95);
      (n == 250 ? w250 : w1000).push_back(ci.ci_hi - ci.ci_lo);
    }
  }
  CHECK(median(w1000) < median(w250));
}

TEST_CASE("covariance matrices") {
  const Dataset d = make_f1(100, 0.5, 4);
  const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.01);
  const BoundFunctional a = bind(Functional::point(vec1(0.3)), f);
  std::vector<BoundFunctional> one = {a};
  CHECK(cov_matrix(f, one)(0, 0) == doctest::Approx(var_hat(f, a)).epsilon(1e-14));

  std::vector<BoundFunctional> dup = {a, a};
  const Matrix C = cov_matrix(f, dup);
  CHECK(std::abs(C.determinant()) <= 1e-10 * C(0, 0) * C(0, 0) + 1e-300);
  CHECK(C(0, 1) == C(1, 0));

  Rng rng(3);
  Dataset d2{Design(200, 2), Vector(200)};
  for (int i = 0; i < 200; ++i) {
    d2.X(i, 0) = rng.uniform();
    d2.X(i, 1) = rng.uniform();
    d2.Y[i] = std::sin(4 * d2.X(i, 0)) * d2.X(i, 1) + 0.3 * rng.normal();
  }
  const KrrFit f2 = fit(d2, MaternKernel(3.0, 2.0, 2), 1.0 / 200);
  std::vector<BoundFunctional> gs;
  for (double c : {0.25, 0.5, 0.75}) {
    Vector z(2);
    z << c, 1.0 - c * 0.8;
    for (int i = 0; i < 2; ++i) gs.push_back(bind(Functional::deriv(z, MultiIndex::unit(2, i)), f2));
  }
  const Matrix G = cov_matrix(f2, gs);
  CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const Matrix G1 = cov_matrix(f2, gs, 1.0);
  CHECK((G1 * f2.sigma_hat_sq() - G).cwiseAbs().maxCoeff() <= 1e-12 * G.cwiseAbs().maxCoeff());
}

TEST_CASE("noiseless KRR") {
  const MaternKernel k(2.5, 4.0, 1);
  const Design X = uniform_design(30, 1, 8);
  const Matrix K = gram(k, X);
  const BoundFunctional g = bind(Functional::point(vec1(0.4)), k, X);

  const NoiselessKrr z = noiseless_fit(X, k, 0.1, bind(Functional::l2([](Point) { return 0.0; }, unit_box(1)), k, X));
  CHECK(z.ghat_at_X.cwiseAbs().maxCoeff() == 0.0);

  const NoiselessKrr tiny = noiseless_fit(X, k, 1e-12, g);
  CHECK((tiny.ghat_at_X - g.weights).cwiseAbs().maxCoeff() <= 1e-4);

  const double lambda = 0.05;
  const NoiselessKrr nk = noiseless_fit(X, k, lambda, g);
  CHECK((nk.ghat_at_X - K * nk.coeff).cwiseAbs().maxCoeff() <= 1e-12);
  const Vector lhs = nk.ghat_at_X - nk.g_at_X;
  const Vector rhs = -lambda * 30 * nk.coeff;
  CHECK((lhs - rhs).norm() <= 1e-10 * lhs.norm());
}

TEST_CASE("variance identity") {
  Rng rng(123);
  const std::vector<double> nus = {1.5, 2.5, 3.0};
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 2;
    const int n = 10 + static_cast<int>(rng.uniform() * 190);
    const double nu = nus[t % 3];
    const double lambda = std::pow(10.0, -4.0 + 4.0 * rng.uniform());
    const MaternKernel k(nu, 0.5 + 2.0 * rng.uniform(), d);
    Dataset data{uniform_design(n, d, 1000 + t), Vector(n)};
    for (int i = 0; i < n; ++i) data.Y[i] = rng.normal();
    const KrrFit f = fit(data, k, lambda);
    Vector x0(d);
    for (int j = 0; j < d; ++j) x0[j] = rng.uniform();
    const Functional fn = (t % 3 == 0 || nu < 2) ? Functional::point(x0) : Functional::deriv(x0, MultiIndex::unit(d, 0));
    const BoundFunctional g = bind(fn, f);
    const IdentityCheck c = var_identity_check(f, g, 0.7);
    CHECK(c.rel_err <= 1e-8);
    CHECK(c.lhs == doctest::Approx(var_exact(f, 0.7, g)).epsilon(1e-14));

    // bilinearity: scaling g by 3 scales both sides by 9
    const BoundFunctional g3{g.functional, 3.0 * g.weights};
    const IdentityCheck c3 = var_identity_check(f, g3, 0.7);
    CHECK(c3.lhs == doctest::Approx(9.0 * c.lhs).epsilon(1e-12));
    CHECK(c3.rhs == doctest::Approx(9.0 * c.rhs).epsilon(1e-12));
  }
  const Dataset dz{uniform_design(20, 1, 5), Vector::Zero(20)};
  const KrrFit fz = fit(dz, MaternKernel(3.0, 1.0, 1), 0.1);
  const BoundFunctional g0{Functional::point(vec1(0.5)), Vector::Zero(20)};
  const IdentityCheck c0 = var_identity_check(fz, g0, 1.0);
  CHECK(c0.lhs == 0.0);
  CHECK(c0.rhs == 0.0);
}

TEST_CASE("bias identity") {
  SUBCASE("single observation at the evaluation point") {
    const double lambda = 0.3;
    const MaternKernel k(3.0, 1.0, 1);
    Design X(1, 1);
    X(0, 0) = 0.4;
    const KernelExpansion f{X, Vector::Ones(1)};
    const IdentityCheck c = bias_oracle(X, k, lambda, f, Functional::point(vec1(0.4)));
    CHECK(c.lhs == doctest::Approx(-lambda / (1 + lambda)).epsilon(1e-14));
    CHECK(c.rhs == doctest::Approx(-lambda / (1 + lambda)).epsilon(1e-14));
    CHECK(worst_case_bias(X, k, lambda, Functional::point(vec1(0.4))) ==
          doctest::Approx(lambda / (1 + lambda)).epsilon(1e-12));
  }
  SUBCASE("zero function") {
    const Design X = uniform_design(20, 1, 3);
    const KernelExpansion f{uniform_design(3, 1, 4), Vector::Zero(3)};
    const IdentityCheck c = bias_oracle(X, MaternKernel(3.0, 1.0, 1), 0.1, f, Functional::point(vec1(0.5)));
    CHECK(c.lhs == 0.0);
    CHECK(c.rhs == 0.0);
  }
  SUBCASE("random expansions") {
    Rng rng(99);
    const std::vector<double> nus = {1.5, 2.5, 3.0};
    for (int t = 0; t < 50; ++t) {
      const int d = 1 + t % 2;
      const int n = t == 0 ? 80 : 10 + static_cast<int>(rng.uniform() * 190);
      const double lambda = t == 0 ? 0.05 : std::pow(10.0, -4.0 + 4.0 * rng.uniform());
      const MaternKernel k(nus[t % 3], 0.5 + 2.0 * rng.uniform(), d);
      const Design X = uniform_design(n, d, 2000 + t);
      KernelExpansion f{uniform_design(5, d, 3000 + t), Vector(5)};
      for (int j = 0; j < 5; ++j) f.coeffs[j] = rng.normal();
      Vector x0(d);
      for (int j = 0; j < d; ++j) x0[j] = rng.uniform();
      const Functional g = (t % 2 == 0) ? Functional::point(x0) : Functional::deriv(x0, MultiIndex::unit(d, d - 1));
      const IdentityCheck c = bias_oracle(X, k, lambda, f, g);
      CHECK(c.rel_err <= 1e-8);
      // |BIAS_f| <= ||f||_H ||g_hat - g||_H
      const Matrix Kc = gram(k, f.centers);
      const double fnorm = std::sqrt(f.coeffs.dot(Kc * f.coeffs));
      CHECK(std::abs(c.lhs) <= fnorm * worst_case_bias(X, k, lambda, g) * (1 + 1e-8) + 1e-12);
    }
  }
  SUBCASE("second-order functionals are rejected") {
    const Design X = uniform_design(10, 1, 3);
    const MaternKernel k(3.0, 1.0, 1);
    const KernelExpansion f{X, Vector::Ones(10)};
    CHECK_THROWS_AS(bias_oracle(X, k, 0.1, f, Functional::deriv(vec1(0.5), MultiIndex({2}))), InvalidArgument);
    CHECK_THROWS_AS(worst_case_bias(X, k, 0.1, Functional::deriv(vec1(0.5), MultiIndex({2}))), InvalidArgument);
  }
}

TEST_CASE("worst-case bias") {
  const MaternKernel k(3.0, 1.0, 1);
  const Design X = uniform_design(25, 1, 6);
  const Vector x0 = X.row(4).transpose();
  CHECK(worst_case_bias(X, k, 1e-12, Functional::point(x0)) <= 1e-5);
  double prev = 0.0;
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const double b = worst_case_bias(X, k, lambda, Functional::point(vec1(0.5)));
    CHECK(b > prev);
    CHECK(b <= std::sqrt(Functional::point(vec1(0.5)).rkhs_norm_sq(k)) * (1 + 1e-12));
    prev = b;
  }
  CHECK(Functional::point(vec1(0.5)).rkhs_norm_sq(k) == 1.0);
  CHECK(Functional::deriv(vec1(0.5), MultiIndex({1})).rkhs_norm_sq(k) == doctest::Approx(-k.radial(0.0, 2)).epsilon(1e-14));
}
