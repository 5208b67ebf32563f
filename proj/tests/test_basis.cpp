#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "tramsurv/basis.hpp"
#include "tramsurv/error.hpp"
#include "tramsurv/random.hpp"

using namespace tramsurv;
using doctest::Approx;

TEST_CASE("bernstein basis values") {
  const auto b0 = bernstein_eval(2, 0.0);
  CHECK(b0 == std::vector<double>{1.0, 0.0, 0.0});
  const auto bh = bernstein_eval(2, 0.5);
  CHECK(bh[0] == Approx(0.25));
  CHECK(bh[1] == Approx(0.5));
  CHECK(bh[2] == Approx(0.25));
  const auto b5 = bernstein_eval(5, 0.37);
  CHECK(std::accumulate(b5.begin(), b5.end(), 0.0) == Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(bernstein_eval(0, 0.5), Error);
}

TEST_CASE("bernstein basis matches the binomial formula and sums to one") {
  for (int k = 1; k <= 20; ++k) {
    for (int i = 0; i <= 50; ++i) {
      const double u = i / 50.0;
      const auto b = bernstein_eval(k, u);
      const auto ref = oracle::bernstein_naive(k, u);
      double sum = 0.0;
      for (int j = 0; j <= k; ++j) {
        CHECK(std::abs(b[j] - ref[j]) < 1e-12);
        sum += b[j];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("bernstein derivative") {
  const std::vector<double> lin{0.0, 1.0, 2.0};
  for (double u : {0.0, 0.2, 0.7, 1.0}) CHECK(bernstein_deriv(2, u, lin) == Approx(2.0));
  const double g = 0.7;
  const std::vector<double> gap{1.0, 1.0 + g, 1.0 + 2 * g, 1.0 + 3 * g};
  CHECK(bernstein_deriv(3, 0.41, gap) == Approx(3 * g));

  rng::Stream rs(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> theta(5);
    theta[0] = rs.normal();
    for (int j = 1; j < 5; ++j) theta[j] = theta[j - 1] + rs.uniform(0.1, 2.0);
    const double u = rs.uniform(0.05, 0.95);
    auto value = [&](double v) {
      const auto b = bernstein_eval(4, v);
      return std::inner_product(b.begin(), b.end(), theta.begin(), 0.0);
    };
    const double h = 1e-6;
    const double fd = (value(u + h) - value(u - h)) / (2 * h);
    const double d = bernstein_deriv(4, u, theta);
    CHECK(std::abs(d - fd) <= 1e-6 * std::max(1.0, std::abs(d)));
  }
}

TEST_CASE("monotone reparameterization") {
  const auto t1 = monotone_reparam(std::vector<double>{1.0, 0.0});
  CHECK(t1[0] == 1.0);
  CHECK(t1[1] == Approx(1.0 + std::numbers::ln2));
  const auto t2 = monotone_reparam(std::vector<double>{0.0, 0.0, 0.0});
  CHECK(t2[1] == Approx(std::numbers::ln2));
  CHECK(t2[2] == Approx(2 * std::numbers::ln2));
  const auto t3 = monotone_reparam(std::vector<double>{-3.0, 20.0});
  CHECK(t3[1] == Approx(17.0).epsilon(1e-8));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(1.3) == Approx(oracle::softplus_naive(1.3)));
  CHECK(softplus(softplus_inverse(0.37)) == Approx(0.37).epsilon(1e-14));
  CHECK(softplus(softplus_inverse(45.0)) == Approx(45.0).epsilon(1e-14));

  rng::Stream rs(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> gamma(7);
    for (double& v : gamma) v = 5.0 * rs.normal();
    const auto theta = monotone_reparam(gamma);
    for (std::size_t k = 1; k < theta.size(); ++k) CHECK(theta[k] > theta[k - 1]);
  }
}

TEST_CASE("monotone reparameterization backward matches finite differences") {
  rng::Stream rs(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> gamma(6), up(6);
    for (double& v : gamma) v = 2.0 * rs.normal();
    for (double& v : up) v = rs.normal();
    std::vector<double> grad(6, 0.0);
    monotone_reparam_backward(gamma, up, grad);
    auto f = [&](const std::vector<double>& g) {
      const auto th = monotone_reparam(g);
      return std::inner_product(th.begin(), th.end(), up.begin(), 0.0);
    };
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(oracle::gradient_error(grad[i], oracle::central_difference(f, gamma, i, 1e-6)) < 1e-7);
    }
  }
}

TEST_CASE("curve with monotone coefficients is increasing and extrapolates linearly") {
  rng::Stream rs(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> gamma(7);
    for (double& v : gamma) v = 3.0 * rs.normal();
    const BernsteinCurve c(monotone_reparam(gamma));
    double prev = c.value(-0.5);
    for (int i = 1; i <= 1000; ++i) {
      const double u = -0.5 + 2.0 * i / 1000.0;
      const double v = c.value(u);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(c.value(1.5) == Approx(c.value(1.0) + 0.5 * c.slope(1.0)));
    CHECK(c.value(-0.25) == Approx(c.value(0.0) - 0.25 * c.slope(0.0)));
    CHECK(c.slope(2.0) == Approx(c.slope(1.0)));
  }
}

TEST_CASE("curve gradients with respect to the coefficients") {
  const std::vector<double> theta{-1.0, 0.0, 0.5, 2.0};
  const BernsteinCurve c(theta);
  for (double u : {-0.3, 0.0, 0.4, 1.0, 1.7}) {
    std::vector<double> dv(4), ds(4);
    c.grad(u, dv, ds);
    for (std::size_t k = 0; k < 4; ++k) {
      auto th = theta;
      th[k] += 1e-6;
      const BernsteinCurve up(th);
      th[k] -= 2e-6;
      const BernsteinCurve down(th);
      CHECK(dv[k] == Approx((up.value(u) - down.value(u)) / 2e-6).epsilon(1e-6));
      CHECK(ds[k] == Approx((up.slope(u) - down.slope(u)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("log-time scaler") {
  SurvivalDataset ds;
  ds.observations = {Observation::exact(1.0, {}), Observation::exact(std::exp(1.0), {}),
                     Observation::right(std::exp(2.0), {})};
  auto s = fit_scaler(ds);
  CHECK(s.a_lo == Approx(0.0));
  CHECK(s.b_hi == Approx(2.0));
  CHECK(s.scale(1.0) == Approx(0.5));

  ds.observations = {Observation::exact(1.0, {}), Observation::exact(std::exp(2.0), {})};
  s = fit_scaler(ds, 0.05);
  CHECK(s.a_lo == Approx(-0.1));
  CHECK(s.b_hi == Approx(2.1));

  ds.observations = {Observation::exact(1.0, {}), Observation::exact(1.0, {})};
  s = fit_scaler(ds);
  CHECK(s.a_lo == Approx(-0.5));
  CHECK(s.b_hi == Approx(0.5));
}
