#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tramsurv/error.hpp"
#include "tramsurv/feature.hpp"
#include "tramsurv/random.hpp"

using namespace tramsurv;

namespace {

std::vector<std::size_t> dims_of(const ExtractorSpec& s) {
  std::vector<std::size_t> d{s.input_dim};
  d.insert(d.end(), s.hidden_dims.begin(), s.hidden_dims.end());
  d.push_back(s.output_dim);
  return d;
}

ExtractorSpec random_spec(rng::Stream& rs, Activation act) {
  ExtractorSpec s;
  s.input_dim = 1 + rs.index(5);
  const std::size_t depth = rs.index(3);
  for (std::size_t i = 0; i < depth; ++i) s.hidden_dims.push_back(1 + rs.index(7));
  s.output_dim = 1 + rs.index(4);
  s.activation = act;
  return s;
}

}  // namespace

TEST_CASE("identity linear extractor") {
  ExtractorSpec s{2, {}, 2, Activation::Tanh, 1.0};
  const std::vector<double> params{1, 0, 0, 1, 0, 0};
  CHECK(extractor_features(s, params, std::vector<double>{1.0, 2.0}) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("zero weights give the output bias") {
  ExtractorSpec s{3, {4}, 2, Activation::ReLU, 1.0};
  const ExtractorLayout layout(s);
  std::vector<double> params(layout.parameter_count(), 0.0);
  params[layout.layers()[1].bias_offset] = 0.7;
  params[layout.layers()[1].bias_offset + 1] = -1.2;
  CHECK(extractor_features(s, params, std::vector<double>{5, 6, 7}) == std::vector<double>{0.7, -1.2});
}

TEST_CASE("parameter layout and initialization") {
  ExtractorSpec s{4, {8}, 2, Activation::Tanh, 1.0};
  CHECK(ExtractorLayout(s).parameter_count() == 58);
  CHECK(init_params(s, 7) == init_params(s, 7));
  CHECK(init_params(s, 7) != init_params(s, 8));
  const auto p = init_params(s, 7);
  CHECK(unflatten_params(s, p).size() == 2);
  CHECK(flatten_params(s, unflatten_params(s, p)) == p);
  CHECK_THROWS_AS(extractor_features(s, std::vector<double>(57), std::vector<double>(4)), Error);
  CHECK_THROWS_AS(extractor_features(s, p, std::vector<double>(3)), Error);
  ExtractorSpec bad{0, {}, 1, Activation::Tanh, 1.0};
  CHECK_THROWS_AS(validate_extractor_spec(bad), Error);
}

TEST_CASE("forward matches a direct matrix evaluation") {
  rng::Stream rs(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto act = trial % 2 ? Activation::ReLU : Activation::Tanh;
    const ExtractorSpec s = random_spec(rs, act);
    auto params = init_params(s, trial);
    for (double& v : params) v += 0.1 * rs.normal();
    std::vector<double> x(s.input_dim);
    for (double& v : x) v = rs.normal();
    const auto got = extractor_features(s, params, x);
    const auto want = oracle::mlp_direct(dims_of(s), params, x, act == Activation::ReLU);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
  }
}

TEST_CASE("backward: zero upstream and linear-map calculus") {
  ExtractorSpec s{3, {}, 2, Activation::Tanh, 1.0};
  const auto params = init_params(s, 1);
  const std::vector<double> x{0.5, -1.0, 2.0};
  const auto fw = extractor_forward(s, params, x);
  const auto g0 = extractor_backward(s, params, fw.tape, std::vector<double>{0.0, 0.0});
  for (double v : g0.params) CHECK(v == 0.0);
  const std::vector<double> u{1.5, -0.25};
  const auto g = extractor_backward(s, params, fw.tape, u);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(g.params[r * 3 + c] == doctest::Approx(u[r] * x[c]));
    CHECK(g.params[6 + r] == doctest::Approx(u[r]));
  }
}

TEST_CASE("backward matches finite differences of upstream'phi") {
  rng::Stream rs(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto act = trial % 2 ? Activation::ReLU : Activation::Tanh;
    const ExtractorSpec s = random_spec(rs, act);
    auto params = init_params(s, trial + 100);
    for (double& v : params) v += 0.2 * rs.normal();
    std::vector<double> x(s.input_dim), up(s.output_dim);
    for (double& v : x) v = rs.normal();
    for (double& v : up) v = rs.normal();
    const auto fw = extractor_forward(s, params, x);
    const auto g = extractor_backward(s, params, fw.tape, up);

    auto objective = [&](const std::vector<double>& p, const std::vector<double>& xx) {
      const auto f = extractor_features(s, p, xx);
      double v = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) v += up[i] * f[i];
      return v;
    };
    // Distance of the nearest hidden pre-activation from the ReLU kink.
    auto near_kink = [&](const std::vector<double>& p, const std::vector<double>& xx) {
      if (act != Activation::ReLU) return false;
      auto d = dims_of(s);
      std::vector<double> a = xx;
      std::size_t off = 0;
      for (std::size_t l = 0; l + 2 < d.size(); ++l) {
        std::vector<double> z(d[l + 1], 0.0);
        for (std::size_t r = 0; r < d[l + 1]; ++r) {
          for (std::size_t c = 0; c < d[l]; ++c) z[r] += p[off + r * d[l] + c] * a[c];
          z[r] += p[off + d[l] * d[l + 1] + r];
          if (std::abs(z[r]) < 1e-4) return true;
        }
        off += d[l] * d[l + 1] + d[l + 1];
        for (double& v : z) v = std::max(v, 0.0);
        a = z;
      }
      return false;
    };
    if (near_kink(params, x)) continue;
    const double tol = act == Activation::Tanh ? 1e-5 : 1e-4;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double step = 1e-6 * (1.0 + std::abs(params[i]));
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& p) { return objective(p, x); }, params, i, step);
      CHECK(oracle::gradient_error(g.params[i], fd) <= tol);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& xx) { return objective(params, xx); }, x, i, 1e-6);
      CHECK(oracle::gradient_error(g.input[i], fd) <= tol);
    }
  }
}
