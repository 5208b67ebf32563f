#include <doctest.h>

#include <cmath>
#include <vector>

#include "tramsurv/feature.hpp"
#include "tramsurv/kernels.hpp"
#include "tramsurv/random.hpp"

using namespace tramsurv;
namespace k = tramsurv::kernels;

namespace {

std::vector<double> random_vec(rng::Stream& rs, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rs.normal();
  return v;
}

// Restores the startup ISA when a test case ends.
struct IsaGuard {
  k::Isa saved = k::active_isa();
  ~IsaGuard() { k::set_isa(saved); }
};

}  // namespace

TEST_CASE("scalar path can always be selected") {
  IsaGuard guard;
  CHECK(k::set_isa(k::Isa::Scalar));
  CHECK(k::active_isa() == k::Isa::Scalar);
  CHECK(k::isa_name(k::Isa::Scalar) == "scalar");
  if (k::avx2_available()) {
    CHECK(k::set_isa(k::Isa::Avx2));
    CHECK(k::active_isa() == k::Isa::Avx2);
  } else {
    CHECK_FALSE(k::set_isa(k::Isa::Avx2));
  }
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 dot and axpy agree with the scalar reference") {
  if (!k::avx2_available()) return;
  rng::Stream rs(1);
  std::vector<double> pool_a = random_vec(rs, 200), pool_b = random_vec(rs, 200);
  for (std::size_t n = 0; n <= 67; ++n) {
    for (std::size_t off : {0u, 1u, 3u}) {
      std::span<const double> a(pool_a.data() + off, n), b(pool_b.data() + off, n);
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
      CHECK(std::abs(k::avx2::dot(a, b) - k::scalar::dot(a, b)) <= 1e-14 * (mag + 1.0));

      std::vector<double> y1(pool_b.begin() + off, pool_b.begin() + off + n), y2 = y1;
      k::scalar::axpy(0.37, a, y1);
      k::avx2::axpy(0.37, a, y2);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y1[i]) + 1.0));
    }
  }
}
#endif

TEST_CASE("matrix kernels agree across ISAs and with direct loops") {
  IsaGuard guard;
  rng::Stream rs(2);
  for (std::size_t rows : {1u, 3u, 8u, 13u}) {
    for (std::size_t cols : {1u, 4u, 7u, 33u}) {
      const auto w = random_vec(rs, rows * cols);
      const auto x = random_vec(rs, cols);
      const auto bias = random_vec(rs, rows);
      const auto delta = random_vec(rs, rows);

      std::vector<double> y_ref(rows), xg_ref(cols, 0.5), wg_ref(rows * cols, 0.25);
      for (std::size_t r = 0; r < rows; ++r) {
        y_ref[r] = bias[r];
        for (std::size_t c = 0; c < cols; ++c) {
          y_ref[r] += w[r * cols + c] * x[c];
          xg_ref[c] += w[r * cols + c] * delta[r];
          wg_ref[r * cols + c] += delta[r] * x[c];
        }
      }
      for (auto isa : {k::Isa::Scalar, k::Isa::Avx2}) {
        if (!k::set_isa(isa)) continue;
        std::vector<double> y(rows), xg(cols, 0.5), wg(rows * cols, 0.25);
        k::gemv(w, x, bias, y);
        k::gemv_transpose_acc(w, delta, xg);
        k::outer_acc(delta, x, wg);
        for (std::size_t r = 0; r < rows; ++r) CHECK(y[r] == doctest::Approx(y_ref[r]).epsilon(1e-12));
        for (std::size_t c = 0; c < cols; ++c) CHECK(xg[c] == doctest::Approx(xg_ref[c]).epsilon(1e-12));
        for (std::size_t i = 0; i < wg.size(); ++i) CHECK(wg[i] == doctest::Approx(wg_ref[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("extractor forward and backward agree across ISAs") {
  IsaGuard guard;
  ExtractorSpec spec{9, {16, 8}, 5, Activation::Tanh, 1.0};
  const auto params = init_params(spec, 4);
  rng::Stream rs(3);
  const auto x = random_vec(rs, 9);
  const auto up = random_vec(rs, 5);
  k::set_isa(k::Isa::Scalar);
  const auto f_s = extractor_forward(spec, params, x);
  const auto g_s = extractor_backward(spec, params, f_s.tape, up);
  if (!k::set_isa(k::Isa::Avx2)) return;
  const auto f_v = extractor_forward(spec, params, x);
  const auto g_v = extractor_backward(spec, params, f_v.tape, up);
  for (std::size_t i = 0; i < 5; ++i) CHECK(f_v.features[i] == doctest::Approx(f_s.features[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(std::abs(g_v.params[i] - g_s.params[i]) <= 1e-12 * (std::abs(g_s.params[i]) + 1.0));
  }
}
