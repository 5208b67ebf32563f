#include <cstdlib>
#include <string_view>

#include "tramsurv/kernels.hpp"

namespace tramsurv::kernels {

namespace {

using DotFn = double (*)(std::span<const double>, std::span<const double>) noexcept;
using AxpyFn = void (*)(double, std::span<const double>, std::span<double>) noexcept;

struct Table {
  Isa isa;
  DotFn dot;
  AxpyFn axpy;
};

constexpr Table kScalar{Isa::Scalar, &scalar::dot, &scalar::axpy};
#if defined(TRAMSURV_HAVE_AVX2)
constexpr Table kAvx2{Isa::Avx2, &avx2::dot, &avx2::axpy};
#endif

bool cpu_has_avx2() noexcept {
#if defined(TRAMSURV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Table select_initial() noexcept {
  if (const char* env = std::getenv("TRAMSURV_ISA")) {
    if (std::string_view(env) == "scalar") return kScalar;
  }
#if defined(TRAMSURV_HAVE_AVX2)
  if (cpu_has_avx2()) return kAvx2;
#endif
  return kScalar;
}

Table& table() noexcept {
  static Table t = select_initial();
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() noexcept {
  static const bool available = cpu_has_avx2();
  return available;
}

Isa active_isa() noexcept { return table().isa; }

bool set_isa(Isa isa) noexcept {
  if (isa == Isa::Scalar) {
    table() = kScalar;
    return true;
  }
#if defined(TRAMSURV_HAVE_AVX2)
  if (avx2_available()) {
    table() = kAvx2;
    return true;
  }
#endif
  table() = kScalar;
  return false;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return table().dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  table().axpy(alpha, x, y);
}

void gemv(std::span<const double> w, std::span<const double> x,
          std::span<const double> bias, std::span<double> y) noexcept {
  const std::size_t cols = x.size();
  const DotFn d = table().dot;
  for (std::size_t r = 0; r < y.size(); ++r) {
    y[r] = d(w.subspan(r * cols, cols), x) + bias[r];
  }
}

void gemv_transpose_acc(std::span<const double> w, std::span<const double> delta,
                        std::span<double> x_grad) noexcept {
  const std::size_t cols = x_grad.size();
  const AxpyFn ax = table().axpy;
  for (std::size_t r = 0; r < delta.size(); ++r) {
    if (delta[r] != 0.0) ax(delta[r], w.subspan(r * cols, cols), x_grad);
  }
}

void outer_acc(std::span<const double> delta, std::span<const double> x,
               std::span<double> w_grad) noexcept {
  const std::size_t cols = x.size();
  const AxpyFn ax = table().axpy;
  for (std::size_t r = 0; r < delta.size(); ++r) {
    if (delta[r] != 0.0) ax(delta[r], x, w_grad.subspan(r * cols, cols));
  }
}

}  // namespace tramsurv::kernels
