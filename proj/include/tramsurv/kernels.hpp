#pragma once
// Dense inner-loop kernels used by the feature extractor and the optimizer.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID; setting
// TRAMSURV_ISA=scalar in the environment pins the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace tramsurv::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// True when the running CPU (and this build) can execute the AVX2 variants.
bool avx2_available() noexcept;

/// ISA used by the dispatching entry points below.
Isa active_isa() noexcept;

/// Overrides dispatch. Intended for tests and benchmarks; not thread-safe
/// with respect to concurrent kernel calls. Requesting Avx2 when it is not
/// available leaves the scalar path active and returns false.
bool set_isa(Isa isa) noexcept;

// Dispatching entry points. Spans must have equal lengths.
double dot(std::span<const double> a, std::span<const double> b) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

/// y = W x + bias, W row-major with y.size() rows and x.size() columns.
void gemv(std::span<const double> w, std::span<const double> x,
          std::span<const double> bias, std::span<double> y) noexcept;

/// x_grad += W^T delta, W row-major with delta.size() rows.
void gemv_transpose_acc(std::span<const double> w, std::span<const double> delta,
                        std::span<double> x_grad) noexcept;

/// W_grad += delta x^T (row-major).
void outer_acc(std::span<const double> delta, std::span<const double> x,
               std::span<double> w_grad) noexcept;

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
}  // namespace avx2
#endif

}  // namespace tramsurv::kernels
