#include "tramsurv/target.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tramsurv/basis.hpp"
#include "tramsurv/error.hpp"

namespace tramsurv::target {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double cdf(Family f, double z) noexcept {
  if (f == Family::Logistic) return sigmoid(z);
  return -std::expm1(-std::exp(z));
}

double survivor(Family f, double z) noexcept {
  if (f == Family::Logistic) return sigmoid(-z);
  return std::exp(-std::exp(z));
}

double density(Family f, double z) noexcept { return std::exp(log_density(f, z)); }

double log_cdf(Family f, double z) noexcept {
  if (f == Family::Logistic) return -softplus(-z);
  if (z == -kInf) return -kInf;
  const double ez = std::exp(z);
  // 1 - exp(-e^z) = e^z (1 - e^z/2 + ...); avoids log(0) once e^z underflows.
  if (ez < 1e-10) return z + std::log1p(-0.5 * ez);
  return std::log(-std::expm1(-ez));
}

double log_survivor(Family f, double z) noexcept {
  if (f == Family::Logistic) return -softplus(z);
  return -std::exp(z);
}

double log_density(Family f, double z) noexcept {
  if (f == Family::Logistic) return -softplus(-z) - softplus(z);
  return z - std::exp(z);
}

double d_log_cdf(Family f, double z) noexcept {
  if (f == Family::Logistic) return sigmoid(-z);
  const double ez = std::exp(z);
  if (ez < 1e-300) return 1.0;
  if (ez > 700.0) return 0.0;
  // f / F = e^z exp(-e^z) / (1 - exp(-e^z)) = e^z / expm1(e^z)
  return ez / std::expm1(ez);
}

double d_log_survivor(Family f, double z) noexcept {
  if (f == Family::Logistic) return -sigmoid(z);
  return -std::exp(z);
}

double d_log_density(Family f, double z) noexcept {
  if (f == Family::Logistic) return 1.0 - 2.0 * sigmoid(z);
  return 1.0 - std::exp(z);
}

double quantile(Family f, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange,
                "quantile: probability must lie in (0, 1), got " + std::to_string(p));
  }
  if (f == Family::Logistic) return std::log(p) - std::log1p(-p);
  return std::log(-std::log1p(-p));
}

}  // namespace tramsurv::target
