#pragma once
// Parameter-free target distributions F_Z. All log-quantities are evaluated
// in log space so that |z| in the hundreds stays finite.

#include "tramsurv/core.hpp"

namespace tramsurv::target {

double cdf(Family f, double z) noexcept;
double survivor(Family f, double z) noexcept;
double density(Family f, double z) noexcept;

double log_cdf(Family f, double z) noexcept;
double log_survivor(Family f, double z) noexcept;
double log_density(Family f, double z) noexcept;

// Derivatives with respect to z, used by the likelihood gradient.
double d_log_cdf(Family f, double z) noexcept;
double d_log_survivor(Family f, double z) noexcept;
double d_log_density(Family f, double z) noexcept;

/// Inverse CDF; throws ProbabilityOutOfRange unless 0 < p < 1.
double quantile(Family f, double p);

}  // namespace tramsurv::target
