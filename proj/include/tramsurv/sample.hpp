#pragma once
// Inversion sampling and semi-synthetic data generation.

#include <cstddef>
#include <cstdint>

#include "tramsurv/core.hpp"
#include "tramsurv/transform.hpp"

namespace tramsurv {

struct SynthConfig {
  std::size_t replication = 10;
  bool censor_at_max = true;
  std::uint64_t seed = 0;
};

/// quantile(u) of the distribution. Throws ProbabilityOutOfRange unless 0 < u < 1.
double sample_time(const PredictiveDistribution& distribution, double u);

/// Uniform used for replicate r of subject i.
double synth_uniform(std::uint64_t seed, std::size_t subject, std::size_t replicate) noexcept;

/// `replication` draws per subject with copied covariates, subject-major.
/// Draws above the data's largest finite time become right-censored at it
/// when censor_at_max is set.
SurvivalDataset generate_semisynthetic(const FittedModel& model, const SurvivalDataset& dataset,
                                       const SynthConfig& config);

}  // namespace tramsurv
