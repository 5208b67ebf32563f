#include "tramsurv/sample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tramsurv/error.hpp"
#include "tramsurv/random.hpp"

namespace tramsurv {

double sample_time(const PredictiveDistribution& distribution, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "sample_time: u must lie in (0, 1)");
  }
  return distribution.quantile(u);
}

double synth_uniform(std::uint64_t seed, std::size_t subject, std::size_t replicate) noexcept {
  return rng::counter_uniform(seed, subject, replicate);
}

SurvivalDataset generate_semisynthetic(const FittedModel& model, const SurvivalDataset& dataset,
                                       const SynthConfig& config) {
  if (config.replication < 1) throw Error(ErrorCode::InvalidArgument, "replication must be >= 1");
  if (dataset.observations.empty()) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
  if (uses_extractor(model.spec.parameterization) &&
      dataset.num_features() != model.spec.extractor.input_dim) {
    throw Error(ErrorCode::SchemaMismatch,
                "model expects " + std::to_string(model.spec.extractor.input_dim) +
                    " covariates, dataset has " + std::to_string(dataset.num_features()));
  }
  double t_max = 0.0;
  for (const auto& o : dataset.observations) {
    t_max = std::max(t_max, o.time_lower);
    if (std::isfinite(o.time_upper)) t_max = std::max(t_max, o.time_upper);
  }

  SurvivalDataset out;
  out.feature_names = dataset.feature_names;
  out.observations.reserve(dataset.size() * config.replication);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& x = dataset.observations[i].covariates;
    if (x.size() != dataset.num_features()) {
      throw Error(ErrorCode::SchemaMismatch, "ragged covariates at row " + std::to_string(i), i);
    }
    const ConditionalDistribution dist = conditional_distribution(model, x);
    for (std::size_t r = 0; r < config.replication; ++r) {
      const double t = sample_time(dist, synth_uniform(config.seed, i, r));
      if (config.censor_at_max && t > t_max) {
        out.observations.push_back(Observation::right(t_max, x));
      } else {
        out.observations.push_back(Observation::exact(t, x));
      }
    }
  }
  return out;
}

}  // namespace tramsurv
