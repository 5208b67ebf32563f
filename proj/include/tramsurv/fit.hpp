#pragma once
// Censored negative log-likelihood, its gradient, SGD training with early
// stopping, and bootstrap deep ensembles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tramsurv/core.hpp"
#include "tramsurv/transform.hpp"

namespace tramsurv {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 32;
  double lr_extractor = 0.001;
  double lr_head = 0.1;
  int early_stopping_patience = 20;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  double momentum = 0.0;
  double clip_norm = 10.0;
};

/// Copies epochs, learning rates, patience and seed from the spec.
TrainConfig train_config_from_spec(const ModelSpec& spec);

void validate_train_config(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Likelihood

/// Flat parameter vector: head parameters followed by extractor parameters.
std::vector<double> model_parameters(const FittedModel& model);
void set_model_parameters(FittedModel& model, std::span<const double> params);

double nll_observation(const FittedModel& model, const Observation& obs);

struct BatchNll {
  double nll = 0.0;               // sum over the batch
  std::vector<double> gradient;   // d nll / d model_parameters()
  std::size_t clamped = 0;        // interval terms that hit the epsilon floor
};

BatchNll nll_batch(const FittedModel& model, std::span<const Observation> observations);

/// Sum of per-observation NLLs without the gradient.
double nll_sum(const FittedModel& model, std::span<const Observation> observations);

// ---------------------------------------------------------------------------
// Training

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Deterministic shuffle-and-cut. A split that would leave either side empty
/// validates on the training rows.
Split validation_split(std::size_t n, double validation_fraction, std::uint64_t seed);

/// n draws with replacement; out-of-bag rows form the validation set.
Split bootstrap_split(std::size_t n, std::uint64_t seed, std::size_t member);

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0.0;
  double validation_nll = 0.0;
  double grad_norm = 0.0;   // mean pre-clipping norm over the epoch's steps
  std::size_t clipped = 0;  // steps whose gradient was rescaled
};

struct FitResult {
  FittedModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 means the initial parameters were never improved on
  std::size_t interval_clamps = 0;
};

/// Starting parameters for SGD given the scaler.
FittedModel initial_model(const ModelSpec& spec, const LogTimeScaler& scaler, std::uint64_t seed);

/// Per-parameter learning rates aligned with model_parameters().
std::vector<double> learning_rates(const ModelSpec& spec, const TrainConfig& config);

FitResult fit_split(const SurvivalDataset& dataset, const ModelSpec& spec,
                    const TrainConfig& config, const Split& split, const LogTimeScaler& scaler);

/// Fits the scaler on the whole dataset, splits off a validation set and
/// trains. Deterministic given config.seed.
FitResult fit(const SurvivalDataset& dataset, const ModelSpec& spec, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleModel {
  std::vector<FittedModel> members;
  std::vector<double> member_validation_nlls;
};

struct EnsembleCandidate {
  std::size_t member = 0;
  std::uint64_t seed = 0;
  double validation_nll = 0.0;
  bool selected = false;
};

struct EnsembleResult {
  EnsembleModel ensemble;
  std::vector<EnsembleCandidate> candidates;  // all B fits, in training order
  std::vector<FitResult> fits;                // all B fits, in training order
};

/// Config for bootstrap member `member`: same hyperparameters, derived seed.
TrainConfig member_config(const TrainConfig& config, std::size_t member);

/// Indices of the M smallest validation NLLs, ties broken by seed.
std::vector<std::size_t> select_top(std::span<const double> validation_nlls,
                                    std::span<const std::uint64_t> seeds, std::size_t m);

/// Trains B bootstrap members (on up to `jobs` threads) and keeps the M with
/// the lowest out-of-bag NLL. All members share one scaler fitted on the
/// full dataset.
EnsembleResult fit_ensemble(const SurvivalDataset& dataset, const ModelSpec& spec,
                            const TrainConfig& config, std::size_t b, std::size_t m,
                            std::size_t jobs = 1);

/// Point-wise average of the members' conditional CDFs.
class EnsembleDistribution final : public PredictiveDistribution {
 public:
  explicit EnsembleDistribution(std::vector<ConditionalDistribution> members);

  double cdf(double t) const override;
  double survivor(double t) const override;
  double pdf(double t) const override;
  double quantile(double p) const override;
  double nll(const Observation& obs) const override;

  std::span<const ConditionalDistribution> members() const noexcept { return members_; }

 private:
  std::vector<ConditionalDistribution> members_;
};

EnsembleDistribution ensemble_distribution(const EnsembleModel& ensemble,
                                           std::span<const double> x);

double ensemble_cdf(const EnsembleModel& ensemble, std::span<const double> x, double t);

}  // namespace tramsurv
