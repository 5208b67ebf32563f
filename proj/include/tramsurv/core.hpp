#pragma once
// Domain types shared across the library: observations and datasets, model
// specifications, and fitted-model artifacts.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace tramsurv {

inline constexpr int kSchemaVersion = 1;

enum class CensoringKind { Exact, Right, Left, Interval };

std::string_view to_string(CensoringKind kind) noexcept;
CensoringKind censoring_from_string(std::string_view s);

/// One subject. Exact: lower == upper. Right: upper == +inf. Left: the event
/// happened somewhere in (0, lower]; upper == lower. Interval: (lower, upper].
struct Observation {
  double time_lower = 1.0;
  double time_upper = 1.0;
  CensoringKind censoring = CensoringKind::Exact;
  std::vector<double> covariates;

  static Observation exact(double t, std::vector<double> x);
  static Observation right(double t, std::vector<double> x);
  static Observation left(double t, std::vector<double> x);
  static Observation interval(double lo, double hi, std::vector<double> x);

  bool is_event() const noexcept { return censoring == CensoringKind::Exact; }

  bool operator==(const Observation&) const = default;
};

struct SurvivalDataset {
  std::vector<Observation> observations;
  std::vector<std::string> feature_names;

  std::size_t size() const noexcept { return observations.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }

  SurvivalDataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const SurvivalDataset&) const = default;
};

enum class ValidationMode { Scoring, Fitting };

/// Returns the dataset unchanged when every observation is well formed;
/// throws tramsurv::Error naming the first offending index otherwise.
SurvivalDataset validate_dataset(SurvivalDataset raw,
                                 ValidationMode mode = ValidationMode::Scoring);

// ---------------------------------------------------------------------------
// Model specification

enum class Family { Logistic, MinimumExtremeValue };
enum class Parameterization {
  Baseline,
  LinearShift,
  LinearScale,
  BernsteinShift,
  BernsteinShiftScale,
  BernsteinFlexible,
};
enum class Activation { Tanh, ReLU };

std::string_view to_string(Family f) noexcept;
std::string_view to_string(Parameterization p) noexcept;
std::string_view to_string(Activation a) noexcept;
Family family_from_string(std::string_view s);
Parameterization parameterization_from_string(std::string_view s);
Activation activation_from_string(std::string_view s);

bool uses_bernstein(Parameterization p) noexcept;
bool uses_extractor(Parameterization p) noexcept;

struct ExtractorSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  Activation activation = Activation::Tanh;
  double init_scale = 1.0;

  bool operator==(const ExtractorSpec&) const = default;
};

inline constexpr int kDefaultBernsteinOrder = 6;

struct ModelSpec {
  Family family = Family::Logistic;
  Parameterization parameterization = Parameterization::BernsteinShift;
  int bernstein_order = kDefaultBernsteinOrder;
  ExtractorSpec extractor;
  double lr_extractor = 0.001;
  double lr_head = 0.1;
  int epochs = 200;
  int early_stopping_patience = 20;
  std::uint64_t seed = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Learning rates used for each (parameterization, family) pair during the
/// original grid search; extractor rate is 0.001 throughout.
struct LearningRates {
  double extractor;
  double head;
};
LearningRates default_learning_rates(Parameterization p, Family f) noexcept;

/// Throws InvalidArgument / InvalidOrder when the spec is unusable.
void validate_spec(const ModelSpec& spec);

/// Affine map of log-time onto the unit interval.
struct LogTimeScaler {
  double a_lo = 0.0;
  double b_hi = 1.0;

  double scale(double log_t) const noexcept { return (log_t - a_lo) / (b_hi - a_lo); }
  double width() const noexcept { return b_hi - a_lo; }

  bool operator==(const LogTimeScaler&) const = default;
};

struct FittedModel {
  ModelSpec spec;
  LogTimeScaler scaler;
  std::vector<double> head_params;
  std::vector<double> extractor_params;
  double train_nll = 0.0;
  double validation_nll = 0.0;

  bool operator==(const FittedModel&) const = default;
};

// ---------------------------------------------------------------------------
// Artifact (JSON) serialization

std::string serialize_model(const FittedModel& model);
FittedModel deserialize_model(std::string_view bytes);

}  // namespace tramsurv
