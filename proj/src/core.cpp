#include "tramsurv/core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "tramsurv/error.hpp"
#include "tramsurv/feature.hpp"
#include "tramsurv/transform.hpp"

namespace tramsurv {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(CensoringKind kind) noexcept {
  switch (kind) {
    case CensoringKind::Exact: return "exact";
    case CensoringKind::Right: return "right";
    case CensoringKind::Left: return "left";
    case CensoringKind::Interval: return "interval";
  }
  return "exact";
}

CensoringKind censoring_from_string(std::string_view s) {
  if (s == "exact") return CensoringKind::Exact;
  if (s == "right") return CensoringKind::Right;
  if (s == "left") return CensoringKind::Left;
  if (s == "interval") return CensoringKind::Interval;
  throw Error(ErrorCode::BadStatusValue, "unknown censoring status '" + std::string(s) + "'");
}

Observation Observation::exact(double t, std::vector<double> x) {
  return {t, t, CensoringKind::Exact, std::move(x)};
}
Observation Observation::right(double t, std::vector<double> x) {
  return {t, kInf, CensoringKind::Right, std::move(x)};
}
Observation Observation::left(double t, std::vector<double> x) {
  return {t, t, CensoringKind::Left, std::move(x)};
}
Observation Observation::interval(double lo, double hi, std::vector<double> x) {
  return {lo, hi, CensoringKind::Interval, std::move(x)};
}

SurvivalDataset SurvivalDataset::subset(const std::vector<std::size_t>& indices) const {
  SurvivalDataset out;
  out.feature_names = feature_names;
  out.observations.reserve(indices.size());
  for (std::size_t i : indices) out.observations.push_back(observations.at(i));
  return out;
}

SurvivalDataset validate_dataset(SurvivalDataset raw, ValidationMode mode) {
  if (raw.observations.empty()) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
  const std::size_t p = raw.feature_names.size();
  bool any_event = false;
  for (std::size_t i = 0; i < raw.observations.size(); ++i) {
    const Observation& o = raw.observations[i];
    const std::string at = " (observation " + std::to_string(i) + ")";
    if (!(o.time_lower > 0.0) || !std::isfinite(o.time_lower)) {
      throw Error(ErrorCode::NonPositiveTime, "time must be positive and finite" + at, i);
    }
    if (std::isnan(o.time_upper) || o.time_upper < o.time_lower) {
      throw Error(ErrorCode::InvertedInterval, "upper time precedes lower time" + at, i);
    }
    switch (o.censoring) {
      case CensoringKind::Exact:
      case CensoringKind::Left:
        if (o.time_upper != o.time_lower) {
          throw Error(ErrorCode::InconsistentCensoring,
                      std::string(to_string(o.censoring)) + " requires a single time" + at, i);
        }
        break;
      case CensoringKind::Right:
        if (o.time_upper != kInf) {
          throw Error(ErrorCode::InconsistentCensoring,
                      "right-censored observation requires an infinite upper time" + at, i);
        }
        break;
      case CensoringKind::Interval:
        break;
    }
    if (o.covariates.size() != p) {
      throw Error(ErrorCode::RaggedCovariates,
                  "expected " + std::to_string(p) + " covariates, got " +
                      std::to_string(o.covariates.size()) + at,
                  i);
    }
    for (double v : o.covariates) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteCovariate, "covariates must be finite" + at, i);
      }
    }
    any_event = any_event || o.is_event();
  }
  if (mode == ValidationMode::Fitting && !any_event) {
    throw Error(ErrorCode::AllCensored, "fitting requires at least one exact event time");
  }
  return raw;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Family f) noexcept {
  return f == Family::Logistic ? "logistic" : "minimum_extreme_value";
}

std::string_view to_string(Parameterization p) noexcept {
  switch (p) {
    case Parameterization::Baseline: return "baseline";
    case Parameterization::LinearShift: return "linear_shift";
    case Parameterization::LinearScale: return "linear_scale";
    case Parameterization::BernsteinShift: return "bernstein_shift";
    case Parameterization::BernsteinShiftScale: return "bernstein_shift_scale";
    case Parameterization::BernsteinFlexible: return "bernstein_flexible";
  }
  return "baseline";
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Family family_from_string(std::string_view s) {
  if (s == "logistic" || s == "sigmoid") return Family::Logistic;
  if (s == "minimum_extreme_value" || s == "mev" || s == "gompertz") {
    return Family::MinimumExtremeValue;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown target family '" + std::string(s) + "'");
}

Parameterization parameterization_from_string(std::string_view s) {
  for (auto p : {Parameterization::Baseline, Parameterization::LinearShift,
                 Parameterization::LinearScale, Parameterization::BernsteinShift,
                 Parameterization::BernsteinShiftScale, Parameterization::BernsteinFlexible}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown parameterization '" + std::string(s) + "'");
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::ReLU;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}

bool uses_bernstein(Parameterization p) noexcept {
  return p != Parameterization::LinearShift && p != Parameterization::LinearScale;
}

bool uses_extractor(Parameterization p) noexcept { return p != Parameterization::Baseline; }

LearningRates default_learning_rates(Parameterization p, Family f) noexcept {
  constexpr double kExtractor = 0.001;
  if (f == Family::Logistic) {
    switch (p) {
      case Parameterization::LinearShift:
      case Parameterization::BernsteinShiftScale: return {kExtractor, 0.01};
      default: return {kExtractor, 0.1};
    }
  }
  return {kExtractor, p == Parameterization::BernsteinFlexible ? 0.1 : 0.01};
}

void validate_spec(const ModelSpec& spec) {
  if (uses_bernstein(spec.parameterization) && spec.bernstein_order < 1) {
    throw Error(ErrorCode::InvalidOrder, "bernstein_order must be >= 1");
  }
  if (!(spec.lr_extractor > 0.0) || !(spec.lr_head > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning rates must be positive");
  }
  if (spec.epochs < 0 || spec.early_stopping_patience < 0) {
    throw Error(ErrorCode::InvalidArgument, "epochs and patience must be non-negative");
  }
  if (uses_extractor(spec.parameterization)) {
    validate_extractor_spec(spec.extractor);
    if (spec.parameterization == Parameterization::BernsteinFlexible &&
        spec.extractor.output_dim != static_cast<std::size_t>(spec.bernstein_order) + 1) {
      throw Error(ErrorCode::DimensionMismatch,
                  "bernstein_flexible needs extractor output_dim = bernstein_order + 1");
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json spec_to_json(const ModelSpec& s) {
  return json{
      {"family", to_string(s.family)},
      {"parameterization", to_string(s.parameterization)},
      {"bernstein_order", s.bernstein_order},
      {"extractor",
       {{"input_dim", s.extractor.input_dim},
        {"hidden_dims", s.extractor.hidden_dims},
        {"output_dim", s.extractor.output_dim},
        {"activation", to_string(s.extractor.activation)},
        {"init_scale", s.extractor.init_scale}}},
      {"lr_extractor", s.lr_extractor},
      {"lr_head", s.lr_head},
      {"epochs", s.epochs},
      {"early_stopping_patience", s.early_stopping_patience},
      {"seed", s.seed},
  };
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.family = family_from_string(j.at("family").get<std::string>());
  s.parameterization = parameterization_from_string(j.at("parameterization").get<std::string>());
  s.bernstein_order = j.at("bernstein_order").get<int>();
  const json& e = j.at("extractor");
  s.extractor.input_dim = e.at("input_dim").get<std::size_t>();
  s.extractor.hidden_dims = e.at("hidden_dims").get<std::vector<std::size_t>>();
  s.extractor.output_dim = e.at("output_dim").get<std::size_t>();
  s.extractor.activation = activation_from_string(e.at("activation").get<std::string>());
  s.extractor.init_scale = e.at("init_scale").get<double>();
  s.lr_extractor = j.at("lr_extractor").get<double>();
  s.lr_head = j.at("lr_head").get<double>();
  s.epochs = j.at("epochs").get<int>();
  s.early_stopping_patience = j.at("early_stopping_patience").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string serialize_model(const FittedModel& model) {
  const json j{
      {"schema_version", kSchemaVersion},
      {"spec", spec_to_json(model.spec)},
      {"scaler", {{"a_lo", model.scaler.a_lo}, {"b_hi", model.scaler.b_hi}}},
      {"head_params", model.head_params},
      {"extractor_params", model.extractor_params},
      {"train_nll", model.train_nll},
      {"validation_nll", model.validation_nll},
  };
  return j.dump(2) + "\n";
}

FittedModel deserialize_model(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedArtifact, std::string("model artifact: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") ||
      !j.at("schema_version").is_number_integer()) {
    throw Error(ErrorCode::MalformedArtifact, "model artifact: missing schema_version");
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch,
                "model artifact has schema_version " + std::to_string(version) +
                    ", reader supports " + std::to_string(kSchemaVersion));
  }
  FittedModel m;
  try {
    m.spec = spec_from_json(j.at("spec"));
    m.scaler.a_lo = j.at("scaler").at("a_lo").get<double>();
    m.scaler.b_hi = j.at("scaler").at("b_hi").get<double>();
    m.head_params = j.at("head_params").get<std::vector<double>>();
    m.extractor_params = j.at("extractor_params").get<std::vector<double>>();
    m.train_nll = j.at("train_nll").get<double>();
    m.validation_nll = j.at("validation_nll").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedArtifact, std::string("model artifact: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedArtifact, std::string("model artifact: ") + e.what());
  }
  try {
    validate_model(m);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedArtifact) throw;
    throw Error(ErrorCode::MalformedArtifact, std::string("model artifact: ") + e.what());
  }
  return m;
}

}  // namespace tramsurv
