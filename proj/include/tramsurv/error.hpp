#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tramsurv {

enum class ErrorCode {
  // dataset
  NonPositiveTime,
  InvertedInterval,
  InconsistentCensoring,
  RaggedCovariates,
  NonFiniteCovariate,
  EmptyDataset,
  AllCensored,
  // artifacts
  MalformedArtifact,
  SchemaVersionMismatch,
  // numerics
  InvalidOrder,
  ProbabilityOutOfRange,
  DimensionMismatch,
  TapeMismatch,
  DegenerateInterval,
  NonFiniteLoss,
  NoComparablePairs,
  UnsupportedCensoringKind,
  QuadratureNonConvergence,
  SchemaMismatch,
  InvalidArgument,
  // cli / io
  MissingColumn,
  BadStatusValue,
  NonNumericCovariate,
  DataNotFound,
  ModelNotFound,
  SpecNotFound,
  IoError,
};

/// Stable machine-readable identifier, e.g. "E_MODEL_NOT_FOUND".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Library-wide exception. `index` is the offending element (observation,
/// row, epoch) when one is meaningful.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace tramsurv
