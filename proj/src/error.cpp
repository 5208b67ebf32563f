#include "tramsurv/error.hpp"

namespace tramsurv {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveTime: return "E_NON_POSITIVE_TIME";
    case ErrorCode::InvertedInterval: return "E_INVERTED_INTERVAL";
    case ErrorCode::InconsistentCensoring: return "E_INCONSISTENT_CENSORING";
    case ErrorCode::RaggedCovariates: return "E_RAGGED_COVARIATES";
    case ErrorCode::NonFiniteCovariate: return "E_NON_FINITE_COVARIATE";
    case ErrorCode::EmptyDataset: return "E_EMPTY_DATASET";
    case ErrorCode::AllCensored: return "E_ALL_CENSORED";
    case ErrorCode::MalformedArtifact: return "E_MALFORMED_ARTIFACT";
    case ErrorCode::SchemaVersionMismatch: return "E_SCHEMA_VERSION_MISMATCH";
    case ErrorCode::InvalidOrder: return "E_INVALID_ORDER";
    case ErrorCode::ProbabilityOutOfRange: return "E_PROBABILITY_OUT_OF_RANGE";
    case ErrorCode::DimensionMismatch: return "E_DIMENSION_MISMATCH";
    case ErrorCode::TapeMismatch: return "E_TAPE_MISMATCH";
    case ErrorCode::DegenerateInterval: return "E_DEGENERATE_INTERVAL";
    case ErrorCode::NonFiniteLoss: return "E_NON_FINITE_LOSS";
    case ErrorCode::NoComparablePairs: return "E_NO_COMPARABLE_PAIRS";
    case ErrorCode::UnsupportedCensoringKind: return "E_UNSUPPORTED_CENSORING_KIND";
    case ErrorCode::QuadratureNonConvergence: return "E_QUADRATURE_NON_CONVERGENCE";
    case ErrorCode::SchemaMismatch: return "E_SCHEMA_MISMATCH";
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::MissingColumn: return "E_MISSING_COLUMN";
    case ErrorCode::BadStatusValue: return "E_BAD_STATUS_VALUE";
    case ErrorCode::NonNumericCovariate: return "E_NON_NUMERIC_COVARIATE";
    case ErrorCode::DataNotFound: return "E_DATA_NOT_FOUND";
    case ErrorCode::ModelNotFound: return "E_MODEL_NOT_FOUND";
    case ErrorCode::SpecNotFound: return "E_SPEC_NOT_FOUND";
    case ErrorCode::IoError: return "E_IO";
  }
  return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> index)
    : std::runtime_error(message), code_(code), index_(index) {}

}  // namespace tramsurv
