#pragma once
// Dataset CSV ingestion/export and small file helpers.
//
// Columns: `time`, optional `time2`, `status` in {exact, right, left,
// interval}; every other column is a numeric covariate, in header order.

#include <filesystem>
#include <string>
#include <string_view>

#include "tramsurv/core.hpp"
#include "tramsurv/error.hpp"

namespace tramsurv {

/// Parses CSV text. Throws MissingColumn, BadStatusValue or
/// NonNumericCovariate with the 1-based data row as index.
SurvivalDataset parse_dataset_csv_text(std::string_view text);

/// Throws DataNotFound when the file does not exist.
SurvivalDataset parse_dataset_csv(const std::filesystem::path& path);

/// Round-trips through parse_dataset_csv_text at 17 significant digits.
std::string dataset_to_csv(const SurvivalDataset& dataset);

/// %.17g; infinities as inf / -inf.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path, ErrorCode missing);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace tramsurv
