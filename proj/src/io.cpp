#include "tramsurv/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace tramsurv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

SurvivalDataset parse_dataset_csv_text(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!trim(line).empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw Error(ErrorCode::MissingColumn, "csv: missing header row");

  const auto header = split_fields(lines.front());
  std::optional<std::size_t> c_time, c_time2, c_status;
  std::vector<std::size_t> c_cov;
  SurvivalDataset ds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "time") {
      c_time = j;
    } else if (header[j] == "time2") {
      c_time2 = j;
    } else if (header[j] == "status") {
      c_status = j;
    } else {
      c_cov.push_back(j);
      ds.feature_names.emplace_back(header[j]);
    }
  }
  if (!c_time) throw Error(ErrorCode::MissingColumn, "csv: missing column 'time'");
  if (!c_status) throw Error(ErrorCode::MissingColumn, "csv: missing column 'status'");

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_fields(lines[r]);
    const std::string at = " at row " + std::to_string(r);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::RaggedCovariates,
                  "csv: expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(f.size()) + at,
                  r);
    }
    auto number = [&](std::size_t col) {
      const auto v = parse_number(f[col]);
      if (!v) {
        throw Error(ErrorCode::NonNumericCovariate,
                    "csv: non-numeric value '" + std::string(f[col]) + "' in column '" +
                        std::string(header[col]) + "'" + at,
                    r);
      }
      return *v;
    };
    CensoringKind kind;
    try {
      kind = censoring_from_string(f[*c_status]);
    } catch (const Error& e) {
      throw Error(ErrorCode::BadStatusValue, e.what() + at, r);
    }
    Observation o;
    o.censoring = kind;
    o.time_lower = number(*c_time);
    switch (kind) {
      case CensoringKind::Exact:
      case CensoringKind::Left:
        o.time_upper = o.time_lower;
        break;
      case CensoringKind::Right:
        o.time_upper = std::numeric_limits<double>::infinity();
        break;
      case CensoringKind::Interval:
        if (!c_time2 || f[*c_time2].empty()) {
          throw Error(ErrorCode::MissingColumn, "csv: interval row needs 'time2'" + at, r);
        }
        o.time_upper = number(*c_time2);
        break;
    }
    o.covariates.reserve(c_cov.size());
    for (std::size_t j : c_cov) o.covariates.push_back(number(j));
    ds.observations.push_back(std::move(o));
  }
  return ds;
}

SurvivalDataset parse_dataset_csv(const std::filesystem::path& path) {
  return parse_dataset_csv_text(read_file(path, ErrorCode::DataNotFound));
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dataset_to_csv(const SurvivalDataset& ds) {
  std::string out = "time,time2,status";
  for (const auto& name : ds.feature_names) out += "," + name;
  out += "\n";
  for (const auto& o : ds.observations) {
    out += format_double(o.time_lower);
    out += ",";
    if (o.censoring == CensoringKind::Interval) out += format_double(o.time_upper);
    out += ",";
    out += to_string(o.censoring);
    for (double x : o.covariates) out += "," + format_double(x);
    out += "\n";
  }
  return out;
}

std::string read_file(const std::filesystem::path& path, ErrorCode missing) {
  std::error_code ec;
  std::ifstream in;
  if (std::filesystem::is_regular_file(path, ec)) in.open(path, std::ios::binary);
  if (!in.is_open()) throw Error(missing, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

}  // namespace tramsurv
