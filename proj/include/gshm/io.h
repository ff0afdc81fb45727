//
// Copyright 2026 The GSHM Accounting Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Text formats for the mechanism: delimited record input, release output in
// CSV and JSON, bounding reports, and mechanism configs.

#ifndef GSHM_IO_H_
#define GSHM_IO_H_

#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gshm/errors.h"
#include "gshm/gaussian_dp.h"
#include "gshm/mechanism.h"
#include "json.hpp"

namespace gshm {

// 17 significant digits; round-trips every double.
inline std::string FormatDouble(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

struct ParsedRecords {
  std::vector<std::string> value_columns;
  std::vector<GroupRecord> records;
};

namespace internal {

inline std::vector<std::string> SplitFields(std::string_view line,
                                            char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(delimiter, start);
    fields.emplace_back(line.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return fields;
}

// NaN when `text` is not entirely a decimal number.
inline double ParseValue(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return value;
}

}  // namespace internal

// Reads "user_id,group_id,value..." lines after a required header. Every
// data line becomes a record; malformed values are kept as NaN so that
// BoundContributions rejects them with their line number.
inline ParsedRecords ReadRecords(std::istream& in, char delimiter = ',') {
  ParsedRecords parsed;
  std::string line;
  int line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = internal::SplitFields(line, delimiter);
    if (!have_header) {
      if (fields.size() < 2) {
        throw IoError("header must name user and group columns", line_number);
      }
      parsed.value_columns.assign(fields.begin() + 2, fields.end());
      have_header = true;
      continue;
    }
    GroupRecord record;
    record.source_line = line_number;
    if (fields.size() >= 1) record.user_id = fields[0];
    if (fields.size() >= 2) record.group_id = fields[1];
    for (std::size_t i = 2; i < fields.size(); ++i) {
      record.values.push_back(internal::ParseValue(fields[i]));
    }
    parsed.records.push_back(std::move(record));
  }
  if (in.bad()) throw IoError("read failure", line_number);
  if (!have_header) throw IoError("missing header row", line_number + 1);
  return parsed;
}

inline void WriteReleaseCsv(std::ostream& out, const Release& release,
                            const std::vector<std::string>& value_columns) {
  out << "group_id,noisy_count";
  for (const auto& name : value_columns) out << ',' << name;
  out << '\n';
  for (const auto& [group_id, row] : release) {
    out << group_id << ',' << FormatDouble(row.noisy_count);
    for (const double v : row.noisy_aggregates) out << ',' << FormatDouble(v);
    out << '\n';
  }
}

inline nlohmann::ordered_json ReleaseToJson(
    const Release& release, const std::vector<std::string>& value_columns) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& [group_id, row] : release) {
    rows.push_back({{"group_id", group_id},
                    {"noisy_count", row.noisy_count},
                    {"noisy_aggregates", row.noisy_aggregates}});
  }
  return {{"value_columns", value_columns}, {"rows", rows}};
}

inline nlohmann::ordered_json BoundingReportToJson(const BoundingReport& r) {
  nlohmann::ordered_json rejections = nlohmann::ordered_json::array();
  for (const auto& rejection : r.rejections) {
    rejections.push_back(
        {{"line", rejection.line}, {"reason", rejection.reason}});
  }
  return {{"input_records", r.input_records},
          {"output_records", r.output_records},
          {"merged", r.merged},
          {"truncated", r.truncated},
          {"clamped", r.clamped},
          {"rejected", r.rejected},
          {"rejections", rejections}};
}

// Keys: tau, tau-star, sigma, cu, seed, per-column-sigma,
// per-column-sensitivity, and optionally mu-o (derived when absent, checked
// when present).
inline MechanismConfig MechanismConfigFromJson(const nlohmann::json& j) {
  MechanismConfig config;
  try {
    config.params.tau_low = j.value("tau", 1.0);
    config.params.tau_high = j.at("tau-star").get<double>();
    config.params.sigma = j.at("sigma").get<double>();
    config.params.c_u = j.value("cu", std::int64_t{1});
    config.seed = j.value("seed", std::uint64_t{0});
    config.per_column_sigma =
        j.value("per-column-sigma", std::vector<double>{});
    config.per_column_sensitivity =
        j.value("per-column-sensitivity", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("config: ") + e.what());
  }
  config.params.num_columns =
      static_cast<int>(config.per_column_sigma.size()) + 1;
  if (config.per_column_sigma.size() != config.per_column_sensitivity.size()) {
    throw DomainError(
        "config: per-column-sigma and per-column-sensitivity lengths differ");
  }
  const double derived =
      MuFromSensitivities(config.per_column_sensitivity, config.per_column_sigma);
  config.params.mu_o = j.contains("mu-o") ? j.at("mu-o").get<double>() : derived;
  config.Validate();
  return config;
}

}  // namespace gshm

#endif  // GSHM_IO_H_
