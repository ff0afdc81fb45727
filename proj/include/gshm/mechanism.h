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

// Executable Gaussian sparse histogram mechanism.
//
// A group with true count C is released iff C >= tau and C + v >= tau_star,
// v ~ N(0, sigma^2). Aggregate noise is drawn only for released groups. Only
// groups present in the data are visited.

#ifndef GSHM_MECHANISM_H_
#define GSHM_MECHANISM_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gshm/accounting.h"
#include "gshm/errors.h"
#include "gshm/gaussian_dp.h"
#include "gshm/normal.h"
#include "gshm/philox.h"

namespace gshm {

struct GroupRecord {
  std::string user_id;
  std::string group_id;
  std::vector<double> values;
  // 1-based input line, 0 when the record did not come from a file.
  int source_line = 0;

  friend bool operator==(const GroupRecord& a, const GroupRecord& b) {
    return a.user_id == b.user_id && a.group_id == b.group_id &&
           a.values == b.values;
  }
};

struct ReleaseRow {
  std::string group_id;
  double noisy_count = 0.0;
  std::vector<double> noisy_aggregates;
};

using Release = std::map<std::string, ReleaseRow>;

struct MechanismConfig {
  GshmParams params;
  std::vector<double> per_column_sigma;
  std::vector<double> per_column_sensitivity;
  std::uint64_t seed = 0;

  // Throws DomainError if params are invalid, the column vectors disagree
  // with num_columns, or mu_o differs from the per-column ratios.
  void Validate() const {
    params.Validate();
    const auto expected = static_cast<std::size_t>(params.num_columns - 1);
    if (per_column_sigma.size() != expected ||
        per_column_sensitivity.size() != expected) {
      throw DomainError("MechanismConfig: expected " + std::to_string(expected) +
                        " per-column sigmas and sensitivities");
    }
    const double mu = MuFromSensitivities(per_column_sensitivity,
                                          per_column_sigma);
    if (std::fabs(mu - params.mu_o) > 1e-9 * std::max(1.0, mu)) {
      throw DomainError("MechanismConfig: mu_o does not match per-column "
                        "sensitivities and sigmas");
    }
  }
};

// Records sorted by (user_id, group_id), at most one per pair.
struct GroupedDataset {
  std::size_t num_value_columns = 0;
  std::vector<GroupRecord> records;
};

struct Rejection {
  int line = 0;
  std::string reason;
};

struct BoundingReport {
  std::size_t input_records = 0;
  std::size_t output_records = 0;
  // Records folded into an earlier record for the same (user, group).
  std::size_t merged = 0;
  // Records dropped because their user exceeded c_u groups.
  std::size_t truncated = 0;
  // Individual values moved onto their bound.
  std::size_t clamped = 0;
  std::size_t rejected = 0;
  std::vector<Rejection> rejections;

  bool Unmodified() const {
    return merged == 0 && truncated == 0 && clamped == 0 && rejected == 0;
  }
};

struct BoundingResult {
  GroupedDataset dataset;
  BoundingReport report;
};

namespace internal {

inline std::optional<std::string> MalformedReason(const GroupRecord& record,
                                                  std::size_t arity) {
  if (record.user_id.empty()) return "empty user_id";
  if (record.group_id.empty()) return "empty group_id";
  if (record.values.size() != arity) {
    return "expected " + std::to_string(arity) + " values, found " +
           std::to_string(record.values.size());
  }
  for (const double v : record.values) {
    if (!std::isfinite(v)) return "non-numeric or non-finite value";
  }
  return std::nullopt;
}

}  // namespace internal

// Enforces the contribution structure. Malformed records are rejected,
// duplicate (user, group) records are summed, each user keeps the first c_u
// group ids in lexicographic order, and every value is clamped to
// [-bound, bound] of its column.
inline BoundingResult BoundContributions(std::span<const GroupRecord> records,
                                         std::int64_t c_u,
                                         std::span<const double> value_bounds) {
  if (c_u < 1) throw DomainError("BoundContributions: c_u must be >= 1");
  for (const double bound : value_bounds) {
    if (!(bound >= 0.0) || !std::isfinite(bound)) {
      throw DomainError("BoundContributions: bounds must be finite and >= 0");
    }
  }
  BoundingResult result;
  BoundingReport& report = result.report;
  report.input_records = records.size();
  const std::size_t arity = value_bounds.size();
  result.dataset.num_value_columns = arity;

  std::map<std::pair<std::string, std::string>, std::vector<double>> merged;
  for (const GroupRecord& record : records) {
    if (auto reason = internal::MalformedReason(record, arity)) {
      ++report.rejected;
      report.rejections.push_back({record.source_line, *std::move(reason)});
      continue;
    }
    auto [it, inserted] =
        merged.try_emplace({record.user_id, record.group_id}, record.values);
    if (!inserted) {
      ++report.merged;
      for (std::size_t i = 0; i < arity; ++i) it->second[i] += record.values[i];
    }
  }

  std::int64_t groups_for_user = 0;
  const std::string* current_user = nullptr;
  for (auto& [key, values] : merged) {
    if (current_user == nullptr || *current_user != key.first) {
      current_user = &key.first;
      groups_for_user = 0;
    }
    if (++groups_for_user > c_u) {
      ++report.truncated;
      continue;
    }
    for (std::size_t i = 0; i < arity; ++i) {
      const double clamped =
          std::clamp(values[i], -value_bounds[i], value_bounds[i]);
      if (clamped != values[i]) ++report.clamped;
      values[i] = clamped;
    }
    result.dataset.records.push_back({key.first, key.second, values});
  }
  report.output_records = result.dataset.records.size();
  return result;
}

// Exact per-group statistics of a bounded dataset.
struct GroupAggregate {
  std::int64_t count = 0;
  std::vector<double> sums;
};

inline std::map<std::string, GroupAggregate> AggregateGroups(
    const GroupedDataset& dataset) {
  std::map<std::string, GroupAggregate> groups;
  for (const GroupRecord& record : dataset.records) {
    GroupAggregate& group = groups[record.group_id];
    if (group.sums.empty()) group.sums.assign(dataset.num_value_columns, 0.0);
    ++group.count;
    for (std::size_t i = 0; i < record.values.size(); ++i) {
      group.sums[i] += record.values[i];
    }
  }
  return groups;
}

// One group through the double threshold. Draw 0 of the group's stream is
// the count noise; draw 1 + i is the noise of aggregate column i.
inline std::optional<ReleaseRow> ReleaseGroup(const std::string& group_id,
                                              const GroupAggregate& group,
                                              const MechanismConfig& config) {
  const GshmParams& p = config.params;
  const GroupNoiseStream stream(config.seed, group_id);
  const double count = static_cast<double>(group.count);
  const double noisy_count = count + p.sigma * stream.Gaussian(0);
  if (count < p.tau_low || noisy_count < p.tau_high) return std::nullopt;
  ReleaseRow row{group_id, noisy_count, group.sums};
  for (std::size_t i = 0; i < row.noisy_aggregates.size(); ++i) {
    row.noisy_aggregates[i] += config.per_column_sigma[i] * stream.Gaussian(1 + i);
  }
  return row;
}

// Runs the mechanism over every nonempty group. The result does not depend
// on `threads` or on record order.
inline Release RunGshm(const GroupedDataset& dataset,
                       const MechanismConfig& config, int threads = 1) {
  config.Validate();
  if (dataset.num_value_columns !=
      static_cast<std::size_t>(config.params.num_columns - 1)) {
    throw DomainError("RunGshm: dataset has " +
                      std::to_string(dataset.num_value_columns) +
                      " value columns, config expects " +
                      std::to_string(config.params.num_columns - 1));
  }
  const auto grouped = AggregateGroups(dataset);
  std::vector<const std::pair<const std::string, GroupAggregate>*> entries;
  entries.reserve(grouped.size());
  for (const auto& entry : grouped) entries.push_back(&entry);

  std::vector<std::optional<ReleaseRow>> rows(entries.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      rows[i] = ReleaseGroup(entries[i]->first, entries[i]->second, config);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(threads, 1)), 1,
      std::max<std::size_t>(entries.size(), 1));
  if (workers == 1) {
    work(0, entries.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (entries.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(entries.size(), w * chunk);
      const std::size_t end = std::min(entries.size(), begin + chunk);
      pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  Release release;
  for (auto& row : rows) {
    if (row) release.emplace(row->group_id, *std::move(row));
  }
  return release;
}

// Pr[group with true count `count` is released].
inline double EmissionProbability(std::int64_t count, const GshmParams& params) {
  params.Validate();
  if (count < 0) throw DomainError("EmissionProbability: count must be >= 0");
  const double c = static_cast<double>(count);
  if (c < params.tau_low) return 0.0;
  return StdNormalSurvival((params.tau_high - c) / params.sigma);
}

}  // namespace gshm

#endif  // GSHM_MECHANISM_H_
