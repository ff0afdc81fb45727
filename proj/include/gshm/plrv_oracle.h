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

// Independent check of the accounting through the privacy loss random
// variable. Outcomes are sampled from the per-row output distribution of the
// mechanism, and the hockey-stick expressions
//
//   Pr(L+ >= eps) - e^eps Pr(L- <= -eps)     (forward)
//   Pr(L- >= eps) - e^eps Pr(L+ <= -eps)     (reverse)
//
// are estimated directly. Nothing here calls into the accounting formulas;
// only GshmParams and the normal primitives are shared.

#ifndef GSHM_PLRV_ORACLE_H_
#define GSHM_PLRV_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gshm/accounting.h"
#include "gshm/errors.h"
#include "gshm/normal.h"

namespace gshm {

// Neighbor pair X / X_-j. The a_equal rows have count tau under X and
// tau - 1 under X_-j; the a_plus rows have big_count and big_count - 1.
struct WorstCasePair {
  std::int64_t a_plus = 1;
  std::int64_t a_equal = 0;
  double big_count = 0.0;
  GshmParams params;

  void Validate() const {
    params.Validate();
    if (a_plus < 0 || a_equal < 0 || a_plus + a_equal < 1 ||
        a_plus + a_equal > params.c_u) {
      throw DomainError("WorstCasePair: need 1 <= a_plus + a_equal <= c_u");
    }
    if (a_plus > 0 && !(big_count - 1.0 >= params.tau_low)) {
      throw DomainError("WorstCasePair: big_count - 1 must be >= tau");
    }
  }
};

inline double DefaultBigCount(const GshmParams& params) {
  return params.tau_low + std::ceil(20.0 * params.sigma);
}

inline WorstCasePair MakeWorstCasePair(const GshmParams& params,
                                       std::int64_t a_plus,
                                       std::int64_t a_equal,
                                       std::optional<double> big_count = {}) {
  WorstCasePair pair{a_plus, a_equal, big_count.value_or(DefaultBigCount(params)),
                     params};
  pair.Validate();
  return pair;
}

struct PlrvEstimate {
  double epsilon = 0.0;
  double delta_forward = 0.0;
  double stderr_forward = 0.0;
  double delta_reverse = 0.0;
  double stderr_reverse = 0.0;
  std::int64_t samples = 0;
};

// Output of one row. `aggregate` is the single unit-variance column that
// stands in for all m - 1 aggregates; it is read only when m > 1.
struct RowOutcome {
  bool emitted = false;
  double count = 0.0;
  double aggregate = 0.0;
};

// Mean of one row under a dataset: true count and mean of the aggregate
// column (mu_o when the user contributes, 0 otherwise).
struct RowState {
  double count = 0.0;
  double aggregate_mean = 0.0;
};

namespace internal {

inline double LogSuppression(double count, const GshmParams& params) {
  if (count < params.tau_low) return 0.0;
  return StdNormalLogCdf((params.tau_high - count) / params.sigma);
}

}  // namespace internal

// log Pr[row = outcome | x] - log Pr[row = outcome | x_prime]. The outcome
// must be possible under x.
inline double RowLogLikelihoodRatio(const RowOutcome& outcome, RowState x,
                                    RowState x_prime,
                                    const GshmParams& params) {
  if (!outcome.emitted) {
    return internal::LogSuppression(x.count, params) -
           internal::LogSuppression(x_prime.count, params);
  }
  if (outcome.count < params.tau_high) {
    throw InternalConsistencyError(
        "RowLogLikelihoodRatio: emitted count below tau_high");
  }
  if (x.count < params.tau_low) {
    throw InternalConsistencyError(
        "RowLogLikelihoodRatio: emission impossible under x");
  }
  if (x_prime.count < params.tau_low) {
    return std::numeric_limits<double>::infinity();
  }
  const double dx = outcome.count - x.count;
  const double dxp = outcome.count - x_prime.count;
  double ratio = (dxp * dxp - dx * dx) / (2.0 * params.sigma * params.sigma);
  if (params.num_columns > 1) {
    const double ax = outcome.aggregate - x.aggregate_mean;
    const double axp = outcome.aggregate - x_prime.aggregate_mean;
    ratio += (axp * axp - ax * ax) / 2.0;
  }
  return ratio;
}

inline double RowLogLikelihoodRatio(const RowOutcome& outcome,
                                    std::int64_t count_x,
                                    std::int64_t count_x_prime,
                                    const GshmParams& params) {
  return RowLogLikelihoodRatio(outcome, {static_cast<double>(count_x), 0.0},
                               {static_cast<double>(count_x_prime), 0.0},
                               params);
}

namespace internal {

inline constexpr int kOracleBlocks = 64;

struct RowPair {
  RowState x;
  RowState x_prime;
};

inline std::vector<RowPair> RowsOf(const WorstCasePair& pair) {
  const GshmParams& p = pair.params;
  std::vector<RowPair> rows;
  for (std::int64_t i = 0; i < pair.a_plus; ++i) {
    rows.push_back({{pair.big_count, p.mu_o}, {pair.big_count - 1.0, 0.0}});
  }
  for (std::int64_t i = 0; i < pair.a_equal; ++i) {
    rows.push_back({{p.tau_low, p.mu_o}, {p.tau_low - 1.0, 0.0}});
  }
  return rows;
}

inline RowOutcome SampleRow(RowState state, const GshmParams& params,
                            std::mt19937_64& rng,
                            std::normal_distribution<double>& normal) {
  RowOutcome outcome;
  if (state.count < params.tau_low) return outcome;
  const double noisy = state.count + params.sigma * normal(rng);
  if (noisy < params.tau_high) return outcome;
  outcome.emitted = true;
  outcome.count = noisy;
  if (params.num_columns > 1) outcome.aggregate = state.aggregate_mean + normal(rng);
  return outcome;
}

// Privacy loss of one output sampled under X (`under_x`) or under X_-j.
inline double SampleLoss(const std::vector<RowPair>& rows, bool under_x,
                         const GshmParams& params, std::mt19937_64& rng,
                         std::normal_distribution<double>& normal) {
  double loss = 0.0;
  for (const RowPair& row : rows) {
    const RowState first = under_x ? row.x : row.x_prime;
    const RowState second = under_x ? row.x_prime : row.x;
    loss += RowLogLikelihoodRatio(SampleRow(first, params, rng, normal), first,
                                  second, params);
  }
  return loss;
}

inline std::mt19937_64 BlockRng(std::uint64_t seed, int block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block)};
  return std::mt19937_64(seq);
}

template <typename BlockFn>
void RunBlocks(int threads, BlockFn&& fn) {
  const int workers = std::clamp(threads, 1, kOracleBlocks);
  if (workers == 1) {
    for (int b = 0; b < kOracleBlocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int b = w; b < kOracleBlocks; b += workers) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::int64_t BlockSize(std::int64_t samples, int block) {
  return samples / kOracleBlocks + (block < samples % kOracleBlocks ? 1 : 0);
}

}  // namespace internal

// Monte-Carlo estimate of both hockey-stick expressions at `epsilon`.
// Deterministic in (pair, epsilon, samples, seed) for any `threads`.
inline PlrvEstimate EstimateHockeyStick(const WorstCasePair& pair,
                                        double epsilon, std::int64_t samples,
                                        std::uint64_t seed, int threads = 1) {
  pair.Validate();
  internal::RequireNotNan(epsilon, "EstimateHockeyStick");
  if (samples < 1) throw DomainError("EstimateHockeyStick: samples must be >= 1");
  const auto rows = internal::RowsOf(pair);
  struct Counts {
    std::int64_t plus_ge = 0;   // L+ >= eps
    std::int64_t plus_le = 0;   // L+ <= -eps
    std::int64_t minus_ge = 0;  // L- >= eps
    std::int64_t minus_le = 0;  // L- <= -eps
  };
  std::vector<Counts> blocks(internal::kOracleBlocks);
  internal::RunBlocks(threads, [&](int b) {
    auto rng = internal::BlockRng(seed, b);
    std::normal_distribution<double> normal;
    Counts& c = blocks[b];
    const std::int64_t n = internal::BlockSize(samples, b);
    for (std::int64_t i = 0; i < n; ++i) {
      const double plus = internal::SampleLoss(rows, true, pair.params, rng, normal);
      const double minus =
          internal::SampleLoss(rows, false, pair.params, rng, normal);
      c.plus_ge += plus >= epsilon;
      c.plus_le += plus <= -epsilon;
      c.minus_ge += minus >= epsilon;
      c.minus_le += minus <= -epsilon;
    }
  });
  Counts total;
  for (const Counts& c : blocks) {
    total.plus_ge += c.plus_ge;
    total.plus_le += c.plus_le;
    total.minus_ge += c.minus_ge;
    total.minus_le += c.minus_le;
  }
  const double n = static_cast<double>(samples);
  const double scale = std::exp(epsilon);
  auto variance = [n](std::int64_t k) {
    const double p = static_cast<double>(k) / n;
    return p * (1.0 - p) / n;
  };
  PlrvEstimate estimate;
  estimate.epsilon = epsilon;
  estimate.samples = samples;
  estimate.delta_forward = static_cast<double>(total.plus_ge) / n -
                           scale * static_cast<double>(total.minus_le) / n;
  estimate.stderr_forward = std::sqrt(variance(total.plus_ge) +
                                      scale * scale * variance(total.minus_le));
  estimate.delta_reverse = static_cast<double>(total.minus_ge) / n -
                           scale * static_cast<double>(total.plus_le) / n;
  estimate.stderr_reverse = std::sqrt(variance(total.minus_ge) +
                                      scale * scale * variance(total.plus_le));
  return estimate;
}

// Histogram of the summed privacy loss of `a_equal` at-threshold rows,
// sampled under the dataset that contains the user.
inline std::map<double, std::int64_t> EqualRowsLossHistogram(
    const GshmParams& params, std::int64_t a_equal, std::int64_t samples,
    std::uint64_t seed) {
  params.Validate();
  if (a_equal < 1) throw DomainError("EqualRowsLossHistogram: a_equal >= 1");
  if (samples < 1) throw DomainError("EqualRowsLossHistogram: samples >= 1");
  const auto rows = internal::RowsOf({0, a_equal, 0.0, params});
  std::map<double, std::int64_t> histogram;
  std::vector<std::map<double, std::int64_t>> blocks(internal::kOracleBlocks);
  internal::RunBlocks(1, [&](int b) {
    auto rng = internal::BlockRng(seed, b);
    std::normal_distribution<double> normal;
    const std::int64_t n = internal::BlockSize(samples, b);
    for (std::int64_t i = 0; i < n; ++i) {
      ++blocks[b][internal::SampleLoss(rows, true, params, rng, normal)];
    }
  });
  for (const auto& block : blocks) {
    for (const auto& [loss, count] : block) histogram[loss] += count;
  }
  return histogram;
}

enum class Direction { kForward, kReverse };

// Hockey-stick divergence of one a_plus row (m == 1) by adaptive
// Gauss-Kronrod quadrature of the emitted-count density, plus the
// suppression atom. Throws InternalConsistencyError when the absolute error
// estimate exceeds 1e-10.
inline double QuadratureDeltaSingleRow(const GshmParams& params, double epsilon,
                                       Direction direction,
                                       std::optional<double> big_count = {}) {
  params.Validate();
  internal::RequireNotNan(epsilon, "QuadratureDeltaSingleRow");
  if (!std::isfinite(epsilon)) {
    throw DomainError("QuadratureDeltaSingleRow: epsilon must be finite");
  }
  if (params.num_columns != 1) {
    throw DomainError("QuadratureDeltaSingleRow: requires num_columns == 1");
  }
  const double big = big_count.value_or(DefaultBigCount(params));
  if (!(big - 1.0 >= params.tau_low)) {
    throw DomainError("QuadratureDeltaSingleRow: big_count - 1 must be >= tau");
  }
  const double sigma = params.sigma;
  const double mean_p = direction == Direction::kForward ? big : big - 1.0;
  const double mean_q = direction == Direction::kForward ? big - 1.0 : big;
  const double scale = std::exp(epsilon);

  const double atom = std::max(
      0.0, StdNormalCdf((params.tau_high - mean_p) / sigma) -
               scale * StdNormalCdf((params.tau_high - mean_q) / sigma));

  auto density = [sigma](double c, double mean) {
    return StdNormalPdf((c - mean) / sigma) / sigma;
  };
  auto integrand = [&](double c) {
    return std::max(0.0, density(c, mean_p) - scale * density(c, mean_q));
  };
  // log p/q is linear in c and equals epsilon at `crossing`; the integrand
  // is smooth on either side.
  const double crossing =
      (mean_p + mean_q) / 2.0 + epsilon * sigma * sigma / (mean_p - mean_q);
  const double lo = std::max(params.tau_high, std::min(mean_p, mean_q) - 40.0 * sigma);
  const double hi = std::max(mean_p, mean_q) + 40.0 * sigma;
  double a = lo;
  double b = hi;
  if (mean_p > mean_q) {
    a = std::max(lo, crossing);
  } else {
    b = std::min(hi, crossing);
  }
  double mass = 0.0;
  if (a < b) {
    double error = 0.0;
    mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, a, b, 20, 1e-13, &error);
    if (!(error <= 1e-10)) {
      throw InternalConsistencyError(
          "QuadratureDeltaSingleRow: tolerance 1e-10 not reached (error " +
          std::to_string(error) + ")");
    }
  }
  return atom + mass;
}

}  // namespace gshm

#endif  // GSHM_PLRV_ORACLE_H_
