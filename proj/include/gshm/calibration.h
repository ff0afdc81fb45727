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

// Parameter solvers on top of the accounting: smallest threshold gap, smallest
// noise scale, epsilon for a delta budget, and delta(epsilon) curves, each for
// exact and add-the-deltas accounting.
//
// Monotonicity of the exact delta in the threshold gap and in sigma is not
// proven. Every bracketed search therefore first evaluates a 64-point
// geometric grid, checks that delta is nonincreasing along it, and bisects
// only inside the first grid segment that crosses the target. A failed check
// is reported through `monotone_verified`, never hidden.

#ifndef GSHM_CALIBRATION_H_
#define GSHM_CALIBRATION_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gshm/accounting.h"
#include "gshm/errors.h"
#include "gshm/gaussian_dp.h"
#include "gshm/normal.h"

namespace gshm {

enum class FreeParameter { kTauHigh, kSigma };
enum class GapMode { kRealValued, kIntegerGap };

enum class InfeasibleReason {
  kNone,
  kGaussianExceedsTarget,  // delta_gaussian alone already reaches the target
  kDeltaBelowInfinite,     // target <= delta_infinite, no epsilon helps
  kUnbracketed,            // search range exhausted without meeting target
  kNoFeasibleSigma,        // no sigma meets the target at this gap
};

inline const char* InfeasibleReasonName(InfeasibleReason reason) {
  switch (reason) {
    case InfeasibleReason::kNone:
      return "none";
    case InfeasibleReason::kGaussianExceedsTarget:
      return "gaussian_exceeds_target";
    case InfeasibleReason::kDeltaBelowInfinite:
      return "delta_below_infinite";
    case InfeasibleReason::kUnbracketed:
      return "unbracketed";
    case InfeasibleReason::kNoFeasibleSigma:
      return "no_feasible_sigma";
  }
  return "unknown";
}

struct CalibrationRequest {
  // The free field's value is ignored.
  GshmParams params_partial;
  FreeParameter free_parameter = FreeParameter::kTauHigh;
  double epsilon = 0.0;
  double delta_target = 1e-5;
  Accounting accounting = Accounting::kExact;
  GapMode gap_mode = GapMode::kRealValued;
  // Absolute tolerance on the gap in kRealValued mode.
  double gap_tolerance = 1e-6;
  ExactDeltaOptions exact_options;
};

struct CalibrationResult {
  std::optional<double> value;
  InfeasibleReason reason = InfeasibleReason::kNone;
  bool monotone_verified = true;
  int evaluations = 0;

  bool feasible() const { return value.has_value(); }

  static CalibrationResult Infeasible(InfeasibleReason reason,
                                      int evaluations = 0) {
    CalibrationResult result;
    result.reason = reason;
    result.evaluations = evaluations;
    return result;
  }
};

struct CurvePoint {
  double epsilon = 0.0;
  double delta_exact = 0.0;
  double delta_add = 0.0;
  double ratio = 1.0;  // delta_add / delta_exact
};

namespace internal {

inline constexpr int kGuardGridPoints = 64;
// Slack for the grid monotonicity check; absorbs rounding only.
inline constexpr double kMonotoneSlack = 1e-12;

inline double DeltaForContext(Accounting accounting, const TermContext& ctx,
                              const ExactDeltaOptions& options) {
  switch (accounting) {
    case Accounting::kExact:
      return ExactDeltaForContext(ctx, options).delta_exact;
    case Accounting::kAddTheDeltas:
      return AddTheDeltasForContext(ctx);
    case Accounting::kGaussianOnly:
      return SwappedTerm(ctx, ctx.c_u, 0);
  }
  throw DomainError("unknown accounting");
}

inline void RequireDeltaTarget(double delta_target, const char* what) {
  RequireNotNan(delta_target, what);
  if (!(delta_target > 0.0 && delta_target < 1.0)) {
    throw DomainError(std::string(what) + ": delta_target must lie in (0, 1)");
  }
}

inline std::vector<double> GeometricGrid(double lo, double hi, int points) {
  std::vector<double> grid(points);
  const double ratio = std::pow(hi / lo, 1.0 / (points - 1));
  for (int i = 0; i < points; ++i) grid[i] = lo * std::pow(ratio, i);
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

inline bool NonIncreasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1] * (1.0 + kMonotoneSlack) + 1e-300) {
      return false;
    }
  }
  return true;
}

struct GridCrossing {
  // delta(lo) > target >= delta(hi); lo may be the caller's floor.
  double lo;
  double hi;
  bool found;
  bool monotone;
};

// Evaluates `delta` on the grid and returns the first segment whose right end
// meets the target. `floor` is the left end of the first segment.
inline GridCrossing FirstCrossing(const std::function<double(double)>& delta,
                                  std::span<const double> grid, double floor,
                                  double target) {
  std::vector<double> values;
  values.reserve(grid.size());
  std::size_t first = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.push_back(delta(grid[i]));
    if (first == grid.size() && values.back() <= target) first = i;
  }
  // Past the first crossing the shape of delta does not affect the answer;
  // only the prefix has to be monotone.
  const std::size_t checked = std::min(first + 1, grid.size());
  GridCrossing crossing;
  crossing.monotone = NonIncreasing(std::span(values).first(checked));
  crossing.found = first < grid.size();
  if (crossing.found) {
    crossing.lo = first == 0 ? floor : grid[first - 1];
    crossing.hi = grid[first];
  }
  return crossing;
}

}  // namespace internal

// Smallest tau_high - tau_low at which the requested accounting meets
// (epsilon, delta_target). kIntegerGap returns the smallest integer gap.
inline CalibrationResult MinThresholdGap(const CalibrationRequest& request) {
  if (request.free_parameter != FreeParameter::kTauHigh) {
    throw DomainError("MinThresholdGap: the free parameter must be tau_high");
  }
  if (request.accounting == Accounting::kGaussianOnly) {
    throw DomainError("MinThresholdGap: gaussian-only accounting has no gap");
  }
  GshmParams params = request.params_partial;
  params.tau_high = params.tau_low + 1.0;
  params.Validate();
  internal::RequireAccountingEpsilon(request.epsilon, "MinThresholdGap");
  internal::RequireDeltaTarget(request.delta_target, "MinThresholdGap");
  if (!(request.gap_tolerance > 0.0)) {
    throw DomainError("MinThresholdGap: gap_tolerance must be positive");
  }

  const double target = request.delta_target;
  const double sigma = params.sigma;
  int evaluations = 0;
  auto delta_at = [&](double gap) {
    ++evaluations;
    return internal::DeltaForContext(
        request.accounting,
        internal::TermContext::Make(gap, sigma, params.c_u, params.mu_o,
                                    request.epsilon),
        request.exact_options);
  };

  // Both accountings tend to delta_gaussian as the gap grows; add-the-deltas
  // never reaches it, exact accounting can.
  const double delta_gaussian = internal::SwappedTerm(
      internal::TermContext::Make(0.0, sigma, params.c_u, params.mu_o,
                                  request.epsilon),
      params.c_u, 0);
  if (delta_gaussian > target ||
      (request.accounting == Accounting::kAddTheDeltas &&
       delta_gaussian >= target)) {
    return CalibrationResult::Infeasible(
        InfeasibleReason::kGaussianExceedsTarget);
  }

  // Beyond ~40 sigma the threshold terms underflow to exactly zero.
  constexpr double kMaxGapInSigmas = 128.0;
  double hi = sigma;
  while (delta_at(hi) > target) {
    hi *= 2.0;
    if (hi > kMaxGapInSigmas * sigma) {
      return CalibrationResult::Infeasible(InfeasibleReason::kUnbracketed,
                                           evaluations);
    }
  }

  const std::vector<double> grid =
      internal::GeometricGrid(hi / 4096.0, hi, internal::kGuardGridPoints);
  const auto crossing = internal::FirstCrossing(delta_at, grid, 0.0, target);
  double lo = crossing.lo;
  hi = crossing.hi;

  CalibrationResult result;
  result.monotone_verified = crossing.monotone;
  if (lo == 0.0 && delta_at(0.0) <= target) {
    result.value = 0.0;
    result.evaluations = evaluations;
    return result;
  }

  if (request.gap_mode == GapMode::kRealValued) {
    while (hi - lo > request.gap_tolerance) {
      const double mid = lo + (hi - lo) / 2.0;
      if (mid <= lo || mid >= hi) break;
      if (delta_at(mid) <= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    result.value = hi;
  } else {
    double lo_int = std::floor(lo);
    double hi_int = std::ceil(hi);
    if (lo_int == lo && lo_int > 0.0) {
      // delta(lo) > target is already known.
    } else if (lo_int > 0.0 && delta_at(lo_int) <= target) {
      lo_int = 0.0;  // not monotone below lo; widen to the floor
      result.monotone_verified = false;
    }
    while (delta_at(hi_int) > target) {
      lo_int = hi_int;
      hi_int += 1.0;
      result.monotone_verified = false;
    }
    while (hi_int - lo_int > 1.0) {
      const double mid = std::floor(lo_int + (hi_int - lo_int) / 2.0);
      if (delta_at(mid) <= target) {
        hi_int = mid;
      } else {
        lo_int = mid;
      }
    }
    result.value = hi_int;
  }
  result.evaluations = evaluations;
  return result;
}

// Smallest epsilon >= 0 with delta(epsilon) <= delta_target, to
// `epsilon_tolerance`. Infeasible when delta_target <= delta_infinite.
inline CalibrationResult EpsilonForDelta(const GshmParams& params,
                                         double delta_target,
                                         Accounting accounting,
                                         double epsilon_tolerance = 1e-9,
                                         const ExactDeltaOptions& options = {}) {
  params.Validate();
  internal::RequireDeltaTarget(delta_target, "EpsilonForDelta");
  if (!(epsilon_tolerance > 0.0)) {
    throw DomainError("EpsilonForDelta: epsilon_tolerance must be positive");
  }
  int evaluations = 0;
  auto delta_at = [&](double epsilon) {
    ++evaluations;
    return internal::DeltaForContext(
        accounting, internal::ContextFor(params, epsilon), options);
  };
  if (accounting != Accounting::kGaussianOnly &&
      delta_target <= internal::InfiniteTerm(internal::ContextFor(params, 0.0),
                                             params.c_u)) {
    return CalibrationResult::Infeasible(InfeasibleReason::kDeltaBelowInfinite);
  }

  CalibrationResult result;
  if (delta_at(0.0) <= delta_target) {
    result.value = 0.0;
    result.evaluations = evaluations;
    return result;
  }
  constexpr double kMaxEpsilon = 1e4;
  double lo = 0.0;
  double hi = 1.0;
  while (delta_at(hi) > delta_target) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxEpsilon) {
      return CalibrationResult::Infeasible(InfeasibleReason::kUnbracketed,
                                           evaluations);
    }
  }
  while (hi - lo > epsilon_tolerance) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (delta_at(mid) <= delta_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.value = hi;
  result.evaluations = evaluations;
  return result;
}

// Both accountings and their ratio at every epsilon of an ascending grid.
inline std::vector<CurvePoint> DeltaCurve(const GshmParams& params,
                                          std::span<const double> epsilon_grid,
                                          const ExactDeltaOptions& options = {}) {
  params.Validate();
  for (std::size_t i = 0; i < epsilon_grid.size(); ++i) {
    internal::RequireAccountingEpsilon(epsilon_grid[i], "DeltaCurve");
    if (i > 0 && epsilon_grid[i] < epsilon_grid[i - 1]) {
      throw DomainError("DeltaCurve: epsilon grid must be sorted ascending");
    }
  }
  std::vector<CurvePoint> curve;
  curve.reserve(epsilon_grid.size());
  for (const double epsilon : epsilon_grid) {
    const auto ctx = internal::ContextFor(params, epsilon);
    CurvePoint point;
    point.epsilon = epsilon;
    point.delta_exact = internal::ExactDeltaForContext(ctx, options).delta_exact;
    point.delta_add = internal::AddTheDeltasForContext(ctx);
    point.ratio = point.delta_exact > 0.0 ? point.delta_add / point.delta_exact
                                          : 1.0;
    curve.push_back(point);
  }
  return curve;
}

// Smallest sigma meeting (epsilon, delta_target) at a fixed threshold gap.
//
// The search runs between sigma_gaussian, below which the Gaussian part alone
// exceeds the target, and the largest sigma whose delta_infinite still fits.
// Delta is not monotone in sigma over that range (the Gaussian part falls, the
// thresholding part grows), so only the prefix up to the first feasible grid
// point is checked and bisected.
inline CalibrationResult MinSigma(double tau_gap, double epsilon,
                                  double delta_target, std::int64_t c_u,
                                  double mu_o, Accounting accounting,
                                  const ExactDeltaOptions& options = {}) {
  internal::RequireNotNan(tau_gap, "MinSigma");
  if (!(tau_gap > 0.0) || !std::isfinite(tau_gap)) {
    throw DomainError("MinSigma: tau_gap must be finite and > 0");
  }
  internal::RequireAccountingEpsilon(epsilon, "MinSigma");
  internal::RequireDeltaTarget(delta_target, "MinSigma");
  if (c_u < 1) throw DomainError("MinSigma: c_u must be >= 1");
  if (!(mu_o >= 0.0) || !std::isfinite(mu_o)) {
    throw DomainError("MinSigma: mu_o must be finite and >= 0");
  }
  if (accounting == Accounting::kGaussianOnly) {
    throw DomainError("MinSigma: gaussian-only accounting ignores the gap");
  }

  const double cu = static_cast<double>(c_u);
  const double mu_target = CalibrateMu(epsilon, delta_target);
  const double mu_room = mu_target * mu_target - cu * mu_o * mu_o;
  if (!(mu_room > 0.0)) {
    return CalibrationResult::Infeasible(
        InfeasibleReason::kGaussianExceedsTarget);
  }
  const double sigma_gaussian = std::sqrt(cu / mu_room);

  // delta_infinite(sigma) <= target  <=>  gap / sigma >= min_ratio.
  const double per_group_tail = -std::expm1(std::log1p(-delta_target) / cu);
  const double min_ratio = -StdNormalQuantile(per_group_tail);
  const double sigma_max = min_ratio > 0.0
                               ? tau_gap / min_ratio
                               : 1024.0 * sigma_gaussian;
  if (sigma_max < sigma_gaussian) {
    return CalibrationResult::Infeasible(InfeasibleReason::kNoFeasibleSigma);
  }

  int evaluations = 0;
  auto delta_at = [&](double sigma) {
    ++evaluations;
    return internal::DeltaForContext(
        accounting,
        internal::TermContext::Make(tau_gap, sigma, c_u, mu_o, epsilon),
        options);
  };
  const std::vector<double> grid = internal::GeometricGrid(
      sigma_gaussian, std::max(sigma_max, sigma_gaussian * (1.0 + 1e-9)),
      internal::kGuardGridPoints);
  const auto crossing =
      internal::FirstCrossing(delta_at, grid, sigma_gaussian, delta_target);
  if (!crossing.found) {
    return CalibrationResult::Infeasible(InfeasibleReason::kNoFeasibleSigma,
                                         evaluations);
  }
  CalibrationResult result;
  result.monotone_verified = crossing.monotone;
  double lo = crossing.lo;
  double hi = crossing.hi;
  constexpr double kRelativeTolerance = 1e-10;
  while (hi - lo > kRelativeTolerance * hi) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (delta_at(mid) <= delta_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.value = hi;
  result.evaluations = evaluations;
  return result;
}

}  // namespace gshm

#endif  // GSHM_CALIBRATION_H_
