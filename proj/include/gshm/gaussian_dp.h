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

// Analytic Gaussian mechanism accounting.
//
// For a Gaussian mechanism whose sensitivity-to-noise ratio is mu, the
// tightest delta at privacy loss epsilon is
//
//   f(mu, eps) = Phi(mu/2 - eps/mu) - e^eps * Phi(-mu/2 - eps/mu).
//
// The expression is valid for every real epsilon, including negative values;
// the sparse histogram accounting relies on that.

#ifndef GSHM_GAUSSIAN_DP_H_
#define GSHM_GAUSSIAN_DP_H_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "gshm/errors.h"
#include "gshm/normal.h"

namespace gshm {

struct GaussianTradeoffInput {
  double mu = 0.0;
  double epsilon = 0.0;
};

namespace internal {

// Both CDF arguments below this value means both terms are below the
// smallest representable tail mass.
inline constexpr double kGaussianDeltaUnderflow = -37.0;

// f(mu, eps) before clamping to [0, 1]. Rounding can push it a few ulps
// outside that range; the accounting code checks for larger excursions.
inline double GaussianDeltaUnclamped(double mu, double epsilon) {
  if (mu == 0.0) return std::max(0.0, -std::expm1(epsilon));
  const double upper_arg = mu / 2.0 - epsilon / mu;
  const double lower_arg = -mu / 2.0 - epsilon / mu;
  if (upper_arg < kGaussianDeltaUnderflow &&
      lower_arg < kGaussianDeltaUnderflow) {
    return 0.0;
  }
  if (lower_arg > 0.0) {
    // Both CDFs are above 1/2 (only possible for epsilon < 0). Rewrite as
    // (1 - e^eps) - Q(upper) + e^eps Q(lower) to avoid cancellation near 1.
    return -std::expm1(epsilon) - UpperTail(upper_arg) +
           std::exp(epsilon) * UpperTail(lower_arg);
  }
  if (upper_arg >= 0.0) {
    // Arguments straddle 0: Phi(upper) - Phi(lower) is a sum of two erf
    // halves, which stays exact for small mu. For epsilon > 0 the product
    // (e^eps - 1) Phi(lower) is formed in log space so it cannot overflow.
    const double central = 0.5 * std::erf(upper_arg / std::numbers::sqrt2) +
                           0.5 * std::erf(-lower_arg / std::numbers::sqrt2);
    if (epsilon <= 0.0) {
      return central - std::expm1(epsilon) * StdNormalCdf(lower_arg);
    }
    return central - std::exp(epsilon + std::log(-std::expm1(-epsilon)) +
                              StdNormalLogCdf(lower_arg));
  }
  return StdNormalCdf(upper_arg) -
         std::exp(epsilon + StdNormalLogCdf(lower_arg));
}

}  // namespace internal

// Tight delta of a Gaussian mechanism with sensitivity-to-noise ratio `mu`
// at privacy loss `epsilon` (any sign). mu == 0 gives max(0, 1 - e^eps).
inline double GaussianDelta(double mu, double epsilon) {
  internal::RequireNotNan(mu, "GaussianDelta");
  internal::RequireNotNan(epsilon, "GaussianDelta");
  if (mu < 0.0) throw DomainError("GaussianDelta: mu must be nonnegative");
  if (!std::isfinite(epsilon)) {
    throw DomainError("GaussianDelta: epsilon must be finite");
  }
  return std::clamp(internal::GaussianDeltaUnclamped(mu, epsilon), 0.0, 1.0);
}

inline double GaussianDelta(const GaussianTradeoffInput& input) {
  return GaussianDelta(input.mu, input.epsilon);
}

// mu = sqrt(sum_i sensitivity_i^2 / sigma_i^2) for a diagonal covariance.
inline double MuFromSensitivities(std::span<const double> per_column_sensitivity,
                                  std::span<const double> per_column_sigma) {
  if (per_column_sensitivity.size() != per_column_sigma.size()) {
    throw DomainError("MuFromSensitivities: length mismatch (" +
                      std::to_string(per_column_sensitivity.size()) + " vs " +
                      std::to_string(per_column_sigma.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < per_column_sigma.size(); ++i) {
    const double sensitivity = per_column_sensitivity[i];
    const double sigma = per_column_sigma[i];
    internal::RequireNotNan(sensitivity, "MuFromSensitivities");
    internal::RequireNotNan(sigma, "MuFromSensitivities");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("MuFromSensitivities: sigma must be positive");
    }
    if (sensitivity < 0.0) {
      throw DomainError("MuFromSensitivities: sensitivity must be >= 0");
    }
    const double ratio = sensitivity / sigma;
    sum += ratio * ratio;
  }
  return std::sqrt(sum);
}

// Smallest mu with GaussianDelta(mu, epsilon) == delta_target, to within
// 1e-12 relative on delta. The upper bracket starts at 1 and doubles up to
// 1e6.
inline double CalibrateMu(double epsilon, double delta_target) {
  internal::RequireNotNan(epsilon, "CalibrateMu");
  internal::RequireNotNan(delta_target, "CalibrateMu");
  if (!(delta_target > 0.0 && delta_target < 1.0)) {
    throw DomainError("CalibrateMu: delta_target must lie in (0, 1)");
  }
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw DomainError("CalibrateMu: epsilon must be finite and >= 0");
  }
  constexpr double kMaxMu = 1e6;
  const double tolerance = 1e-12 * delta_target;
  double lo = 0.0;
  double hi = 1.0;
  while (GaussianDelta(hi, epsilon) < delta_target) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxMu) {
      throw DomainError("CalibrateMu: target not bracketed below mu = 1e6");
    }
  }
  double mid = hi;
  for (int iter = 0; iter < 2000; ++iter) {
    mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    const double delta = GaussianDelta(mid, epsilon);
    if (std::fabs(delta - delta_target) <= tolerance) break;
    if (delta < delta_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace gshm

#endif  // GSHM_GAUSSIAN_DP_H_
