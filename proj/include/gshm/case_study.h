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

// Two reference workloads at the URL-dataset scale (c_u = 51914, tau = 1,
// epsilon = 0.349): minimal threshold gaps as sigma varies, and the
// add-the-deltas / exact ratio along the delta(epsilon) curve.

#ifndef GSHM_CASE_STUDY_H_
#define GSHM_CASE_STUDY_H_

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gshm/accounting.h"
#include "gshm/calibration.h"
#include "gshm/gaussian_dp.h"

namespace gshm {

inline constexpr std::int64_t kCaseStudyMaxGroups = 51914;
inline constexpr double kCaseStudyEpsilon = 0.349;
inline constexpr double kCaseStudyDelta = 1e-5;
inline constexpr double kCaseStudySigma = 2228.0;
inline constexpr double kCaseStudyGap = 16176.0;

struct MinimalGapRow {
  double sigma = 0.0;
  double delta_target = 0.0;
  CalibrationResult add;
  CalibrationResult exact;
};

// Smallest integer gaps for both accountings at one sigma.
inline MinimalGapRow MinimalGaps(double sigma, double epsilon,
                                 double delta_target, std::int64_t c_u,
                                 double tau, const ExactDeltaOptions& options) {
  CalibrationRequest request;
  request.params_partial.tau_low = tau;
  request.params_partial.sigma = sigma;
  request.params_partial.c_u = c_u;
  request.epsilon = epsilon;
  request.delta_target = delta_target;
  request.gap_mode = GapMode::kIntegerGap;
  request.exact_options = options;
  MinimalGapRow row{sigma, delta_target, {}, {}};
  request.accounting = Accounting::kAddTheDeltas;
  row.add = MinThresholdGap(request);
  request.accounting = Accounting::kExact;
  row.exact = MinThresholdGap(request);
  return row;
}

// The delta a Gaussian mechanism with noise `sigma` attains at epsilon when a
// user touches c_u groups. Calibrating sigma to a target rounds it, so this
// is the target that sigma actually meets.
inline double GaussianCalibratedDelta(double sigma, double epsilon,
                                      std::int64_t c_u) {
  return GaussianDelta(std::sqrt(static_cast<double>(c_u)) / sigma, epsilon);
}

struct RatioMilestone {
  double requested_delta = 0.0;
  // Target handed to the epsilon search; raised just above delta_infinite
  // when the request lies below it.
  double searched_delta = 0.0;
  bool at_asymptote = false;
  double epsilon = 0.0;
  double delta_exact = 0.0;
  double delta_add = 0.0;
  double ratio = 0.0;
};

// Epsilon at which the exact delta equals `delta_exact_target`, and the
// add-the-deltas / exact ratio there. Targets at or below delta_infinite are
// read at delta_infinite * (1 + 1e-6), the left end of the curve.
inline RatioMilestone RatioAtExactDelta(const GshmParams& params,
                                        double delta_exact_target,
                                        const ExactDeltaOptions& options) {
  RatioMilestone milestone;
  milestone.requested_delta = delta_exact_target;
  const double floor = DeltaInfinite(params) * (1.0 + 1e-6);
  milestone.at_asymptote = delta_exact_target < floor;
  milestone.searched_delta = std::max(delta_exact_target, floor);
  const auto solved = EpsilonForDelta(params, milestone.searched_delta,
                                      Accounting::kExact, 1e-12, options);
  if (!solved.feasible()) {
    throw DomainError(std::string("RatioAtExactDelta: ") +
                      InfeasibleReasonName(solved.reason));
  }
  milestone.epsilon = *solved.value;
  milestone.delta_exact = ExactDelta(params, milestone.epsilon, options).delta_exact;
  milestone.delta_add = AddTheDeltas(params, milestone.epsilon);
  milestone.ratio = milestone.delta_add / milestone.delta_exact;
  return milestone;
}

}  // namespace gshm

#endif  // GSHM_CASE_STUDY_H_
