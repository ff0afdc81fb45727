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

// (epsilon, delta) accounting for the Gaussian sparse histogram mechanism.
//
// The mechanism suppresses every group whose true count is below tau_low,
// adds N(0, sigma^2) to the remaining counts and releases the groups whose
// noisy count reaches tau_high. A user touches at most c_u groups.
//
// Write beta = Phi((tau_high - tau_low) / sigma) and f for the analytic
// Gaussian delta. Removing one user changes a_plus groups that stay above
// tau_low and a_equal groups that sit exactly at tau_low. The exact delta is
// the largest of
//
//   (i)   1 - beta^c_u                                  (a_plus = 0)
//   (ii)  1 - beta^a + beta^a f(mu(c_u - a), eps - a log beta)
//   (iii) f(mu(c_u - a), eps + a log beta)
//
// with (ii) and (iii) maximized over a = a_equal in [0, c_u - 1] and
// mu(a_plus) = sqrt(a_plus / sigma^2 + a_plus mu_o^2). The scan is linear in
// c_u.
//
// "Add the deltas" is the older bound delta_gaussian + delta_infinite, with
// delta_gaussian = f(mu(c_u), eps) and delta_infinite = term (i). The exact
// value always sits in [max(delta_inf, delta_gauss), delta_inf + delta_gauss).

#ifndef GSHM_ACCOUNTING_H_
#define GSHM_ACCOUNTING_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "gshm/errors.h"
#include "gshm/gaussian_dp.h"
#include "gshm/normal.h"

namespace gshm {

struct GshmParams {
  double tau_low = 1.0;   // deterministic count threshold
  double tau_high = 2.0;  // noisy count threshold, > tau_low
  double sigma = 1.0;     // count noise standard deviation
  std::int64_t c_u = 1;   // maximum groups per user
  double mu_o = 0.0;      // per-group mu of the non-count columns
  int num_columns = 1;    // count column plus m - 1 aggregates

  double ThresholdGap() const { return tau_high - tau_low; }

  void Validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(tau_low) || tau_low < 0.0) {
      throw DomainError("GshmParams: tau_low must be finite and >= 0");
    }
    if (!finite(tau_high) || !(tau_high > tau_low)) {
      throw DomainError("GshmParams: tau_high must be finite and > tau_low");
    }
    if (!finite(sigma) || !(sigma > 0.0)) {
      throw DomainError("GshmParams: sigma must be finite and > 0");
    }
    if (c_u < 1) throw DomainError("GshmParams: c_u must be >= 1");
    if (!finite(mu_o) || mu_o < 0.0) {
      throw DomainError("GshmParams: mu_o must be finite and >= 0");
    }
    if (num_columns < 1) {
      throw DomainError("GshmParams: num_columns must be >= 1");
    }
    if (num_columns == 1 && mu_o != 0.0) {
      throw DomainError("GshmParams: mu_o must be 0 when num_columns == 1");
    }
  }
};

// Which of the three maximized expressions attains the exact delta.
enum class BindingTerm { kInfiniteOnly, kMixedTerm, kSwappedTerm };

inline const char* BindingTermName(BindingTerm term) {
  switch (term) {
    case BindingTerm::kInfiniteOnly:
      return "infinite_only";
    case BindingTerm::kMixedTerm:
      return "mixed";
    case BindingTerm::kSwappedTerm:
      return "swapped";
  }
  return "unknown";
}

struct AccountingReport {
  double epsilon = 0.0;
  double delta_exact = 0.0;
  double delta_infinite = 0.0;
  double delta_gaussian = 0.0;
  // a_equal at which the binding term peaks; c_u for kInfiniteOnly.
  std::int64_t argmax_a_equal = 0;
  BindingTerm binding_term = BindingTerm::kInfiniteOnly;
};

enum class Accounting { kExact, kAddTheDeltas, kGaussianOnly };

inline const char* AccountingName(Accounting accounting) {
  switch (accounting) {
    case Accounting::kExact:
      return "exact";
    case Accounting::kAddTheDeltas:
      return "add";
    case Accounting::kGaussianOnly:
      return "gaussian";
  }
  return "unknown";
}

struct PrivacyPoint {
  double epsilon = 0.0;
  double delta = 0.0;
  Accounting provenance = Accounting::kExact;
};

struct ExactDeltaOptions {
  // Stop the a_equal scan once both inner terms have decreased for
  // `early_exit_window` consecutive steps. Heuristic; off by default.
  bool early_exit = false;
  std::int64_t early_exit_window = 1000;
  // Partitions the scan; the result does not depend on this value.
  int threads = 1;
};

// Values of the two a_plus > 0 expressions for one neighbor structure.
// `forward` is the dataset-with-user direction, `reverse` the other one.
struct NeighborPairDeltas {
  double forward = 0.0;
  double reverse = 0.0;
};

namespace internal {

inline constexpr double kNegativeTermTolerance = 1e-12;

// Quantities shared by every term for one parameter set, keyed on the
// threshold gap so that calibration can evaluate gaps without building a
// validated parameter struct (gap == 0 is a legal limit there).
struct TermContext {
  double log_beta;  // log Phi(gap / sigma), <= 0
  double sigma;
  double mu_o;
  std::int64_t c_u;
  double epsilon;

  static TermContext Make(double gap, double sigma, std::int64_t c_u,
                          double mu_o, double epsilon) {
    return {StdNormalLogCdf(gap / sigma), sigma, mu_o, c_u, epsilon};
  }

  double Mu(std::int64_t a_plus) const {
    const double a = static_cast<double>(a_plus);
    return std::sqrt(a / (sigma * sigma) + a * mu_o * mu_o);
  }
};

inline double CheckedTerm(double value, const char* which) {
  if (std::isnan(value)) {
    throw InternalConsistencyError(std::string(which) + " evaluated to NaN");
  }
  if (value < -kNegativeTermTolerance) {
    throw InternalConsistencyError(std::string(which) +
                                   " is negative beyond rounding: " +
                                   std::to_string(value));
  }
  return std::clamp(value, 0.0, 1.0);
}

inline double InfiniteTerm(const TermContext& ctx, std::int64_t a_equal) {
  if (a_equal == 0) return 0.0;
  return CheckedTerm(
      -std::expm1(static_cast<double>(a_equal) * ctx.log_beta),
      "infinite-loss term");
}

inline double MixedTerm(const TermContext& ctx, std::int64_t a_plus,
                        std::int64_t a_equal) {
  const double log_beta_pow = static_cast<double>(a_equal) * ctx.log_beta;
  const double inner = CheckedTerm(
      GaussianDeltaUnclamped(ctx.Mu(a_plus), ctx.epsilon - log_beta_pow),
      "mixed-term gaussian part");
  return CheckedTerm(-std::expm1(log_beta_pow) + std::exp(log_beta_pow) * inner,
                     "mixed term");
}

inline double SwappedTerm(const TermContext& ctx, std::int64_t a_plus,
                          std::int64_t a_equal) {
  const double log_beta_pow = static_cast<double>(a_equal) * ctx.log_beta;
  return CheckedTerm(
      GaussianDeltaUnclamped(ctx.Mu(a_plus), ctx.epsilon + log_beta_pow),
      "swapped term");
}

struct ScanResult {
  double mixed = -1.0;
  std::int64_t mixed_at = 0;
  double swapped = -1.0;
  std::int64_t swapped_at = 0;

  // Ties resolve toward the smaller a_equal; callers merge chunks in
  // ascending order.
  void Merge(const ScanResult& other) {
    if (other.mixed > mixed) {
      mixed = other.mixed;
      mixed_at = other.mixed_at;
    }
    if (other.swapped > swapped) {
      swapped = other.swapped;
      swapped_at = other.swapped_at;
    }
  }
};

inline ScanResult ScanRange(const TermContext& ctx, std::int64_t begin,
                            std::int64_t end, const ExactDeltaOptions& options) {
  ScanResult result;
  double prev_mixed = 0.0;
  double prev_swapped = 0.0;
  std::int64_t decreasing_run = 0;
  for (std::int64_t a_equal = begin; a_equal < end; ++a_equal) {
    const std::int64_t a_plus = ctx.c_u - a_equal;
    const double mixed = MixedTerm(ctx, a_plus, a_equal);
    const double swapped = SwappedTerm(ctx, a_plus, a_equal);
    if (mixed > result.mixed) {
      result.mixed = mixed;
      result.mixed_at = a_equal;
    }
    if (swapped > result.swapped) {
      result.swapped = swapped;
      result.swapped_at = a_equal;
    }
    if (options.early_exit) {
      const bool both_down =
          a_equal > begin && mixed < prev_mixed && swapped < prev_swapped;
      decreasing_run = both_down ? decreasing_run + 1 : 0;
      if (decreasing_run >= options.early_exit_window) break;
      prev_mixed = mixed;
      prev_swapped = swapped;
    }
  }
  return result;
}

inline AccountingReport ExactDeltaForContext(const TermContext& ctx,
                                             const ExactDeltaOptions& options) {
  ScanResult scan;
  const int threads =
      options.early_exit ? 1
                         : static_cast<int>(std::clamp<std::int64_t>(
                               options.threads, 1, ctx.c_u));
  if (threads <= 1) {
    scan = ScanRange(ctx, 0, ctx.c_u, options);
  } else {
    std::vector<ScanResult> partial(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::int64_t chunk = (ctx.c_u + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t begin = std::min(ctx.c_u, t * chunk);
      const std::int64_t end = std::min(ctx.c_u, begin + chunk);
      workers.emplace_back([&, t, begin, end] {
        partial[t] = ScanRange(ctx, begin, end, options);
      });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& p : partial) scan.Merge(p);
  }

  AccountingReport report;
  report.epsilon = ctx.epsilon;
  report.delta_infinite = InfiniteTerm(ctx, ctx.c_u);
  report.delta_gaussian = SwappedTerm(ctx, ctx.c_u, 0);
  if (report.delta_infinite >= scan.mixed &&
      report.delta_infinite >= scan.swapped) {
    report.delta_exact = report.delta_infinite;
    report.binding_term = BindingTerm::kInfiniteOnly;
    report.argmax_a_equal = ctx.c_u;
  } else if (scan.mixed >= scan.swapped) {
    report.delta_exact = scan.mixed;
    report.binding_term = BindingTerm::kMixedTerm;
    report.argmax_a_equal = scan.mixed_at;
  } else {
    report.delta_exact = scan.swapped;
    report.binding_term = BindingTerm::kSwappedTerm;
    report.argmax_a_equal = scan.swapped_at;
  }
  return report;
}

inline double AddTheDeltasForContext(const TermContext& ctx) {
  return std::min(1.0, SwappedTerm(ctx, ctx.c_u, 0) + InfiniteTerm(ctx, ctx.c_u));
}

inline void RequireAccountingEpsilon(double epsilon, const char* what) {
  RequireNotNan(epsilon, what);
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw DomainError(std::string(what) + ": epsilon must be finite and >= 0");
  }
}

inline TermContext ContextFor(const GshmParams& params, double epsilon) {
  return TermContext::Make(params.ThresholdGap(), params.sigma, params.c_u,
                           params.mu_o, epsilon);
}

}  // namespace internal

// 1 - Phi((tau_high - tau_low) / sigma)^c_u: probability that some
// at-threshold group of the user is released.
inline double DeltaInfinite(const GshmParams& params) {
  params.Validate();
  return OneMinusCdfPow(params.ThresholdGap() / params.sigma, params.c_u);
}

// sqrt(a_plus / sigma^2 + a_plus * mu_o^2) for 1 <= a_plus <= c_u.
inline double MuOfAPlus(const GshmParams& params, std::int64_t a_plus) {
  params.Validate();
  if (a_plus < 1 || a_plus > params.c_u) {
    throw DomainError("MuOfAPlus: a_plus must lie in [1, c_u]");
  }
  return internal::ContextFor(params, 0.0).Mu(a_plus);
}

struct ShiftedEpsilons {
  double eps2 = 0.0;  // eps - a_equal log beta, >= eps
  double eps3 = 0.0;  // eps + a_equal log beta, <= eps, may be negative
};

inline ShiftedEpsilons ShiftedEpsilonsFor(const GshmParams& params,
                                          double epsilon,
                                          std::int64_t a_equal) {
  params.Validate();
  internal::RequireNotNan(epsilon, "ShiftedEpsilonsFor");
  if (a_equal < 0) {
    throw DomainError("ShiftedEpsilonsFor: a_equal must be >= 0");
  }
  const double shift = static_cast<double>(a_equal) *
                       StdNormalLogCdf(params.ThresholdGap() / params.sigma);
  return {epsilon - shift, epsilon + shift};
}

// delta_gaussian = f(mu(c_u), eps).
inline double GaussianOnlyDelta(const GshmParams& params, double epsilon) {
  params.Validate();
  internal::RequireAccountingEpsilon(epsilon, "GaussianOnlyDelta");
  return internal::SwappedTerm(internal::ContextFor(params, epsilon),
                               params.c_u, 0);
}

// The exact (tight) delta at `epsilon` >= 0.
inline AccountingReport ExactDelta(const GshmParams& params, double epsilon,
                                   const ExactDeltaOptions& options = {}) {
  params.Validate();
  internal::RequireAccountingEpsilon(epsilon, "ExactDelta");
  return internal::ExactDeltaForContext(internal::ContextFor(params, epsilon),
                                        options);
}

// Re-evaluates a single term of the exact maximum. For kInfiniteOnly the
// `a_equal` argument is the exponent (c_u reproduces delta_infinite).
inline double EvaluateTerm(const GshmParams& params, double epsilon,
                           BindingTerm term, std::int64_t a_equal) {
  params.Validate();
  internal::RequireAccountingEpsilon(epsilon, "EvaluateTerm");
  if (a_equal < 0 || a_equal > params.c_u ||
      (term != BindingTerm::kInfiniteOnly && a_equal == params.c_u)) {
    throw DomainError("EvaluateTerm: a_equal out of range");
  }
  const auto ctx = internal::ContextFor(params, epsilon);
  switch (term) {
    case BindingTerm::kInfiniteOnly:
      return internal::InfiniteTerm(ctx, a_equal);
    case BindingTerm::kMixedTerm:
      return internal::MixedTerm(ctx, params.c_u - a_equal, a_equal);
    case BindingTerm::kSwappedTerm:
      return internal::SwappedTerm(ctx, params.c_u - a_equal, a_equal);
  }
  return 0.0;
}

// Both hockey-stick values for the neighbor structure with `a_plus` groups
// above tau_low and `a_equal` groups at tau_low (a_plus + a_equal <= c_u).
// With a_plus == 0 these are the closed forms for at-threshold groups only.
inline NeighborPairDeltas NeighborPairDeltasFor(const GshmParams& params,
                                                double epsilon,
                                                std::int64_t a_plus,
                                                std::int64_t a_equal) {
  params.Validate();
  internal::RequireNotNan(epsilon, "NeighborPairDeltasFor");
  if (a_plus < 0 || a_equal < 0 || a_plus + a_equal > params.c_u) {
    throw DomainError("NeighborPairDeltasFor: need a_plus + a_equal <= c_u");
  }
  const auto ctx = internal::ContextFor(params, epsilon);
  if (a_plus == 0) {
    const double log_beta_pow = static_cast<double>(a_equal) * ctx.log_beta;
    const double reverse =
        epsilon > -log_beta_pow ? 0.0 : -std::expm1(epsilon + log_beta_pow);
    return {internal::InfiniteTerm(ctx, a_equal), std::max(0.0, reverse)};
  }
  return {internal::MixedTerm(ctx, a_plus, a_equal),
          internal::SwappedTerm(ctx, a_plus, a_equal)};
}

// min(1, delta_gaussian + delta_infinite).
inline double AddTheDeltas(const GshmParams& params, double epsilon) {
  params.Validate();
  internal::RequireAccountingEpsilon(epsilon, "AddTheDeltas");
  return internal::AddTheDeltasForContext(internal::ContextFor(params, epsilon));
}

inline PrivacyPoint DeltaFor(Accounting accounting, const GshmParams& params,
                             double epsilon,
                             const ExactDeltaOptions& options = {}) {
  switch (accounting) {
    case Accounting::kExact:
      return {epsilon, ExactDelta(params, epsilon, options).delta_exact,
              accounting};
    case Accounting::kAddTheDeltas:
      return {epsilon, AddTheDeltas(params, epsilon), accounting};
    case Accounting::kGaussianOnly:
      return {epsilon, GaussianOnlyDelta(params, epsilon), accounting};
  }
  throw DomainError("DeltaFor: unknown accounting");
}

// For c_u == 1: ratio of the smallest threshold gap that meets `delta` under
// add-the-deltas to the one under exact accounting,
//   Phi^{-1}(1 - delta + delta_gaussian) / Phi^{-1}(1 - delta).
// Evaluated through lower-tail quantiles, Phi^{-1}(1 - q) = -Phi^{-1}(q).
inline double ThresholdRatioCu1(double delta, double delta_gaussian) {
  internal::RequireNotNan(delta, "ThresholdRatioCu1");
  internal::RequireNotNan(delta_gaussian, "ThresholdRatioCu1");
  if (!(delta_gaussian > 0.0 && delta_gaussian < delta)) {
    throw DomainError("ThresholdRatioCu1: need 0 < delta_gaussian < delta");
  }
  if (!(delta < 0.5)) {
    throw DomainError("ThresholdRatioCu1: need delta < 0.5");
  }
  return StdNormalQuantile(delta - delta_gaussian) / StdNormalQuantile(delta);
}

}  // namespace gshm

#endif  // GSHM_ACCOUNTING_H_
