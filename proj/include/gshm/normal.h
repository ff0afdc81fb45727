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

// Standard normal primitives that stay accurate deep in both tails.
//
// Every tail probability is obtained from std::erfc, never by subtracting a
// CDF value from one. Powers of the CDF are evaluated as exp(n * log CDF), so
// exponents in the tens of thousands neither underflow nor lose the tiny
// per-factor deficit.

#ifndef GSHM_NORMAL_H_
#define GSHM_NORMAL_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "gshm/errors.h"

namespace gshm {

namespace internal {

// Below this argument log(erfc) is replaced by its asymptotic expansion;
// erfc(37 / sqrt(2)) is ~6e-300, still a normal double.
inline constexpr double kLogCdfAsymptoticCutoff = -37.0;

inline double UpperTail(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double LowerTail(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// log(Phi(x)) for x <= -37 from
//   Phi(x) = phi(x) / |x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...).
// Seven correction terms put the truncation error below 1e-17 at x = -37.
inline double LogCdfAsymptotic(double x) {
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double series = 0.0;
  for (int k = 1; k <= 7; ++k) {
    term *= -(2.0 * k - 1.0) * inv_x2;
    series += term;
  }
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) -
         std::log(-x) + std::log1p(series);
}

}  // namespace internal

// Standard normal density.
inline double StdNormalPdf(double x) {
  internal::RequireNotNan(x, "StdNormalPdf");
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Phi(x). Relative error is that of std::erfc in either tail.
inline double StdNormalCdf(double x) {
  internal::RequireNotNan(x, "StdNormalCdf");
  return internal::LowerTail(x);
}

// 1 - Phi(x), accurate for large positive x.
inline double StdNormalSurvival(double x) {
  internal::RequireNotNan(x, "StdNormalSurvival");
  return internal::UpperTail(x);
}

// log(Phi(x)) without intermediate underflow. Returns -inf only for
// x == -inf.
inline double StdNormalLogCdf(double x) {
  internal::RequireNotNan(x, "StdNormalLogCdf");
  if (x >= 0.0) return std::log1p(-internal::UpperTail(x));
  if (x == -std::numeric_limits<double>::infinity()) return x;
  if (x < internal::kLogCdfAsymptoticCutoff) {
    return internal::LogCdfAsymptotic(x);
  }
  return std::log(internal::LowerTail(x));
}

// Phi^{-1}(p) for p in (0, 1).
//
// Wichura's AS241 (PPND16) rational approximation followed by one Newton step
// against StdNormalCdf. The step is taken in whichever tail p lies, so that
// 1 - p (exact for p >= 0.5) is compared against the survival function.
inline double StdNormalQuantile(double p) {
  internal::RequireNotNan(p, "StdNormalQuantile");
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("StdNormalQuantile: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  double x;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
  } else {
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r + 2.41780725177450611770e-1) * r +
               1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) *
                 r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r + 1.51986665636164571966e-2) * r +
               1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) *
                 r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r + 1.24266094738807843860e-3) * r +
               2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) *
                 r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r + 1.84631831751005468180e-5) * r +
               7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) *
                 r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    }
    if (q < 0.0) x = -x;
  }

  const double density = StdNormalPdf(x);
  if (density > 0.0) {
    if (q < 0.0) {
      x -= (internal::LowerTail(x) - p) / density;
    } else {
      x += (internal::UpperTail(x) - (1.0 - p)) / density;
    }
  }
  return x;
}

// 1 - Phi(x)^n, evaluated as -expm1(n * log Phi(x)). Exactly 0 for n == 0.
inline double OneMinusCdfPow(double x, std::int64_t n) {
  internal::RequireNotNan(x, "OneMinusCdfPow");
  if (n < 0) throw DomainError("OneMinusCdfPow: n must be nonnegative");
  if (n == 0) return 0.0;
  return -std::expm1(static_cast<double>(n) * StdNormalLogCdf(x));
}

}  // namespace gshm

#endif  // GSHM_NORMAL_H_
