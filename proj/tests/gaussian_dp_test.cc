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


#include "gshm/gaussian_dp.h"

#include <cmath>
#include <limits>
#include <vector>

#include "gtest/gtest.h"

namespace gshm {
namespace {

// Reference values computed with mpmath at 60 digits from
// Phi(mu/2 - eps/mu) - e^eps Phi(-mu/2 - eps/mu).

void ExpectRelNear(double actual, double expected, double rel) {
  EXPECT_NEAR(actual, expected, rel * std::fabs(expected))
      << "expected " << expected;
}

TEST(GaussianDeltaTest, MatchesHighPrecisionReference) {
  ExpectRelNear(GaussianDelta(1.0, 0.0), 0.38292492254802620728, 1e-14);
  ExpectRelNear(GaussianDelta(1.0, 1.0), 0.1269367375066439458, 1e-14);
  ExpectRelNear(GaussianDelta(3.0, 10.0), 0.018589514315857806058, 1e-12);
  ExpectRelNear(GaussianDelta(std::sqrt(51914.0) / 2228.0, 0.349),
                1.0031038485126878898e-5, 1e-11);
}

TEST(GaussianDeltaTest, LargeEpsilonWithLargeMu) {
  // e^eps overflows here while e^eps Phi(lower) does not. mpmath references.
  EXPECT_NEAR(GaussianDelta(40.0, 700.0), 0.99332324500965503054, 1e-13);
  EXPECT_NEAR(GaussianDelta(30.0, 200.0), 0.99999999999999994541, 1e-15);
}

TEST(GaussianDeltaTest, NegativeEpsilon) {
  ExpectRelNear(GaussianDelta(0.5, -0.3), 0.33056170699780575393, 1e-14);
  ExpectRelNear(GaussianDelta(2.0, -3.0), 0.95936444584096310038, 1e-14);
  // Never below the trivial 1 - e^eps.
  for (double eps = -5.0; eps < 0.0; eps += 0.5) {
    EXPECT_GE(GaussianDelta(0.3, eps), -std::expm1(eps) - 1e-15);
  }
}

TEST(GaussianDeltaTest, ZeroMu) {
  EXPECT_EQ(GaussianDelta(0.0, 1.0), 0.0);
  ExpectRelNear(GaussianDelta(0.0, -0.5), -std::expm1(-0.5), 1e-15);
}

TEST(GaussianDeltaTest, DeepTailUnderflowsToZero) {
  // True value is ~2.8e-549.
  EXPECT_EQ(GaussianDelta(0.01, 0.5), 0.0);
}

TEST(GaussianDeltaTest, StaysInUnitInterval) {
  for (double mu : {1e-3, 0.1, 1.0, 10.0, 100.0}) {
    for (double eps = -20.0; eps <= 20.0; eps += 0.25) {
      const double d = GaussianDelta(mu, eps);
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
  }
}

TEST(GaussianDeltaTest, IncreasingInMuDecreasingInEpsilon) {
  for (double eps : {-1.0, 0.0, 0.349, 1.0, 4.0}) {
    double previous = -1.0;
    for (double mu = 0.05; mu < 8.0; mu *= 1.1) {
      const double d = GaussianDelta(mu, eps);
      EXPECT_GE(d, previous) << "mu=" << mu << " eps=" << eps;
      previous = d;
    }
  }
  for (double mu : {0.1, 0.5, 2.0}) {
    double previous = 2.0;
    for (double eps = -2.0; eps < 6.0; eps += 0.1) {
      const double d = GaussianDelta(mu, eps);
      EXPECT_LE(d, previous) << "mu=" << mu << " eps=" << eps;
      previous = d;
    }
  }
}

TEST(GaussianDeltaTest, RejectsBadArguments) {
  EXPECT_THROW(GaussianDelta(-1.0, 0.0), DomainError);
  EXPECT_THROW(GaussianDelta(std::nan(""), 0.0), DomainError);
  EXPECT_THROW(GaussianDelta(1.0, std::nan("")), DomainError);
  EXPECT_THROW(GaussianDelta(1.0, std::numeric_limits<double>::infinity()),
               DomainError);
}

TEST(GaussianDeltaTest, StructOverload) {
  EXPECT_EQ(GaussianDelta(GaussianTradeoffInput{1.5, 0.2}),
            GaussianDelta(1.5, 0.2));
}

TEST(MuFromSensitivitiesTest, RootSumOfSquares) {
  const std::vector<double> sensitivity = {1.0, 2.0};
  const std::vector<double> sigma = {2.0, 4.0};
  EXPECT_DOUBLE_EQ(MuFromSensitivities(sensitivity, sigma), std::sqrt(0.5));
  EXPECT_EQ(MuFromSensitivities({}, {}), 0.0);
}

TEST(MuFromSensitivitiesTest, RejectsBadInput) {
  const std::vector<double> one = {1.0};
  const std::vector<double> two = {1.0, 1.0};
  const std::vector<double> zero = {0.0};
  const std::vector<double> negative = {-1.0};
  EXPECT_THROW(MuFromSensitivities(one, two), DomainError);
  EXPECT_THROW(MuFromSensitivities(one, zero), DomainError);
  EXPECT_THROW(MuFromSensitivities(negative, one), DomainError);
}

TEST(CalibrateMuTest, MatchesReferenceRoot) {
  ExpectRelNear(CalibrateMu(1.0, 1e-5), 0.2680511232112942179, 1e-10);
  ExpectRelNear(CalibrateMu(0.349, 1e-5), 0.1022428607685887085, 1e-10);
}

TEST(CalibrateMuTest, HitsTargetDelta) {
  for (double eps : {0.0, 0.1, 1.0, 5.0}) {
    for (double target : {1e-10, 1e-5, 0.01, 0.3}) {
      const double mu = CalibrateMu(eps, target);
      ExpectRelNear(GaussianDelta(mu, eps), target, 1e-10);
    }
  }
}

TEST(CalibrateMuTest, RejectsBadTargets) {
  EXPECT_THROW(CalibrateMu(1.0, 0.0), DomainError);
  EXPECT_THROW(CalibrateMu(1.0, 1.0), DomainError);
  EXPECT_THROW(CalibrateMu(-1.0, 0.1), DomainError);
}

}  // namespace
}  // namespace gshm
