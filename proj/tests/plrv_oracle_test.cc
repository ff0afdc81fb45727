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


#include "gshm/plrv_oracle.h"

#include <cmath>
#include <cstdint>
#include <limits>

#include "gshm/accounting.h"
#include "gshm/gaussian_dp.h"
#include "gshm/normal.h"
#include "gtest/gtest.h"

namespace gshm {
namespace {

GshmParams Params(double tau, double tau_star, double sigma, std::int64_t c_u,
                  double mu_o = 0.0) {
  GshmParams p;
  p.tau_low = tau;
  p.tau_high = tau_star;
  p.sigma = sigma;
  p.c_u = c_u;
  p.mu_o = mu_o;
  p.num_columns = mu_o > 0.0 ? 2 : 1;
  return p;
}

void ExpectWithin(const PlrvEstimate& e, double forward, double reverse) {
  EXPECT_NEAR(e.delta_forward, forward, 4.0 * e.stderr_forward + 1e-12);
  EXPECT_NEAR(e.delta_reverse, reverse, 4.0 * e.stderr_reverse + 1e-12);
}

TEST(RowLogLikelihoodRatioTest, SuppressedRow) {
  const GshmParams p = Params(2, 5, 1.5, 1);
  const RowOutcome none;
  EXPECT_DOUBLE_EQ(RowLogLikelihoodRatio(none, 2, 1, p),
                   std::log(StdNormalCdf(3.0 / 1.5)));
  EXPECT_DOUBLE_EQ(RowLogLikelihoodRatio(none, 1, 2, p),
                   -std::log(StdNormalCdf(3.0 / 1.5)));
  EXPECT_DOUBLE_EQ(RowLogLikelihoodRatio(none, 10, 9, p),
                   std::log(StdNormalCdf(-5.0 / 1.5)) -
                       std::log(StdNormalCdf(-4.0 / 1.5)));
}

TEST(RowLogLikelihoodRatioTest, EmittedRow) {
  const GshmParams p = Params(2, 5, 1.0, 1);
  const RowOutcome out{true, 12.0, 0.0};
  // ((12 - 9)^2 - (12 - 10)^2) / 2.
  EXPECT_DOUBLE_EQ(RowLogLikelihoodRatio(out, 10, 9, p), 2.5);
  EXPECT_EQ(RowLogLikelihoodRatio(out, 2, 1, p),
            std::numeric_limits<double>::infinity());
  EXPECT_THROW(RowLogLikelihoodRatio(out, 1, 2, p), InternalConsistencyError);
  EXPECT_THROW(RowLogLikelihoodRatio(RowOutcome{true, 4.0, 0.0}, 10, 9, p),
               InternalConsistencyError);
}

TEST(RowLogLikelihoodRatioTest, AggregateColumnAddsGaussianLoss) {
  const GshmParams p = Params(2, 5, 1.0, 1, 0.5);
  const RowOutcome out{true, 12.0, 1.0};
  // Count part 2.5, aggregate part ((1 - 0)^2 - (1 - 0.5)^2) / 2.
  EXPECT_DOUBLE_EQ(RowLogLikelihoodRatio(out, {10, 0.5}, {9, 0.0}, p),
                   2.5 + 0.375);
}

TEST(EstimateHockeyStickTest, AtThresholdRowMatchesSuppression) {
  const GshmParams p = Params(1, 3, 1.0, 1);
  const double beta = StdNormalCdf(2.0);
  const auto e = EstimateHockeyStick(MakeWorstCasePair(p, 0, 1), 0.5, 400000, 7);
  ExpectWithin(e, 1.0 - beta, 0.0);
  const auto closed = NeighborPairDeltasFor(p, 0.5, 0, 1);
  EXPECT_NEAR(closed.forward, 1.0 - beta, 1e-15);
}

TEST(EstimateHockeyStickTest, FarAboveThresholdIsGaussian) {
  const GshmParams p = Params(1, 3, 1.0, 1);
  const double eps = 0.3;
  const auto e = EstimateHockeyStick(MakeWorstCasePair(p, 1, 0), eps, 400000, 11);
  const double gaussian = GaussianDelta(MuOfAPlus(p, 1), eps);
  ExpectWithin(e, gaussian, gaussian);
}

TEST(EstimateHockeyStickTest, AggregateColumnRaisesMu) {
  const GshmParams p = Params(1, 3, 2.0, 1, 0.8);
  const double eps = 0.2;
  const auto e = EstimateHockeyStick(MakeWorstCasePair(p, 1, 0), eps, 400000, 5);
  const double gaussian = GaussianDelta(std::sqrt(0.25 + 0.64), eps);
  ExpectWithin(e, gaussian, gaussian);
}

TEST(EstimateHockeyStickTest, MixedPairMatchesClosedForms) {
  const GshmParams p = Params(1, 2.5, 1.2, 2);
  const double eps = 0.4;
  const auto e = EstimateHockeyStick(MakeWorstCasePair(p, 1, 1), eps, 400000, 3);
  const auto closed = NeighborPairDeltasFor(p, eps, 1, 1);
  ExpectWithin(e, closed.forward, closed.reverse);
  EXPECT_LE(std::max(closed.forward, closed.reverse),
            ExactDelta(p, eps).delta_exact + 1e-15);
}

TEST(EstimateHockeyStickTest, DeterministicAcrossThreads) {
  const GshmParams p = Params(1, 2.5, 1.2, 3);
  const auto pair = MakeWorstCasePair(p, 2, 1);
  const auto one = EstimateHockeyStick(pair, 0.4, 50001, 99, 1);
  const auto many = EstimateHockeyStick(pair, 0.4, 50001, 99, 5);
  EXPECT_EQ(one.delta_forward, many.delta_forward);
  EXPECT_EQ(one.delta_reverse, many.delta_reverse);
  EXPECT_EQ(one.samples, 50001);
}

TEST(EstimateHockeyStickTest, RejectsBadPairs) {
  const GshmParams p = Params(1, 2.5, 1.2, 2);
  EXPECT_THROW(MakeWorstCasePair(p, 2, 1), DomainError);
  EXPECT_THROW(MakeWorstCasePair(p, 0, 0), DomainError);
  EXPECT_THROW(MakeWorstCasePair(p, 1, 0, 1.5), DomainError);
  EXPECT_THROW(EstimateHockeyStick(MakeWorstCasePair(p, 1, 0), 0.1, 0, 1),
               DomainError);
}

TEST(EqualRowsLossHistogramTest, TwoAtomsWithSuppressionMass) {
  const GshmParams p = Params(1, 2, 1.0, 2);
  const std::int64_t n = 200000;
  const auto histogram = EqualRowsLossHistogram(p, 2, n, 17);
  const double log_beta = std::log(StdNormalCdf(1.0));
  ASSERT_EQ(histogram.size(), 2u);
  const auto& [finite_loss, finite_count] = *histogram.begin();
  EXPECT_NEAR(finite_loss, 2.0 * log_beta, 1e-15);
  EXPECT_EQ(histogram.rbegin()->first, std::numeric_limits<double>::infinity());
  const double beta_sq = std::exp(2.0 * log_beta);
  EXPECT_NEAR(static_cast<double>(finite_count) / n, beta_sq,
              4.0 * std::sqrt(beta_sq * (1 - beta_sq) / n));
}

TEST(QuadratureTest, ApproachesGaussianForLargeCounts) {
  const GshmParams p = Params(1, 3, 1.0, 1);
  for (double eps : {0.0, 0.3, 1.0, 2.0}) {
    const double gaussian = GaussianDelta(1.0, eps);
    EXPECT_NEAR(QuadratureDeltaSingleRow(p, eps, Direction::kForward), gaussian,
                1e-10)
        << eps;
    EXPECT_NEAR(QuadratureDeltaSingleRow(p, eps, Direction::kReverse), gaussian,
                1e-10)
        << eps;
  }
}

TEST(QuadratureTest, NeverExceedsGaussianIncludingNegativeEpsilon) {
  const GshmParams p = Params(1, 4, 1.0, 1);
  for (double big : {2.0, 3.0, 4.0, 5.0, 7.0}) {
    for (double eps : {-1.0, -0.2, 0.0, 0.5, 1.5}) {
      const double gaussian = GaussianDelta(1.0, eps);
      EXPECT_LE(QuadratureDeltaSingleRow(p, eps, Direction::kForward, big),
                gaussian + 1e-10);
      EXPECT_LE(QuadratureDeltaSingleRow(p, eps, Direction::kReverse, big),
                gaussian + 1e-10);
    }
  }
}

TEST(QuadratureTest, TightensAsCountRises) {
  const GshmParams p = Params(1, 4, 1.0, 1);
  const double eps = 0.5;
  double previous = 0.0;
  for (double big = 2.0; big <= 12.0; big += 1.0) {
    const double value = QuadratureDeltaSingleRow(p, eps, Direction::kReverse, big);
    EXPECT_GE(value, previous - 1e-12) << big;
    previous = value;
  }
  EXPECT_NEAR(previous, GaussianDelta(1.0, eps), 1e-10);
}

TEST(QuadratureTest, AgreesWithMonteCarloNearThreshold) {
  const GshmParams p = Params(1, 4, 1.0, 1);
  const double eps = 0.25;
  const double big = 4.0;
  const auto e = EstimateHockeyStick(MakeWorstCasePair(p, 1, 0, big), eps,
                                     400000, 23);
  ExpectWithin(e, QuadratureDeltaSingleRow(p, eps, Direction::kForward, big),
               QuadratureDeltaSingleRow(p, eps, Direction::kReverse, big));
}

TEST(QuadratureTest, RequiresCountOnlyRows) {
  EXPECT_THROW(
      QuadratureDeltaSingleRow(Params(1, 3, 1, 1, 0.5), 0.1, Direction::kForward),
      DomainError);
}

}  // namespace
}  // namespace gshm
