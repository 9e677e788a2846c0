// Copyright 2026 The PTF Learning Authors
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

#include "ptf/partitioner.h"

#include <cmath>

#include <gtest/gtest.h>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"
#include "ptf/random.h"

namespace ptf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HermitePoly ProductSquare() {
  return HermitePoly::FromMonomial(2, {{MultiIndex{2, 2}, 1.0}});
}

Region Slab(const HermitePoly& q, double lo, double hi, int level = 1) {
  Region r;
  r.q = {q};
  r.rect.lo = {lo};
  r.rect.hi = {hi};
  r.level = level;
  return r;
}

TEST(RectangleTest, HalfOpenAndValidated) {
  Rectangle r{{0.0, -kInf}, {1.0, kInf}};
  EXPECT_TRUE(r.Contains(std::vector<double>{0.0, 5.0}));
  EXPECT_FALSE(r.Contains(std::vector<double>{1.0, 5.0}));
  EXPECT_NO_THROW(r.Validate(2.0));
  EXPECT_THROW(r.Validate(0.5), Error);
  EXPECT_THROW((Rectangle{{1.0}, {0.0}}.Validate()), Error);
}

TEST(RegionTest, JsonRoundTrip) {
  Region r = Slab(HermitePoly::Coordinate(3, 1), -kInf, 0.25, 2);
  r.mass_estimate = 0.4;
  const Region back = RegionFromJson(RegionToJson(r));
  EXPECT_EQ(back.q[0].hermite(), r.q[0].hermite());
  EXPECT_EQ(back.rect.lo[0], -kInf);
  EXPECT_EQ(back.rect.hi[0], 0.25);
  EXPECT_EQ(back.level, 2);
  EXPECT_EQ(back.mass_estimate, 0.4);
  EXPECT_THROW(RegionFromJson(nlohmann::json{{"q", 1}}), Error);
}

TEST(SampleConditionalTest, AcceptanceRates) {
  EXPECT_EQ(SampleConditional(Region::FullSpace(1), 2, 1000, 1).acceptance, 1.0);
  const auto half = SampleConditional(Slab(HermitePoly::Coordinate(2, 0), 0, kInf), 2,
                                      100000, 2);
  EXPECT_NEAR(half.acceptance, 0.5, 4 * std::sqrt(0.25 / half.draws));
  for (Eigen::Index i = 0; i < half.points.rows(); ++i) EXPECT_GE(half.points(i, 0), 0.0);
  // Pr[|x1 x2| <= 0.1], midpoint rule on E[erf(0.1 / (|X| sqrt 2))].
  double oracle = 0.0;
  const int steps = 200000;
  const double h = 9.0 / steps;
  for (int i = 0; i < steps; ++i) {
    const double x = (i + 0.5) * h;
    oracle += std::exp(-x * x / 2) * std::erf(0.1 / (x * std::sqrt(2.0)));
  }
  oracle *= 2 * h / std::sqrt(2 * 3.141592653589793);
  const auto slab = SampleConditional(Slab(ProductSquare(), 0, 0.01), 2, 50000, 3);
  EXPECT_NEAR(slab.acceptance, oracle,
              4 * std::sqrt(oracle * (1 - oracle) / slab.draws));
  EXPECT_GT(slab.acceptance, 0.05);
  EXPECT_LT(slab.acceptance, 0.3);
}

TEST(SampleConditionalTest, WorkerCountDoesNotChangeOutput) {
  const Region r = Slab(HermitePoly::Coordinate(3, 2), 0.5, kInf);
  SamplerOptions one, three;
  three.workers = 3;
  const auto a = SampleConditional(r, 3, 20000, 9, one);
  const auto b = SampleConditional(r, 3, 20000, 9, three);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.acceptance, b.acceptance);
}

TEST(SampleConditionalTest, EmptyRegionIsReported) {
  SamplerOptions opts;
  opts.probe_batch = 10000;
  try {
    SampleConditional(Slab(HermitePoly::Coordinate(2, 0), 12, 13), 2, 10, 1, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAcceptanceTooLow);
  }
}

TEST(AnticoncentrationTest, GaussianOracleAndCrossProductFailure) {
  const int64_t n = 200000;
  const auto full = AnticoncentrationProbe(Region::FullSpace(1), 2,
                                           HermitePoly::Coordinate(2, 0), {0.0, 0.1}, n, 4);
  EXPECT_EQ(full.small_ball[0], 0.0);
  const double oracle = std::erf(0.1 / std::sqrt(2.0));  // 0.0797
  EXPECT_NEAR(full.small_ball[1], oracle, 4 * std::sqrt(oracle / n) + 0.002);
  EXPECT_NEAR(full.conditional_norm, 1.0, 0.01);
  // Pr[|g| > 10] is negligible under N(0, 1).
  EXPECT_LT(full.tail[1], 1e-4);

  const HermitePoly x1sq = HermitePoly::FromMonomial(2, {{MultiIndex{2}, 1.0}});
  const auto slab =
      AnticoncentrationProbe(Slab(ProductSquare(), 0, 0.01), 2, x1sq, {0.01}, 50000, 5);
  EXPECT_GE(slab.small_ball[0], 0.1);
}

TEST(PartitionTest, ProductBandIsCoveredAndAnticoncentrated) {
  const HermitePoly p =
      (ProductSquare() - HermitePoly::Constant(2, 1.0)).Scaled(1 / std::sqrt(8.0));
  PartitionParams params;
  params.epsilon = 0.1;
  params.cell_side = 0.25;
  params.mass_floor = 1e-5;
  params.snpt.grid_step = 0.05;
  params.probe_polys = {HermitePoly::FromMonomial(2, {{MultiIndex{2}, 1.0}})};
  params.probe_t = {0.01};
  const PartitionResult r = PartitionRegion(p, Region::FullSpace(1), params);
  const PartitionReport& rep = r.report;
  EXPECT_LE(rep.coverage_loss, 0.01 * rep.low_margin_mass);
  EXPECT_LE(rep.decomposition_residual, 1e-3);
  for (const CellReport& c : rep.cells) {
    if (c.samples < 200) continue;
    EXPECT_LT(c.probes[0].small_ball[0], std::pow(0.01, 0.25)) << c.id;
  }
  for (const Region& child : r.regions) {
    EXPECT_EQ(child.level, 0);
    EXPECT_GT(child.mass_estimate, params.mass_floor);
  }
  EXPECT_EQ(rep.level_out, rep.level_in - 1);
}

TEST(PartitionTest, FarFromZeroKeepsNothing) {
  PartitionParams params;
  params.epsilon = 0.1;
  params.snpt.grid_step = 0.05;
  try {
    PartitionRegion(HermitePoly::Constant(2, 1.0), Region::FullSpace(1), params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCellsKept);
  }
}

TEST(PartitionTest, CellsAreDisjointContainedAndAboveTheFloor) {
  const HermitePoly p =
      (HermitePoly::Basis(3, MultiIndex{1, 1}).Scaled(0.6) +
       HermitePoly::Coordinate(3, 2).Scaled(0.5) + HermitePoly::Constant(3, 0.1));
  const Region region = Slab(HermitePoly::Coordinate(3, 0), -0.5, kInf, 2);
  PartitionParams params;
  params.epsilon = 0.1;
  params.n_mc = 100000;
  params.snpt.grid_step = 0.05;
  params.seed = 21;
  const PartitionResult r = PartitionRegion(p, region, params);
  ASSERT_FALSE(r.regions.empty());
  for (size_t a = 0; a < r.regions.size(); ++a) {
    const Region& ra = r.regions[a];
    EXPECT_EQ(ra.level, 1);
    EXPECT_GE(ra.rect.lo[0], -0.5);
    EXPECT_EQ(ra.q[0].hermite(), region.q[0].hermite());
    for (size_t b = a + 1; b < r.regions.size(); ++b) {
      bool separated = false;
      for (int j = 0; j < ra.rect.size(); ++j) {
        separated = separated || ra.rect.hi[j] <= r.regions[b].rect.lo[j] ||
                    r.regions[b].rect.hi[j] <= ra.rect.lo[j];
      }
      EXPECT_TRUE(separated) << a << " " << b;
    }
  }
  for (const CellReport& c : r.report.cells) {
    EXPECT_GT(c.mass, params.mass_floor);
    EXPECT_GT(c.inlier_fraction, params.InlierFloor());
  }
  const double bound = 3 * params.epsilon * params.epsilon;
  EXPECT_LE(r.report.coverage_loss, bound);
  EXPECT_LE(r.report.overshoot, bound);
  // Same inputs, same cells.
  const PartitionResult again = PartitionRegion(p, region, params);
  ASSERT_EQ(again.regions.size(), r.regions.size());
  for (size_t i = 0; i < r.regions.size(); ++i) {
    EXPECT_EQ(again.regions[i].rect.lo, r.regions[i].rect.lo);
    EXPECT_EQ(again.regions[i].rect.hi, r.regions[i].rect.hi);
  }
  const nlohmann::json j = PartitionReportToJson(r.report);
  EXPECT_EQ(j.at("cells").size(), r.report.cells.size());
}

TEST(PartitionTest, PreconditionsAreChecked) {
  PartitionParams params;
  EXPECT_THROW(PartitionRegion(HermitePoly::Coordinate(2, 0), Region::FullSpace(0), params),
               Error);
  EXPECT_THROW(
      PartitionRegion(HermitePoly::Coordinate(2, 0).Scaled(2.0), Region::FullSpace(1), params),
      Error);
}

}  // namespace
}  // namespace ptf
