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

#include "ptf/snpt.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"

namespace ptf {
namespace {

HermitePoly H2(int dim, int i) { return HermitePoly::Basis(dim, MultiIndex::Unit(i, 2)); }

HermitePoly Normalized(const HermitePoly& p) { return p.Scaled(1.0 / p.L2Norm()); }

PolyVec NearCollinearPair(double eta) {
  return {H2(2, 0), Normalized(H2(2, 0) + H2(2, 1).Scaled(eta))};
}

HermitePoly RandomHarmonic(std::mt19937_64& rng, int dim, int k) {
  std::normal_distribution<double> normal;
  Terms t;
  std::vector<int> e(dim, 0);
  while (true) {
    int total = 0;
    for (int v : e) total += v;
    if (total == k) t[MultiIndex(e)] = normal(rng);
    int i = 0;
    while (i < dim) {
      if (++e[i] <= k) break;
      e[i] = 0;
      ++i;
    }
    if (i == dim) break;
  }
  return HermitePoly::FromHermite(dim, t);
}

TEST(ViolationSearchTest, CoordinatesHaveNoCertificate) {
  SnptParams params;
  params.epsilon = 0.5;
  params.grid_step = 0.02;
  const PolyVec s = {HermitePoly::Coordinate(2, 0), HermitePoly::Coordinate(2, 1)};
  EXPECT_FALSE(SnptViolationSearch(s, params).has_value());
}

TEST(ViolationSearchTest, NearCollinearPairIsCaught) {
  SnptParams params;
  params.epsilon = 0.05;
  params.N = 2;
  params.grid_step = 0.02;
  const auto cert = SnptViolationSearch(NearCollinearPair(0.01), params);
  ASSERT_TRUE(cert.has_value());
  EXPECT_EQ(cert->k, 2);
  EXPECT_GE(std::abs(cert->a[0] - cert->a[1]) / std::sqrt(2.0), 0.95);
  EXPECT_GT(cert->est_prob, 0.9);
  EXPECT_GT(cert->raw_norm_sq, 0.9);
  EXPECT_LT(cert->raw_norm_sq, 1.1);
}

TEST(ViolationSearchTest, IndependentQuadraticsFollowTheGaussianOracle) {
  // For a = (1, 0) the event is sqrt(2)|y1| < eps/2, probability
  // erf(eps / (2 sqrt(2) sqrt(2))). At N = 1 that stays below eps/2; at N = 2
  // it clears eps^2/2, so an axis-aligned certificate must come back.
  const PolyVec s = {H2(2, 0), H2(2, 1)};
  SnptParams params;
  params.epsilon = 0.05;
  params.grid_step = 0.02;
  params.n_mc = 100000;
  params.N = 1;
  EXPECT_FALSE(SnptViolationSearch(s, params).has_value());
  params.N = 2;
  const auto cert = SnptViolationSearch(s, params);
  ASSERT_TRUE(cert.has_value());
  EXPECT_GE(std::max(std::abs(cert->a[0]), std::abs(cert->a[1])), 0.95);
  const double oracle = std::erf(0.025 / std::sqrt(2.0) / std::sqrt(2.0));
  // The best lattice point sits slightly inside the unit circle, so allow for
  // the 1/|a| inflation of the window as well as Monte Carlo error.
  EXPECT_GT(cert->est_prob, oracle - 4 * std::sqrt(oracle / params.n_mc));
  EXPECT_LT(cert->est_prob, oracle / 0.9 + 4 * std::sqrt(oracle / params.n_mc));
}

TEST(ViolationSearchTest, EstimateMatchesSymbolicDerivatives) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  const HermitePoly q = Normalized(RandomHarmonic(rng, 3, 3));
  SnptParams params;
  params.epsilon = 0.5;
  params.grid_step = 1.0;
  params.derivative_threshold = 2.0;
  params.probability_threshold = 1.0;
  params.n_mc = 20000;
  SearchDiagnostics diag;
  EXPECT_FALSE(SnptViolationSearch({q}, params, nullptr, &diag).has_value());
  // Oracle: symbolic D_{y2} D_{y1} q, gradient at a random x.
  int hits = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> y1(3), y2(3), x(3);
    for (auto* v : {&y1, &y2, &x}) {
      for (double& c : *v) c = normal(rng);
    }
    const HermitePoly dd = DirectionalDerivative(DirectionalDerivative(q, y1), y2);
    double sq = 0.0;
    for (const auto& g : Gradient(dd)) sq += g.Eval(x) * g.Eval(x);
    if (std::sqrt(sq) < 2.0) ++hits;
  }
  const double oracle = static_cast<double>(hits) / trials;
  EXPECT_NEAR(diag.best_prob[3], oracle, 5 * std::sqrt(0.25 / trials) * std::sqrt(2.0));
}

TEST(ViolationSearchTest, EmptyLevelsAreSkippedAndBadInputsRejected) {
  SnptParams params;
  params.epsilon = 0.3;
  params.grid_step = 0.05;
  SearchDiagnostics diag;
  const PolyVec s = {HermitePoly::Coordinate(2, 0), HermitePoly::Basis(2, MultiIndex{0, 3})};
  SnptViolationSearch(s, params, nullptr, &diag);
  ASSERT_EQ(diag.empty_levels.size(), 1u);
  EXPECT_EQ(diag.empty_levels[0], 2);
  try {
    SnptViolationSearch({HermitePoly::Coordinate(2, 0).Scaled(2.0)}, params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotNormalized);
  }
}

TEST(ViolationSearchTest, MonotoneInEpsilonAtFixedThresholds) {
  const PolyVec s = NearCollinearPair(0.2);
  SnptParams params;
  params.grid_step = 0.05;
  params.probability_threshold = 0.02;
  double prev = -1.0;
  bool found_before = false;
  for (double eps : {0.05, 0.1, 0.2, 0.4}) {
    params.epsilon = eps;
    SearchDiagnostics diag;
    const bool found = SnptViolationSearch(s, params, nullptr, &diag).has_value();
    EXPECT_GE(diag.best_prob[2], prev);
    if (found_before) EXPECT_TRUE(found);
    prev = diag.best_prob[2];
    found_before = found_before || found;
  }
  EXPECT_TRUE(found_before);
}

TEST(ViolationSearchTest, RandomDirectionsModeFindsPlantedDependence) {
  // Five quadratics, the last nearly a combination of the first two.
  PolyVec s = {H2(3, 0), H2(3, 1), H2(3, 2), HermitePoly::Basis(3, MultiIndex{1, 1})};
  s.push_back(Normalized(H2(3, 0) + H2(3, 1) + HermitePoly::Basis(3, MultiIndex{0, 1, 1}).Scaled(0.01)));
  SnptParams params;
  params.epsilon = 0.1;
  params.N = 2;
  const auto cert = SnptViolationSearch(s, params);
  ASSERT_TRUE(cert.has_value());
  EXPECT_EQ(cert->search_mode, "directions");
  EXPECT_GT(cert->est_prob, 0.5);
}

TEST(JacobianProbeTest, Examples) {
  const PolyVec coords = {HermitePoly::Coordinate(2, 0), HermitePoly::Coordinate(2, 1)};
  EXPECT_EQ(JacobianSingularityProbe(coords, 0.9, 10000, 1), 0.0);
  const PolyVec prod = {HermitePoly::Basis(2, MultiIndex{1, 1})};
  const double p = JacobianSingularityProbe(prod, 0.1, 400000, 2);
  const double oracle = 1 - std::exp(-0.01 / 2);  // chi-square(2) CDF at 0.01
  EXPECT_NEAR(p, oracle, 4 * std::sqrt(oracle / 400000));
  const PolyVec dup = {HermitePoly::Coordinate(2, 0), HermitePoly::Coordinate(2, 0)};
  EXPECT_EQ(JacobianSingularityProbe(dup, 1e-9, 10000, 3), 1.0);
  try {
    JacobianSingularityProbe({coords[0], coords[1], coords[0]}, 0.1, 10000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficientSetup);
  }
}

TEST(SplitTest, Examples) {
  const LowDegreeSplit xy = SplitLowDegree(HermitePoly::Basis(2, MultiIndex{1, 1}), 1e-6);
  EXPECT_EQ(xy.pairs.size(), 2u);
  EXPECT_LE(xy.residual_norm, 1e-8);
  EXPECT_NEAR(xy.singular_values[0], 1.0, 1e-12);
  EXPECT_NEAR(xy.singular_values[1], 1.0, 1e-12);

  const LowDegreeSplit sq = SplitLowDegree(H2(2, 0), 1e-6);
  ASSERT_EQ(sq.pairs.size(), 1u);
  EXPECT_LE(sq.residual_norm, 1e-8);
  EXPECT_NEAR(std::abs(sq.pairs[0].alpha.hermite().at(MultiIndex{1})), 1.0, 1e-12);
  // x1 * (x1 / sqrt(2)) leaves the constant -1/sqrt(2) behind.
  EXPECT_NEAR(sq.r.Eval(std::vector<double>{0.4, -1.0}), -1 / std::sqrt(2.0), 1e-12);

  const HermitePoly both = Normalized(H2(2, 0) + H2(2, 1));
  const LowDegreeSplit cut = SplitLowDegree(both, 1e-6, 1);
  EXPECT_EQ(cut.pairs.size(), 1u);
  EXPECT_NEAR(cut.residual_norm, 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(cut.dropped_energy, 1 / std::sqrt(2.0), 1e-12);

  try {
    SplitLowDegree(HermitePoly::Coordinate(2, 0) + H2(2, 1).Scaled(0.5), 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPureHarmonic);
  }
}

TEST(SplitTest, EnergyAccounting) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 3, dim = 2 + trial % 4;
    const HermitePoly q = Normalized(RandomHarmonic(rng, dim, k)).Scaled(0.9);
    const LowDegreeSplit full = SplitLowDegree(q, 1e-12);
    EXPECT_LE(full.residual_norm, 1e-7);
    double energy = 0.0;
    for (double s : full.singular_values) energy += s * s;
    EXPECT_NEAR(energy / k, q.L2Norm() * q.L2Norm(), 1e-8);
    EXPECT_LE(full.r.degree(), k - 2);
    for (const auto& pair : full.pairs) {
      EXPECT_EQ(PureHarmonicDegree(pair.alpha), 1);
      EXPECT_EQ(PureHarmonicDegree(pair.beta), k - 1);
      EXPECT_NEAR(pair.product_norm, pair.sigma / k, 1e-12);
    }
    const LowDegreeSplit cut = SplitLowDegree(q, 1e-12, 1);
    EXPECT_NEAR(cut.residual_norm, cut.dropped_energy, 1e-7);
    EXPECT_LE(cut.dropped_energy, cut.dropped_sigma_bound + 1e-12);
  }
}

TEST(ExtendTest, LinearTargetIsAlreadyDecomposed) {
  SnptParams params;
  params.epsilon = 0.1;
  params.grid_step = 0.05;
  const ExtendResult r = ExtendDecomposition({}, HermitePoly::Coordinate(2, 0), 3, params);
  EXPECT_EQ(r.status, DecompositionStatus::kSuccess);
  ASSERT_EQ(r.extended.size(), 1u);
  EXPECT_EQ(r.extended[0].hermite(), HermitePoly::Coordinate(2, 0).hermite());
  EXPECT_NEAR(r.h.monomial().at(MultiIndex{1}), 1.0, 1e-15);
  EXPECT_EQ(r.h.monomial().size(), 1u);
  EXPECT_TRUE(r.e.is_zero());
}

TEST(ExtendTest, ProductOfInitialCoordinates) {
  SnptParams params;
  params.epsilon = 0.1;
  params.grid_step = 0.05;
  const PolyVec initial = {HermitePoly::Coordinate(2, 0), HermitePoly::Coordinate(2, 1)};
  const ExtendResult r =
      ExtendDecomposition(initial, HermitePoly::Basis(2, MultiIndex{1, 1}), 3, params);
  EXPECT_EQ(r.status, DecompositionStatus::kSuccess);
  ASSERT_GE(r.extended.size(), 2u);
  EXPECT_EQ(r.extended[0].hermite(), initial[0].hermite());
  EXPECT_EQ(r.extended[1].hermite(), initial[1].hermite());
  EXPECT_LE(r.residual, 1e-8);
}

TEST(ExtendTest, RankOneQuadraticIsRewritten) {
  SnptParams params;
  params.epsilon = 0.1;
  params.N = 2;
  params.grid_step = 0.05;
  const PolyVec initial = {HermitePoly::Coordinate(3, 2)};
  const HermitePoly p =
      (H2(3, 0).Scaled(0.6) + HermitePoly::Coordinate(3, 1).Scaled(0.5) + HermitePoly::Constant(3, 0.2));
  const ExtendResult r = ExtendDecomposition(initial, p, 3, params);
  EXPECT_EQ(r.status, DecompositionStatus::kSuccess);
  EXPECT_FALSE(r.trace.empty());
  EXPECT_EQ(r.extended[0].hermite(), initial[0].hermite());
  EXPECT_LE(r.residual, 1e-3);
  const double eps = params.epsilon;
  for (const RewriteRecord& rec : r.trace) {
    if (rec.kind != "rewrite") continue;
    EXPECT_LT(rec.gamma_max, 1 / eps);
    EXPECT_LE(rec.theta, 1.0);
    EXPECT_LE(rec.zeta_max, 1 / eps);
    EXPECT_LE(rec.lambda_max, 1 / std::sqrt(eps));
    EXPECT_LE(rec.iota_max, 1.0);
    EXPECT_LT(rec.potential_after, rec.potential_before);
  }
  for (const HermitePoly& q : r.extended) {
    EXPECT_GE(PureHarmonicDegree(q, 1e-9), 1);
    EXPECT_NEAR(q.L2Norm(), 1.0, 1e-9);
  }
  // Direct evaluation of the recovered composition.
  std::mt19937_64 rng(47);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x = {normal(rng), normal(rng), normal(rng)};
    EXPECT_NEAR(r.h.Eval(EvalVec(r.extended, x)), p.Eval(x), 1e-3 * (1 + std::abs(p.Eval(x))));
  }
}

TEST(ExtendTest, SingularInitialSetIsRejected) {
  SnptParams params;
  params.epsilon = 0.1;
  params.grid_step = 0.05;
  const PolyVec initial = {HermitePoly::Coordinate(2, 0),
                           Normalized(HermitePoly::Coordinate(2, 0) +
                                      HermitePoly::Coordinate(2, 1).Scaled(1e-4))};
  try {
    ExtendDecomposition(initial, HermitePoly::Coordinate(2, 1).Scaled(0.5), 3, params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotSufficientlyNonSingular);
  }
  ExtendOptions lenient;
  lenient.enforce_initial = false;
  const ExtendResult r = ExtendDecomposition(
      initial, HermitePoly::Coordinate(2, 1).Scaled(0.5), 3, params, -1, lenient);
  EXPECT_TRUE(r.initial_checked);
  EXPECT_TRUE(r.initial_certificate.has_value());
}

TEST(ExtendTest, BudgetExhaustionIsReported) {
  SnptParams params;
  params.epsilon = 0.1;
  params.grid_step = 0.05;
  const ExtendResult r = ExtendDecomposition({}, H2(2, 0).Scaled(0.8), 3, params, 0);
  EXPECT_EQ(r.status, DecompositionStatus::kBudgetExhausted);
  EXPECT_LE(r.residual, 1e-12);
}

}  // namespace
}  // namespace ptf
