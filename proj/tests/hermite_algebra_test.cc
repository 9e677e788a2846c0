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

#include "ptf/hermite_algebra.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ptf/errors.h"

namespace ptf {
namespace {

// E[x^k] for x ~ N(0, 1): (k-1)!! for even k, 0 otherwise.
double GaussianMoment(int k) {
  if (k % 2) return 0.0;
  double r = 1.0;
  for (int i = k - 1; i > 1; i -= 2) r *= i;
  return r;
}

// E[p q] from monomial coefficients and closed-form moments.
double MomentInner(const HermitePoly& p, const HermitePoly& q) {
  double total = 0.0;
  for (const auto& [a, ca] : p.monomial()) {
    for (const auto& [b, cb] : q.monomial()) {
      double m = ca * cb;
      const MultiIndex s = a + b;
      for (int i = 0; i < s.size() && m != 0.0; ++i) m *= GaussianMoment(s[i]);
      total += m;
    }
  }
  return total;
}

// Unnormalized He_d via He_{d+1} = x He_d - d He_{d-1}, evaluated directly.
double HeValue(int d, double x) {
  double prev = 1.0, cur = x;
  if (d == 0) return 1.0;
  for (int k = 1; k < d; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double Factorial(int n) { return n <= 1 ? 1.0 : n * Factorial(n - 1); }

std::vector<MultiIndex> AllIndices(int dim, int max_degree) {
  std::vector<MultiIndex> out;
  std::vector<int> e(dim, 0);
  while (true) {
    int total = 0;
    for (int v : e) total += v;
    if (total <= max_degree) out.push_back(MultiIndex(e));
    int i = 0;
    while (i < dim) {
      if (++e[i] <= max_degree) break;
      e[i] = 0;
      ++i;
    }
    if (i == dim) break;
  }
  return out;
}

HermitePoly RandomHarmonic(std::mt19937_64& rng, int dim, int k) {
  std::normal_distribution<double> normal;
  Terms t;
  for (const auto& idx : AllIndices(dim, k)) {
    if (idx.total_degree() == k) t[idx] = normal(rng);
  }
  return HermitePoly::FromHermite(dim, t);
}

TEST(HermiteUnivariateTest, LowDegreeTables) {
  EXPECT_EQ(HermiteUnivariate(0), std::vector<double>{1.0});
  const auto& h2 = HermiteUnivariate(2);
  ASSERT_EQ(h2.size(), 3u);
  EXPECT_NEAR(h2[0], -1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h2[1], 0.0, 1e-15);
  EXPECT_NEAR(h2[2], 1 / std::sqrt(2.0), 1e-15);
  const auto& h3 = HermiteUnivariate(3);
  EXPECT_NEAR(h3[0], 0.0, 1e-15);
  EXPECT_NEAR(h3[1], -3 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(h3[2], 0.0, 1e-15);
  EXPECT_NEAR(h3[3], 1 / std::sqrt(6.0), 1e-15);
}

TEST(HermiteUnivariateTest, MatchesClassicalRecurrenceAndCoefficientBound) {
  for (int d = 0; d <= 8; ++d) {
    const auto& c = HermiteUnivariate(d);
    double mc = 0.0;
    for (double v : c) mc = std::max(mc, std::abs(v));
    EXPECT_LE(mc, std::pow(2.0, d));
    for (double x : {-2.3, -0.4, 0.0, 0.7, 1.9}) {
      double value = 0.0;
      for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) value = value * x + c[k];
      EXPECT_NEAR(value, HeValue(d, x) / std::sqrt(Factorial(d)), 1e-12);
    }
  }
}

TEST(BasisTest, MonomialToHermiteExamples) {
  const HermitePoly sq = MonomialToHermite(1, {{MultiIndex{2}, 1.0}});
  EXPECT_NEAR(sq.hermite().at(MultiIndex{2}), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sq.hermite().at(MultiIndex()), 1.0, 1e-15);
  EXPECT_EQ(sq.hermite().size(), 2u);

  const HermitePoly one = MonomialToHermite(3, {{MultiIndex(), 1.0}});
  EXPECT_EQ(one.hermite().size(), 1u);
  EXPECT_DOUBLE_EQ(one.hermite().at(MultiIndex()), 1.0);

  const HermitePoly xy = MonomialToHermite(2, {{MultiIndex{1, 1}, 1.0}});
  EXPECT_EQ(xy.hermite().size(), 1u);
  EXPECT_DOUBLE_EQ(xy.hermite().at(MultiIndex{1, 1}), 1.0);
}

TEST(BasisTest, IndexBeyondDimensionIsRejected) {
  try {
    MonomialToHermite(1, {{MultiIndex{0, 1}, 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(BasisTest, RoundTripsAreTight) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int dim = 1; dim <= 3; ++dim) {
    Terms mono;
    for (const auto& idx : AllIndices(dim, 5)) mono[idx] = normal(rng);
    const HermitePoly p = HermitePoly::FromMonomial(dim, mono);
    const HermitePoly back = HermitePoly::FromHermite(dim, p.hermite());
    for (const auto& [idx, c] : mono) {
      const auto it = back.monomial().find(idx);
      EXPECT_NEAR(it == back.monomial().end() ? 0.0 : it->second, c, 1e-10);
    }
  }
}

TEST(EvalTest, Examples) {
  const HermitePoly h2 = HermitePoly::Basis(1, MultiIndex{2});
  EXPECT_NEAR(h2.Eval(std::vector<double>{1.0}), 0.0, 1e-15);
  EXPECT_NEAR(h2.Eval(std::vector<double>{0.0}), -1 / std::sqrt(2.0), 1e-15);
  const HermitePoly h11 = HermitePoly::Basis(2, MultiIndex{1, 1});
  EXPECT_DOUBLE_EQ(h11.Eval(std::vector<double>{2.0, 3.0}), 6.0);
  try {
    h11.Eval(std::vector<double>{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(EvalTest, BothBasesAgree) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Terms t;
  for (const auto& idx : AllIndices(3, 4)) t[idx] = normal(rng);
  const HermitePoly p = HermitePoly::FromHermite(3, t);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x = {normal(rng), normal(rng), normal(rng)};
    const double a = p.Eval(x), b = p.EvalHermite(x);
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(b)));
  }
}

TEST(NormTest, Examples) {
  EXPECT_DOUBLE_EQ(HermitePoly::Basis(2, MultiIndex{2, 1}).L2Norm(), 1.0);
  const HermitePoly p =
      HermitePoly::FromHermite(2, {{MultiIndex{1}, 3.0}, {MultiIndex{0, 2}, 4.0}});
  EXPECT_DOUBLE_EQ(p.L2Norm(), 5.0);
  EXPECT_NEAR(MonomialToHermite(1, {{MultiIndex{2}, 1.0}}).L2Norm(), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(HermitePoly::Basis(1, MultiIndex{3}).MaxCoeff(), 3 / std::sqrt(6.0), 1e-14);
  EXPECT_EQ(HermitePoly::Zero(2).MaxCoeff(), 0.0);
  EXPECT_EQ(McL2Ratio(HermitePoly::Zero(2)), 0.0);
  for (int d = 0; d <= 8; ++d) {
    EXPECT_LE(HermitePoly::Basis(1, MultiIndex{d}).MaxCoeff(), std::pow(2.0, d));
  }
}

TEST(OrthonormalityTest, GaussianMomentOracle) {
  for (int dim = 1; dim <= 3; ++dim) {
    const auto indices = AllIndices(dim, 4);
    for (const auto& a : indices) {
      const HermitePoly ha = HermitePoly::Basis(dim, a);
      for (const auto& b : indices) {
        const double inner = MomentInner(ha, HermitePoly::Basis(dim, b));
        EXPECT_NEAR(inner, a == b ? 1.0 : 0.0, 1e-10);
      }
    }
  }
}

TEST(HarmonicTest, Examples) {
  const HermitePoly sq = MonomialToHermite(1, {{MultiIndex{2}, 1.0}});
  const HermitePoly top = HarmonicComponent(sq, 2);
  EXPECT_NEAR(top.monomial().at(MultiIndex{2}), 1.0, 1e-14);
  EXPECT_NEAR(top.monomial().at(MultiIndex()), -1.0, 1e-14);
  const HermitePoly h11 = HermitePoly::Basis(2, MultiIndex{1, 1});
  EXPECT_EQ(HarmonicComponent(h11, 2).hermite(), h11.hermite());
  EXPECT_TRUE(HarmonicComponent(h11, 1).is_zero());
}

TEST(HarmonicTest, ComponentsSumToPolynomial) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Terms t;
  for (const auto& idx : AllIndices(2, 4)) t[idx] = normal(rng);
  const HermitePoly p = HermitePoly::FromHermite(2, t);
  HermitePoly sum = HermitePoly::Zero(2);
  for (int k = 0; k <= 4; ++k) sum = sum + HarmonicComponent(p, k);
  EXPECT_NEAR((sum - p).L2Norm(), 0.0, 1e-12);
}

TEST(DerivativeTest, Examples) {
  const PolyVec g = Gradient(HermitePoly::Basis(1, MultiIndex{2}));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NEAR(g[0].monomial().at(MultiIndex{1}), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(g[0].L2Norm() * g[0].L2Norm(), 2.0, 1e-14);
  for (const auto& c : Gradient(HermitePoly::Constant(3, 1.0))) EXPECT_TRUE(c.is_zero());
  const HermitePoly d = DirectionalDerivative(HermitePoly::Basis(2, MultiIndex{1, 1}),
                                              std::vector<double>{0.0, 1.0});
  EXPECT_EQ(d.monomial().size(), 1u);
  EXPECT_DOUBLE_EQ(d.monomial().at(MultiIndex{1}), 1.0);
}

TEST(DerivativeTest, GradientEnergyIdentity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 1 + trial % 4, k = 1 + trial % 4;
    const HermitePoly p = RandomHarmonic(rng, dim, k);
    double energy = 0.0;
    for (const auto& c : Gradient(p)) energy += c.L2Norm() * c.L2Norm();
    EXPECT_NEAR(energy, k * p.L2Norm() * p.L2Norm(), 1e-9 * energy);
    // Mixed degrees fall strictly below the bound.
    const HermitePoly mixed = p + RandomHarmonic(rng, dim, k - 1).Scaled(0.5);
    double mixed_energy = 0.0;
    for (const auto& c : Gradient(mixed)) mixed_energy += c.L2Norm() * c.L2Norm();
    if (k > 1) EXPECT_LT(mixed_energy, k * mixed.L2Norm() * mixed.L2Norm() - 1e-3);
  }
}

TEST(DerivativeTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  Terms t;
  for (const auto& idx : AllIndices(3, 3)) t[idx] = normal(rng);
  const HermitePoly p = HermitePoly::FromHermite(3, t);
  const std::vector<double> x = {0.3, -0.8, 1.1};
  const PolyVec g = Gradient(p);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> up = x, down = x;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    EXPECT_NEAR(g[i].Eval(x), (p.Eval(up) - p.Eval(down)) / 2e-5, 1e-6);
  }
}

TEST(AdditionTest, ExpansionMatchesDirectEvaluation) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    std::vector<int> s(n);
    int budget = 4;
    for (int i = 0; i < n; ++i) {
      s[i] = std::uniform_int_distribution<int>(0, budget)(rng);
      budget -= s[i];
    }
    const double th = angle(rng);
    const double a = std::cos(th), b = std::sin(th);
    const MultiIndex idx(s);
    const HermitePoly rhs = AdditionExpansion(idx, n, a, b);
    std::vector<double> xy(2 * n), mixed(n);
    for (double& v : xy) v = normal(rng);
    for (int i = 0; i < n; ++i) mixed[i] = a * xy[i] + b * xy[n + i];
    double lhs = 1.0;
    for (int i = 0; i < n; ++i) lhs *= HeValue(idx[i], mixed[i]) / std::sqrt(Factorial(idx[i]));
    EXPECT_NEAR(rhs.Eval(xy), lhs, 1e-8 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(ShiftSplitTest, ReconstructionAndRemainderBound) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> normal;
  for (const MultiIndex& s : {MultiIndex{2}, MultiIndex{3}, MultiIndex{2, 1}}) {
    const int n = s.size();
    const HermitePoly q = HermitePoly::Basis(n, s);
    for (double delta : {0.1, 0.05, 0.01}) {
      const ShiftSplitResult split = ShiftSplit({q}, delta);
      const double a = std::sqrt(1 - delta * delta);
      const PolyVec grad = Gradient(q);
      EXPECT_LE(split.e[0].L2Norm(), std::pow(2.0, s.total_degree() / 2.0) * delta * delta);
      for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> xz(2 * n), shifted(n), x(n);
        for (double& v : xz) v = normal(rng);
        for (int i = 0; i < n; ++i) {
          x[i] = xz[i];
          shifted[i] = a * xz[i] + delta * xz[n + i];
        }
        double lin = 0.0;
        for (int i = 0; i < n; ++i) lin += grad[i].Eval(x) * xz[n + i];
        const double lhs = q.Eval(shifted);
        const double rhs = split.g[0].Eval(x) +
                           delta * split.scale_factors[0] * lin + split.e[0].Eval(xz);
        EXPECT_NEAR(lhs, rhs, 1e-8 * std::max(1.0, std::abs(lhs)));
      }
    }
  }
}

TEST(ShiftSplitTest, LinearHasNoRemainderAndBadInputsThrow) {
  const ShiftSplitResult split = ShiftSplit({HermitePoly::Basis(1, MultiIndex{1})}, 0.1);
  EXPECT_TRUE(split.e[0].is_zero());
  try {
    ShiftSplit({MonomialToHermite(1, {{MultiIndex{2}, 0.5}})}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotHarmonic);
  }
  try {
    ShiftSplit({HermitePoly::Basis(1, MultiIndex{1})}, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDeltaOutOfRange);
  }
}

TEST(ComposeTest, Examples) {
  const HermitePoly y_sq = HermitePoly::FromMonomial(1, {{MultiIndex{2}, 1.0}});
  const HermitePoly x1 = HermitePoly::Coordinate(2, 0);
  const HermitePoly out = Compose(y_sq, {x1}, 2);
  EXPECT_EQ(out.monomial().size(), 1u);
  EXPECT_DOUBLE_EQ(out.monomial().at(MultiIndex{2}), 1.0);

  const HermitePoly y1y2 = HermitePoly::FromMonomial(2, {{MultiIndex{1, 1}, 1.0}});
  EXPECT_DOUBLE_EQ(Compose(y1y2, {x1, x1}, 2).monomial().at(MultiIndex{2}), 1.0);

  const HermitePoly h2 = HermitePoly::Basis(1, MultiIndex{2});
  const HermitePoly quartic = Compose(y_sq, {h2}, 4);
  EXPECT_NEAR(quartic.monomial().at(MultiIndex{4}), 0.5, 1e-14);
  EXPECT_NEAR(quartic.monomial().at(MultiIndex{2}), -1.0, 1e-14);
  EXPECT_NEAR(quartic.monomial().at(MultiIndex()), 0.5, 1e-14);

  try {
    Compose(y_sq, {h2}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWeightedDegreeExceeded);
  }
}

TEST(ComposeTest, CommutesWithEvaluation) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  Terms ht;
  for (const auto& idx : AllIndices(2, 2)) ht[idx] = normal(rng);
  const HermitePoly h = HermitePoly::FromMonomial(2, ht);
  const PolyVec q = {RandomHarmonic(rng, 3, 1), RandomHarmonic(rng, 3, 2)};
  const HermitePoly c = Compose(h, q, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = {normal(rng), normal(rng), normal(rng)};
    const double want = h.Eval(EvalVec(q, x));
    EXPECT_NEAR(c.Eval(x), want, 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST(ProbeTest, Examples) {
  const HermitePoly h1 = HermitePoly::Basis(1, MultiIndex{1});
  const auto tail = McProbeConcentration(h1, {2.0}, 200000, 1);
  EXPECT_NEAR(tail[0], 0.0455, 4 * std::sqrt(0.0455 * 0.9545 / 200000));
  EXPECT_EQ(McProbeAnticoncentration(h1, {0.0}, 10000, 1)[0], 0.0);

  // Small-ball slope of x1^2 x2^2 in log-log is at most 1/d plus slack.
  const HermitePoly quartic = HermitePoly::FromMonomial(2, {{MultiIndex{2, 2}, 1.0}});
  const auto ball = McProbeAnticoncentration(quartic, {0.01, 0.1}, 400000, 2);
  const double slope = std::log(ball[1] / ball[0]) / std::log(10.0);
  EXPECT_LE(slope, 0.25 + 0.15);
}

TEST(ProbeTest, WorkersAreDeterministic) {
  const HermitePoly h1 = HermitePoly::Basis(2, MultiIndex{1, 1});
  const auto a = McProbeConcentration(h1, {0.5, 1.0}, 20000, 7, 3);
  const auto b = McProbeConcentration(h1, {0.5, 1.0}, 20000, 7, 3);
  EXPECT_EQ(a, b);
}

TEST(ProbeTest, NormAndHypercontractivity) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3; ++trial) {
    const int dim = 2 + trial, deg = 1 + trial;
    Terms t;
    for (const auto& idx : AllIndices(dim, deg)) t[idx] = normal(rng);
    HermitePoly p = HermitePoly::FromHermite(dim, t);
    p = p.Scaled(1.0 / p.L2Norm());
    const MomentEstimate m = McMoments(p, 1000000, 100 + trial);
    EXPECT_NEAR(m.second, 1.0, 0.03);
    EXPECT_LE(std::pow(m.fourth, 0.25), std::pow(std::sqrt(3.0), deg) * 1.05);
  }
}

TEST(JsonTest, RoundTripIsBitFaithful) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  Terms t;
  for (const auto& idx : AllIndices(3, 3)) t[idx] = normal(rng) / 3.0;
  const HermitePoly p = HermitePoly::FromHermite(3, t);
  for (const char* basis : {"hermite", "monomial"}) {
    const nlohmann::json j = PolyToJson(p, basis);
    const HermitePoly back = PolyFromJson(nlohmann::json::parse(j.dump()));
    if (std::string(basis) == "hermite") {
      EXPECT_EQ(back.hermite(), p.hermite());
    } else {
      EXPECT_EQ(back.monomial(), p.monomial());
    }
  }
}

}  // namespace
}  // namespace ptf
