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

#ifndef PTF_HERMITE_ALGEBRA_H_
#define PTF_HERMITE_ALGEBRA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ptf/hermite_poly.h"

namespace ptf {

// Monomial coefficients (index = power) of the unit-norm Hermite polynomial
// H_d, built by H_d = (x H_{d-1} - H'_{d-1}) / sqrt(d).
const std::vector<double>& HermiteUnivariate(int d);

// Coefficients c_j with x^k = sum_j c_j H_j(x).
const std::vector<double>& MonomialInHermite(int k);

HermitePoly MonomialToHermite(int dim, const Terms& monomials,
                              int degree_bound = -1);

double McL2Ratio(const HermitePoly& p);

// Keeps exactly the Hermite coefficients of total degree k.
HermitePoly HarmonicComponent(const HermitePoly& p, int k);
// True when all Hermite mass outside degree k is below tol * max(1, |p|).
bool IsHarmonic(const HermitePoly& p, int k, double tol = 1e-12);
// Degree of the single harmonic level carrying p, or -1 if mixed or zero.
int PureHarmonicDegree(const HermitePoly& p, double tol = 1e-12);

PolyVec Gradient(const HermitePoly& p);
HermitePoly Partial(const HermitePoly& p, int i);
HermitePoly DirectionalDerivative(const HermitePoly& p,
                                  std::span<const double> y);

// H_s(a x + b y) expanded as a polynomial over (x, y) in 2n variables, n being
// the dimension the index lives in.
HermitePoly AdditionExpansion(const MultiIndex& s, int n, double a, double b);

struct ShiftSplitResult {
  // g_i(x) = (1 - delta^2)^{deg/2} q_i(x).
  PolyVec g;
  // (1 - delta^2)^{(deg - 1)/2} per component.
  std::vector<double> scale_factors;
  // Remainder in (x, z): variables [0, n) are x, [n, 2n) are z.
  PolyVec e;
  double delta = 0.0;
};

// q(sqrt(1 - delta^2) x + delta z) = g(x) + delta * s * grad q(x) . z + e(x, z)
// for harmonic components of norm at most one and 0 < delta < 1/4.
ShiftSplitResult ShiftSplit(const PolyVec& q, double delta);

// h(q_1(x), ..., q_m(x)). Every monomial y^a of h must satisfy
// sum_i a_i deg(q_i) <= output_degree_bound (skipped when negative).
HermitePoly Compose(const HermitePoly& h, const PolyVec& q,
                    int output_degree_bound = -1);

// Pr[|p(x)| > t |p|] for each t, over x ~ N(0, I).
std::vector<double> McProbeConcentration(const HermitePoly& p,
                                         const std::vector<double>& t_list,
                                         int64_t n_samples, uint64_t seed,
                                         int workers = 1);
// Pr[|p(x)| < t |p|] for each t.
std::vector<double> McProbeAnticoncentration(const HermitePoly& p,
                                             const std::vector<double>& t_list,
                                             int64_t n_samples, uint64_t seed,
                                             int workers = 1);
// Empirical E[p^2] and E[p^4] over n_samples Gaussian draws.
struct MomentEstimate {
  double second = 0.0;
  double fourth = 0.0;
};
MomentEstimate McMoments(const HermitePoly& p, int64_t n_samples,
                         uint64_t seed, int workers = 1);

// {"dim": n, "basis": "hermite"|"monomial", "terms": [{"idx": [...], "c": v}]}
nlohmann::json PolyToJson(const HermitePoly& p,
                          const std::string& basis = "hermite");
HermitePoly PolyFromJson(const nlohmann::json& j);

}  // namespace ptf

#endif  // PTF_HERMITE_ALGEBRA_H_
