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

// Super non-singularity: falsifying search, the linear-times-lower-degree
// split, and the extendible decomposition engine built on both.

#ifndef PTF_SNPT_H_
#define PTF_SNPT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ptf/hermite_poly.h"

namespace ptf {

struct SnptParams {
  double epsilon = 0.1;
  int N = 2;
  // Coefficient lattice pitch; non-positive means epsilon^3.
  double grid_step = 0.0;
  int n_dirs = 16;
  int n_mc = 10000;
  uint64_t seed = 1;
  // Negative values select epsilon/2 and epsilon^N/2.
  double derivative_threshold = -1.0;
  double probability_threshold = -1.0;
  // Beyond this many lattice points the search switches to random directions.
  int max_lattice_points = 20000;

  void Validate() const;
  double GridStep() const;
  double DerivativeThreshold() const;
  double ProbabilityThreshold() const;
};

struct ViolationCertificate {
  int k = 0;
  // Indices into the searched set that carry degree k.
  std::vector<int> members;
  // One entry per searched polynomial, zero off level k, unit Euclidean norm.
  std::vector<double> a;
  // Squared norm of the candidate before renormalization, in (0.9, 1.1).
  double raw_norm_sq = 0.0;
  double est_prob = 0.0;
  double threshold_used = 0.0;
  std::string search_mode;
};

// Restricts which combinations count: the member maximizing |a_i| * weight_i
// among indices >= protected_count must have |a_i| > min_abs.
struct AdmissibilityRule {
  int protected_count = 0;
  std::vector<double> weights;
  double min_abs = 0.0;
};

struct SearchDiagnostics {
  std::vector<int> empty_levels;
  std::vector<std::string> level_modes;
  int64_t candidates = 0;
  // Best probability seen per searched level (index = degree).
  std::vector<double> best_prob;
};

// Returns the strongest certificate at the lowest violating degree, or none.
std::optional<ViolationCertificate> SnptViolationSearch(
    const PolyVec& s, const SnptParams& params,
    const AdmissibilityRule* rule = nullptr,
    SearchDiagnostics* diagnostics = nullptr);

// Pr[sigma_min(Jacobian of q at x) <= delta] over x ~ N(0, I).
double JacobianSingularityProbe(const PolyVec& q, double delta, int64_t n_mc,
                                uint64_t seed);

struct ProductPair {
  HermitePoly alpha;  // unit-norm linear form
  HermitePoly beta;   // degree k - 1, harmonic
  double sigma = 0.0;
  double product_norm = 0.0;  // |alpha| * |beta|
};

struct LowDegreeSplit {
  int k = 0;
  std::vector<ProductPair> pairs;
  std::vector<double> singular_values;
  HermitePoly g;      // q - sum alpha_i beta_i
  HermitePoly g_top;  // degree-k part of g
  HermitePoly r;      // g - g_top
  double residual_norm = 0.0;  // |g_top|
  // |top part of the dropped pairs' products|, from the singular triplets.
  double dropped_energy = 0.0;
  // sqrt(sum of dropped sigma^2 / k); always >= dropped_energy.
  double dropped_sigma_bound = 0.0;
};

// Factors a pure degree-k harmonic q (k >= 2) through the SVD of its gradient
// flattening. Keeps sigma_i >= rank_tol * sigma_1, at most max_rank pairs.
LowDegreeSplit SplitLowDegree(const HermitePoly& q, double rank_tol,
                              int max_rank = -1);

struct PartialDecomposition {
  int ell = 0;
  PolyVec primitives;
  // b_i = magnitude_sixths[i] / 6.
  std::vector<int> magnitude_sixths;
  // h over the scaled outputs eps^{b_i} q_i, monomial form, one variable each.
  HermitePoly composition;
  int M = 0;
  int d = 0;
  double epsilon = 0.0;

  int size() const { return static_cast<int>(primitives.size()); }
  double Scale(int i) const;
  // h with the eps^{b_i} factors folded in.
  HermitePoly DirectComposition() const;
  // Per degree t = d, d-1, ..., 1: sum over primitives of degree t of
  // 6(M + 3d) - 6 b_i. Compared lexicographically.
  std::vector<int> Potential() const;
};

struct RewriteRecord {
  int iteration = 0;
  std::string kind;  // "rewrite" or "saturation"
  int k = 0;
  int j = 0;
  std::vector<int> potential_before;
  std::vector<int> potential_after;
  int m = 0;
  double h_norm = 0.0;
  double residual = 0.0;
  double est_prob = 0.0;
  double gamma_max = 0.0;
  double theta = 0.0;
  double zeta_max = 0.0;
  double lambda_max = 0.0;
  double iota_max = 0.0;
  int pairs = 0;
};

nlohmann::json RewriteRecordToJson(const RewriteRecord& r);

enum class DecompositionStatus { kSuccess, kBudgetExhausted };

struct ExtendOptions {
  // Pre-check of the protected set at (epsilon^{1/3}, initial_N).
  bool check_initial = true;
  bool enforce_initial = true;
  int initial_N = -1;  // negative: 3 (N + 1)
  double rank_tol = 1e-9;
  double complexity_C = 1e3;
  double zero_tol = 1e-10;
};

struct ExtendResult {
  DecompositionStatus status = DecompositionStatus::kSuccess;
  PartialDecomposition decomposition;
  PolyVec extended;
  // p ~= h(q_1(x), ..., q_m(x)) with the magnitudes folded into h.
  HermitePoly h;
  HermitePoly e;
  double residual = 0.0;
  std::vector<RewriteRecord> trace;
  bool initial_checked = false;
  std::optional<ViolationCertificate> initial_certificate;
  bool complexity_ok = true;
  // Unrestricted search over the final set at the target level.
  std::optional<ViolationCertificate> final_certificate;
  std::string message;
};

ExtendResult ExtendDecomposition(const PolyVec& initial, const HermitePoly& p,
                                 int M, const SnptParams& params,
                                 int max_rewrites = -1,
                                 const ExtendOptions& options = {});

}  // namespace ptf

#endif  // PTF_SNPT_H_
