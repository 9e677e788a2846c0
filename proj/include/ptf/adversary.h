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

// Ground-truth PTFs, clean Gaussian data, and contamination strategies that
// see the clean set and the true polynomial.

#ifndef PTF_ADVERSARY_H_
#define PTF_ADVERSARY_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ptf/dataset.h"
#include "ptf/hermite_poly.h"
#include "ptf/random.h"

namespace ptf {

struct GroundTruth {
  HermitePoly p_star;
  int d = 1;
  int n = 1;
  uint64_t seed = 0;

  int Label(std::span<const double> x) const { return p_star.Eval(x) >= 0 ? 1 : -1; }
};

// Standard normal Hermite coefficients on every |a| <= d, normalized.
GroundTruth RandomPtf(int n, int d, uint64_t seed);

// The harness-side view: provenance never reaches learners.
struct LabeledDataset {
  Dataset data;
  std::vector<Provenance> provenance;
};

LabeledDataset GenClean(const GroundTruth& truth, int64_t m, uint64_t seed,
                        int workers = 1);

enum class CorruptionStrategy {
  kLabelFlipBoundary,
  kLabelFlipRandom,
  kReplaceCluster,
  kRemoveAndReplace,
};

const char* CorruptionStrategyName(CorruptionStrategy s);
// Throws ConfigInvalid on unknown names.
CorruptionStrategy CorruptionStrategyFromName(const std::string& name);

struct CorruptionSpec {
  double opt = 0.0;
  CorruptionStrategy strategy = CorruptionStrategy::kLabelFlipRandom;
  // replace_cluster: uniform in the ball around center.
  std::vector<double> cluster_center;
  double cluster_radius = 1.0;
  int cluster_label = 1;
  // remove_and_replace: the points with the largest selector scores go, and
  // generator supplies (x, y) for each replacement.
  std::function<double(std::span<const double> x, int y, double p_value)> selector;
  std::function<std::pair<Eigen::VectorXd, int>(Rng&)> generator;
  uint64_t seed = 0;

  // Throws ConfigInvalid.
  void Validate(int dim) const;
};

// Modifies exactly floor(opt * m) examples.
LabeledDataset Corrupt(const LabeledDataset& clean, const GroundTruth& truth,
                       const CorruptionSpec& spec);

CorruptionSpec CorruptionSpecFromJson(const nlohmann::json& j);
nlohmann::json CorruptionSpecToJson(const CorruptionSpec& spec);

// Fraction of rows where sign(p_star) differs from y.
double CleanError(const GroundTruth& truth, const Dataset& data);

struct Figure1Cell {
  std::string id;
  double mass = 0.0;
  int64_t samples = 0;
  double small_ball = 0.0;
};

struct Figure1Report {
  double eps = 0.0;
  int64_t n_mc = 0;
  // Pr[x1^2 x2^2 <= eps].
  double union_mass = 0.0;
  // Pr[x1^2 <= eps | x1^2 x2^2 <= eps].
  double conditional_small_ball = 0.0;
  // Pr[x1^2 < t ||x1^2|| | cell] per kept cell at t = eps.
  std::vector<Figure1Cell> cells;
  double max_cell_small_ball = 0.0;
  double coverage_loss = 0.0;
  double cell_side = 0.0;
};

Figure1Report Figure1Demo(double eps, int64_t n_mc, uint64_t seed);
void WriteFigure1Csv(const std::string& path, const Figure1Report& report);

}  // namespace ptf

#endif  // PTF_ADVERSARY_H_
