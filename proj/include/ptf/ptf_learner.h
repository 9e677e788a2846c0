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

// The localized learner: per-region corruption-rate guessing around the
// margin perceptron, partitioning of each low-margin residue, and the
// decision list that collects the results.

#ifndef PTF_PTF_LEARNER_H_
#define PTF_PTF_LEARNER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ptf/dataset.h"
#include "ptf/hermite_poly.h"
#include "ptf/partitioner.h"
#include "ptf/robust_perceptron.h"

namespace ptf {

struct LearnerConfig {
  // Partition defaults: max_cells 8, n_mc 50000, lattice pitch 0.05, box
  // scale 2; perceptron iterations capped at 200.
  LearnerConfig();

  int degree = 2;
  double eps = 0.001;
  int K = 400;
  // ceil(log(1 / eta)) perceptron attempts per guess.
  double eta = 0.1;
  // Guesses eps * guess_ratio^j; a guess whose validation threshold exceeds
  // max_threshold is vacuous and ends the grid.
  double guess_ratio = 2.0;
  double validation_constant = 4.0;
  double max_threshold = 0.5;
  // Level of the full-space region.
  int depth_budget = 3;
  double train_fraction = 0.7;
  int64_t min_region_samples = 1000;
  double region_mass_floor = 1e-3;
  // Regions processed before the worklist is abandoned.
  int max_regions = 500;
  int64_t whiten_samples = 0;  // 0: the lifting default
  int64_t norm_samples = 100000;
  // Fresh Gaussian points used to replay mass accounting after each depth.
  int64_t accounting_samples = 100000;
  PerceptronOptions perceptron;
  // max_cells here bounds the list length; epsilon is set per region.
  PartitionParams partition;
  uint64_t seed = 1;
  int workers = 1;

  // Throws ConfigInvalid.
  void Validate() const;
  int Attempts() const;
  // Length bound (max_cells + 1)^depth_budget.
  int64_t ListBound() const;
};

LearnerConfig LearnerConfigFromJson(const nlohmann::json& j);
nlohmann::json LearnerConfigToJson(const LearnerConfig& c);

struct DecisionEntry {
  Region region;
  HermitePoly p;
  double gamma = 0.0;
  // ||p|| under the region's marginal; the entry fires when
  // |p(x)| >= gamma * norm.
  double norm = 1.0;
  bool constant = false;
};

struct DecisionListHypothesis {
  int dim = 0;
  std::vector<DecisionEntry> entries;
  // Fall-through prediction sign(fallback(x)), +1 where it vanishes; the
  // zero polynomial means +1 everywhere.
  HermitePoly fallback;
};

int Predict(const DecisionListHypothesis& h, std::span<const double> x);
// One prediction per row.
std::vector<int> PredictRows(const DecisionListHypothesis& h, const Eigen::MatrixXd& x);
double Evaluate(const DecisionListHypothesis& h, const Dataset& data);

nlohmann::json HypothesisToJson(const DecisionListHypothesis& h);
DecisionListHypothesis HypothesisFromJson(const nlohmann::json& j);

struct AttemptReport {
  double validation_error = 1.0;  // on the validation band
  double band_mass = 0.0;         // validation rows in the band
  int iterations = 0;
  bool converged = false;
  std::string error;  // library error code, empty on success
};

struct GuessReport {
  double eps = 0.0;
  double threshold = 0.0;
  std::vector<AttemptReport> attempts;
  bool accepted = false;
};

enum class RegionOutcome { kClassified, kDiscarded, kConstant, kEmpty };

const char* RegionOutcomeName(RegionOutcome o);

struct RegionReport {
  int id = 0;
  int parent = -1;
  int depth = 0;
  int level = 0;
  double mass = 0.0;
  int64_t samples = 0;
  RegionOutcome outcome = RegionOutcome::kEmpty;
  std::vector<GuessReport> guesses;
  double accepted_eps = 0.0;
  double gamma = 0.0;
  // Absolute masses: the accepted band, the residue handed to children, and
  // what neither covers.
  double band_mass = 0.0;
  double child_mass = 0.0;
  double dropped_mass = 0.0;
  // Majority-label disagreement on the region's samples.
  double majority_error = 0.0;
  // Smallest validation error over all attempts (1 if none ran).
  double best_validation_error = 1.0;
  std::vector<int> children;
  std::string partition_error;
  nlohmann::json partition;  // summary of the partition report
};

// Mass bookkeeping after a depth. classified, pending and dropped are
// replayed on a fixed Gaussian sample: points captured by some entry so far,
// uncaptured points inside a queued region, and the rest. The reported_*
// fields sum the region reports instead (discarded regions count as
// classified, since they get a constant entry); child cells may overlap the
// parent's band, so they can exceed the replay.
struct DepthSnapshot {
  int depth = 0;
  double classified = 0.0;
  double pending = 0.0;
  double dropped = 0.0;
  double reported_classified = 0.0;
  double reported_pending = 0.0;
};

struct LearnResult {
  DecisionListHypothesis hypothesis;
  std::vector<RegionReport> regions;
  std::vector<DepthSnapshot> snapshots;
  bool budget_exhausted = false;
  int64_t list_bound = 0;
  // Discarded regions: total mass and sum of mass * measured noise floor,
  // the floor being the lower of the best validation error and the
  // majority error.
  double discarded_mass = 0.0;
  double discarded_noise = 0.0;
};

struct PartialResult {
  std::optional<DecisionEntry> entry;
  std::vector<Region> children;
  RegionReport report;
};

// Classifies one region from the samples inside it. index holds each row's
// position in the full sample and drives the train/validate split. Throws
// InvalidArgument when the level is 0 or the mass is below the floor.
PartialResult PartialClassifier(const Region& region, const Dataset& samples,
                                const std::vector<int64_t>& index,
                                const LearnerConfig& config, uint64_t seed);

// Regions are processed breadth first; regions of one depth run in parallel
// on config.workers threads and are appended in creation order.
LearnResult LearnPtf(const Dataset& samples, const LearnerConfig& config);

nlohmann::json RegionReportToJson(const RegionReport& r);
nlohmann::json LearnResultToJson(const LearnResult& r);

}  // namespace ptf

#endif  // PTF_PTF_LEARNER_H_
