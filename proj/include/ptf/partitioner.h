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

// Polynomial slabs {x : q(x) in R}, rejection sampling from the Gaussian
// conditioned on them, and the low-margin partitioner that cuts a slab into
// grid cells over an extended decomposition.

#ifndef PTF_PARTITIONER_H_
#define PTF_PARTITIONER_H_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ptf/hermite_poly.h"
#include "ptf/snpt.h"

namespace ptf {

// Half-open intervals [lo, hi); infinite ends are allowed.
struct Rectangle {
  std::vector<double> lo;
  std::vector<double> hi;

  static Rectangle Full(int dims);
  int size() const { return static_cast<int>(lo.size()); }
  bool Contains(std::span<const double> v) const;
  // Throws InvalidArgument on lo > hi or finite ends beyond box_radius.
  void Validate(double box_radius = std::numeric_limits<double>::infinity()) const;
};

struct Region {
  PolyVec q;
  Rectangle rect;
  int level = 0;
  double mass_estimate = 1.0;
  int64_t mass_samples = 0;

  static Region FullSpace(int level);
  // Ambient dimension is taken from x.
  bool Contains(std::span<const double> x) const;
  bool Contains(const Eigen::VectorXd& x) const {
    return Contains(std::span<const double>(x.data(), x.size()));
  }
  // Membership of every row, evaluated polynomial by polynomial.
  std::vector<char> ContainsRows(const Eigen::MatrixXd& x) const;
};

nlohmann::json RegionToJson(const Region& r);
Region RegionFromJson(const nlohmann::json& j);

struct SamplerOptions {
  double acceptance_floor = 1e-6;
  int64_t probe_batch = 100000;
  int64_t block = 8192;
  int workers = 1;
};

struct ConditionalSample {
  Eigen::MatrixXd points;
  double acceptance = 0.0;
  int64_t draws = 0;
};

// n draws from N(0, I_dim) restricted to the region. Draws come in fixed-size
// blocks with per-block streams, so output does not depend on workers.
ConditionalSample SampleConditional(const Region& region, int dim, int64_t n,
                                    uint64_t seed,
                                    const SamplerOptions& options = {});

struct AnticoncentrationResult {
  std::vector<double> t;
  // Pr[|g| < t * norm].
  std::vector<double> small_ball;
  // Pr[|g| > norm / t]; 0 at t = 0.
  std::vector<double> tail;
  double conditional_norm = 0.0;
  double acceptance = 0.0;
};

// The conditional L2 norm comes from an independent draw of the same size.
AnticoncentrationResult AnticoncentrationProbe(
    const Region& region, int dim, const HermitePoly& g,
    const std::vector<double>& t_list, int64_t n_mc, uint64_t seed,
    const SamplerOptions& options = {});

// Same statistics on given points: the norm from even rows, the
// probabilities from odd rows.
AnticoncentrationResult AnticoncentrationOnPoints(
    const Eigen::MatrixXd& points, const HermitePoly& g,
    const std::vector<double>& t_list);

struct PartitionParams {
  double epsilon = 0.1;
  // Non-positive: the largest side on a sqrt(2) ladder whose kept cells
  // carry at most overshoot_target mass with |p| >= 2 epsilon, but never
  // below cell_factor * epsilon / (sqrt(m) * L), L the largest composition
  // gradient norm over low-margin samples.
  double cell_side = 0.0;
  double cell_factor = 0.5;
  double overshoot_target = -1.0;  // negative: epsilon^2
  // New coordinates are clipped to +-box_scale * log(m / epsilon)^(d / 2).
  double box_scale = 1.0;
  // A cell is kept when its mass relative to the region exceeds mass_floor
  // and the fraction of its own mass with |p| < epsilon exceeds inlier_floor.
  double mass_floor = 1e-4;
  double inlier_floor = -1.0;  // negative: 2 epsilon^3
  double region_mass_floor = 1e-6;
  int64_t n_mc = 200000;
  uint64_t seed = 1;
  int M = 3;
  // Decomposition search parameters; epsilon <= 0 borrows the partition's.
  SnptParams snpt;
  ExtendOptions extend;
  int max_rewrites = -1;
  // Keep at most this many cells (largest inlier mass first); -1: no cap.
  int max_cells = -1;
  std::vector<HermitePoly> probe_polys;
  std::vector<double> probe_t = {0.01};
  SamplerOptions sampler;

  double InlierFloor() const;
  double OvershootTarget() const;
};

struct CellReport {
  std::string id;
  double mass = 0.0;         // relative to the region
  double inlier_mass = 0.0;  // |p| < epsilon, relative to the region
  double inlier_fraction = 0.0;
  double overshoot_mass = 0.0;  // |p| >= 2 epsilon, relative to the region
  int64_t samples = 0;
  std::vector<AnticoncentrationResult> probes;
};

struct PartitionReport {
  double epsilon = 0.0;
  double cell_side = 0.0;
  double lipschitz = 0.0;
  double box_half_width = 0.0;
  double mass_floor = 0.0;
  double inlier_floor = 0.0;
  int ell = 0;
  int m = 0;
  int level_in = 0;
  int level_out = 0;
  double region_mass = 0.0;
  int64_t n_samples = 0;
  double decomposition_residual = 0.0;
  int rewrites = 0;
  bool final_certificate = false;
  double low_margin_mass = 0.0;
  double clipped_mass = 0.0;
  // Low-margin mass outside every kept cell (clipping included).
  double coverage_loss = 0.0;
  // Kept mass with |p| >= 2 epsilon.
  double overshoot = 0.0;
  double kept_mass = 0.0;
  int64_t candidate_cells = 0;
  int64_t capped_cells = 0;
  std::vector<CellReport> cells;
};

nlohmann::json PartitionReportToJson(const PartitionReport& r);

struct PartitionResult {
  std::vector<Region> regions;
  PartitionReport report;
  PolyVec extended;
  HermitePoly composition;
};

PartitionResult PartitionRegion(const HermitePoly& p, const Region& region,
                                const PartitionParams& params);

}  // namespace ptf

#endif  // PTF_PARTITIONER_H_
