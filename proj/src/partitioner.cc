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

#include <algorithm>
#include <cmath>
#include <map>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"
#include "ptf/random.h"

namespace ptf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json Bound(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double BoundFrom(const nlohmann::json& j, double infinite) {
  return j.is_null() ? infinite : j.get<double>();
}

std::string CellId(const std::vector<int64_t>& key) {
  std::string id;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) id += ':';
    id += std::to_string(key[i]);
  }
  return id;
}

nlohmann::json ProbeToJson(const AnticoncentrationResult& r) {
  return {{"t", r.t},
          {"small_ball", r.small_ball},
          {"tail", r.tail},
          {"conditional_norm", r.conditional_norm}};
}

}  // namespace

Rectangle Rectangle::Full(int dims) {
  return {std::vector<double>(dims, -kInf), std::vector<double>(dims, kInf)};
}

bool Rectangle::Contains(std::span<const double> v) const {
  for (int i = 0; i < size(); ++i) {
    if (!(v[i] >= lo[i] && v[i] < hi[i])) return false;
  }
  return true;
}

void Rectangle::Validate(double box_radius) const {
  if (lo.size() != hi.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rectangle bounds differ in length");
  }
  for (int i = 0; i < size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw Error(ErrorCode::kInvalidArgument, "rectangle interval " +
                                                   std::to_string(i) + " is empty");
    }
    for (double v : {lo[i], hi[i]}) {
      if (std::isfinite(v) && std::abs(v) > box_radius) {
        throw Error(ErrorCode::kInvalidArgument,
                    "rectangle end beyond the box radius");
      }
    }
  }
}

Region Region::FullSpace(int level) {
  Region r;
  r.level = level;
  return r;
}

bool Region::Contains(std::span<const double> x) const {
  for (size_t i = 0; i < q.size(); ++i) {
    const double v = q[i].Eval(x);
    if (!(v >= rect.lo[i] && v < rect.hi[i])) return false;
  }
  return true;
}

std::vector<char> Region::ContainsRows(const Eigen::MatrixXd& x) const {
  std::vector<char> in(x.rows(), 1);
  std::vector<double> row(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[c] = x(r, c);
    in[r] = Contains(row);
  }
  return in;
}

nlohmann::json RegionToJson(const Region& r) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& p : r.q) q.push_back(PolyToJson(p, "hermite"));
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
  for (int i = 0; i < r.rect.size(); ++i) {
    lo.push_back(Bound(r.rect.lo[i]));
    hi.push_back(Bound(r.rect.hi[i]));
  }
  return {{"q", q},
          {"lo", lo},
          {"hi", hi},
          {"level", r.level},
          {"mass_estimate", r.mass_estimate},
          {"mass_samples", r.mass_samples}};
}

Region RegionFromJson(const nlohmann::json& j) {
  try {
    Region r;
    for (const auto& p : j.at("q")) r.q.push_back(PolyFromJson(p));
    for (const auto& v : j.at("lo")) r.rect.lo.push_back(BoundFrom(v, -kInf));
    for (const auto& v : j.at("hi")) r.rect.hi.push_back(BoundFrom(v, kInf));
    r.level = j.at("level").get<int>();
    r.mass_estimate = j.value("mass_estimate", 1.0);
    r.mass_samples = j.value("mass_samples", int64_t{0});
    if (r.rect.size() != static_cast<int>(r.q.size())) {
      throw Error(ErrorCode::kConfigInvalid, "region: rect and q differ in length");
    }
    r.rect.Validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("region: ") + e.what());
  }
}

ConditionalSample SampleConditional(const Region& region, int dim, int64_t n,
                                    uint64_t seed, const SamplerOptions& options) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  for (const auto& q : region.q) {
    if (q.dim() > dim) throw Error(ErrorCode::kDimensionMismatch, "region polynomial");
  }
  const int64_t block = std::max<int64_t>(1, options.block);
  const int workers = std::max(1, options.workers);
  ConditionalSample out;
  std::vector<double> accepted;
  accepted.reserve(n * dim);
  int64_t taken = 0, accepted_total = 0, next_block = 0;
  while (taken < n) {
    std::vector<Eigen::MatrixXd> blocks(workers);
    std::vector<std::vector<char>> inside(workers);
    ParallelChunks(workers, workers, [&](int, int64_t begin, int64_t end) {
      for (int64_t w = begin; w < end; ++w) {
        Rng rng = MakeStream(seed, static_cast<uint64_t>(next_block + w));
        blocks[w] = GaussianRows(rng, block, dim);
        inside[w] = region.ContainsRows(blocks[w]);
      }
    });
    for (int w = 0; w < workers && taken < n; ++w) {
      out.draws += block;
      for (int64_t r = 0; r < block; ++r) {
        if (!inside[w][r]) continue;
        ++accepted_total;
        if (taken < n) {
          for (int c = 0; c < dim; ++c) accepted.push_back(blocks[w](r, c));
          ++taken;
        }
      }
      if (out.draws >= options.probe_batch &&
          static_cast<double>(accepted_total) / out.draws < options.acceptance_floor) {
        throw Error(ErrorCode::kAcceptanceTooLow,
                    "acceptance " + std::to_string(double(accepted_total) / out.draws) +
                        " after " + std::to_string(out.draws) + " draws");
      }
    }
    next_block += workers;
  }
  out.acceptance = static_cast<double>(accepted_total) / out.draws;
  out.points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(accepted.data(), n, dim);
  return out;
}

AnticoncentrationResult AnticoncentrationOnPoints(const Eigen::MatrixXd& points,
                                                  const HermitePoly& g,
                                                  const std::vector<double>& t_list) {
  AnticoncentrationResult r;
  r.t = t_list;
  const Eigen::VectorXd v = g.EvalRows(points);
  double sq = 0.0;
  int64_t norm_count = 0, prob_count = 0;
  for (Eigen::Index i = 0; i < v.size(); i += 2, ++norm_count) sq += v[i] * v[i];
  r.conditional_norm = norm_count ? std::sqrt(sq / norm_count) : 0.0;
  for (double t : t_list) {
    int64_t small = 0, large = 0;
    prob_count = 0;
    for (Eigen::Index i = 1; i < v.size(); i += 2, ++prob_count) {
      const double a = std::abs(v[i]);
      if (a < t * r.conditional_norm) ++small;
      if (t > 0 && a > r.conditional_norm / t) ++large;
    }
    r.small_ball.push_back(prob_count ? double(small) / prob_count : 0.0);
    r.tail.push_back(prob_count ? double(large) / prob_count : 0.0);
  }
  return r;
}

AnticoncentrationResult AnticoncentrationProbe(const Region& region, int dim,
                                               const HermitePoly& g,
                                               const std::vector<double>& t_list,
                                               int64_t n_mc, uint64_t seed,
                                               const SamplerOptions& options) {
  if (region.mass_estimate <= 0.0) {
    throw Error(ErrorCode::kAcceptanceTooLow, "region has no mass");
  }
  const ConditionalSample probe =
      SampleConditional(region, dim, n_mc, DeriveSeed(seed, 1), options);
  const ConditionalSample norm_sample =
      SampleConditional(region, dim, n_mc, DeriveSeed(seed, 2), options);
  AnticoncentrationResult r;
  r.t = t_list;
  r.acceptance = probe.acceptance;
  r.conditional_norm = std::sqrt(g.EvalRows(norm_sample.points).squaredNorm() / n_mc);
  const Eigen::VectorXd v = g.EvalRows(probe.points);
  for (double t : t_list) {
    int64_t small = 0, large = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]);
      if (a < t * r.conditional_norm) ++small;
      if (t > 0 && a > r.conditional_norm / t) ++large;
    }
    r.small_ball.push_back(double(small) / n_mc);
    r.tail.push_back(double(large) / n_mc);
  }
  return r;
}

double PartitionParams::InlierFloor() const {
  return inlier_floor >= 0 ? inlier_floor : 2 * std::pow(epsilon, 3);
}

double PartitionParams::OvershootTarget() const {
  return overshoot_target >= 0 ? overshoot_target : epsilon * epsilon;
}

nlohmann::json PartitionReportToJson(const PartitionReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : c.probes) probes.push_back(ProbeToJson(p));
    cells.push_back({{"id", c.id},
                     {"mass", c.mass},
                     {"inlier_mass", c.inlier_mass},
                     {"inlier_fraction", c.inlier_fraction},
                     {"overshoot_mass", c.overshoot_mass},
                     {"samples", c.samples},
                     {"probes", probes}});
  }
  return {{"epsilon", r.epsilon},
          {"cell_side", r.cell_side},
          {"lipschitz", r.lipschitz},
          {"box_half_width", r.box_half_width},
          {"mass_floor", r.mass_floor},
          {"inlier_floor", r.inlier_floor},
          {"ell", r.ell},
          {"m", r.m},
          {"level_in", r.level_in},
          {"level_out", r.level_out},
          {"region_mass", r.region_mass},
          {"n_samples", r.n_samples},
          {"decomposition_residual", r.decomposition_residual},
          {"rewrites", r.rewrites},
          {"final_certificate", r.final_certificate},
          {"low_margin_mass", r.low_margin_mass},
          {"clipped_mass", r.clipped_mass},
          {"coverage_loss", r.coverage_loss},
          {"overshoot", r.overshoot},
          {"kept_mass", r.kept_mass},
          {"candidate_cells", r.candidate_cells},
          {"capped_cells", r.capped_cells},
          {"cells", cells}};
}

PartitionResult PartitionRegion(const HermitePoly& p, const Region& region,
                                const PartitionParams& params) {
  const double eps = params.epsilon;
  if (!(eps > 0.0 && eps < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "partition epsilon must be in (0, 1)");
  }
  if (p.L2Norm() > 1.0 + 1e-9) {
    throw Error(ErrorCode::kNotNormalized, "partitioned polynomial has norm > 1");
  }
  if (region.level < 1) {
    throw Error(ErrorCode::kInvalidArgument, "region level must be >= 1");
  }
  if (region.mass_estimate < params.region_mass_floor) {
    throw Error(ErrorCode::kAcceptanceTooLow, "region mass below the floor");
  }
  const int n = p.dim();
  const int ell = static_cast<int>(region.q.size());
  PolyVec initial;
  for (const auto& q : region.q) initial.push_back(q.WithDim(n));

  SnptParams snpt = params.snpt;
  if (snpt.epsilon <= 0.0) snpt.epsilon = eps;
  snpt.seed = DeriveSeed(params.seed, 11);
  ExtendOptions extend = params.extend;
  extend.enforce_initial = false;
  const ExtendResult dec =
      ExtendDecomposition(initial, p, params.M, snpt, params.max_rewrites, extend);
  if (dec.status == DecompositionStatus::kBudgetExhausted) {
    throw Error(ErrorCode::kDecompositionFailed,
                "decomposition budget exhausted: " + dec.message);
  }
  const PolyVec& qbar = dec.extended;
  const int m = static_cast<int>(qbar.size());

  PartitionResult result;
  result.extended = qbar;
  result.composition = dec.h;
  PartitionReport& rep = result.report;
  rep.epsilon = eps;
  rep.ell = ell;
  rep.m = m;
  rep.level_in = region.level;
  rep.level_out = region.level - 1;
  rep.region_mass = region.mass_estimate;
  rep.decomposition_residual = dec.residual;
  rep.final_certificate = dec.final_certificate.has_value();
  for (const auto& t : dec.trace) rep.rewrites += t.kind == "rewrite";
  rep.mass_floor = params.mass_floor;
  rep.inlier_floor = params.InlierFloor();

  const int64_t V = params.n_mc;
  const ConditionalSample sample = SampleConditional(
      region, n, V, DeriveSeed(params.seed, 12), params.sampler);
  rep.n_samples = V;
  Eigen::MatrixXd y(V, m);
  for (int j = 0; j < m; ++j) y.col(j) = qbar[j].EvalRows(sample.points);
  const Eigen::VectorXd pv = p.EvalRows(sample.points);

  // Largest composition gradient over the low-margin samples.
  const PolyVec grad = Gradient(dec.h.WithDim(std::max(m, dec.h.dim())));
  int64_t low_count = 0;
  double lipschitz = 0.0;
  std::vector<double> yrow(std::max(m, dec.h.dim()), 0.0);
  for (int64_t i = 0; i < V; ++i) {
    if (std::abs(pv[i]) >= eps) continue;
    ++low_count;
    for (int j = 0; j < m; ++j) yrow[j] = y(i, j);
    double sq = 0.0;
    for (int j = 0; j < m; ++j) {
      const double g = grad[j].Eval(yrow);
      sq += g * g;
    }
    lipschitz = std::max(lipschitz, std::sqrt(sq));
  }
  rep.low_margin_mass = static_cast<double>(low_count) / V;
  rep.lipschitz = lipschitz;
  if (low_count == 0) {
    throw Error(ErrorCode::kNoCellsKept, "no low-margin samples in the region");
  }
  const double half_width =
      params.box_scale *
      std::pow(std::max(1.0, std::log(m / eps)), 0.5 * std::max(1, p.degree()));
  rep.box_half_width = half_width;
  struct Stats {
    int64_t count = 0, inliers = 0, overshoot = 0;
    std::vector<int64_t> rows;
  };
  using Cells = std::map<std::vector<int64_t>, Stats>;
  struct Grid {
    double side = 0.0;
    Cells cells;
    int64_t clipped = 0;
    std::vector<const Cells::value_type*> kept;
    int64_t kept_over = 0;
    int64_t capped = 0;
  };
  auto build = [&](double side, Grid& g) {
    g.side = side;
    std::vector<int64_t> key(m);
    for (int64_t i = 0; i < V; ++i) {
      bool inside = true;
      for (int j = ell; j < m; ++j) inside = inside && std::abs(y(i, j)) < half_width;
      if (!inside) {
        ++g.clipped;
        continue;
      }
      for (int j = 0; j < m; ++j) key[j] = static_cast<int64_t>(std::floor(y(i, j) / side));
      Stats& st = g.cells[key];
      ++st.count;
      st.inliers += std::abs(pv[i]) < eps;
      st.overshoot += std::abs(pv[i]) >= 2 * eps;
      st.rows.push_back(i);
    }
    for (const auto& entry : g.cells) {
      const double mass = double(entry.second.count) / V;
      const double inlier = double(entry.second.inliers) / entry.second.count;
      if (mass > params.mass_floor && inlier > rep.inlier_floor) g.kept.push_back(&entry);
    }
    if (params.max_cells >= 0 && static_cast<int>(g.kept.size()) > params.max_cells) {
      std::stable_sort(g.kept.begin(), g.kept.end(), [](const auto* x, const auto* z) {
        return x->second.inliers > z->second.inliers;
      });
      g.capped = static_cast<int64_t>(g.kept.size()) - params.max_cells;
      g.kept.resize(params.max_cells);
      std::sort(g.kept.begin(), g.kept.end(),
                [](const auto* x, const auto* z) { return x->first < z->first; });
    }
    for (const auto* entry : g.kept) g.kept_over += entry->second.overshoot;
  };

  Grid grid;
  if (params.cell_side > 0.0) {
    build(params.cell_side, grid);
  } else {
    // Largest side whose kept cells stay inside the 2 epsilon band up to the
    // overshoot target, scanning down by sqrt(2) to the Lipschitz side.
    const double floor_side =
        lipschitz > 0 ? params.cell_factor * eps / (std::sqrt(m) * lipschitz)
                      : 2 * half_width;
    const double target = params.OvershootTarget();
    std::vector<double> sides;
    for (double sd = 2 * half_width; sd > floor_side; sd /= std::sqrt(2.0)) sides.push_back(sd);
    sides.push_back(floor_side);
    for (double sd : sides) {
      Grid trial;
      build(sd, trial);
      const bool ok = !trial.kept.empty() && double(trial.kept_over) / V <= target;
      if (ok || sd == sides.back()) {
        grid = std::move(trial);
        break;
      }
    }
  }
  rep.cell_side = grid.side;
  rep.candidate_cells = static_cast<int64_t>(grid.cells.size());
  rep.clipped_mass = static_cast<double>(grid.clipped) / V;
  rep.capped_cells = grid.capped;
  const double side = grid.side;
  const auto& kept = grid.kept;
  if (kept.empty()) throw Error(ErrorCode::kNoCellsKept, "no cell passed both floors");

  int64_t kept_low = 0, kept_over = 0, kept_count = 0;
  for (const auto* entry : kept) {
    const Stats& s = entry->second;
    kept_low += s.inliers;
    kept_over += s.overshoot;
    kept_count += s.count;

    Region child;
    child.q = qbar;
    child.level = region.level - 1;
    child.rect.lo.resize(m);
    child.rect.hi.resize(m);
    for (int j = 0; j < m; ++j) {
      double lo = entry->first[j] * side, hi = (entry->first[j] + 1) * side;
      if (j < ell) {
        lo = std::max(lo, region.rect.lo[j]);
        hi = std::min(hi, region.rect.hi[j]);
      } else {
        lo = std::max(lo, -half_width);
        hi = std::min(hi, half_width);
      }
      child.rect.lo[j] = lo;
      child.rect.hi[j] = hi;
    }
    child.mass_estimate = region.mass_estimate * double(s.count) / V;
    child.mass_samples = s.count;
    result.regions.push_back(std::move(child));

    CellReport cell;
    cell.id = CellId(entry->first);
    cell.samples = s.count;
    cell.mass = double(s.count) / V;
    cell.inlier_mass = double(s.inliers) / V;
    cell.inlier_fraction = double(s.inliers) / s.count;
    cell.overshoot_mass = double(s.overshoot) / V;
    if (!params.probe_polys.empty()) {
      Eigen::MatrixXd pts(s.rows.size(), n);
      for (size_t r = 0; r < s.rows.size(); ++r) pts.row(r) = sample.points.row(s.rows[r]);
      for (const auto& g : params.probe_polys) {
        cell.probes.push_back(AnticoncentrationOnPoints(pts, g.WithDim(n), params.probe_t));
      }
    }
    rep.cells.push_back(std::move(cell));
  }
  rep.coverage_loss = double(low_count - kept_low) / V;
  rep.overshoot = double(kept_over) / V;
  rep.kept_mass = double(kept_count) / V;
  return result;
}

}  // namespace ptf
