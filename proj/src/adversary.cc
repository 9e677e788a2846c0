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

#include "ptf/adversary.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ptf/errors.h"
#include "ptf/partitioner.h"

namespace ptf {
namespace {

constexpr int64_t kBlock = 8192;

std::vector<int64_t> Iota(int64_t m) {
  std::vector<int64_t> idx(m);
  std::iota(idx.begin(), idx.end(), int64_t{0});
  return idx;
}

// Indices sorted by descending score, ties by index.
std::vector<int64_t> TopByScore(const std::vector<double>& score, int64_t k) {
  std::vector<int64_t> idx = Iota(static_cast<int64_t>(score.size()));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int64_t a, int64_t b) { return score[a] > score[b]; });
  idx.resize(k);
  return idx;
}

Eigen::VectorXd UniformInBall(Rng& rng, const std::vector<double>& center,
                              double radius) {
  const int n = static_cast<int>(center.size());
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd dir(n);
  for (int i = 0; i < n; ++i) dir[i] = normal(rng);
  dir /= dir.norm();
  const double r = radius * std::pow(unif(rng), 1.0 / n);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = center[i] + r * dir[i];
  return x;
}

std::span<const double> Row(const Eigen::MatrixXd& x, int64_t i,
                            std::vector<double>& buf) {
  buf.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) buf[c] = x(i, c);
  return buf;
}

}  // namespace

GroundTruth RandomPtf(int n, int d, uint64_t seed) {
  if (d < 1 || n < 1) throw Error(ErrorCode::kInvalidArgument, "need n >= 1 and d >= 1");
  Rng rng = MakeStream(seed, 0x7275);
  std::normal_distribution<double> normal;
  Terms terms;
  std::vector<int> e(n, 0);
  // Odometer over exponent vectors with total degree <= d.
  while (true) {
    int total = 0;
    for (int v : e) total += v;
    if (total <= d) terms[MultiIndex(e)] = normal(rng);
    int i = 0;
    while (i < n) {
      if (++e[i] <= d) break;
      e[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
  const HermitePoly raw = HermitePoly::FromHermite(n, terms);
  return {raw.Scaled(1.0 / raw.L2Norm()), d, n, seed};
}

LabeledDataset GenClean(const GroundTruth& truth, int64_t m, uint64_t seed,
                        int workers) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be >= 1");
  const int n = truth.n;
  LabeledDataset out;
  out.data.x.resize(m, n);
  out.data.y.resize(m);
  out.provenance.assign(m, Provenance::kClean);
  const int64_t blocks = (m + kBlock - 1) / kBlock;
  ParallelChunks(workers, blocks, [&](int, int64_t begin, int64_t end) {
    std::vector<double> row(n);
    for (int64_t b = begin; b < end; ++b) {
      Rng rng = MakeStream(seed, static_cast<uint64_t>(b));
      std::normal_distribution<double> normal;
      const int64_t lo = b * kBlock, hi = std::min(m, lo + kBlock);
      for (int64_t i = lo; i < hi; ++i) {
        for (int c = 0; c < n; ++c) {
          row[c] = normal(rng);
          out.data.x(i, c) = row[c];
        }
        out.data.y[i] = truth.Label(row);
      }
    }
  });
  return out;
}

const char* CorruptionStrategyName(CorruptionStrategy s) {
  switch (s) {
    case CorruptionStrategy::kLabelFlipBoundary: return "label_flip_boundary";
    case CorruptionStrategy::kLabelFlipRandom: return "label_flip_random";
    case CorruptionStrategy::kReplaceCluster: return "replace_cluster";
    case CorruptionStrategy::kRemoveAndReplace: return "remove_and_replace";
  }
  return "unknown";
}

CorruptionStrategy CorruptionStrategyFromName(const std::string& name) {
  for (auto s : {CorruptionStrategy::kLabelFlipBoundary, CorruptionStrategy::kLabelFlipRandom,
                 CorruptionStrategy::kReplaceCluster, CorruptionStrategy::kRemoveAndReplace}) {
    if (name == CorruptionStrategyName(s)) return s;
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown corruption strategy '" + name + "'");
}

void CorruptionSpec::Validate(int dim) const {
  if (!(opt >= 0.0 && opt < 0.5)) {
    throw Error(ErrorCode::kConfigInvalid, "opt must lie in [0, 1/2)");
  }
  if (strategy == CorruptionStrategy::kReplaceCluster) {
    if (!(cluster_radius > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "cluster radius must be positive");
    }
    if (static_cast<int>(cluster_center.size()) != dim) {
      throw Error(ErrorCode::kConfigInvalid, "cluster center has the wrong dimension");
    }
    if (cluster_label != 1 && cluster_label != -1) {
      throw Error(ErrorCode::kConfigInvalid, "cluster label must be +1 or -1");
    }
  }
  if (strategy == CorruptionStrategy::kRemoveAndReplace && (!selector || !generator)) {
    throw Error(ErrorCode::kConfigInvalid, "remove_and_replace needs selector and generator");
  }
}

LabeledDataset Corrupt(const LabeledDataset& clean, const GroundTruth& truth,
                       const CorruptionSpec& spec) {
  const Dataset& data = clean.data;
  spec.Validate(data.dim());
  const int64_t m = data.size();
  if (spec.opt == 0.0) return clean;
  const int64_t k = static_cast<int64_t>(std::floor(spec.opt * m));
  if (k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "opt * m must be at least one");
  }
  LabeledDataset out = clean;
  Rng rng = MakeStream(spec.seed, 0x636f);
  std::vector<double> buf;
  std::vector<double> pvals(m);
  for (int64_t i = 0; i < m; ++i) pvals[i] = truth.p_star.Eval(Row(data.x, i, buf));

  switch (spec.strategy) {
    case CorruptionStrategy::kLabelFlipRandom: {
      std::vector<int64_t> idx = Iota(m);
      for (int64_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<int64_t> pick(i, m - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.data.y[idx[i]] = -out.data.y[idx[i]];
        out.provenance[idx[i]] = Provenance::kLabelFlipped;
      }
      break;
    }
    case CorruptionStrategy::kLabelFlipBoundary: {
      std::vector<double> score(m);
      for (int64_t i = 0; i < m; ++i) score[i] = -std::abs(pvals[i]);
      for (int64_t i : TopByScore(score, k)) {
        out.data.y[i] = -out.data.y[i];
        out.provenance[i] = Provenance::kLabelFlipped;
      }
      break;
    }
    case CorruptionStrategy::kReplaceCluster: {
      std::vector<double> score(m);
      for (int64_t i = 0; i < m; ++i) score[i] = data.y[i] * pvals[i];
      for (int64_t i : TopByScore(score, k)) {
        out.data.x.row(i) = UniformInBall(rng, spec.cluster_center, spec.cluster_radius);
        out.data.y[i] = spec.cluster_label;
        out.provenance[i] = Provenance::kReplaced;
      }
      break;
    }
    case CorruptionStrategy::kRemoveAndReplace: {
      std::vector<double> score(m);
      for (int64_t i = 0; i < m; ++i) {
        score[i] = spec.selector(Row(data.x, i, buf), data.y[i], pvals[i]);
      }
      for (int64_t i : TopByScore(score, k)) {
        auto [x, y] = spec.generator(rng);
        if (x.size() != data.dim() || (y != 1 && y != -1)) {
          throw Error(ErrorCode::kConfigInvalid, "generator returned a malformed example");
        }
        out.data.x.row(i) = x;
        out.data.y[i] = y;
        out.provenance[i] = Provenance::kReplaced;
      }
      break;
    }
  }
  return out;
}

CorruptionSpec CorruptionSpecFromJson(const nlohmann::json& j) {
  try {
    CorruptionSpec spec;
    spec.opt = j.value("opt", 0.0);
    spec.strategy = CorruptionStrategyFromName(j.value("strategy", "label_flip_random"));
    spec.seed = j.value("seed", uint64_t{0});
    if (j.contains("center")) spec.cluster_center = j.at("center").get<std::vector<double>>();
    spec.cluster_radius = j.value("radius", 1.0);
    spec.cluster_label = j.value("label", 1);
    if (spec.strategy == CorruptionStrategy::kRemoveAndReplace) {
      throw Error(ErrorCode::kConfigInvalid,
                  "remove_and_replace takes callables and has no JSON form");
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("corruption: ") + e.what());
  }
}

nlohmann::json CorruptionSpecToJson(const CorruptionSpec& spec) {
  nlohmann::json j = {{"opt", spec.opt},
                      {"strategy", CorruptionStrategyName(spec.strategy)},
                      {"seed", spec.seed}};
  if (spec.strategy == CorruptionStrategy::kReplaceCluster) {
    j["center"] = spec.cluster_center;
    j["radius"] = spec.cluster_radius;
    j["label"] = spec.cluster_label;
  }
  return j;
}

double CleanError(const GroundTruth& truth, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::vector<double> buf;
  int64_t wrong = 0;
  for (int64_t i = 0; i < data.size(); ++i) {
    wrong += truth.Label(Row(data.x, i, buf)) != data.y[i];
  }
  return static_cast<double>(wrong) / data.size();
}

Figure1Report Figure1Demo(double eps, int64_t n_mc, uint64_t seed) {
  if (!(eps > 0.0 && eps <= 0.1)) {
    throw Error(ErrorCode::kInvalidArgument, "eps must lie in (0, 0.1]");
  }
  Figure1Report rep;
  rep.eps = eps;
  rep.n_mc = n_mc;
  Rng rng = MakeStream(seed, 1);
  const Eigen::MatrixXd x = GaussianRows(rng, n_mc, 2);
  int64_t in_union = 0, both = 0;
  for (int64_t i = 0; i < n_mc; ++i) {
    const double a = x(i, 0) * x(i, 0), b = x(i, 1) * x(i, 1);
    if (a * b <= eps) {
      ++in_union;
      both += a <= eps;
    }
  }
  rep.union_mass = double(in_union) / n_mc;
  rep.conditional_small_ball = in_union ? double(both) / in_union : 0.0;

  // x1^2 x2^2 has unit-scale norm 3, so its band of half-width eps / 3 is
  // exactly {x1^2 x2^2 < eps}.
  const HermitePoly p = HermitePoly::FromMonomial(2, {{MultiIndex{2, 2}, 1.0 / 3.0}});
  PartitionParams params;
  params.epsilon = eps / 3.0;
  params.n_mc = n_mc;
  params.seed = DeriveSeed(seed, 2);
  params.snpt.grid_step = 0.05;
  params.probe_polys = {HermitePoly::FromMonomial(2, {{MultiIndex{2}, 1.0}})};
  params.probe_t = {eps};
  const PartitionResult part = PartitionRegion(p, Region::FullSpace(1), params);
  rep.coverage_loss = part.report.coverage_loss;
  rep.cell_side = part.report.cell_side;
  for (const CellReport& c : part.report.cells) {
    const double sb = c.probes.at(0).small_ball.at(0);
    rep.cells.push_back({c.id, c.mass, c.samples, sb});
    rep.max_cell_small_ball = std::max(rep.max_cell_small_ball, sb);
  }
  return rep;
}

void WriteFigure1Csv(const std::string& path, const Figure1Report& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileMissing, "cannot write " + path);
  out << "kind,cell,mass,samples,small_ball\n";
  out << "union,," << FormatDouble(report.union_mass) << ',' << report.n_mc << ",\n";
  out << "conditional,," << FormatDouble(report.union_mass) << ',' << report.n_mc << ','
      << FormatDouble(report.conditional_small_ball) << '\n';
  for (const auto& c : report.cells) {
    out << "cell," << c.id << ',' << FormatDouble(c.mass) << ',' << c.samples << ','
        << FormatDouble(c.small_ball) << '\n';
  }
}

}  // namespace ptf
