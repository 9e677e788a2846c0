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

#include "ptf/ptf_learner.h"

#include <algorithm>
#include <cmath>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"
#include "ptf/random.h"

namespace ptf {
namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfigInvalid, "learner." + what);
}

int SignOf(double v) { return v >= 0 ? 1 : -1; }

// Rows of data selected by mask, with their original indices.
Dataset Subset(const Dataset& data, const std::vector<int64_t>& rows) {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  out.y.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = data.x.row(rows[r]);
    out.y[r] = data.y[rows[r]];
  }
  return out;
}

struct Majority {
  int sign = 1;
  double error = 0.0;
};

Majority MajorityOf(const std::vector<int>& y) {
  if (y.empty()) return {};
  int64_t pos = 0;
  for (int v : y) pos += v == 1;
  const int64_t neg = static_cast<int64_t>(y.size()) - pos;
  Majority m;
  m.sign = pos >= neg ? 1 : -1;
  m.error = double(std::min(pos, neg)) / double(y.size());
  return m;
}

DecisionEntry ConstantEntry(const Region& region, int dim, int sign) {
  DecisionEntry e;
  e.region = region;
  e.p = HermitePoly::Constant(dim, sign);
  e.gamma = 0.0;
  e.norm = 1.0;
  e.constant = true;
  return e;
}

MarginalOracle RegionOracle(const Region& region, int dim, const SamplerOptions& sampler) {
  return [region, dim, sampler](int64_t n, uint64_t seed) {
    return SampleConditional(region, dim, n, seed, sampler).points;
  };
}

bool InTrain(int64_t index, uint64_t seed, double fraction) {
  const uint64_t h = SplitMix64(static_cast<uint64_t>(index) ^ SplitMix64(seed));
  return double(h >> 11) * 0x1.0p-53 < fraction;
}

nlohmann::json PartitionSummary(const PartitionReport& r) {
  nlohmann::json j = PartitionReportToJson(r);
  j.erase("cells");
  j["cell_count"] = r.cells.size();
  return j;
}

}  // namespace

LearnerConfig::LearnerConfig() {
  partition.max_cells = 8;
  partition.n_mc = 50000;
  partition.snpt.grid_step = 0.05;
  partition.box_scale = 2.0;
  perceptron.max_iters = 200;
}

void LearnerConfig::Validate() const {
  Require(degree >= 1, "degree must be >= 1");
  Require(eps > 0 && eps < 1, "eps must be in (0, 1)");
  Require(eta > 0 && eta < 1, "eta must be in (0, 1)");
  // F = eps^(1 - 8/sqrt K) lies in (0, 1) only beyond K = 64.
  Require(K > 64, "K must exceed 64");
  Require(guess_ratio > 1, "guess_ratio must exceed 1");
  Require(validation_constant > 0, "validation_constant must be positive");
  Require(max_threshold > 0 && max_threshold <= 1, "max_threshold must be in (0, 1]");
  Require(depth_budget >= 1, "depth_budget must be >= 1");
  Require(train_fraction > 0 && train_fraction < 1, "train_fraction must be in (0, 1)");
  Require(min_region_samples >= 1, "min_region_samples must be >= 1");
  Require(region_mass_floor >= 0 && region_mass_floor < 1, "region_mass_floor must be in [0, 1)");
  Require(max_regions >= 1, "max_regions must be >= 1");
  Require(norm_samples >= 1000, "norm_samples must be >= 1000");
  Require(accounting_samples >= 1, "accounting_samples must be >= 1");
  Require(partition.max_cells >= 1, "partition.max_cells must be >= 1");
  Require(partition.box_scale > 0, "partition.box_scale must be positive");
  Require(perceptron.max_iters >= 0, "perceptron.max_iters must be >= 0");
  Require(workers >= 1, "workers must be >= 1");
}

int LearnerConfig::Attempts() const {
  return std::max(1, static_cast<int>(std::ceil(std::log(1.0 / eta))));
}

int64_t LearnerConfig::ListBound() const {
  int64_t bound = 1;
  for (int i = 0; i < depth_budget; ++i) bound *= partition.max_cells + 1;
  return bound;
}

LearnerConfig LearnerConfigFromJson(const nlohmann::json& j) {
  LearnerConfig c;
  if (!j.is_object()) throw Error(ErrorCode::kConfigInvalid, "learner: expected an object");
  std::string key;
  try {
    auto get = [&](const char* name, auto& field) {
      key = name;
      if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
    };
    get("degree", c.degree);
    get("eps", c.eps);
    get("K", c.K);
    get("eta", c.eta);
    get("guess_ratio", c.guess_ratio);
    get("validation_constant", c.validation_constant);
    get("max_threshold", c.max_threshold);
    get("depth_budget", c.depth_budget);
    get("train_fraction", c.train_fraction);
    get("min_region_samples", c.min_region_samples);
    get("region_mass_floor", c.region_mass_floor);
    get("max_regions", c.max_regions);
    get("whiten_samples", c.whiten_samples);
    get("norm_samples", c.norm_samples);
    get("accounting_samples", c.accounting_samples);
    get("perceptron_max_iters", c.perceptron.max_iters);
    get("max_cells", c.partition.max_cells);
    get("partition_n_mc", c.partition.n_mc);
    get("partition_mass_floor", c.partition.mass_floor);
    get("partition_cell_side", c.partition.cell_side);
    get("partition_box_scale", c.partition.box_scale);
    get("snpt_grid_step", c.partition.snpt.grid_step);
    get("seed", c.seed);
    get("workers", c.workers);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfigInvalid, "learner." + key + ": wrong type");
  }
  c.Validate();
  return c;
}

nlohmann::json LearnerConfigToJson(const LearnerConfig& c) {
  return {{"degree", c.degree},
          {"eps", c.eps},
          {"K", c.K},
          {"eta", c.eta},
          {"guess_ratio", c.guess_ratio},
          {"validation_constant", c.validation_constant},
          {"max_threshold", c.max_threshold},
          {"depth_budget", c.depth_budget},
          {"train_fraction", c.train_fraction},
          {"min_region_samples", c.min_region_samples},
          {"region_mass_floor", c.region_mass_floor},
          {"max_regions", c.max_regions},
          {"whiten_samples", c.whiten_samples},
          {"norm_samples", c.norm_samples},
          {"accounting_samples", c.accounting_samples},
          {"perceptron_max_iters", c.perceptron.max_iters},
          {"max_cells", c.partition.max_cells},
          {"partition_n_mc", c.partition.n_mc},
          {"partition_mass_floor", c.partition.mass_floor},
          {"partition_cell_side", c.partition.cell_side},
          {"partition_box_scale", c.partition.box_scale},
          {"snpt_grid_step", c.partition.snpt.grid_step},
          {"seed", c.seed},
          {"workers", c.workers}};
}

int Predict(const DecisionListHypothesis& h, std::span<const double> x) {
  for (const DecisionEntry& e : h.entries) {
    if (!e.region.Contains(x)) continue;
    const double v = e.p.Eval(x);
    if (std::abs(v) >= e.gamma * e.norm) return SignOf(v);
  }
  return h.fallback.is_zero() ? 1 : SignOf(h.fallback.Eval(x));
}

std::vector<int> PredictRows(const DecisionListHypothesis& h, const Eigen::MatrixXd& x) {
  const Eigen::Index m = x.rows();
  std::vector<int> out(m, 0);
  std::vector<char> open(m, 1);
  for (const DecisionEntry& e : h.entries) {
    const std::vector<char> in = e.region.ContainsRows(x);
    const Eigen::VectorXd v = e.p.EvalRows(x);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (open[i] && in[i] && std::abs(v[i]) >= e.gamma * e.norm) {
        out[i] = SignOf(v[i]);
        open[i] = 0;
      }
    }
  }
  Eigen::VectorXd fb = h.fallback.is_zero() ? Eigen::VectorXd::Ones(m) : h.fallback.EvalRows(x);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (open[i]) out[i] = SignOf(fb[i]);
  }
  return out;
}

double Evaluate(const DecisionListHypothesis& h, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const std::vector<int> pred = PredictRows(h, data.x);
  int64_t wrong = 0;
  for (int64_t i = 0; i < data.size(); ++i) wrong += pred[i] != data.y[i];
  return double(wrong) / double(data.size());
}

nlohmann::json HypothesisToJson(const DecisionListHypothesis& h) {
  nlohmann::json entries = nlohmann::json::array();
  for (const DecisionEntry& e : h.entries) {
    entries.push_back({{"region", RegionToJson(e.region)},
                       {"p", PolyToJson(e.p, "monomial")},
                       {"gamma", e.gamma},
                       {"norm", e.norm},
                       {"constant", e.constant}});
  }
  return {{"dim", h.dim},
          {"entries", entries},
          {"fallback", PolyToJson(h.fallback.is_zero() ? HermitePoly::Zero(std::max(1, h.dim))
                                                       : h.fallback,
                                  "monomial")}};
}

DecisionListHypothesis HypothesisFromJson(const nlohmann::json& j) {
  try {
    DecisionListHypothesis h;
    h.dim = j.at("dim").get<int>();
    for (const auto& e : j.at("entries")) {
      DecisionEntry d;
      d.region = RegionFromJson(e.at("region"));
      d.p = PolyFromJson(e.at("p"));
      d.gamma = e.at("gamma").get<double>();
      d.norm = e.at("norm").get<double>();
      d.constant = e.value("constant", false);
      h.entries.push_back(std::move(d));
    }
    if (j.contains("fallback")) h.fallback = PolyFromJson(j.at("fallback"));
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("hypothesis: ") + e.what());
  }
}

const char* RegionOutcomeName(RegionOutcome o) {
  switch (o) {
    case RegionOutcome::kClassified:
      return "classified";
    case RegionOutcome::kDiscarded:
      return "discarded";
    case RegionOutcome::kConstant:
      return "constant";
    case RegionOutcome::kEmpty:
      return "empty";
  }
  return "unknown";
}

PartialResult PartialClassifier(const Region& region, const Dataset& samples,
                                const std::vector<int64_t>& index,
                                const LearnerConfig& config, uint64_t seed) {
  if (region.level < 1) throw Error(ErrorCode::kInvalidArgument, "region level must be >= 1");
  if (region.mass_estimate < config.region_mass_floor) {
    throw Error(ErrorCode::kInvalidArgument, "region mass below the floor");
  }
  if (static_cast<int64_t>(index.size()) != samples.size() || samples.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need one index per sample and >= 1 sample");
  }
  const int dim = samples.dim();
  PartialResult out;
  RegionReport& rep = out.report;
  rep.level = region.level;
  rep.mass = region.mass_estimate;
  rep.samples = samples.size();
  const Majority majority = MajorityOf(samples.y);
  rep.majority_error = majority.error;

  std::vector<int64_t> train, validate;
  for (int64_t i = 0; i < samples.size(); ++i) {
    (InTrain(index[i], config.seed, config.train_fraction) ? train : validate).push_back(i);
  }
  SamplerOptions sampler = config.partition.sampler;
  sampler.workers = 1;
  const MarginalOracle oracle = RegionOracle(region, dim, sampler);

  std::optional<LiftResult> lift;
  Eigen::MatrixXd oracle_z, gram, val_z;
  if (!train.empty() && !validate.empty()) {
    const Dataset tr = Subset(samples, train);
    try {
      WhitenOptions wo;
      wo.samples = config.whiten_samples;
      wo.seed = DeriveSeed(seed, 1);
      lift = LiftAndWhiten(tr.x, oracle, config.degree, wo);
      oracle_z = lift->whitening.Apply(oracle(config.norm_samples, DeriveSeed(seed, 2)));
      gram = oracle_z.transpose() * oracle_z / static_cast<double>(oracle_z.rows());
      val_z = lift->whitening.Apply(Subset(samples, validate).x);
    } catch (const Error& e) {
      rep.partition_error = std::string("whitening: ") + ErrorCodeName(e.code());
      lift.reset();
    }
  }

  std::optional<PerceptronResult> accepted;
  const int attempts = config.Attempts();
  for (double guess = config.eps; lift && guess < 0.25; guess *= config.guess_ratio) {
    GuessReport g;
    g.eps = guess;
    g.threshold = config.validation_constant * PerceptronF(guess, config.K);
    if (g.threshold > config.max_threshold) break;
    for (int a = 0; a < attempts && !g.accepted; ++a) {
      // Attempt 0 uses every training row, later ones a seeded 80% subset.
      std::vector<Eigen::Index> rows;
      for (size_t r = 0; r < train.size(); ++r) {
        if (a == 0 || InTrain(index[train[r]], DeriveSeed(seed, 100 + a), 0.8)) {
          rows.push_back(static_cast<Eigen::Index>(r));
        }
      }
      Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), lift->z.cols());
      std::vector<int> y(rows.size());
      for (size_t r = 0; r < rows.size(); ++r) {
        z.row(static_cast<Eigen::Index>(r)) = lift->z.row(rows[r]);
        y[r] = samples.y[train[rows[r]]];
      }
      AttemptReport ar;
      try {
        PerceptronResult pr =
            PerceptronLearn(z, y, gram, guess, config.K, config.perceptron);
        ar.iterations = static_cast<int>(pr.report.history.size());
        ar.converged = pr.report.converged;
        const Eigen::VectorXd s = val_z * pr.w;
        int64_t band = 0, wrong = 0;
        for (size_t r = 0; r < validate.size(); ++r) {
          if (std::abs(s[static_cast<Eigen::Index>(r)]) < pr.gamma * pr.report.final_norm) continue;
          ++band;
          wrong += SignOf(s[static_cast<Eigen::Index>(r)]) != samples.y[validate[r]];
        }
        ar.band_mass = double(band) / double(validate.size());
        ar.validation_error = band > 0 ? double(wrong) / double(band) : 1.0;
        rep.best_validation_error = std::min(rep.best_validation_error, ar.validation_error);
        if (ar.validation_error <= g.threshold) {
          g.accepted = true;
          accepted = std::move(pr);
        }
      } catch (const Error& e) {
        ar.error = ErrorCodeName(e.code());
      }
      g.attempts.push_back(ar);
    }
    rep.guesses.push_back(g);
    if (g.accepted) {
      rep.accepted_eps = guess;
      break;
    }
  }

  if (!accepted) {
    // Too much noise for any guess: fall back to the majority label here.
    rep.outcome = RegionOutcome::kDiscarded;
    rep.dropped_mass = rep.mass;
    out.entry = ConstantEntry(region, dim, majority.sign);
    return out;
  }

  rep.outcome = RegionOutcome::kClassified;
  rep.gamma = accepted->gamma;
  DecisionEntry entry;
  entry.region = region;
  entry.p = lift->whitening.PullBack(accepted->w);
  entry.gamma = accepted->gamma;
  entry.norm = accepted->report.final_norm;
  const Eigen::VectorXd s = oracle_z * accepted->w;
  int64_t in_band = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) in_band += std::abs(s[i]) >= entry.gamma * entry.norm;
  rep.band_mass = rep.mass * double(in_band) / double(s.size());

  // The residue {|p| < gamma ||p||_D} is the low-margin set of p / ||p||_G
  // at epsilon = gamma ||p||_D / ||p||_G.
  const double g_norm = entry.p.L2Norm();
  const double part_eps = g_norm > 0 ? entry.gamma * entry.norm / g_norm : 1.0;
  if (!(part_eps > 0 && part_eps < 1)) {
    rep.partition_error = "margin outside the partition range";
  } else {
    PartitionParams pp = config.partition;
    pp.epsilon = part_eps;
    pp.seed = DeriveSeed(seed, 3);
    pp.sampler.workers = 1;
    try {
      PartitionResult pr = PartitionRegion(entry.p.Scaled(1.0 / g_norm), region, pp);
      rep.partition = PartitionSummary(pr.report);
      out.children = std::move(pr.regions);
    } catch (const Error& e) {
      rep.partition_error = ErrorCodeName(e.code());
    }
  }
  for (const Region& c : out.children) rep.child_mass += c.mass_estimate;
  rep.dropped_mass = rep.mass - rep.band_mass - rep.child_mass;
  out.entry = std::move(entry);
  return out;
}

LearnResult LearnPtf(const Dataset& samples, const LearnerConfig& config) {
  config.Validate();
  if (samples.size() == 0) throw Error(ErrorCode::kInvalidArgument, "no samples");
  const int dim = samples.dim();
  LearnResult out;
  out.hypothesis.dim = dim;
  out.list_bound = config.ListBound();

  struct Pending {
    Region region;
    int parent = -1;
  };
  std::vector<Pending> current = {{Region::FullSpace(config.depth_budget), -1}};
  current[0].region.mass_estimate = 1.0;
  int next_id = 0;
  double reported = 0.0;
  Rng acc_rng = MakeStream(DeriveSeed(config.seed, 0xacc), 0);
  const Eigen::MatrixXd acc_x = GaussianRows(acc_rng, config.accounting_samples, dim);
  std::vector<char> captured(acc_x.rows(), 0);

  for (int depth = 0; !current.empty(); ++depth) {
    const int budget_left = config.max_regions - next_id;
    if (budget_left <= 0) {
      out.budget_exhausted = true;
      break;
    }
    if (static_cast<int>(current.size()) > budget_left) {
      out.budget_exhausted = true;
      current.resize(budget_left);
    }
    const int count = static_cast<int>(current.size());
    std::vector<PartialResult> results(count);
    ParallelChunks(std::min(config.workers, count), count,
                   [&](int, int64_t begin, int64_t end) {
      for (int64_t r = begin; r < end; ++r) {
        const Pending& job = current[r];
        const int id = next_id + static_cast<int>(r);
        const std::vector<char> in = job.region.ContainsRows(samples.x);
        std::vector<int64_t> rows;
        for (int64_t i = 0; i < samples.size(); ++i) {
          if (in[i]) rows.push_back(i);
        }
        const Dataset local = Subset(samples, rows);
        PartialResult& res = results[r];
        const bool too_small = job.region.level == 0 ||
                               static_cast<int64_t>(rows.size()) < config.min_region_samples ||
                               job.region.mass_estimate < config.region_mass_floor;
        if (rows.empty()) {
          res.report.outcome = RegionOutcome::kEmpty;
          res.report.dropped_mass = job.region.mass_estimate;
        } else if (too_small) {
          const Majority maj = MajorityOf(local.y);
          res.report.outcome = RegionOutcome::kConstant;
          res.report.majority_error = maj.error;
          res.report.band_mass = job.region.mass_estimate;
          res.entry = ConstantEntry(job.region, dim, maj.sign);
        } else {
          res = PartialClassifier(job.region, local, rows, config,
                                  DeriveSeed(config.seed, static_cast<uint64_t>(id)));
        }
        res.report.level = job.region.level;
        res.report.mass = job.region.mass_estimate;
        res.report.samples = static_cast<int64_t>(rows.size());
      }
    });

    std::vector<Pending> next;
    for (int r = 0; r < count; ++r) {
      PartialResult& res = results[r];
      RegionReport& rep = res.report;
      rep.id = next_id + r;
      rep.parent = current[r].parent;
      rep.depth = depth;
      if (rep.outcome == RegionOutcome::kClassified || rep.outcome == RegionOutcome::kConstant) {
        reported += rep.band_mass;
      }
      if (rep.outcome == RegionOutcome::kDiscarded) {
        reported += rep.mass;
        out.discarded_mass += rep.mass;
        out.discarded_noise +=
            rep.mass * std::min(rep.best_validation_error, rep.majority_error);
      }
      if (res.entry) {
        const DecisionEntry& e = *res.entry;
        const std::vector<char> in = e.region.ContainsRows(acc_x);
        const Eigen::VectorXd v = e.p.EvalRows(acc_x);
        for (Eigen::Index i = 0; i < acc_x.rows(); ++i) {
          if (in[i] && std::abs(v[i]) >= e.gamma * e.norm) captured[i] = 1;
        }
        out.hypothesis.entries.push_back(std::move(*res.entry));
      }
      if (rep.id == 0 && !out.hypothesis.entries.empty()) {
        out.hypothesis.fallback = out.hypothesis.entries.front().p;
      }
      out.regions.push_back(std::move(rep));
    }
    // Children get ids after every region of this depth, in order.
    int child_id = next_id + count;
    for (int r = 0; r < count; ++r) {
      for (Region& c : results[r].children) {
        out.regions[next_id + r].children.push_back(child_id++);
        next.push_back({std::move(c), next_id + r});
      }
    }
    next_id += count;

    DepthSnapshot snap;
    snap.depth = depth;
    snap.reported_classified = reported;
    for (const Pending& p : next) snap.reported_pending += p.region.mass_estimate;
    std::vector<char> queued(acc_x.rows(), 0);
    for (const Pending& p : next) {
      const std::vector<char> in = p.region.ContainsRows(acc_x);
      for (Eigen::Index i = 0; i < acc_x.rows(); ++i) queued[i] |= in[i] && !captured[i];
    }
    int64_t n_cap = 0, n_queued = 0;
    for (Eigen::Index i = 0; i < acc_x.rows(); ++i) {
      n_cap += captured[i];
      n_queued += queued[i];
    }
    snap.classified = double(n_cap) / double(acc_x.rows());
    snap.pending = double(n_queued) / double(acc_x.rows());
    snap.dropped = 1.0 - snap.classified - snap.pending;
    out.snapshots.push_back(snap);
    current = std::move(next);
  }
  return out;
}

nlohmann::json RegionReportToJson(const RegionReport& r) {
  nlohmann::json guesses = nlohmann::json::array();
  for (const GuessReport& g : r.guesses) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const AttemptReport& a : g.attempts) {
      attempts.push_back({{"validation_error", a.validation_error},
                          {"band_mass", a.band_mass},
                          {"iterations", a.iterations},
                          {"converged", a.converged},
                          {"error", a.error}});
    }
    guesses.push_back({{"eps", g.eps},
                       {"threshold", g.threshold},
                       {"accepted", g.accepted},
                       {"attempts", attempts}});
  }
  return {{"id", r.id},
          {"parent", r.parent},
          {"depth", r.depth},
          {"level", r.level},
          {"mass", r.mass},
          {"samples", r.samples},
          {"outcome", RegionOutcomeName(r.outcome)},
          {"accepted_eps", r.accepted_eps},
          {"gamma", r.gamma},
          {"band_mass", r.band_mass},
          {"child_mass", r.child_mass},
          {"dropped_mass", r.dropped_mass},
          {"majority_error", r.majority_error},
          {"best_validation_error", r.best_validation_error},
          {"children", r.children},
          {"partition_error", r.partition_error},
          {"partition", r.partition},
          {"guesses", guesses}};
}

nlohmann::json LearnResultToJson(const LearnResult& r) {
  nlohmann::json regions = nlohmann::json::array(), snaps = nlohmann::json::array();
  for (const RegionReport& rep : r.regions) regions.push_back(RegionReportToJson(rep));
  for (const DepthSnapshot& s : r.snapshots) {
    snaps.push_back({{"depth", s.depth},
                     {"classified", s.classified},
                     {"pending", s.pending},
                     {"dropped", s.dropped},
                     {"reported_classified", s.reported_classified},
                     {"reported_pending", s.reported_pending}});
  }
  return {{"list_length", r.hypothesis.entries.size()},
          {"list_bound", r.list_bound},
          {"budget_exhausted", r.budget_exhausted},
          {"discarded_mass", r.discarded_mass},
          {"discarded_noise", r.discarded_noise},
          {"snapshots", snaps},
          {"regions", regions}};
}

}  // namespace ptf
