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

// Batch driver: generate | learn | eval | diagnose | bench.
//
// Every command reads a run config (JSON) with sections truth, data,
// corruption, learner, diagnostics, bench and output_dir, and writes its
// artifacts under output_dir. Failures print {"error": ..., "message": ...}
// on stdout and exit nonzero.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptf/adversary.h"
#include "ptf/dataset.h"
#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"
#include "ptf/partitioner.h"
#include "ptf/ptf_learner.h"
#include "ptf/random.h"
#include "ptf/snpt.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ptf {
namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel CurrentLogLevel() {
  const char* env = std::getenv("PTF_LOG");
  const std::string v = env ? env : "info";
  if (v == "error") return LogLevel::kError;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void Log(LogLevel level, const std::string& msg) {
  static const LogLevel current = CurrentLogLevel();
  if (level > current) return;
  static const char* kNames[] = {"error", "info", "debug"};
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

[[noreturn]] void Invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kConfigInvalid, path + ": " + what);
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileMissing, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, path + ": " + e.what());
  }
}

// Short form for log lines; artifacts use FormatDouble.
std::string Short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileMissing, "cannot write " + path);
  out << text;
}

void WriteJson(const std::string& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

template <typename T>
T Field(const json& section, const std::string& path, const char* key) {
  if (!section.contains(key)) Invalid(path + "." + key, "missing");
  try {
    return section.at(key).get<T>();
  } catch (const json::exception&) {
    Invalid(path + "." + key, "wrong type");
  }
}

template <typename T>
T FieldOr(const json& section, const std::string& path, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  return Field<T>(section, path, key);
}

const json& Section(const json& root, const char* key) {
  static const json kEmpty = json::object();
  if (!root.contains(key)) return kEmpty;
  if (!root.at(key).is_object()) Invalid(key, "expected an object");
  return root.at(key);
}

struct RunConfig {
  json raw;
  int n = 0;
  int d = 0;
  uint64_t truth_seed = 0;
  int64_t m_train = 0;
  int64_t m_test = 0;
  uint64_t train_seed = 0;
  uint64_t test_seed = 0;
  CorruptionSpec corruption;
  LearnerConfig learner;
  json diagnostics;
  std::vector<double> bench_opts;
  std::string output_dir;
  int workers = 1;

  std::string Out(const std::string& name) const { return (fs::path(output_dir) / name).string(); }
};

RunConfig LoadRunConfig(const std::string& path, std::optional<uint64_t> seed,
                        int workers, const std::string& out_override) {
  json raw = ReadJsonFile(path);
  if (!raw.is_object()) Invalid("config", "expected an object");
  // A master seed replaces every seed in the file.
  if (seed) {
    raw["truth"]["seed"] = *seed;
    raw["data"]["seed"] = DeriveSeed(*seed, 1);
    raw["data"]["test_seed"] = DeriveSeed(*seed, 2);
    raw["corruption"]["seed"] = DeriveSeed(*seed, 3);
    raw["learner"]["seed"] = DeriveSeed(*seed, 4);
  }
  if (!out_override.empty()) raw["output_dir"] = out_override;

  RunConfig c;
  const json& truth = Section(raw, "truth");
  c.n = Field<int>(truth, "truth", "n");
  c.d = Field<int>(truth, "truth", "d");
  c.truth_seed = Field<uint64_t>(truth, "truth", "seed");
  if (c.n < 1) Invalid("truth.n", "must be >= 1");
  if (c.d < 1) Invalid("truth.d", "must be >= 1");

  const json& data = Section(raw, "data");
  c.m_train = Field<int64_t>(data, "data", "m_train");
  c.m_test = FieldOr<int64_t>(data, "data", "m_test", 0);
  c.train_seed = Field<uint64_t>(data, "data", "seed");
  c.test_seed = FieldOr<uint64_t>(data, "data", "test_seed", DeriveSeed(c.train_seed, 2));
  if (c.m_train < 1) Invalid("data.m_train", "must be >= 1");
  if (c.m_test < 0) Invalid("data.m_test", "must be >= 0");

  const json& corruption = Section(raw, "corruption");
  if (!corruption.empty() && !corruption.contains("seed")) Invalid("corruption.seed", "missing");
  try {
    c.corruption = corruption.empty() ? CorruptionSpec{} : CorruptionSpecFromJson(corruption);
    c.corruption.Validate(c.n);
  } catch (const Error& e) {
    Invalid("corruption", e.what());
  }

  const json& learner = Section(raw, "learner");
  if (!learner.contains("seed")) Invalid("learner.seed", "missing");
  json lj = learner;
  lj["workers"] = workers;
  c.learner = LearnerConfigFromJson(lj);  // messages carry the learner.* path
  c.workers = workers;
  if (c.learner.degree != c.d) {
    Log(LogLevel::kInfo, "learner.degree " + std::to_string(c.learner.degree) +
                             " differs from truth.d " + std::to_string(c.d));
  }

  c.diagnostics = Section(raw, "diagnostics");
  const json& bench = Section(raw, "bench");
  c.bench_opts = FieldOr<std::vector<double>>(bench, "bench", "opts", {0.0, 0.02, 0.05});
  for (double o : c.bench_opts) {
    if (!(o >= 0 && o < 0.5)) Invalid("bench.opts", "values must lie in [0, 1/2)");
  }

  c.output_dir = FieldOr<std::string>(raw, "config", "output_dir", "");
  if (c.output_dir.empty()) Invalid("output_dir", "missing");
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir)) Invalid("output_dir", "not writable");
  c.raw = raw;
  return c;
}

json TruthToJson(const GroundTruth& t) {
  return {{"n", t.n}, {"d", t.d}, {"seed", t.seed}, {"p_star", PolyToJson(t.p_star, "hermite")}};
}

GroundTruth MakeTruth(const RunConfig& c) { return RandomPtf(c.n, c.d, c.truth_seed); }

// Error and paired standard error of (b - a) on shared test rows.
struct Paired {
  double error = 0.0;
  double delta = 0.0;
  double se = 0.0;
};

Paired PairedDifference(const std::vector<int>& a, const std::vector<int>& b,
                        const std::vector<int>& y) {
  const double m = static_cast<double>(y.size());
  double sum = 0.0, sum_sq = 0.0, wrong = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double diff = double(b[i] != y[i]) - double(a[i] != y[i]);
    sum += diff;
    sum_sq += diff * diff;
    wrong += b[i] != y[i];
  }
  Paired p;
  p.error = wrong / m;
  p.delta = sum / m;
  const double var = std::max(0.0, sum_sq / m - p.delta * p.delta);
  p.se = std::sqrt(var / m);
  return p;
}

// generate: truth.json, train.csv (+ provenance), test.csv.
int CmdGenerate(const RunConfig& c) {
  const GroundTruth truth = MakeTruth(c);
  WriteJson(c.Out("truth.json"), TruthToJson(truth));
  const LabeledDataset clean = GenClean(truth, c.m_train, c.train_seed, c.workers);
  const LabeledDataset train = Corrupt(clean, truth, c.corruption);
  WriteDatasetCsv(c.Out("train.csv"), train.data);
  WriteProvenanceCsv(ProvenancePath(c.Out("train.csv")), train.provenance);
  Log(LogLevel::kInfo, "wrote " + std::to_string(train.data.size()) + " training rows");
  if (c.m_test > 0) {
    const LabeledDataset test = GenClean(truth, c.m_test, c.test_seed, c.workers);
    WriteDatasetCsv(c.Out("test.csv"), test.data);
    Log(LogLevel::kInfo, "wrote " + std::to_string(test.data.size()) + " test rows");
  }
  return 0;
}

// learn: hypothesis.json and manifest.json from output_dir/train.csv.
int CmdLearn(const RunConfig& c) {
  const Dataset train = ReadDatasetCsv(c.Out("train.csv"));
  if (train.dim() != c.n) Invalid("truth.n", "does not match train.csv");
  const auto t0 = std::chrono::steady_clock::now();
  const LearnResult result = LearnPtf(train, c.learner);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Log(LogLevel::kInfo, "learned " + std::to_string(result.hypothesis.entries.size()) +
                           " entries from " + std::to_string(result.regions.size()) +
                           " regions in " + Short(secs) + " s");
  WriteJson(c.Out("hypothesis.json"), HypothesisToJson(result.hypothesis));

  json errors = {{"train_corrupted", Evaluate(result.hypothesis, train)}};
  if (fs::exists(c.Out("test.csv"))) {
    errors["test_clean"] = Evaluate(result.hypothesis, ReadDatasetCsv(c.Out("test.csv")));
  }
  json manifest = {{"config", c.raw},
                   {"learner", LearnerConfigToJson(c.learner)},
                   {"seeds",
                    {{"truth", c.truth_seed},
                     {"train", c.train_seed},
                     {"test", c.test_seed},
                     {"corruption", c.corruption.seed},
                     {"learner", c.learner.seed}}},
                   {"result", LearnResultToJson(result)},
                   {"errors", errors}};
  WriteJson(c.Out("manifest.json"), manifest);
  return 0;
}

DecisionListHypothesis LoadHypothesis(const std::string& path) {
  const json j = ReadJsonFile(path);
  // A truth file evaluates its own sign(p_star).
  if (j.contains("p_star")) {
    DecisionListHypothesis h;
    h.fallback = PolyFromJson(j.at("p_star"));
    h.dim = h.fallback.dim();
    return h;
  }
  return HypothesisFromJson(j);
}

// eval: eval.csv with one row per data file.
int CmdEval(const RunConfig& c, const std::string& hyp_path, const std::string& data_path) {
  const std::string hp = hyp_path.empty() ? c.Out("hypothesis.json") : hyp_path;
  const std::string dp = data_path.empty() ? c.Out("test.csv") : data_path;
  const DecisionListHypothesis h = LoadHypothesis(hp);
  const Dataset data = ReadDatasetCsv(dp);
  if (h.dim != data.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "hypothesis and data dimensions differ");
  }
  const std::vector<int> pred = PredictRows(h, data.x);
  int64_t wrong = 0;
  for (int64_t i = 0; i < data.size(); ++i) wrong += pred[i] != data.y[i];
  const double err = data.size() ? double(wrong) / double(data.size()) : 0.0;
  const double se = data.size() ? std::sqrt(err * (1 - err) / double(data.size())) : 0.0;
  std::string csv = "hypothesis,data,rows,wrong,error,std_error\n";
  csv += "\"" + hp + "\",\"" + dp + "\"," + std::to_string(data.size()) + "," +
         std::to_string(wrong) + "," + FormatDouble(err) + "," + FormatDouble(se) + "\n";
  WriteText(c.Out("eval.csv"), csv);
  Log(LogLevel::kInfo, "error " + Short(err));
  std::cout << FormatDouble(err) << '\n';
  return 0;
}

// diagnose: anticoncentration.csv, jacobian.csv, figure1.csv.
int CmdDiagnose(const RunConfig& c) {
  const GroundTruth truth = MakeTruth(c);
  const json& diag = c.diagnostics;

  const json ac = diag.value("anticoncentration", json::object());
  std::vector<HermitePoly> polys;
  if (ac.contains("polys")) {
    for (const auto& p : ac.at("polys")) polys.push_back(PolyFromJson(p));
  } else {
    polys.push_back(truth.p_star);
  }
  const auto t_list = FieldOr<std::vector<double>>(ac, "diagnostics.anticoncentration", "t",
                                                   {0.001, 0.01, 0.1});
  const auto ac_n = FieldOr<int64_t>(ac, "diagnostics.anticoncentration", "n_mc", 100000);
  const auto ac_seed = FieldOr<uint64_t>(ac, "diagnostics.anticoncentration", "seed", 1);
  std::string csv = "poly,degree,t,small_ball,t_pow_inv_degree\n";
  for (size_t k = 0; k < polys.size(); ++k) {
    const int deg = std::max(1, polys[k].degree());
    const std::vector<double> sb =
        McProbeAnticoncentration(polys[k], t_list, ac_n, DeriveSeed(ac_seed, k), c.workers);
    for (size_t i = 0; i < t_list.size(); ++i) {
      csv += std::to_string(k) + "," + std::to_string(deg) + "," + FormatDouble(t_list[i]) +
             "," + FormatDouble(sb[i]) + "," + FormatDouble(std::pow(t_list[i], 1.0 / deg)) +
             "\n";
    }
  }
  WriteText(c.Out("anticoncentration.csv"), csv);

  const json jac = diag.value("jacobian", json::object());
  std::vector<PolyVec> systems;
  if (jac.contains("systems")) {
    for (const auto& s : jac.at("systems")) {
      PolyVec q;
      for (const auto& p : s) q.push_back(PolyFromJson(p));
      systems.push_back(q);
    }
  } else {
    systems.push_back({truth.p_star});
  }
  const auto deltas =
      FieldOr<std::vector<double>>(jac, "diagnostics.jacobian", "deltas", {0.01, 0.1});
  const auto jac_n = FieldOr<int64_t>(jac, "diagnostics.jacobian", "n_mc", 20000);
  const auto jac_seed = FieldOr<uint64_t>(jac, "diagnostics.jacobian", "seed", 2);
  csv = "system,size,delta,probability\n";
  for (size_t k = 0; k < systems.size(); ++k) {
    for (double delta : deltas) {
      const double prob =
          JacobianSingularityProbe(systems[k], delta, jac_n, DeriveSeed(jac_seed, k));
      csv += std::to_string(k) + "," + std::to_string(systems[k].size()) + "," +
             FormatDouble(delta) + "," + FormatDouble(prob) + "\n";
    }
  }
  WriteText(c.Out("jacobian.csv"), csv);

  const json f1 = diag.value("figure1", json::object());
  const double eps = FieldOr<double>(f1, "diagnostics.figure1", "eps", 0.01);
  const auto f1_n = FieldOr<int64_t>(f1, "diagnostics.figure1", "n_mc", 1000000);
  const auto f1_seed = FieldOr<uint64_t>(f1, "diagnostics.figure1", "seed", 3);
  if (!(eps > 0 && eps <= 0.1)) Invalid("diagnostics.figure1.eps", "must be in (0, 0.1]");
  const Figure1Report rep = Figure1Demo(eps, f1_n, f1_seed);
  WriteFigure1Csv(c.Out("figure1.csv"), rep);
  Log(LogLevel::kInfo, "figure1: union " + Short(rep.union_mass) + ", conditional " +
                           Short(rep.conditional_small_ball) + ", max cell " +
                           Short(rep.max_cell_small_ball));
  return 0;
}

// bench: bench.csv with one row per corruption level on one target, one
// clean training set and one clean test set.
int CmdBench(const RunConfig& c) {
  const GroundTruth truth = MakeTruth(c);
  const LabeledDataset clean = GenClean(truth, c.m_train, c.train_seed, c.workers);
  const int64_t m_test = c.m_test > 0 ? c.m_test : 100000;
  const LabeledDataset test = GenClean(truth, m_test, c.test_seed, c.workers);
  std::string csv =
      "opt,strategy,clean_error,delta_vs_previous,paired_std_error,within_noise,entries,"
      "list_bound,budget_exhausted\n";
  std::vector<int> prev;
  for (double opt : c.bench_opts) {
    CorruptionSpec spec = c.corruption;
    spec.opt = opt;
    const LabeledDataset train = opt > 0 ? Corrupt(clean, truth, spec) : clean;
    const LearnResult r = LearnPtf(train.data, c.learner);
    const std::vector<int> pred = PredictRows(r.hypothesis, test.data.x);
    const Paired p = PairedDifference(prev.empty() ? pred : prev, pred, test.data.y);
    const bool ok = prev.empty() || p.delta >= -2 * p.se;
    csv += FormatDouble(opt) + "," + CorruptionStrategyName(spec.strategy) + "," +
           FormatDouble(p.error) + "," + (prev.empty() ? "" : FormatDouble(p.delta)) + "," +
           (prev.empty() ? "" : FormatDouble(p.se)) + "," + (ok ? "true" : "false") + "," +
           std::to_string(r.hypothesis.entries.size()) + "," + std::to_string(r.list_bound) +
           "," + (r.budget_exhausted ? "true" : "false") + "\n";
    Log(LogLevel::kInfo, "opt " + Short(opt) + ": clean error " + Short(p.error));
    Log(LogLevel::kDebug, "opt " + Short(opt) + ": " + std::to_string(r.regions.size()) +
                              " regions, discarded mass " + Short(r.discarded_mass));
    prev = pred;
  }
  WriteText(c.Out("bench.csv"), csv);
  return 0;
}

void PrintError(const std::string& code, const std::string& message) {
  std::cout << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace
}  // namespace ptf

int main(int argc, char** argv) {
  using namespace ptf;
  CLI::App app{"Robust PTF learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, hyp_path, data_path;
  int64_t seed = -1;
  int workers = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed overriding every seed in the config");
    sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory overriding output_dir");
  };
  CLI::App* gen = app.add_subcommand("generate", "Write truth, corrupted train and clean test");
  CLI::App* learn = app.add_subcommand("learn", "Learn a decision list from train.csv");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a hypothesis on a labeled CSV");
  CLI::App* diag = app.add_subcommand("diagnose", "Anticoncentration, Jacobian and cross-product small-ball probes");
  CLI::App* bench = app.add_subcommand("bench", "Clean error across a corruption sweep");
  for (CLI::App* sub : {gen, learn, eval, diag, bench}) common(sub);
  eval->add_option("--hypothesis", hyp_path, "Hypothesis or truth JSON");
  eval->add_option("--data", data_path, "Labeled CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("ConfigInvalid", e.what());
    return 2;
  }

  try {
    const std::optional<uint64_t> s =
        seed >= 0 ? std::optional<uint64_t>(static_cast<uint64_t>(seed)) : std::nullopt;
    const RunConfig c = LoadRunConfig(config_path, s, workers, out_dir);
    if (*gen) return CmdGenerate(c);
    if (*learn) return CmdLearn(c);
    if (*eval) return CmdEval(c, hyp_path, data_path);
    if (*diag) return CmdDiagnose(c);
    if (*bench) return CmdBench(c);
  } catch (const Error& e) {
    PrintError(ErrorCodeName(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("Internal", e.what());
    return 1;
  }
  return 0;
}
