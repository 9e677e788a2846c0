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

#include "ptf/errors.h"
#include "ptf/random.h"

namespace ptf {
namespace {

double Binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Terms MultiplyTerms(const Terms& a, const Terms& b) {
  Terms out;
  for (const auto& [ia, ca] : a) {
    for (const auto& [ib, cb] : b) out[ia + ib] += ca * cb;
  }
  return out;
}

// Visits every k <= s coordinatewise.
template <typename Fn>
void ForEachSubIndex(const MultiIndex& s, Fn&& fn) {
  const int n = s.size();
  std::vector<int> k(n, 0);
  while (true) {
    fn(MultiIndex(k));
    int i = 0;
    while (i < n) {
      if (++k[i] <= s[i]) break;
      k[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
}

// Concatenates x-index a and z-index b into one index over 2n variables.
MultiIndex Concat(const MultiIndex& a, const MultiIndex& b, int n) {
  std::vector<int> e = a.Padded(n);
  e.resize(2 * n, 0);
  for (int i = 0; i < b.size(); ++i) e[n + i] = b[i];
  return MultiIndex(std::move(e));
}

template <typename Predicate>
std::vector<double> Probe(const HermitePoly& p,
                          const std::vector<double>& t_list, int64_t n_samples,
                          uint64_t seed, int workers, Predicate pred) {
  if (n_samples < 10000) {
    throw Error(ErrorCode::kInvalidArgument, "probes need at least 1e4 samples");
  }
  const double norm = p.L2Norm();
  const int n = p.dim();
  workers = std::max(1, workers);
  std::vector<std::vector<int64_t>> counts(
      workers, std::vector<int64_t>(t_list.size(), 0));
  ParallelChunks(workers, n_samples, [&](int w, int64_t begin, int64_t end) {
    Rng rng = MakeStream(seed, w);
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    for (int64_t s = begin; s < end; ++s) {
      for (double& v : x) v = normal(rng);
      const double value = std::abs(p.Eval(x));
      for (size_t t = 0; t < t_list.size(); ++t) {
        if (pred(value, t_list[t] * norm)) ++counts[w][t];
      }
    }
  });
  std::vector<double> out(t_list.size(), 0.0);
  for (size_t t = 0; t < t_list.size(); ++t) {
    int64_t total = 0;
    for (int w = 0; w < workers; ++w) total += counts[w][t];
    out[t] = static_cast<double>(total) / static_cast<double>(n_samples);
  }
  return out;
}

}  // namespace

HermitePoly MonomialToHermite(int dim, const Terms& monomials,
                              int degree_bound) {
  return HermitePoly::FromMonomial(dim, monomials, degree_bound);
}

double McL2Ratio(const HermitePoly& p) {
  const double norm = p.L2Norm();
  return norm == 0.0 ? 0.0 : p.MaxCoeff() / norm;
}

HermitePoly HarmonicComponent(const HermitePoly& p, int k) {
  Terms kept;
  for (const auto& [idx, c] : p.hermite()) {
    if (idx.total_degree() == k) kept.emplace(idx, c);
  }
  return HermitePoly::FromHermite(p.dim(), kept, std::max(k, 0));
}

bool IsHarmonic(const HermitePoly& p, int k, double tol) {
  double off = 0.0;
  for (const auto& [idx, c] : p.hermite()) {
    if (idx.total_degree() != k) off += c * c;
  }
  return std::sqrt(off) <= tol * std::max(1.0, p.L2Norm());
}

int PureHarmonicDegree(const HermitePoly& p, double tol) {
  if (p.is_zero()) return -1;
  const int top = p.degree();
  return IsHarmonic(p, top, tol) ? top : -1;
}

HermitePoly Partial(const HermitePoly& p, int i) {
  if (i < 0 || i >= p.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "partial derivative index out of range");
  }
  Terms out;
  for (const auto& [idx, c] : p.hermite()) {
    const int si = idx[i];
    if (si == 0) continue;
    out[idx - MultiIndex::Unit(i)] += c * std::sqrt(static_cast<double>(si));
  }
  return HermitePoly::FromHermite(p.dim(), out, std::max(0, p.degree_bound() - 1));
}

PolyVec Gradient(const HermitePoly& p) {
  PolyVec g;
  g.reserve(p.dim());
  for (int i = 0; i < p.dim(); ++i) g.push_back(Partial(p, i));
  return g;
}

HermitePoly DirectionalDerivative(const HermitePoly& p,
                                  std::span<const double> y) {
  if (static_cast<int>(y.size()) != p.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "direction length mismatch");
  }
  Terms out;
  for (const auto& [idx, c] : p.hermite()) {
    for (int i = 0; i < idx.size(); ++i) {
      if (idx[i] == 0 || y[i] == 0.0) continue;
      out[idx - MultiIndex::Unit(i)] +=
          c * y[i] * std::sqrt(static_cast<double>(idx[i]));
    }
  }
  return HermitePoly::FromHermite(p.dim(), out, std::max(0, p.degree_bound() - 1));
}

HermitePoly AdditionExpansion(const MultiIndex& s, int n, double a, double b) {
  if (s.size() > n) {
    throw Error(ErrorCode::kDimensionMismatch, "index exceeds dimension");
  }
  Terms out;
  ForEachSubIndex(s, [&](const MultiIndex& k) {
    double c = 1.0;
    for (int i = 0; i < s.size(); ++i) c *= std::sqrt(Binomial(s[i], k[i]));
    c *= std::pow(a, s.total_degree() - k.total_degree()) *
         std::pow(b, k.total_degree());
    out[Concat(s - k, k, n)] += c;
  });
  return HermitePoly::FromHermite(2 * n, out);
}

ShiftSplitResult ShiftSplit(const PolyVec& q, double delta) {
  const int n = CheckPolyVec(q);
  if (!(delta > 0.0 && delta < 0.25)) {
    throw Error(ErrorCode::kDeltaOutOfRange, "delta must lie in (0, 1/4)");
  }
  const double a = std::sqrt(1.0 - delta * delta);
  ShiftSplitResult out;
  out.delta = delta;
  for (const HermitePoly& qi : q) {
    const int d = qi.is_zero() ? 0 : qi.degree();
    if (!qi.is_zero() && !IsHarmonic(qi, d, 1e-12)) {
      throw Error(ErrorCode::kNotHarmonic, "shift split needs harmonic components");
    }
    if (qi.L2Norm() > 1.0 + 1e-9) {
      throw Error(ErrorCode::kNotNormalized, "shift split needs norm at most one");
    }
    Terms e_terms;
    for (const auto& [s, c] : qi.hermite()) {
      ForEachSubIndex(s, [&](const MultiIndex& k) {
        const int j = k.total_degree();
        if (j < 2) return;
        double w = c;
        for (int i = 0; i < s.size(); ++i) w *= std::sqrt(Binomial(s[i], k[i]));
        w *= std::pow(a, d - j) * std::pow(delta, j);
        e_terms[Concat(s - k, k, n)] += w;
      });
    }
    out.g.push_back(qi.Scaled(std::pow(a, d)));
    out.scale_factors.push_back(d >= 1 ? std::pow(a, d - 1) : 0.0);
    out.e.push_back(HermitePoly::FromHermite(2 * n, e_terms, d));
  }
  return out;
}

HermitePoly Compose(const HermitePoly& h, const PolyVec& q,
                    int output_degree_bound) {
  const int n = CheckPolyVec(q);
  const int m = static_cast<int>(q.size());
  if (h.dim() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "outer polynomial has " + std::to_string(h.dim()) +
                    " variables but " + std::to_string(m) + " inner polynomials");
  }
  std::vector<std::vector<Terms>> powers(m);
  Terms acc;
  for (const auto& [alpha, c] : h.monomial()) {
    int weighted = 0;
    for (int i = 0; i < alpha.size(); ++i) weighted += alpha[i] * q[i].degree();
    if (output_degree_bound >= 0 && weighted > output_degree_bound) {
      throw Error(ErrorCode::kWeightedDegreeExceeded,
                  "monomial " + alpha.ToString() + " has weighted degree " +
                      std::to_string(weighted));
    }
    Terms term{{MultiIndex(), c}};
    for (int i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 0) continue;
      auto& cache = powers[i];
      if (cache.empty()) cache.push_back(Terms{{MultiIndex(), 1.0}});
      while (static_cast<int>(cache.size()) <= alpha[i]) {
        cache.push_back(MultiplyTerms(cache.back(), q[i].monomial()));
      }
      term = MultiplyTerms(term, cache[alpha[i]]);
    }
    for (const auto& [idx, v] : term) acc[idx] += v;
  }
  return HermitePoly::FromMonomial(n, acc, output_degree_bound);
}

std::vector<double> McProbeConcentration(const HermitePoly& p,
                                         const std::vector<double>& t_list,
                                         int64_t n_samples, uint64_t seed,
                                         int workers) {
  return Probe(p, t_list, n_samples, seed, workers,
               [](double v, double bar) { return v > bar; });
}

std::vector<double> McProbeAnticoncentration(const HermitePoly& p,
                                             const std::vector<double>& t_list,
                                             int64_t n_samples, uint64_t seed,
                                             int workers) {
  return Probe(p, t_list, n_samples, seed, workers,
               [](double v, double bar) { return v < bar; });
}

MomentEstimate McMoments(const HermitePoly& p, int64_t n_samples,
                         uint64_t seed, int workers) {
  workers = std::max(1, workers);
  std::vector<MomentEstimate> parts(workers);
  const int n = p.dim();
  ParallelChunks(workers, n_samples, [&](int w, int64_t begin, int64_t end) {
    Rng rng = MakeStream(seed, w);
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    for (int64_t s = begin; s < end; ++s) {
      for (double& v : x) v = normal(rng);
      const double v2 = p.Eval(x) * p.Eval(x);
      parts[w].second += v2;
      parts[w].fourth += v2 * v2;
    }
  });
  MomentEstimate out;
  for (const auto& part : parts) {
    out.second += part.second;
    out.fourth += part.fourth;
  }
  out.second /= static_cast<double>(n_samples);
  out.fourth /= static_cast<double>(n_samples);
  return out;
}

nlohmann::json PolyToJson(const HermitePoly& p, const std::string& basis) {
  const Terms* terms = nullptr;
  if (basis == "hermite") {
    terms = &p.hermite();
  } else if (basis == "monomial") {
    terms = &p.monomial();
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown basis: " + basis);
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [idx, c] : *terms) {
    arr.push_back({{"idx", idx.Padded(p.dim())}, {"c", c}});
  }
  return {{"dim", p.dim()}, {"basis", basis}, {"terms", arr}};
}

HermitePoly PolyFromJson(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const std::string basis = j.at("basis").get<std::string>();
    Terms terms;
    for (const auto& t : j.at("terms")) {
      std::vector<int> idx = t.at("idx").get<std::vector<int>>();
      if (static_cast<int>(idx.size()) != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "term index length differs from dim");
      }
      terms[MultiIndex(std::move(idx))] += t.at("c").get<double>();
    }
    if (basis == "hermite") return HermitePoly::FromHermite(dim, terms);
    if (basis == "monomial") return HermitePoly::FromMonomial(dim, terms);
    throw Error(ErrorCode::kConfigInvalid, "unknown basis: " + basis);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("bad polynomial JSON: ") + e.what());
  }
}

}  // namespace ptf
