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

#include "ptf/snpt.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"
#include "ptf/random.h"

namespace ptf {
namespace {

// One ordered derivative sequence of a degree-k monomial: the k-fold mixed
// partial along (seq[0], ..., seq[k-1]) equals `c`.
struct TensorTerm {
  double c;
  std::vector<int> seq;
};

std::vector<TensorTerm> Polarize(const HermitePoly& q, int k) {
  std::vector<TensorTerm> out;
  for (const auto& [e, c] : q.monomial()) {
    if (e.total_degree() != k) continue;
    std::vector<int> vars;
    double fact = 1.0;
    for (int i = 0; i < e.size(); ++i) {
      for (int r = 1; r <= e[i]; ++r) {
        vars.push_back(i);
        fact *= r;
      }
    }
    do {
      out.push_back({c * fact, vars});
    } while (std::next_permutation(vars.begin(), vars.end()));
  }
  return out;
}

// Per-sample Gram matrices of the iterated-derivative gradients for the
// members of one degree level. For a degree-k polynomial the (k-1)-fold
// directional derivative is affine, so its gradient does not depend on x.
struct LevelSamples {
  int size = 0;
  int n_mc = 0;
  // Upper-triangle entries (i <= j) of every sample's Gram matrix, one
  // contiguous column per pair so the per-candidate pass vectorizes.
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<double>> cols;

  // values[s] = a^T G_s a for every sample.
  void Quadratics(const std::vector<double>& a, std::vector<double>& values) const {
    values.assign(n_mc, 0.0);
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      const double w = (i == j ? 1.0 : 2.0) * a[i] * a[j];
      const double* col = cols[p].data();
      double* out = values.data();
      for (int s = 0; s < n_mc; ++s) out[s] += w * col[s];
    }
  }

  Eigen::MatrixXd MeanGram() const {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(size, size);
    for (size_t p = 0; p < pairs.size(); ++p) {
      double total = 0.0;
      for (double v : cols[p]) total += v;
      mean(pairs[p].first, pairs[p].second) = total / n_mc;
      mean(pairs[p].second, pairs[p].first) = total / n_mc;
    }
    return mean;
  }
};

LevelSamples SampleLevel(const PolyVec& s, const std::vector<int>& members,
                         int k, int n, int n_mc, uint64_t seed) {
  const int size = static_cast<int>(members.size());
  std::vector<std::vector<TensorTerm>> tensors;
  for (int idx : members) tensors.push_back(Polarize(s[idx], k));
  LevelSamples out;
  out.size = size;
  out.n_mc = n_mc;
  for (int a = 0; a < size; ++a) {
    for (int b = a; b < size; ++b) out.pairs.emplace_back(a, b);
  }
  out.cols.assign(out.pairs.size(), std::vector<double>(n_mc));
  Rng rng = MakeStream(seed, 7919 + k);
  std::normal_distribution<double> normal;
  std::vector<double> y(static_cast<size_t>(std::max(k - 1, 0)) * n);
  std::vector<double> g(static_cast<size_t>(size) * n);
  for (int smp = 0; smp < n_mc; ++smp) {
    for (double& v : y) v = normal(rng);
    std::fill(g.begin(), g.end(), 0.0);
    for (int m = 0; m < size; ++m) {
      for (const TensorTerm& t : tensors[m]) {
        double w = t.c;
        for (int j = 0; j + 1 < k; ++j) w *= y[static_cast<size_t>(j) * n + t.seq[j]];
        g[static_cast<size_t>(m) * n + t.seq[k - 1]] += w;
      }
    }
    for (size_t p = 0; p < out.pairs.size(); ++p) {
      const auto [a, b] = out.pairs[p];
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += g[a * n + c] * g[b * n + c];
      out.cols[p][smp] = dot;
    }
  }
  return out;
}

bool Admissible(const std::vector<double>& a, const std::vector<int>& members,
                const AdmissibilityRule* rule) {
  if (rule == nullptr) return true;
  int best = -1;
  double best_w = -1.0;
  for (size_t i = 0; i < members.size(); ++i) {
    const int g = members[i];
    if (g < rule->protected_count) continue;
    const double w = std::abs(a[i]) *
                     (g < static_cast<int>(rule->weights.size()) ? rule->weights[g] : 1.0);
    if (w > best_w) {
      best_w = w;
      best = static_cast<int>(i);
    }
  }
  return best >= 0 && std::abs(a[best]) > rule->min_abs;
}

struct Score {
  int count = -1;
  // Mean of a^T G a / |a|^2; breaks ties in favour of exact dependences.
  double mean = 0.0;
};

Score CountSmall(const LevelSamples& level, const std::vector<double>& a,
                 double tau_sq) {
  thread_local std::vector<double> values;
  level.Quadratics(a, values);
  Score score{0, 0.0};
  for (double v : values) {
    score.count += v < tau_sq;
    score.mean += v;
  }
  double sq = 0.0;
  for (double v : a) sq += v * v;
  score.mean /= level.n_mc * sq;
  return score;
}

double Norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

struct Candidate {
  std::vector<double> a;
  Score score;

  void Offer(const std::vector<double>& trial, const Score& t) {
    if (t.count > score.count || (t.count == score.count && t.mean < score.mean)) {
      a = trial;
      score = t;
    }
  }
};

// Exhaustive lattice over the annulus, one representative per sign pair.
void SearchLattice(const LevelSamples& level, const std::vector<int>& members,
                   double step, double tau_sq, const AdmissibilityRule* rule,
                   Candidate& best, int64_t& evaluated) {
  const int size = level.size;
  const int reach = static_cast<int>(std::floor(2.0 / step + 1e-9));
  std::vector<int> c(size, -reach);
  std::vector<double> a(size);
  while (true) {
    double sq = 0.0;
    int first_nonzero = 0;
    for (int i = 0; i < size; ++i) {
      a[i] = c[i] * step;
      sq += a[i] * a[i];
      if (first_nonzero == 0 && c[i] != 0) first_nonzero = c[i];
    }
    if (sq > 0.9 && sq < 1.1 && first_nonzero > 0 && Admissible(a, members, rule)) {
      ++evaluated;
      best.Offer(a, CountSmall(level, a, tau_sq));
    }
    int i = size - 1;
    while (i >= 0) {
      if (++c[i] <= reach) break;
      c[i] = -reach;
      --i;
    }
    if (i < 0) break;
  }
  // Exact dependences rarely sit on the lattice; the null directions of the
  // mean Gram matrix catch them.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(level.MeanGram());
  for (int col = 0; col < std::min(size, 2); ++col) {
    std::vector<double> v(eig.eigenvectors().col(col).data(),
                          eig.eigenvectors().col(col).data() + size);
    if (!Admissible(v, members, rule)) continue;
    ++evaluated;
    best.Offer(v, CountSmall(level, v, tau_sq));
  }
}

double LatticeEstimate(int size, double step) {
  const double pi = 3.141592653589793;
  double volume = 0.0;
  if (size == 1) volume = 2 * (std::sqrt(1.1) - std::sqrt(0.9));
  if (size == 2) volume = pi * 0.2;
  if (size == 3) volume = 4.0 / 3.0 * pi * (std::pow(1.1, 1.5) - std::pow(0.9, 1.5));
  return volume / std::pow(step, size);
}

// Random unit starts plus the Gram eigenvectors, refined by coordinate descent
// on the mean log derivative norm.
void SearchDirections(const LevelSamples& level, const std::vector<int>& members,
                      const SnptParams& params, int k, double tau_sq,
                      const AdmissibilityRule* rule, Candidate& best,
                      int64_t& evaluated) {
  const int size = level.size;
  std::vector<std::vector<double>> starts;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(level.MeanGram());
  for (int c = 0; c < std::min(size, 2); ++c) {
    starts.emplace_back(eig.eigenvectors().col(c).data(),
                        eig.eigenvectors().col(c).data() + size);
  }
  Rng rng = MakeStream(params.seed, 104729 + k);
  std::normal_distribution<double> normal;
  for (int r = 0; r < params.n_dirs; ++r) {
    std::vector<double> a(size);
    for (double& v : a) v = normal(rng);
    starts.push_back(a);
  }
  std::vector<double> values;
  auto objective = [&](const std::vector<double>& a) {
    level.Quadratics(a, values);
    double total = 0.0;
    for (double v : values) total += std::log(std::max(v, 0.0) + 1e-12);
    return total / level.n_mc;
  };
  for (auto a : starts) {
    const double norm = Norm(a);
    if (norm == 0.0) continue;
    for (double& v : a) v /= norm;
    double value = objective(a);
    double step = 0.25;
    for (int sweep = 0; sweep < 40 && step > 1e-3; ++sweep) {
      bool improved = false;
      for (int i = 0; i < size; ++i) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> trial = a;
          trial[i] += sign * step;
          const double tn = Norm(trial);
          if (tn == 0.0) continue;
          for (double& v : trial) v /= tn;
          const double tv = objective(trial);
          if (tv < value) {
            a = trial;
            value = tv;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (!Admissible(a, members, rule)) continue;
    ++evaluated;
    best.Offer(a, CountSmall(level, a, tau_sq));
  }
}

}  // namespace

void SnptParams::Validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kConfigInvalid, "epsilon must lie in (0, 1)");
  }
  if (n_mc < 10000) throw Error(ErrorCode::kConfigInvalid, "n_mc must be at least 1e4");
  if (N < 1) throw Error(ErrorCode::kConfigInvalid, "N must be positive");
  if (n_dirs < 0 || max_lattice_points < 0) {
    throw Error(ErrorCode::kConfigInvalid, "search budgets must be non-negative");
  }
}

double SnptParams::GridStep() const {
  return grid_step > 0.0 ? grid_step : epsilon * epsilon * epsilon;
}

double SnptParams::DerivativeThreshold() const {
  return derivative_threshold >= 0.0 ? derivative_threshold : epsilon / 2.0;
}

double SnptParams::ProbabilityThreshold() const {
  return probability_threshold >= 0.0 ? probability_threshold
                                      : std::pow(epsilon, N) / 2.0;
}

std::optional<ViolationCertificate> SnptViolationSearch(
    const PolyVec& s, const SnptParams& params, const AdmissibilityRule* rule,
    SearchDiagnostics* diagnostics) {
  params.Validate();
  const int n = CheckPolyVec(s);
  int top = 0;
  std::vector<int> degree(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    const int k = PureHarmonicDegree(s[i], 1e-9);
    if (k < 1) {
      throw Error(ErrorCode::kNotHarmonic,
                  "search set member " + std::to_string(i) + " is not harmonic of positive degree");
    }
    if (std::abs(s[i].L2Norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kNotNormalized,
                  "search set member " + std::to_string(i) + " is not unit norm");
    }
    degree[i] = k;
    top = std::max(top, k);
  }
  const double tau = params.DerivativeThreshold();
  const double threshold = params.ProbabilityThreshold();
  SearchDiagnostics local;
  SearchDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag.best_prob.assign(top + 1, 0.0);
  for (int k = 1; k <= top; ++k) {
    std::vector<int> members;
    for (size_t i = 0; i < s.size(); ++i) {
      if (degree[i] == k) members.push_back(static_cast<int>(i));
    }
    if (members.empty()) {
      diag.empty_levels.push_back(k);
      continue;
    }
    if (rule != nullptr &&
        std::none_of(members.begin(), members.end(),
                     [&](int g) { return g >= rule->protected_count; })) {
      diag.level_modes.push_back("protected");
      continue;
    }
    // At degree one the gradient is a constant vector: one sample is exact.
    const LevelSamples level =
        SampleLevel(s, members, k, n, k == 1 ? 1 : params.n_mc, params.seed);
    Candidate best;
    const int size = static_cast<int>(members.size());
    std::string mode;
    if (size <= 3 && LatticeEstimate(size, params.GridStep()) <= params.max_lattice_points) {
      mode = "lattice";
      SearchLattice(level, members, params.GridStep(), tau * tau, rule, best,
                    diag.candidates);
    } else {
      mode = "directions";
      SearchDirections(level, members, params, k, tau * tau, rule, best,
                       diag.candidates);
    }
    diag.level_modes.push_back(mode);
    if (best.score.count < 0) continue;
    const double prob = static_cast<double>(best.score.count) / level.n_mc;
    diag.best_prob[k] = prob;
    if (prob > threshold) {
      ViolationCertificate cert;
      cert.k = k;
      cert.members = members;
      cert.a.assign(s.size(), 0.0);
      const double norm = Norm(best.a);
      for (int i = 0; i < size; ++i) cert.a[members[i]] = best.a[i] / norm;
      cert.raw_norm_sq = norm * norm;
      cert.est_prob = prob;
      cert.threshold_used = threshold;
      cert.search_mode = mode;
      return cert;
    }
  }
  return std::nullopt;
}

double JacobianSingularityProbe(const PolyVec& q, double delta, int64_t n_mc,
                                uint64_t seed) {
  const int n = CheckPolyVec(q);
  const int m = static_cast<int>(q.size());
  if (m > n) {
    throw Error(ErrorCode::kRankDeficientSetup, "more polynomials than variables");
  }
  std::vector<PolyVec> grads;
  for (const auto& p : q) grads.push_back(Gradient(p));
  Rng rng = MakeStream(seed, 0);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  Eigen::MatrixXd jac(m, n);
  int64_t hits = 0;
  for (int64_t s = 0; s < n_mc; ++s) {
    for (double& v : x) v = normal(rng);
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < n; ++c) jac(i, c) = grads[i][c].Eval(x);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    if (svd.singularValues()(m - 1) <= delta) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_mc);
}

LowDegreeSplit SplitLowDegree(const HermitePoly& q, double rank_tol,
                              int max_rank) {
  const int k = PureHarmonicDegree(q, 1e-10);
  if (k < 2) {
    throw Error(ErrorCode::kNotPureHarmonic,
                "split needs a pure harmonic polynomial of degree at least 2");
  }
  if (q.L2Norm() > 1.0 + 1e-9) {
    throw Error(ErrorCode::kNotNormalized, "split needs norm at most one");
  }
  const int n = q.dim();
  std::map<MultiIndex, int> column;
  for (const auto& [s, c] : q.hermite()) {
    for (int i = 0; i < s.size(); ++i) {
      if (s[i] > 0) column.emplace(s - MultiIndex::Unit(i), 0);
    }
  }
  std::vector<MultiIndex> col_index;
  for (auto& [t, pos] : column) {
    pos = static_cast<int>(col_index.size());
    col_index.push_back(t);
  }
  // Row i holds the Hermite coefficients of dq/dx_i.
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(n, col_index.size());
  for (const auto& [s, c] : q.hermite()) {
    for (int i = 0; i < s.size(); ++i) {
      if (s[i] == 0) continue;
      flat(i, column.at(s - MultiIndex::Unit(i))) += c * std::sqrt(static_cast<double>(s[i]));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(flat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();
  LowDegreeSplit out;
  out.k = k;
  out.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
  int keep = 0;
  for (int j = 0; j < sigma.size(); ++j) {
    if (sigma(j) > 0.0 && sigma(j) >= rank_tol * sigma(0)) keep = j + 1;
  }
  if (max_rank >= 0) keep = std::min(keep, max_rank);
  HermitePoly sum = HermitePoly::Zero(n);
  for (int j = 0; j < keep; ++j) {
    Terms at, bt;
    for (int i = 0; i < n; ++i) {
      if (svd.matrixU()(i, j) != 0.0) at[MultiIndex::Unit(i)] = svd.matrixU()(i, j);
    }
    for (size_t t = 0; t < col_index.size(); ++t) {
      const double v = svd.matrixV()(t, j) * sigma(j) / k;
      if (v != 0.0) bt[col_index[t]] = v;
    }
    ProductPair pair;
    pair.alpha = HermitePoly::FromHermite(n, at);
    pair.beta = HermitePoly::FromHermite(n, bt);
    pair.sigma = sigma(j);
    pair.product_norm = pair.alpha.L2Norm() * pair.beta.L2Norm();
    sum = sum + pair.alpha * pair.beta;
    out.pairs.push_back(std::move(pair));
  }
  out.g = q - sum;
  out.g_top = HarmonicComponent(out.g, k);
  out.r = out.g - out.g_top;
  out.residual_norm = out.g_top.L2Norm();
  // Degree-k part of sum_{dropped} alpha_j beta_j straight from the triplets:
  // coefficient at s is (1/k) sum_i sqrt(s_i) M'(i, s - e_i).
  std::map<MultiIndex, double> dropped;
  double dropped_sq = 0.0;
  for (int j = keep; j < sigma.size(); ++j) {
    dropped_sq += sigma(j) * sigma(j);
    for (int i = 0; i < n; ++i) {
      for (size_t t = 0; t < col_index.size(); ++t) {
        const double m = sigma(j) * svd.matrixU()(i, j) * svd.matrixV()(t, j);
        if (m == 0.0) continue;
        const MultiIndex s = col_index[t] + MultiIndex::Unit(i);
        dropped[s] += std::sqrt(static_cast<double>(s[i])) * m / k;
      }
    }
  }
  double energy = 0.0;
  for (const auto& [s, v] : dropped) energy += v * v;
  out.dropped_energy = std::sqrt(energy);
  out.dropped_sigma_bound = std::sqrt(dropped_sq / k);
  return out;
}

double PartialDecomposition::Scale(int i) const {
  return std::pow(epsilon, magnitude_sixths[i] / 6.0);
}

HermitePoly PartialDecomposition::DirectComposition() const {
  const int m = size();
  if (m == 0) return composition;
  PolyVec scaled;
  for (int i = 0; i < m; ++i) scaled.push_back(HermitePoly::Coordinate(m, i).Scaled(Scale(i)));
  return Compose(composition.WithDim(m), scaled);
}

std::vector<int> PartialDecomposition::Potential() const {
  std::vector<int> out(d, 0);
  const int cap = 6 * (M + 3 * d);
  for (int i = 0; i < size(); ++i) {
    const int t = primitives[i].degree();
    if (t >= 1 && t <= d) out[d - t] += cap - magnitude_sixths[i];
  }
  return out;
}

nlohmann::json RewriteRecordToJson(const RewriteRecord& r) {
  return {{"iteration", r.iteration}, {"kind", r.kind},
          {"k", r.k}, {"j", r.j},
          {"potential_before", r.potential_before},
          {"potential_after", r.potential_after},
          {"m", r.m}, {"h_norm", r.h_norm}, {"residual", r.residual},
          {"est_prob", r.est_prob}, {"gamma_max", r.gamma_max},
          {"theta", r.theta}, {"zeta_max", r.zeta_max},
          {"lambda_max", r.lambda_max}, {"iota_max", r.iota_max},
          {"pairs", r.pairs}};
}

namespace {

HermitePoly ComposeOrConstant(const HermitePoly& h, const PolyVec& q, int n) {
  if (q.empty()) {
    const auto it = h.hermite().find(MultiIndex());
    return HermitePoly::Constant(n, it == h.hermite().end() ? 0.0 : it->second);
  }
  return Compose(h.WithDim(static_cast<int>(q.size())), q);
}

double Residual(const PartialDecomposition& dec, const HermitePoly& p) {
  return (p - ComposeOrConstant(dec.DirectComposition(), dec.primitives, p.dim())).L2Norm();
}

// Substitutes y_old -> subs[old] into h, where subs live over `m_new` variables.
HermitePoly Substitute(const HermitePoly& h, const PolyVec& subs) {
  if (subs.empty()) return h;
  return Compose(h.WithDim(static_cast<int>(subs.size())), subs);
}

void CheckWeightedDegree(const PartialDecomposition& dec) {
  for (const auto& [alpha, c] : dec.composition.monomial()) {
    int weighted = 0;
    for (int i = 0; i < alpha.size(); ++i) weighted += alpha[i] * dec.primitives[i].degree();
    if (weighted > dec.d) {
      throw Error(ErrorCode::kWeightedDegreeExceeded,
                  "composition monomial " + alpha.ToString() + " breaks the degree budget");
    }
  }
}

// Drops non-initial primitives whose magnitude hit M + 3d.
bool Saturate(PartialDecomposition& dec, int iteration, const HermitePoly& p,
              std::vector<RewriteRecord>& trace) {
  const int cap = 6 * (dec.M + 3 * dec.d);
  bool any = false;
  for (int i = dec.size() - 1; i >= dec.ell; --i) {
    if (dec.magnitude_sixths[i] < cap) continue;
    RewriteRecord rec;
    rec.iteration = iteration;
    rec.kind = "saturation";
    rec.j = i;
    rec.k = dec.primitives[i].degree();
    rec.potential_before = dec.Potential();
    const int m = dec.size();
    PolyVec subs;
    for (int o = 0; o < m; ++o) {
      if (o == i) {
        subs.push_back(HermitePoly::Zero(m - 1));
      } else {
        subs.push_back(HermitePoly::Coordinate(m - 1, o < i ? o : o - 1));
      }
    }
    if (m - 1 == 0) {
      const auto it = dec.composition.monomial().find(MultiIndex());
      dec.composition = HermitePoly::Constant(0, it == dec.composition.monomial().end() ? 0.0 : it->second);
    } else {
      dec.composition = Substitute(dec.composition, subs);
    }
    dec.primitives.erase(dec.primitives.begin() + i);
    dec.magnitude_sixths.erase(dec.magnitude_sixths.begin() + i);
    rec.potential_after = dec.Potential();
    rec.m = dec.size();
    rec.h_norm = dec.composition.L2Norm();
    rec.residual = Residual(dec, p);
    trace.push_back(rec);
    any = true;
  }
  return any;
}

void Rewrite(PartialDecomposition& dec, const ViolationCertificate& cert,
             const ExtendOptions& options, int iteration, const HermitePoly& p,
             std::vector<RewriteRecord>& trace) {
  const double eps = dec.epsilon;
  const int m = dec.size();
  const int n = p.dim();
  std::vector<double> a = cert.a;
  int j = -1;
  double best = -1.0;
  for (int i : cert.members) {
    if (i < dec.ell) continue;
    const double w = std::abs(a[i]) * dec.Scale(i);
    if (w > best) {
      best = w;
      j = i;
    }
  }
  if (j < 0) throw Error(ErrorCode::kDecompositionFailed, "certificate has no rewritable member");
  if (a[j] < 0) {
    for (double& v : a) v = -v;
  }
  const double aj = a[j];
  const double scale_j = dec.Scale(j);

  RewriteRecord rec;
  rec.iteration = iteration;
  rec.kind = "rewrite";
  rec.k = cert.k;
  rec.j = j;
  rec.est_prob = cert.est_prob;
  rec.potential_before = dec.Potential();

  HermitePoly q = HermitePoly::Zero(n);
  for (int i : cert.members) q = q + dec.primitives[i].Scaled(a[i]);

  HermitePoly e_part = q;
  std::vector<ProductPair> pairs;
  std::vector<HermitePoly> lower;  // harmonic pieces of r, degree >= 1
  double r_constant = 0.0;
  // An exact dependence leaves nothing to split; only the substitution remains.
  if (cert.k >= 2 && q.L2Norm() > options.zero_tol) {
    const double shrink = std::max(1.0, q.L2Norm());
    const LowDegreeSplit split = SplitLowDegree(q.Scaled(1.0 / shrink), options.rank_tol);
    for (const ProductPair& pair : split.pairs) {
      ProductPair scaled = pair;
      scaled.beta = pair.beta.Scaled(shrink);
      scaled.product_norm = pair.product_norm * shrink;
      pairs.push_back(scaled);
    }
    e_part = split.g_top.Scaled(shrink);
    const HermitePoly r = split.r.Scaled(shrink);
    for (int t = 1; t < cert.k; ++t) {
      const HermitePoly piece = HarmonicComponent(r, t);
      if (piece.L2Norm() > options.zero_tol) lower.push_back(piece);
    }
    const auto it = r.hermite().find(MultiIndex());
    if (it != r.hermite().end()) r_constant = it->second;
  }
  const double e_norm = e_part.L2Norm();
  const bool keep_e = e_norm > options.zero_tol;

  PartialDecomposition next = dec;
  next.primitives.clear();
  next.magnitude_sixths.clear();
  std::vector<int> map(m, -1);
  for (int i = 0; i < m; ++i) {
    if (i == j) {
      if (!keep_e) continue;
      map[i] = next.size();
      next.primitives.push_back(e_part.Scaled(1.0 / e_norm));
      next.magnitude_sixths.push_back(dec.magnitude_sixths[j] + 1);
    } else {
      map[i] = next.size();
      next.primitives.push_back(dec.primitives[i]);
      next.magnitude_sixths.push_back(dec.magnitude_sixths[i]);
    }
  }
  std::vector<std::pair<int, int>> pair_vars;
  for (const ProductPair& pair : pairs) {
    const int ia = next.size();
    next.primitives.push_back(pair.alpha.Scaled(1.0 / pair.alpha.L2Norm()));
    next.magnitude_sixths.push_back(0);
    const int ib = next.size();
    next.primitives.push_back(pair.beta.Scaled(1.0 / pair.beta.L2Norm()));
    next.magnitude_sixths.push_back(0);
    pair_vars.emplace_back(ia, ib);
  }
  std::vector<int> lower_vars;
  for (const HermitePoly& piece : lower) {
    lower_vars.push_back(next.size());
    next.primitives.push_back(piece.Scaled(1.0 / piece.L2Norm()));
    next.magnitude_sixths.push_back(0);
  }
  const int m_new = next.size();

  // eps^{b_j} q_j = a_j^{-1} eps^{b_j} q - sum_{i != j} a_j^{-1} a_i eps^{b_j - b_i} (eps^{b_i} q_i)
  const double base = scale_j / aj;
  Terms expr;
  for (size_t t = 0; t < pairs.size(); ++t) {
    const double gamma = base * pairs[t].product_norm;
    rec.gamma_max = std::max(rec.gamma_max, std::abs(gamma));
    expr[MultiIndex::Unit(pair_vars[t].first) + MultiIndex::Unit(pair_vars[t].second)] += gamma;
  }
  if (keep_e) {
    rec.theta = e_norm * std::pow(eps, -1.0 / 6.0) / aj;
    expr[MultiIndex::Unit(map[j])] += rec.theta;
  }
  for (size_t t = 0; t < lower.size(); ++t) {
    const double zeta = base * lower[t].L2Norm();
    rec.zeta_max = std::max(rec.zeta_max, std::abs(zeta));
    expr[MultiIndex::Unit(lower_vars[t])] += zeta;
  }
  if (r_constant != 0.0) {
    rec.zeta_max = std::max(rec.zeta_max, std::abs(base * r_constant));
    expr[MultiIndex()] += base * r_constant;
  }
  for (int i : cert.members) {
    if (i == j || a[i] == 0.0) continue;
    const double c = -a[i] / aj * scale_j / dec.Scale(i);
    if (i < dec.ell) {
      rec.lambda_max = std::max(rec.lambda_max, std::abs(c));
    } else {
      rec.iota_max = std::max(rec.iota_max, std::abs(c));
    }
    expr[MultiIndex::Unit(map[i])] += c;
  }
  const double blowup = std::pow(eps, -3.0 * dec.d);
  for (double v : {rec.gamma_max, rec.theta, rec.zeta_max, rec.lambda_max, rec.iota_max}) {
    if (v > blowup) {
      throw Error(ErrorCode::kCoefficientBlowup,
                  "rewrite coefficient " + std::to_string(v) + " exceeds eps^{-3d}");
    }
  }

  PolyVec subs;
  for (int i = 0; i < m; ++i) {
    if (i == j) {
      subs.push_back(HermitePoly::FromMonomial(m_new, expr));
    } else {
      subs.push_back(HermitePoly::Coordinate(m_new, map[i]));
    }
  }
  next.composition = Substitute(dec.composition, subs);
  CheckWeightedDegree(next);
  dec = std::move(next);

  rec.pairs = static_cast<int>(pairs.size());
  rec.potential_after = dec.Potential();
  rec.m = dec.size();
  rec.h_norm = dec.composition.L2Norm();
  rec.residual = Residual(dec, p);
  trace.push_back(rec);
}

}  // namespace

ExtendResult ExtendDecomposition(const PolyVec& initial, const HermitePoly& p,
                                 int M, const SnptParams& params,
                                 int max_rewrites, const ExtendOptions& options) {
  params.Validate();
  const int n = p.dim();
  const int ell = static_cast<int>(initial.size());
  int d = std::max(1, p.degree());
  for (const HermitePoly& q : initial) {
    if (q.dim() != n) throw Error(ErrorCode::kDimensionMismatch, "initial set dimension differs from p");
    if (PureHarmonicDegree(q, 1e-9) < 1) {
      throw Error(ErrorCode::kNotHarmonic, "initial polynomials must be harmonic");
    }
    if (std::abs(q.L2Norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kNotNormalized, "initial polynomials must have unit norm");
    }
    d = std::max(d, q.degree());
  }
  if (p.L2Norm() > 1.0 + 1e-9) {
    throw Error(ErrorCode::kNotNormalized, "target polynomial must have norm at most one");
  }
  if (M < 1) throw Error(ErrorCode::kConfigInvalid, "M must be positive");

  ExtendResult out;
  if (options.check_initial && ell > 0) {
    SnptParams ip = params;
    ip.epsilon = std::cbrt(params.epsilon);
    ip.N = options.initial_N >= 1 ? options.initial_N : 3 * (params.N + 1);
    ip.derivative_threshold = -1.0;
    ip.probability_threshold = -1.0;
    out.initial_checked = true;
    out.initial_certificate = SnptViolationSearch(initial, ip);
    if (out.initial_certificate && options.enforce_initial) {
      throw Error(ErrorCode::kNotSufficientlyNonSingular,
                  "initial set has a violation at level " +
                      std::to_string(out.initial_certificate->k));
    }
  }

  PartialDecomposition dec;
  dec.ell = ell;
  dec.primitives = initial;
  dec.magnitude_sixths.assign(ell, 0);
  dec.M = M;
  dec.d = d;
  dec.epsilon = params.epsilon;
  Terms h_terms;
  for (int k = 1; k <= d; ++k) {
    const HermitePoly piece = HarmonicComponent(p, k);
    const double norm = piece.L2Norm();
    if (norm <= options.zero_tol) continue;
    h_terms[MultiIndex::Unit(dec.size())] += norm;
    dec.primitives.push_back(piece.Scaled(1.0 / norm));
    dec.magnitude_sixths.push_back(0);
  }
  const auto constant = p.hermite().find(MultiIndex());
  if (constant != p.hermite().end()) h_terms[MultiIndex()] += constant->second;
  dec.composition = HermitePoly::FromMonomial(dec.size(), h_terms);

  const int cap = max_rewrites >= 0 ? max_rewrites : 50 * d * std::max(1, dec.size());
  int rewrites = 0;
  for (int iteration = 0;; ++iteration) {
    Saturate(dec, iteration, p, out.trace);
    if (dec.size() == 0) break;
    AdmissibilityRule rule;
    rule.protected_count = ell;
    rule.min_abs = std::sqrt(params.epsilon);
    for (int i = 0; i < dec.size(); ++i) rule.weights.push_back(dec.Scale(i));
    const auto cert = SnptViolationSearch(dec.primitives, params, &rule);
    if (!cert) break;
    if (rewrites >= cap) {
      out.status = DecompositionStatus::kBudgetExhausted;
      out.message = "rewrite budget of " + std::to_string(cap) + " exhausted";
      break;
    }
    Rewrite(dec, *cert, options, iteration, p, out.trace);
    ++rewrites;
  }

  out.decomposition = dec;
  out.extended = dec.primitives;
  out.h = dec.DirectComposition();
  out.e = p - ComposeOrConstant(out.h, dec.primitives, n);
  out.residual = out.e.L2Norm();
  out.complexity_ok =
      dec.composition.L2Norm() <= options.complexity_C * std::pow(params.epsilon, -3.0 * d);
  if (dec.size() > 0) out.final_certificate = SnptViolationSearch(dec.primitives, params);
  return out;
}

}  // namespace ptf
