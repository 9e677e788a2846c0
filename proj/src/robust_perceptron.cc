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

#include "ptf/robust_perceptron.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ptf/dataset.h"
#include "ptf/errors.h"

namespace ptf {
namespace {

void AppendIndices(int dim, int remaining, int pos, std::vector<int>& cur,
                   std::vector<MultiIndex>& out) {
  if (pos == dim - 1) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[pos] = e;
    AppendIndices(dim, remaining - e, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

int Sign(double v) { return v >= 0 ? 1 : -1; }

}  // namespace

std::vector<MultiIndex> MonomialFeatures(int dim, int degree) {
  if (dim < 1 || degree < 0) {
    throw Error(ErrorCode::kInvalidArgument, "need dim >= 1 and degree >= 0");
  }
  std::vector<MultiIndex> out;
  std::vector<int> cur(dim, 0);
  for (int k = 0; k <= degree; ++k) AppendIndices(dim, k, 0, cur, out);
  return out;
}

Eigen::MatrixXd LiftMonomials(const Eigen::MatrixXd& x,
                              const std::vector<MultiIndex>& features) {
  int degree = 0;
  for (const MultiIndex& a : features) degree = std::max(degree, a.total_degree());
  const int n = static_cast<int>(x.cols());
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(features.size()));
  std::vector<double> powers(static_cast<size_t>(n) * (degree + 1));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int j = 0; j < n; ++j) {
      double v = 1.0;
      for (int e = 0; e <= degree; ++e) {
        powers[j * (degree + 1) + e] = v;
        v *= x(r, j);
      }
    }
    for (size_t f = 0; f < features.size(); ++f) {
      double v = 1.0;
      for (int j = 0; j < features[f].size(); ++j) {
        if (features[f][j] > 0) {
          if (j >= n) throw Error(ErrorCode::kDimensionMismatch, "feature exceeds x dimension");
          v *= powers[j * (degree + 1) + features[f][j]];
        }
      }
      out(r, static_cast<Eigen::Index>(f)) = v;
    }
  }
  return out;
}

Eigen::MatrixXd WhiteningTransform::Apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != dim) throw Error(ErrorCode::kDimensionMismatch, "x dimension mismatch");
  return LiftMonomials(x, features) * transform;
}

HermitePoly WhiteningTransform::PullBack(const Eigen::VectorXd& w) const {
  if (w.size() != transform.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "weight vector has the wrong length");
  }
  const Eigen::VectorXd c = transform * w;
  Terms terms;
  for (size_t f = 0; f < features.size(); ++f) {
    if (c[static_cast<Eigen::Index>(f)] != 0.0) terms[features[f]] = c[static_cast<Eigen::Index>(f)];
  }
  return HermitePoly::FromMonomial(dim, terms, degree);
}

LiftResult LiftAndWhiten(const Eigen::MatrixXd& x, const MarginalOracle& oracle,
                         int degree, const WhitenOptions& options) {
  const int n = static_cast<int>(x.cols());
  if (n < 1 || degree < 1) throw Error(ErrorCode::kInvalidArgument, "need n >= 1, d >= 1");
  if (!oracle) throw Error(ErrorCode::kInvalidArgument, "no marginal oracle");
  WhiteningTransform wt;
  wt.dim = n;
  wt.degree = degree;
  wt.features = MonomialFeatures(n, degree);
  const int64_t k = static_cast<int64_t>(wt.features.size());
  const int64_t samples =
      options.samples > 0 ? options.samples : std::max<int64_t>(100000, 10 * k * k);
  if (samples < 10 * k * k) {
    throw Error(ErrorCode::kInvalidArgument, "whitening needs >= 10 * features^2 samples");
  }
  const Eigen::MatrixXd draws = oracle(samples, options.seed);
  if (draws.cols() != n || draws.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "oracle output has the wrong shape");
  }
  const Eigen::MatrixXd lifted = LiftMonomials(draws, wt.features);
  wt.second_moment = lifted.transpose() * lifted / static_cast<double>(draws.rows());
  if (!(wt.second_moment(0, 0) > 0.0)) {
    throw Error(ErrorCode::kIllConditioned, "constant feature has no support");
  }

  // Unit-diagonal rescaling first, so scaling x by c changes nothing below.
  Eigen::VectorXd scale(k);
  for (int64_t i = 0; i < k; ++i) {
    const double s = wt.second_moment(i, i);
    scale[i] = s > 0 ? 1.0 / std::sqrt(s) : 0.0;
  }
  const Eigen::MatrixXd normalized = scale.asDiagonal() * wt.second_moment * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double top = vals.maxCoeff();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = vals.size() - 1; i >= 0; --i) {
    if (vals[i] > options.eigen_floor * top) {
      kept.push_back(i);
    } else {
      wt.dropped_eigenvalues.push_back(vals[i]);
    }
  }
  if (kept.empty()) throw Error(ErrorCode::kIllConditioned, "no direction survives whitening");
  wt.transform.resize(k, static_cast<Eigen::Index>(kept.size()));
  for (size_t c = 0; c < kept.size(); ++c) {
    wt.transform.col(static_cast<Eigen::Index>(c)) =
        scale.asDiagonal() * eig.eigenvectors().col(kept[c]) / std::sqrt(vals[kept[c]]);
  }
  LiftResult out;
  out.z = wt.Apply(x);
  out.whitening = std::move(wt);
  return out;
}

RobustMeanResult RobustMean(const Eigen::MatrixXd& points, double eps,
                            const RobustMeanOptions& options,
                            const Eigen::VectorXd& weights) {
  if (!(eps >= 0.0 && eps < 0.25)) {
    throw Error(ErrorCode::kInvalidArgument, "robust mean needs 0 <= eps < 1/4");
  }
  const Eigen::Index m = points.rows();
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "no points");
  if (!points.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite point");
  Eigen::VectorXd w = weights.size() == 0 ? Eigen::VectorXd::Ones(m) : weights;
  if (w.size() != m || (w.array() < 0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "weights must be non-negative, one per point");
  }
  const double initial = w.sum();
  if (!(initial > 0)) throw Error(ErrorCode::kInvalidArgument, "zero total weight");
  const int rounds = eps > 0 ? static_cast<int>(std::floor(1.0 / eps)) : 0;

  RobustMeanResult out;
  std::vector<Eigen::Index> order(m);
  for (int round = 0;; ++round) {
    const double total = w.sum();
    out.retained_weight = total / initial;
    out.mean = points.transpose() * w / total;
    if (round >= rounds) {
      out.iterations = round;
      return out;
    }
    const Eigen::MatrixXd centered = points.rowwise() - out.mean.transpose();
    const Eigen::MatrixXd cov =
        (centered.array().colwise() * w.array()).matrix().transpose() * centered / total;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::Index top = cov.rows() - 1;
    out.top_eigenvalue = eig.eigenvalues()[top];
    if (out.top_eigenvalue <= options.threshold) {
      out.iterations = round;
      return out;
    }
    const Eigen::VectorXd tau = (centered * eig.eigenvectors().col(top)).array().square();

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return tau[a] < tau[b]; });
    double acc = 0.0, tau_q = 0.0, tau_max = 0.0;
    for (Eigen::Index i : order) {
      if (w[i] <= 0) continue;
      if (acc < (1 - eps) * total) tau_q = tau[i];
      acc += w[i];
      tau_max = tau[i];
    }
    if (!(tau_max > tau_q)) {
      out.iterations = round;
      return out;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tau[i] > tau_q) w[i] *= 1.0 - (tau[i] - tau_q) / (tau_max - tau_q);
    }
    if (w.sum() < 0.5 * initial) {
      throw Error(ErrorCode::kFilterDiverged, "filter removed more than half the weight");
    }
  }
}

double PerceptronF(double eps, int K) { return std::pow(eps, 1.0 - 8.0 / std::sqrt(K)); }

double PerceptronGamma(double eps, int K) { return std::pow(eps, 4.0 / std::sqrt(K)); }

PerceptronResult PerceptronLearn(const Eigen::MatrixXd& z, const std::vector<int>& y,
                                 const Eigen::MatrixXd& norm_gram, double eps, int K,
                                 const PerceptronOptions& options) {
  const Eigen::Index m = z.rows(), k = z.cols();
  if (m < 1 || static_cast<Eigen::Index>(y.size()) != m) {
    throw Error(ErrorCode::kDimensionMismatch, "z and y disagree in length");
  }
  if (norm_gram.rows() != k || norm_gram.cols() != k) {
    throw Error(ErrorCode::kDimensionMismatch, "norm gram has the wrong shape");
  }
  if (!(eps > 0 && eps < 1) || K < 4) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < eps < 1 and K >= 4");
  }
  PerceptronResult out;
  PerceptronReport& rep = out.report;
  rep.epsilon = eps;
  rep.K = K;
  rep.gamma = PerceptronGamma(eps, K);
  rep.F = PerceptronF(eps, K);
  if (!(rep.F < 1)) throw Error(ErrorCode::kInvalidArgument, "F = eps^(1 - 8/sqrt K) must be < 1");
  out.gamma = rep.gamma;
  const double gamma = rep.gamma;
  const double mean_eps = std::min(eps, 0.24);

  Eigen::MatrixXd yz = z;
  for (Eigen::Index i = 0; i < m; ++i) yz.row(i) *= y[i];
  Eigen::VectorXd q = RobustMean(yz, mean_eps, options.mean).mean;

  auto dnorm = [&](const Eigen::VectorXd& v) {
    return std::sqrt(std::max(0.0, v.dot(norm_gram * v)));
  };
  int stall = 0;
  for (int t = 0;; ++t) {
    const double norm = dnorm(q);
    if (!(norm > 0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kNoProgress, "iterate vanished");
    }
    const Eigen::VectorXd s = z * q;
    std::vector<Eigen::Index> band;
    int64_t mistakes = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(s[i]) < gamma * norm) continue;
      band.push_back(i);
      mistakes += Sign(s[i]) != y[i];
    }
    const double f_hat = double(mistakes) / m;
    const double band_mass = double(band.size()) / m;
    rep.final_norm = norm;
    rep.final_mistake_mass = f_hat;
    rep.final_band_mass = band_mass;
    if (f_hat < 2 * rep.F || t >= options.max_iters) {
      rep.converged = f_hat < 2 * rep.F;
      out.w = q;
      return out;
    }

    Eigen::MatrixXd pts(static_cast<Eigen::Index>(band.size()), k);
    for (size_t r = 0; r < band.size(); ++r) {
      const Eigen::Index i = band[r];
      if (Sign(s[i]) != y[i]) {
        pts.row(static_cast<Eigen::Index>(r)) = y[i] * z.row(i);
      } else {
        pts.row(static_cast<Eigen::Index>(r)).setZero();
      }
    }
    const Eigen::VectorXd p =
        RobustMean(pts, std::min(0.24, eps / band_mass), options.mean).mean;
    const double p_norm = dnorm(p);
    if (!(p_norm > 0)) throw Error(ErrorCode::kNoProgress, "update direction vanished");

    PerceptronIteration it;
    it.t = t;
    it.norm = norm;
    it.mistake_mass = f_hat;
    it.band_mass = band_mass;
    it.q_dot_p = q.dot(norm_gram * p);
    it.p_norm = p_norm;
    it.lambda = gamma * f_hat * norm / (2 * p_norm * p_norm);
    it.correlation_holds = it.q_dot_p <= -(gamma * f_hat / 2) * norm;
    q += it.lambda * p;
    it.next_norm = dnorm(q);
    rep.history.push_back(it);

    stall = it.next_norm < norm ? 0 : stall + 1;
    if (stall >= options.stall_limit) {
      throw Error(ErrorCode::kNoProgress,
                  "norm did not decrease for " + std::to_string(stall) + " iterations");
    }
  }
}

Eigen::MatrixXd OracleGram(const WhiteningTransform& whitening,
                           const MarginalOracle& oracle, int64_t n, uint64_t seed) {
  const Eigen::MatrixXd z = whitening.Apply(oracle(n, seed));
  return z.transpose() * z / static_cast<double>(z.rows());
}

void WritePerceptronCsv(const std::string& path, const PerceptronReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFileMissing, "cannot open " + path);
  out << "t,norm,mistake_mass,lambda,q_dot_p,band_mass\n";
  for (const PerceptronIteration& it : report.history) {
    out << it.t << ',' << FormatDouble(it.norm) << ',' << FormatDouble(it.mistake_mass) << ','
        << FormatDouble(it.lambda) << ',' << FormatDouble(it.q_dot_p) << ','
        << FormatDouble(it.band_mass) << '\n';
  }
}

}  // namespace ptf
