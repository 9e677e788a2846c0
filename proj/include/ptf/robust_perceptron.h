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

// Monomial lifting with whitening against a marginal oracle, a spectral
// filter for robust means, and the margin perceptron built on both.

#ifndef PTF_ROBUST_PERCEPTRON_H_
#define PTF_ROBUST_PERCEPTRON_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptf/hermite_poly.h"

namespace ptf {

// Returns n uncorrupted draws (rows) from the current region's marginal.
using MarginalOracle = std::function<Eigen::MatrixXd(int64_t n, uint64_t seed)>;

// Every monomial x^a with |a| <= degree in dim variables, constant first.
std::vector<MultiIndex> MonomialFeatures(int dim, int degree);

// Rows of x mapped to the listed monomials.
Eigen::MatrixXd LiftMonomials(const Eigen::MatrixXd& x,
                              const std::vector<MultiIndex>& features);

struct WhiteningTransform {
  int dim = 0;
  int degree = 0;
  std::vector<MultiIndex> features;
  // features x kept-directions; T^T second_moment T = I.
  Eigen::MatrixXd transform;
  Eigen::MatrixXd second_moment;
  // Eigenvalues of second_moment below the relative floor, not whitened.
  std::vector<double> dropped_eigenvalues;

  int lifted_dim() const { return static_cast<int>(transform.cols()); }
  // Lift then whiten.
  Eigen::MatrixXd Apply(const Eigen::MatrixXd& x) const;
  // The x-space polynomial whose value at x is w . Apply(x).
  HermitePoly PullBack(const Eigen::VectorXd& w) const;
};

struct WhitenOptions {
  // Non-positive: max(100000, 10 * features^2).
  int64_t samples = 0;
  double eigen_floor = 1e-10;
  uint64_t seed = 7;
};

struct LiftResult {
  Eigen::MatrixXd z;
  WhiteningTransform whitening;
};

// The moment matrix comes from the oracle. Directions whose eigenvalue falls
// below eigen_floor * largest are dropped and recorded. Throws
// InvalidArgument when samples < 10 * features^2 and IllConditioned when the
// constant feature has no support or nothing survives.
LiftResult LiftAndWhiten(const Eigen::MatrixXd& x, const MarginalOracle& oracle,
                         int degree, const WhitenOptions& options = {});

struct RobustMeanOptions {
  // Stop once the top covariance eigenvalue is at most this.
  double threshold = 9.0;
};

struct RobustMeanResult {
  Eigen::VectorXd mean;
  int iterations = 0;
  double retained_weight = 1.0;  // fraction of the initial weight
  double top_eigenvalue = 0.0;
};

// Spectral filter. Each round scores points by their squared projection on
// the top covariance eigenvector and shrinks the weights of those above the
// weighted (1 - eps) quantile, at most floor(1 / eps) rounds. eps = 0 gives
// the weighted mean. Throws FilterDiverged below half the initial weight and
// InvalidArgument unless 0 <= eps < 1/4.
RobustMeanResult RobustMean(const Eigen::MatrixXd& points, double eps,
                            const RobustMeanOptions& options = {},
                            const Eigen::VectorXd& weights = {});

struct PerceptronOptions {
  int max_iters = 2000;
  int stall_limit = 10;
  RobustMeanOptions mean;
};

struct PerceptronIteration {
  int t = 0;
  double norm = 0.0;        // ||q||_D
  double mistake_mass = 0.0;  // Pr[B'_t], unconditional
  double band_mass = 0.0;   // Pr[B_t]
  double lambda = 0.0;
  double q_dot_p = 0.0;     // <q, p>_D
  double p_norm = 0.0;
  // <q, p>_D <= -(gamma F_t / 2) ||q||_D.
  bool correlation_holds = false;
  double next_norm = 0.0;
};

struct PerceptronReport {
  double epsilon = 0.0;
  int K = 0;
  double gamma = 0.0;
  double F = 0.0;
  std::vector<PerceptronIteration> history;
  double final_norm = 0.0;
  double final_mistake_mass = 0.0;
  double final_band_mass = 0.0;
  bool converged = false;  // Pr[B'] < 2F at exit
};

struct PerceptronResult {
  Eigen::VectorXd w;
  double gamma = 0.0;
  PerceptronReport report;
};

// Margin parameters: F = eps^(1 - 8/sqrt K), gamma = eps^(4/sqrt K).
double PerceptronF(double eps, int K);
double PerceptronGamma(double eps, int K);

// z: whitened samples, norm_gram: E[z z^T] under the marginal, used for every
// ||.||_D. Throws NoProgress after stall_limit non-decreasing norms while
// Pr[B'] >= 2F, InvalidArgument on bad shapes or parameters.
PerceptronResult PerceptronLearn(const Eigen::MatrixXd& z, const std::vector<int>& y,
                                 const Eigen::MatrixXd& norm_gram, double eps, int K,
                                 const PerceptronOptions& options = {});

// Gram of oracle draws after lifting and whitening.
Eigen::MatrixXd OracleGram(const WhiteningTransform& whitening,
                           const MarginalOracle& oracle, int64_t n, uint64_t seed);

void WritePerceptronCsv(const std::string& path, const PerceptronReport& report);

}  // namespace ptf

#endif  // PTF_ROBUST_PERCEPTRON_H_
