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

// Sparse multivariate polynomials carried in both the monomial basis and the
// orthonormal (probabilists') Hermite basis of the standard Gaussian.

#ifndef PTF_HERMITE_POLY_H_
#define PTF_HERMITE_POLY_H_

#include <compare>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ptf {

// Exponent vector. Trailing zeros are trimmed so that equal indices compare
// equal regardless of the ambient dimension they were built against.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);
  MultiIndex(std::initializer_list<int> exponents)
      : MultiIndex(std::vector<int>(exponents)) {}

  // x_i^power.
  static MultiIndex Unit(int i, int power = 1);

  // Length of the trimmed exponent vector; any larger dimension is valid.
  int size() const { return static_cast<int>(exponents_.size()); }
  int operator[](int i) const { return i < size() ? exponents_[i] : 0; }
  int total_degree() const { return total_degree_; }
  const std::vector<int>& exponents() const { return exponents_; }
  std::vector<int> Padded(int dim) const;

  MultiIndex operator+(const MultiIndex& other) const;
  // Requires every exponent of `other` to be <= the matching one here.
  MultiIndex operator-(const MultiIndex& other) const;
  bool Dominates(const MultiIndex& other) const;

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.exponents_ == b.exponents_;
  }
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
    return a.exponents_ <=> b.exponents_;
  }

  std::string ToString() const;

 private:
  std::vector<int> exponents_;
  int total_degree_ = 0;
};

using Terms = std::map<MultiIndex, double>;

// Immutable value type. Both coefficient maps are computed at construction,
// so instances can be shared freely between threads.
class HermitePoly {
 public:
  HermitePoly() = default;

  // A negative degree_bound means "the actual degree".
  static HermitePoly FromHermite(int dim, const Terms& coeffs,
                                 int degree_bound = -1);
  static HermitePoly FromMonomial(int dim, const Terms& coeffs,
                                  int degree_bound = -1);
  static HermitePoly Zero(int dim);
  static HermitePoly Constant(int dim, double c);
  static HermitePoly Coordinate(int dim, int i);
  static HermitePoly Basis(int dim, const MultiIndex& a);

  int dim() const { return dim_; }
  int degree_bound() const { return degree_bound_; }
  // Largest total degree with a stored coefficient; 0 for the zero polynomial.
  int degree() const { return degree_; }
  bool is_zero() const { return hermite_.empty(); }

  const Terms& hermite() const { return hermite_; }
  const Terms& monomial() const { return monomial_; }

  // Evaluates through the monomial form.
  double Eval(std::span<const double> x) const;
  double Eval(const Eigen::VectorXd& x) const {
    return Eval(std::span<const double>(x.data(), x.size()));
  }
  // Evaluates through the Hermite form; slower, used for cross-checks.
  double EvalHermite(std::span<const double> x) const;
  // One value per row of `x`.
  Eigen::VectorXd EvalRows(const Eigen::MatrixXd& x) const;

  // Gaussian L2 norm: Euclidean norm of the Hermite coefficients.
  double L2Norm() const;
  // Largest absolute monomial coefficient.
  double MaxCoeff() const;

  HermitePoly operator-() const { return Scaled(-1.0); }
  HermitePoly Scaled(double c) const;
  HermitePoly WithDim(int dim) const;

  friend HermitePoly operator+(const HermitePoly& a, const HermitePoly& b);
  friend HermitePoly operator-(const HermitePoly& a, const HermitePoly& b);
  friend HermitePoly operator*(const HermitePoly& a, const HermitePoly& b);
  friend HermitePoly operator*(double c, const HermitePoly& p) {
    return p.Scaled(c);
  }

 private:
  void Finalize();

  int dim_ = 0;
  int degree_bound_ = 0;
  int degree_ = 0;
  Terms hermite_;
  Terms monomial_;
  // Flattened monomial form for fast evaluation: term t multiplies
  // coeff_[t] by pow(x[var_[k]], exp_[k]) for k in [offset_[t], offset_[t+1]).
  std::vector<double> coeff_;
  std::vector<int> offset_;
  std::vector<int> var_;
  std::vector<int> exp_;
  int max_exp_ = 0;
};

// Polynomial map x -> (q_1(x), ..., q_m(x)).
using PolyVec = std::vector<HermitePoly>;

// Throws unless `q` is non-empty with a uniform dimension.
int CheckPolyVec(const PolyVec& q);
std::vector<double> EvalVec(const PolyVec& q, std::span<const double> x);

}  // namespace ptf

#endif  // PTF_HERMITE_POLY_H_
