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

#include "ptf/hermite_poly.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ptf/errors.h"
#include "ptf/hermite_algebra.h"

namespace ptf {
namespace {

constexpr int kMaxTableDegree = 48;

std::vector<std::vector<double>> BuildHermiteTable() {
  std::vector<std::vector<double>> table(kMaxTableDegree + 1);
  table[0] = {1.0};
  for (int d = 1; d <= kMaxTableDegree; ++d) {
    const std::vector<double>& prev = table[d - 1];
    std::vector<double> cur(d + 1, 0.0);
    // x * H_{d-1}
    for (int k = 0; k < d; ++k) cur[k + 1] += prev[k];
    // - H'_{d-1}
    for (int k = 1; k < d; ++k) cur[k - 1] -= k * prev[k];
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& c : cur) c *= s;
    table[d] = std::move(cur);
  }
  return table;
}

std::vector<std::vector<double>> BuildInverseTable() {
  // x^k = x * x^{k-1}, using x H_j = sqrt(j+1) H_{j+1} + sqrt(j) H_{j-1}.
  std::vector<std::vector<double>> table(kMaxTableDegree + 1);
  table[0] = {1.0};
  for (int k = 1; k <= kMaxTableDegree; ++k) {
    const std::vector<double>& prev = table[k - 1];
    std::vector<double> row(k + 1, 0.0);
    for (int j = 0; j < k; ++j) {
      if (prev[j] == 0.0) continue;
      row[j + 1] += std::sqrt(j + 1.0) * prev[j];
      if (j > 0) row[j - 1] += std::sqrt(static_cast<double>(j)) * prev[j];
    }
    table[k] = std::move(row);
  }
  return table;
}

void CheckTableDegree(int d) {
  if (d < 0 || d > kMaxTableDegree) {
    throw Error(ErrorCode::kInvalidArgument,
                "univariate degree out of supported range: " + std::to_string(d));
  }
}

// Expands prod_i B[e_i](x_i) where B is a univariate change-of-basis table,
// accumulating c times the product into `out`.
void ExpandProduct(const MultiIndex& e, double c,
                   const std::vector<double>& (*table)(int), Terms& out) {
  const int n = e.size();
  if (n == 0) {
    out[MultiIndex()] += c;
    return;
  }
  std::vector<const std::vector<double>*> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = &table(e[i]);
  // Odometer over the per-variable supports, skipping zero entries.
  std::vector<int> pos(n, 0);
  while (true) {
    double v = c;
    for (int i = 0; i < n && v != 0.0; ++i) v *= (*rows[i])[pos[i]];
    if (v != 0.0) out[MultiIndex(pos)] += v;
    int i = 0;
    while (i < n) {
      if (++pos[i] < static_cast<int>(rows[i]->size())) break;
      pos[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
}

double MaxAbs(const Terms& t) {
  double biggest = 0.0;
  for (const auto& [idx, c] : t) biggest = std::max(biggest, std::abs(c));
  return biggest;
}

// Drops exact zeros and cancellation debris far below `scale`.
void Prune(Terms& t, double scale) {
  const double floor = scale * 1e-14;
  for (auto it = t.begin(); it != t.end();) {
    if (it->second == 0.0 || std::abs(it->second) <= floor) {
      it = t.erase(it);
    } else {
      ++it;
    }
  }
}

void CheckIndexDim(int dim, const Terms& t) {
  for (const auto& [idx, c] : t) {
    if (idx.size() > dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "multi-index " + idx.ToString() + " exceeds dimension " +
                      std::to_string(dim));
    }
    if (!std::isfinite(c)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite coefficient");
    }
  }
}

}  // namespace

const std::vector<double>& HermiteUnivariate(int d) {
  static const std::vector<std::vector<double>> table = BuildHermiteTable();
  CheckTableDegree(d);
  return table[d];
}

const std::vector<double>& MonomialInHermite(int k) {
  static const std::vector<std::vector<double>> table = BuildInverseTable();
  CheckTableDegree(k);
  return table[k];
}

MultiIndex::MultiIndex(std::vector<int> exponents)
    : exponents_(std::move(exponents)) {
  while (!exponents_.empty() && exponents_.back() == 0) exponents_.pop_back();
  for (int e : exponents_) {
    if (e < 0) throw Error(ErrorCode::kInvalidArgument, "negative exponent");
    total_degree_ += e;
  }
}

MultiIndex MultiIndex::Unit(int i, int power) {
  std::vector<int> e(i + 1, 0);
  e[i] = power;
  return MultiIndex(std::move(e));
}

std::vector<int> MultiIndex::Padded(int dim) const {
  std::vector<int> out(std::max(dim, size()), 0);
  std::copy(exponents_.begin(), exponents_.end(), out.begin());
  return out;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  std::vector<int> out = Padded(other.size());
  for (int i = 0; i < other.size(); ++i) out[i] += other[i];
  return MultiIndex(std::move(out));
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
  std::vector<int> out = Padded(other.size());
  for (int i = 0; i < other.size(); ++i) out[i] -= other[i];
  return MultiIndex(std::move(out));
}

bool MultiIndex::Dominates(const MultiIndex& other) const {
  for (int i = 0; i < other.size(); ++i) {
    if ((*this)[i] < other[i]) return false;
  }
  return true;
}

std::string MultiIndex::ToString() const {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < size(); ++i) os << (i ? "," : "") << exponents_[i];
  os << ")";
  return os.str();
}

HermitePoly HermitePoly::FromHermite(int dim, const Terms& coeffs,
                                     int degree_bound) {
  CheckIndexDim(dim, coeffs);
  HermitePoly p;
  p.dim_ = dim;
  p.degree_bound_ = degree_bound;
  for (const auto& [idx, c] : coeffs) {
    if (c != 0.0) p.hermite_.emplace(idx, c);
  }
  for (const auto& [idx, c] : p.hermite_) {
    ExpandProduct(idx, c, &HermiteUnivariate, p.monomial_);
  }
  Prune(p.monomial_, MaxAbs(p.monomial_));
  p.Finalize();
  return p;
}

HermitePoly HermitePoly::FromMonomial(int dim, const Terms& coeffs,
                                      int degree_bound) {
  CheckIndexDim(dim, coeffs);
  HermitePoly p;
  p.dim_ = dim;
  p.degree_bound_ = degree_bound;
  for (const auto& [idx, c] : coeffs) {
    if (c != 0.0) p.monomial_.emplace(idx, c);
  }
  for (const auto& [idx, c] : p.monomial_) {
    ExpandProduct(idx, c, &MonomialInHermite, p.hermite_);
  }
  Prune(p.hermite_, MaxAbs(p.hermite_));
  p.Finalize();
  return p;
}

HermitePoly HermitePoly::Zero(int dim) { return FromHermite(dim, {}); }

HermitePoly HermitePoly::Constant(int dim, double c) {
  return FromHermite(dim, {{MultiIndex(), c}});
}

HermitePoly HermitePoly::Coordinate(int dim, int i) {
  if (i < 0 || i >= dim) {
    throw Error(ErrorCode::kDimensionMismatch, "coordinate out of range");
  }
  return FromHermite(dim, {{MultiIndex::Unit(i), 1.0}});
}

HermitePoly HermitePoly::Basis(int dim, const MultiIndex& a) {
  return FromHermite(dim, {{a, 1.0}});
}

void HermitePoly::Finalize() {
  degree_ = 0;
  for (const auto& [idx, c] : hermite_) {
    degree_ = std::max(degree_, idx.total_degree());
  }
  for (const auto& [idx, c] : monomial_) {
    degree_ = std::max(degree_, idx.total_degree());
  }
  if (degree_bound_ < 0) {
    degree_bound_ = degree_;
  } else if (degree_ > degree_bound_) {
    throw Error(ErrorCode::kInvalidArgument,
                "polynomial degree " + std::to_string(degree_) +
                    " exceeds its declared bound " +
                    std::to_string(degree_bound_));
  }
  coeff_.clear();
  offset_.assign(1, 0);
  var_.clear();
  exp_.clear();
  max_exp_ = 0;
  for (const auto& [idx, c] : monomial_) {
    coeff_.push_back(c);
    for (int i = 0; i < idx.size(); ++i) {
      if (idx[i] == 0) continue;
      var_.push_back(i);
      exp_.push_back(idx[i]);
      max_exp_ = std::max(max_exp_, idx[i]);
    }
    offset_.push_back(static_cast<int>(var_.size()));
  }
}

double HermitePoly::Eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point has length " + std::to_string(x.size()) +
                    ", polynomial dimension is " + std::to_string(dim_));
  }
  thread_local std::vector<double> powers;
  const int stride = max_exp_ + 1;
  powers.resize(static_cast<size_t>(dim_) * stride);
  for (int i = 0; i < dim_; ++i) {
    double* row = &powers[static_cast<size_t>(i) * stride];
    row[0] = 1.0;
    for (int k = 1; k < stride; ++k) row[k] = row[k - 1] * x[i];
  }
  double total = 0.0;
  const size_t terms = coeff_.size();
  for (size_t t = 0; t < terms; ++t) {
    double v = coeff_[t];
    for (int k = offset_[t]; k < offset_[t + 1]; ++k) {
      v *= powers[static_cast<size_t>(var_[k]) * stride + exp_[k]];
    }
    total += v;
  }
  return total;
}

double HermitePoly::EvalHermite(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "point length mismatch");
  }
  const int deg = std::max(degree_, 1);
  std::vector<double> h(static_cast<size_t>(dim_) * (deg + 1));
  for (int i = 0; i < dim_; ++i) {
    double* row = &h[static_cast<size_t>(i) * (deg + 1)];
    row[0] = 1.0;
    row[1] = x[i];
    for (int k = 1; k < deg; ++k) {
      row[k + 1] = (x[i] * row[k] - std::sqrt(static_cast<double>(k)) * row[k - 1]) /
                   std::sqrt(k + 1.0);
    }
  }
  double total = 0.0;
  for (const auto& [idx, c] : hermite_) {
    double v = c;
    for (int i = 0; i < idx.size(); ++i) v *= h[static_cast<size_t>(i) * (deg + 1) + idx[i]];
    total += v;
  }
  return total;
}

Eigen::VectorXd HermitePoly::EvalRows(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[c] = x(r, c);
    out[r] = Eval(row);
  }
  return out;
}

double HermitePoly::L2Norm() const {
  double s = 0.0;
  for (const auto& [idx, c] : hermite_) s += c * c;
  return std::sqrt(s);
}

double HermitePoly::MaxCoeff() const {
  double m = 0.0;
  for (const auto& [idx, c] : monomial_) m = std::max(m, std::abs(c));
  return m;
}

HermitePoly HermitePoly::Scaled(double c) const {
  HermitePoly p;
  p.dim_ = dim_;
  p.degree_bound_ = degree_bound_;
  if (c != 0.0) {
    for (const auto& [idx, v] : hermite_) p.hermite_.emplace(idx, c * v);
    for (const auto& [idx, v] : monomial_) p.monomial_.emplace(idx, c * v);
  }
  p.Finalize();
  return p;
}

HermitePoly HermitePoly::WithDim(int dim) const {
  CheckIndexDim(dim, hermite_);
  HermitePoly p = *this;
  p.dim_ = dim;
  p.Finalize();
  return p;
}

HermitePoly operator+(const HermitePoly& a, const HermitePoly& b) {
  if (a.dim_ != b.dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "adding polynomials of different dimension");
  }
  HermitePoly p;
  p.dim_ = a.dim_;
  p.degree_bound_ = std::max(a.degree_bound_, b.degree_bound_);
  p.hermite_ = a.hermite_;
  for (const auto& [idx, c] : b.hermite_) p.hermite_[idx] += c;
  p.monomial_ = a.monomial_;
  for (const auto& [idx, c] : b.monomial_) p.monomial_[idx] += c;
  Prune(p.hermite_, std::max(MaxAbs(a.hermite_), MaxAbs(b.hermite_)));
  Prune(p.monomial_, std::max(MaxAbs(a.monomial_), MaxAbs(b.monomial_)));
  p.Finalize();
  return p;
}

HermitePoly operator-(const HermitePoly& a, const HermitePoly& b) {
  return a + b.Scaled(-1.0);
}

HermitePoly operator*(const HermitePoly& a, const HermitePoly& b) {
  if (a.dim_ != b.dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "multiplying polynomials of different dimension");
  }
  Terms prod;
  for (const auto& [ia, ca] : a.monomial_) {
    for (const auto& [ib, cb] : b.monomial_) prod[ia + ib] += ca * cb;
  }
  return HermitePoly::FromMonomial(a.dim_, prod, a.degree_bound_ + b.degree_bound_);
}

int CheckPolyVec(const PolyVec& q) {
  if (q.empty()) throw Error(ErrorCode::kInvalidArgument, "empty polynomial vector");
  const int dim = q.front().dim();
  for (const auto& p : q) {
    if (p.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "polynomial vector with mixed dimensions");
    }
  }
  return dim;
}

std::vector<double> EvalVec(const PolyVec& q, std::span<const double> x) {
  std::vector<double> out(q.size());
  for (size_t i = 0; i < q.size(); ++i) out[i] = q[i].Eval(x);
  return out;
}

}  // namespace ptf
