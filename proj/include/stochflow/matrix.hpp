#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflow/errors.hpp"

namespace stochflow {

/// Row sums must match 1 within this tolerance.
inline constexpr double default_stoch_tol = 1e-9;
/// Entries at or below this value are treated as exact zeros by the
/// divergence/graph deciders.
inline constexpr double default_zero_tol = 1e-12;
/// Hard cap on matrix dimension for chain analysis.
inline constexpr int default_dim_cap = 16;
/// Cap on dimension for algorithms that enumerate subsets per cardinality
/// class (absolute-flow decider, zero-flow graphs).
inline constexpr int subset_dim_cap = 12;
/// Cap on the number of materialized matrices when expanding a rotated chain.
inline constexpr long rotation_state_cap = 1'000'000;

/// Dense row-stochastic matrix. Entries are validated at construction:
/// negatives within `stoch_tol` of zero are clamped, anything below that
/// throws, and every row must sum to 1 within `stoch_tol`.
class StochMatrix {
 public:
  StochMatrix(int dim, std::vector<double> entries,
              double stoch_tol = default_stoch_tol)
      : dim_(dim), e_(std::move(entries)) {
    if (dim_ < 1) throw std::invalid_argument("StochMatrix: dim must be >= 1");
    if (e_.size() != static_cast<std::size_t>(dim_) * dim_)
      throw std::invalid_argument("StochMatrix: entry count != dim*dim");
    for (double& v : e_) {
      if (std::isnan(v) || std::isinf(v))
        throw std::invalid_argument("StochMatrix: non-finite entry");
      if (v < 0.0) {
        if (v < -stoch_tol)
          throw std::invalid_argument("StochMatrix: negative entry " +
                                      std::to_string(v));
        v = 0.0;
      }
    }
    for (int i = 0; i < dim_; ++i) {
      double s = row_sum(i);
      if (std::abs(s - 1.0) > stoch_tol)
        throw std::invalid_argument("StochMatrix: row " + std::to_string(i) +
                                    " sums to " + std::to_string(s));
    }
  }

  static StochMatrix identity(int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) e[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return StochMatrix(dim, std::move(e));
  }

  /// The averaging matrix with every entry 1/dim.
  static StochMatrix uniform(int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim) * dim, 1.0 / dim);
    return StochMatrix(dim, std::move(e));
  }

  int dim() const { return dim_; }
  double operator()(int i, int j) const {
    return e_[static_cast<std::size_t>(i) * dim_ + j];
  }
  const std::vector<double>& data() const { return e_; }

  double row_sum(int i) const {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += (*this)(i, j);
    return s;
  }
  double col_sum(int j) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (*this)(i, j);
    return s;
  }

  bool is_doubly_stochastic(double tol = default_stoch_tol) const {
    for (int j = 0; j < dim_; ++j)
      if (std::abs(col_sum(j) - 1.0) > tol) return false;
    return true;
  }

  /// max_{i,j} |a_ij - b_ij|
  static double max_abs_diff(const StochMatrix& a, const StochMatrix& b) {
    if (a.dim() != b.dim())
      throw std::invalid_argument("max_abs_diff: dimension mismatch");
    double d = 0.0;
    for (std::size_t t = 0; t < a.e_.size(); ++t)
      d = std::max(d, std::abs(a.e_[t] - b.e_[t]));
    return d;
  }

  /// max over row pairs of the sup-norm distance between rows.
  double max_row_pair_distance() const {
    double d = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        for (int c = 0; c < dim_; ++c)
          d = std::max(d, std::abs((*this)(i, c) - (*this)(j, c)));
    return d;
  }

  friend StochMatrix operator*(const StochMatrix& a, const StochMatrix& b) {
    if (a.dim() != b.dim())
      throw std::invalid_argument("StochMatrix product: dimension mismatch");
    int m = a.dim();
    std::vector<double> e(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        double aik = a(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < m; ++j)
          e[static_cast<std::size_t>(i) * m + j] += aik * b(k, j);
      }
    // Products of stochastic matrices drift by at most a few ulps per term;
    // allow a slightly looser row-sum tolerance than the default.
    return StochMatrix(m, std::move(e), 64 * m * default_stoch_tol);
  }

 private:
  int dim_;
  std::vector<double> e_;
};

/// Permutation of [dim]; map(i) is the image of index i. As a matrix it acts
/// on basis vectors by P e_i = e_{map(i)}, i.e. entry (map(i), i) is 1.
class Permutation {
 public:
  explicit Permutation(std::vector<int> map) : map_(std::move(map)) {
    int m = static_cast<int>(map_.size());
    if (m < 1) throw std::invalid_argument("Permutation: empty map");
    std::vector<bool> seen(m, false);
    for (int v : map_) {
      if (v < 0 || v >= m || seen[v])
        throw std::invalid_argument("Permutation: map is not a bijection");
      seen[v] = true;
    }
  }

  static Permutation identity(int dim) {
    std::vector<int> m(dim);
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
  }

  int dim() const { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[i]; }
  const std::vector<int>& map() const { return map_; }

  bool is_identity() const {
    for (int i = 0; i < dim(); ++i)
      if (map_[i] != i) return false;
    return true;
  }

  Permutation inverse() const {
    std::vector<int> inv(map_.size());
    for (int i = 0; i < dim(); ++i) inv[map_[i]] = i;
    return Permutation(std::move(inv));
  }

  /// Matrix product semantics: (a*b) e_i = a(b(e_i)), so b applies first.
  friend Permutation operator*(const Permutation& a, const Permutation& b) {
    if (a.dim() != b.dim())
      throw std::invalid_argument("Permutation product: dimension mismatch");
    std::vector<int> m(a.dim());
    for (int i = 0; i < a.dim(); ++i) m[i] = a.map_[b.map_[i]];
    return Permutation(std::move(m));
  }

  bool operator==(const Permutation& o) const { return map_ == o.map_; }
  bool operator!=(const Permutation& o) const { return map_ != o.map_; }

  /// Image of a bit-mask index set.
  std::uint32_t apply_mask(std::uint32_t mask) const {
    std::uint32_t out = 0;
    for (int i = 0; i < dim(); ++i)
      if (mask & (std::uint32_t{1} << i)) out |= std::uint32_t{1} << map_[i];
    return out;
  }

  /// lcm of cycle lengths.
  long order() const {
    std::vector<bool> seen(map_.size(), false);
    long ord = 1;
    for (int i = 0; i < dim(); ++i) {
      if (seen[i]) continue;
      long len = 0;
      int j = i;
      while (!seen[j]) {
        seen[j] = true;
        j = map_[j];
        ++len;
      }
      ord = std::lcm(ord, len);
    }
    return ord;
  }

  StochMatrix as_matrix() const {
    int m = dim();
    std::vector<double> e(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) e[static_cast<std::size_t>(map_[i]) * m + i] = 1.0;
    return StochMatrix(m, std::move(e));
  }

 private:
  std::vector<int> map_;
};

}  // namespace stochflow
