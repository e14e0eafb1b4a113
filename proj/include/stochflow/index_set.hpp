#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflow {

/// Subset of {0, ..., dim-1} stored as a bit mask.
class IndexSet {
 public:
  IndexSet(int dim, std::uint32_t mask) : dim_(dim), mask_(mask) {
    if (dim_ < 1 || dim_ > 31) throw std::invalid_argument("IndexSet: bad dim");
    if (mask_ >> dim_)
      throw std::invalid_argument("IndexSet: mask has bits outside [0,dim)");
  }

  static IndexSet from_indices(int dim, const std::vector<int>& idx) {
    std::uint32_t mask = 0;
    for (int i : idx) {
      if (i < 0 || i >= dim)
        throw std::invalid_argument("IndexSet: index " + std::to_string(i) +
                                    " out of range");
      mask |= std::uint32_t{1} << i;
    }
    return IndexSet(dim, mask);
  }

  static IndexSet singleton(int dim, int i) {
    return from_indices(dim, {i});
  }
  static IndexSet full(int dim) {
    return IndexSet(dim, (std::uint32_t{1} << dim) - 1);
  }

  int dim() const { return dim_; }
  std::uint32_t mask() const { return mask_; }
  int cardinality() const { return std::popcount(mask_); }
  bool contains(int i) const { return (mask_ >> i) & 1u; }
  bool empty() const { return mask_ == 0; }
  bool is_full() const { return mask_ == full(dim_).mask(); }
  /// Nontrivial = nonempty proper subset.
  bool is_nontrivial() const { return !empty() && !is_full(); }

  IndexSet complement() const {
    return IndexSet(dim_, ~mask_ & full(dim_).mask());
  }

  std::vector<int> indices() const {
    std::vector<int> out;
    for (int i = 0; i < dim_; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }

  bool operator==(const IndexSet& o) const {
    return dim_ == o.dim_ && mask_ == o.mask_;
  }
  bool operator!=(const IndexSet& o) const { return !(*this == o); }

 private:
  int dim_;
  std::uint32_t mask_;
};

/// Eventually periodic sequence of index sets with uniform nontrivial
/// cardinality (the shape of set sequences the flow deciders quantify over).
class RegularSeq {
 public:
  RegularSeq(int dim, std::vector<IndexSet> prefix, std::vector<IndexSet> cycle)
      : dim_(dim), prefix_(std::move(prefix)), cycle_(std::move(cycle)) {
    if (cycle_.empty()) throw std::invalid_argument("RegularSeq: empty cycle");
    int card = cycle_.front().cardinality();
    auto check = [&](const IndexSet& s) {
      if (s.dim() != dim_)
        throw std::invalid_argument("RegularSeq: set dim mismatch");
      if (!s.is_nontrivial())
        throw std::invalid_argument("RegularSeq: sets must be nontrivial");
      if (s.cardinality() != card)
        throw std::invalid_argument("RegularSeq: cardinality not uniform");
    };
    for (const auto& s : prefix_) check(s);
    for (const auto& s : cycle_) check(s);
  }

  int dim() const { return dim_; }
  int cardinality() const { return cycle_.front().cardinality(); }
  long prefix_length() const { return static_cast<long>(prefix_.size()); }
  long cycle_length() const { return static_cast<long>(cycle_.size()); }
  const std::vector<IndexSet>& prefix() const { return prefix_; }
  const std::vector<IndexSet>& cycle() const { return cycle_; }

  const IndexSet& set_at(long k) const {
    if (k < 0) throw std::invalid_argument("RegularSeq: negative time");
    if (k < prefix_length()) return prefix_[static_cast<std::size_t>(k)];
    return cycle_[static_cast<std::size_t>((k - prefix_length()) %
                                           cycle_length())];
  }

 private:
  int dim_;
  std::vector<IndexSet> prefix_;
  std::vector<IndexSet> cycle_;
};

}  // namespace stochflow
