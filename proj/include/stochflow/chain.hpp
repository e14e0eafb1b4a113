#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stochflow/errors.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/matrix.hpp"

namespace stochflow {

enum class Flavor { stochastic, doubly_stochastic };

inline const char* to_string(Flavor f) {
  return f == Flavor::stochastic ? "stochastic" : "doubly_stochastic";
}

/// Eventually periodic matrix chain {A(k)}: matrices prefix[0..p) followed by
/// cycle[0..c) repeating forever. The cycle must be nonempty.
class Chain {
 public:
  Chain(int dim, Flavor flavor, std::vector<StochMatrix> prefix,
        std::vector<StochMatrix> cycle, double stoch_tol = default_stoch_tol,
        int dim_cap = default_dim_cap)
      : dim_(dim),
        flavor_(flavor),
        prefix_(std::move(prefix)),
        cycle_(std::move(cycle)) {
    if (dim_ < 1) throw std::invalid_argument("Chain: dim must be >= 1");
    if (dim_ > dim_cap)
      throw CapacityError("Chain: dim " + std::to_string(dim_) +
                          " exceeds cap " + std::to_string(dim_cap));
    if (cycle_.empty()) throw std::invalid_argument("Chain: empty cycle");
    auto check = [&](const StochMatrix& a) {
      if (a.dim() != dim_)
        throw std::invalid_argument("Chain: matrix dim mismatch");
      if (flavor_ == Flavor::doubly_stochastic &&
          !a.is_doubly_stochastic(stoch_tol))
        throw std::invalid_argument(
            "Chain: doubly_stochastic flavor but a column sum is off");
    };
    for (const auto& a : prefix_) check(a);
    for (const auto& a : cycle_) check(a);
  }

  static Chain constant(StochMatrix a, Flavor flavor) {
    int d = a.dim();
    return Chain(d, flavor, {}, {std::move(a)});
  }

  int dim() const { return dim_; }
  Flavor flavor() const { return flavor_; }
  long prefix_length() const { return static_cast<long>(prefix_.size()); }
  long cycle_length() const { return static_cast<long>(cycle_.size()); }
  const std::vector<StochMatrix>& prefix() const { return prefix_; }
  const std::vector<StochMatrix>& cycle() const { return cycle_; }

  const StochMatrix& matrix_at(long k) const {
    if (k < 0) throw std::invalid_argument("Chain: negative time");
    if (k < prefix_length()) return prefix_[static_cast<std::size_t>(k)];
    return cycle_[static_cast<std::size_t>((k - prefix_length()) %
                                           cycle_length())];
  }

 private:
  int dim_;
  Flavor flavor_;
  std::vector<StochMatrix> prefix_;
  std::vector<StochMatrix> cycle_;
};

/// Eventually periodic permutation chain {P(k)}.
class PermChain {
 public:
  PermChain(int dim, std::vector<Permutation> prefix,
            std::vector<Permutation> cycle)
      : dim_(dim), prefix_(std::move(prefix)), cycle_(std::move(cycle)) {
    if (dim_ < 1) throw std::invalid_argument("PermChain: dim must be >= 1");
    if (cycle_.empty()) throw std::invalid_argument("PermChain: empty cycle");
    for (const auto& p : prefix_)
      if (p.dim() != dim_)
        throw std::invalid_argument("PermChain: perm dim mismatch");
    for (const auto& p : cycle_)
      if (p.dim() != dim_)
        throw std::invalid_argument("PermChain: perm dim mismatch");
  }

  static PermChain constant(Permutation p) {
    int d = p.dim();
    return PermChain(d, {}, {std::move(p)});
  }
  static PermChain identity(int dim) {
    return constant(Permutation::identity(dim));
  }

  int dim() const { return dim_; }
  long prefix_length() const { return static_cast<long>(prefix_.size()); }
  long cycle_length() const { return static_cast<long>(cycle_.size()); }
  const std::vector<Permutation>& prefix() const { return prefix_; }
  const std::vector<Permutation>& cycle() const { return cycle_; }

  const Permutation& perm_at(long k) const {
    if (k < 0) throw std::invalid_argument("PermChain: negative time");
    if (k < prefix_length()) return prefix_[static_cast<std::size_t>(k)];
    return cycle_[static_cast<std::size_t>((k - prefix_length()) %
                                           cycle_length())];
  }

  Chain to_matrix_chain() const {
    std::vector<StochMatrix> pre, cyc;
    pre.reserve(prefix_.size());
    cyc.reserve(cycle_.size());
    for (const auto& p : prefix_) pre.push_back(p.as_matrix());
    for (const auto& p : cycle_) cyc.push_back(p.as_matrix());
    return Chain(dim_, Flavor::doubly_stochastic, std::move(pre),
                 std::move(cyc));
  }

 private:
  int dim_;
  std::vector<Permutation> prefix_;
  std::vector<Permutation> cycle_;
};

/// Backward product A(k:s) = A(k-1) A(k-2) ... A(s); A(s:s) = I.
inline StochMatrix backward_product(const Chain& c, long k, long s) {
  if (s < 0 || k < s)
    throw std::invalid_argument("backward_product: need 0 <= s <= k");
  StochMatrix prod = StochMatrix::identity(c.dim());
  for (long t = s; t < k; ++t) prod = c.matrix_at(t) * prod;
  return prod;
}

/// P(k:s) = P(k-1) ... P(s); P(s:s) = identity.
inline Permutation perm_product(const PermChain& c, long k, long s) {
  if (s < 0 || k < s)
    throw std::invalid_argument("perm_product: need 0 <= s <= k");
  Permutation prod = Permutation::identity(c.dim());
  for (long t = s; t < k; ++t) prod = c.perm_at(t) * prod;
  return prod;
}

/// Image P(S) = { p(i) : i in S }.
inline IndexSet apply_perm_to_set(const Permutation& p, const IndexSet& s) {
  if (p.dim() != s.dim())
    throw std::invalid_argument("apply_perm_to_set: dimension mismatch");
  return IndexSet(s.dim(), p.apply_mask(s.mask()));
}

namespace detail {

inline long checked_lcm(long a, long b, long cap,
                        const char* what = "joint period") {
  long g = std::gcd(a, b);
  long q = a / g;
  if (b != 0 && q > cap / b)
    throw CapacityError(std::string(what) + " exceeds state cap");
  long l = q * b;
  if (l > cap) throw CapacityError(std::string(what) + " exceeds state cap");
  return l;
}

/// Joint eventually-periodic structure of a matrix chain and a permutation
/// chain: for k >= start both A(k) and the cumulative product P(k:0) repeat
/// with period `length`. The cumulative product is periodic once the
/// one-period permutation product W returns to the identity, hence the
/// multiplicative order of W enters the period.
struct JointPeriod {
  long start;
  long length;
};

inline JointPeriod joint_period(const Chain& chain, const PermChain& pchain,
                                long cap = rotation_state_cap) {
  if (chain.dim() != pchain.dim())
    throw std::invalid_argument("joint_period: dimension mismatch");
  long n0 = std::max(chain.prefix_length(), pchain.prefix_length());
  long cp = pchain.cycle_length();
  Permutation w = Permutation::identity(pchain.dim());
  for (long t = n0; t < n0 + cp; ++t) w = pchain.perm_at(t) * w;
  long ord = w.order();
  if (cp > cap / ord)
    throw CapacityError("joint period exceeds state cap");
  long length = checked_lcm(chain.cycle_length(), cp * ord, cap);
  return {n0, length};
}

}  // namespace detail

}  // namespace stochflow
