#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "stochflow/chain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/matrix.hpp"

namespace stochflow {

/// Flow across a static cut: A_S = sum_{i in S, j not in S} (a_ij + a_ji).
inline double set_flow(const StochMatrix& a, const IndexSet& s) {
  if (a.dim() != s.dim())
    throw std::invalid_argument("set_flow: dimension mismatch");
  double f = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    if (!s.contains(i)) continue;
    for (int j = 0; j < a.dim(); ++j)
      if (!s.contains(j)) f += a(i, j) + a(j, i);
  }
  return f;
}

/// One-step flow from the cut `cur` into the cut `next`:
///   sum_{i in next, j not in cur} a_ij + sum_{i not in next, j in cur} a_ij.
/// The two sets must have equal cardinality (regular-sequence steps).
inline double step_flow(const StochMatrix& a, const IndexSet& next,
                        const IndexSet& cur) {
  if (a.dim() != next.dim() || a.dim() != cur.dim())
    throw std::invalid_argument("step_flow: dimension mismatch");
  if (next.cardinality() != cur.cardinality())
    throw std::invalid_argument("step_flow: cardinality mismatch");
  double f = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    bool in_next = next.contains(i);
    for (int j = 0; j < a.dim(); ++j) {
      bool in_cur = cur.contains(j);
      if (in_next && !in_cur) f += a(i, j);
      if (!in_next && in_cur) f += a(i, j);
    }
  }
  return f;
}

namespace detail {

/// Per-row subset sums of a matrix with entries <= tol zeroed out.
/// rows[i][mask] = sum_{j in mask} (a_ij > tol ? a_ij : 0).
struct FlowTable {
  int dim;
  std::vector<std::vector<double>> rows;

  FlowTable(const StochMatrix& a, double tol) : dim(a.dim()) {
    std::uint32_t n = std::uint32_t{1} << dim;
    rows.assign(dim, std::vector<double>(n, 0.0));
    for (int i = 0; i < dim; ++i) {
      auto& r = rows[i];
      for (std::uint32_t mask = 1; mask < n; ++mask) {
        std::uint32_t low = mask & (~mask + 1);
        int j = std::countr_zero(low);
        double v = a(i, j);
        r[mask] = r[mask ^ low] + (v > tol ? v : 0.0);
      }
    }
  }

  /// Zeroed step flow for cuts given as masks (equal cardinality assumed).
  double step(std::uint32_t next, std::uint32_t cur) const {
    std::uint32_t all = (std::uint32_t{1} << dim) - 1;
    std::uint32_t not_cur = all & ~cur;
    double f = 0.0;
    for (int i = 0; i < dim; ++i)
      f += (next >> i) & 1u ? rows[i][not_cur] : rows[i][cur];
    return f;
  }

  double cut(std::uint32_t s) const { return step(s, s); }
};

/// Tables for every distinct matrix of a chain, addressable by time.
struct ChainFlowTables {
  long prefix_len;
  long cycle_len;
  std::vector<FlowTable> tables;  // prefix tables then cycle tables

  ChainFlowTables(const Chain& c, double tol)
      : prefix_len(c.prefix_length()), cycle_len(c.cycle_length()) {
    tables.reserve(static_cast<std::size_t>(prefix_len + cycle_len));
    for (const auto& a : c.prefix()) tables.emplace_back(a, tol);
    for (const auto& a : c.cycle()) tables.emplace_back(a, tol);
  }

  const FlowTable& at(long k) const {
    long idx = k < prefix_len ? k : prefix_len + (k - prefix_len) % cycle_len;
    return tables[static_cast<std::size_t>(idx)];
  }
  const FlowTable& cycle_table(long phase) const {
    return tables[static_cast<std::size_t>(prefix_len + phase)];
  }
};

}  // namespace detail

/// Result of the total-flow computation along one regular sequence.
/// The sum over one joint period (past both prefixes) decides divergence:
/// every per-step flow is nonnegative and eventually periodic, so the total
/// is infinite iff the periodic part is nonzero. Entries at or below the
/// zero tolerance are treated as exact zeros.
struct FlowReport {
  bool infinite;
  std::optional<double> finite_value;  // set iff !infinite
  long period_start;
  long period_length;
  double per_period_flow;
  double prefix_flow;
};

inline FlowReport total_flow(const Chain& chain, const RegularSeq& seq,
                             double zero_tol = default_zero_tol) {
  if (chain.dim() != seq.dim())
    throw std::invalid_argument("total_flow: dimension mismatch");
  long n0 = std::max(chain.prefix_length(), seq.prefix_length());
  long period = detail::checked_lcm(chain.cycle_length(), seq.cycle_length(),
                                    rotation_state_cap);
  detail::ChainFlowTables tables(chain, zero_tol);
  double prefix_sum = 0.0, period_sum = 0.0;
  for (long k = 0; k < n0 + period; ++k) {
    double f =
        tables.at(k).step(seq.set_at(k + 1).mask(), seq.set_at(k).mask());
    (k < n0 ? prefix_sum : period_sum) += f;
  }
  FlowReport r;
  r.infinite = period_sum > 0.0;
  if (!r.infinite) r.finite_value = prefix_sum;
  r.period_start = n0;
  r.period_length = period;
  r.per_period_flow = period_sum;
  r.prefix_flow = prefix_sum;
  return r;
}

struct InfiniteFlowResult {
  bool holds;
  std::optional<IndexSet> witness;  // a starved static cut when !holds
};

/// Infinite flow property: sum_k A_S(k) diverges for every nontrivial static
/// S. The chain prefix never affects divergence, so only cycle matrices are
/// examined.
inline InfiniteFlowResult has_infinite_flow(const Chain& chain,
                                            double zero_tol =
                                                default_zero_tol) {
  int m = chain.dim();
  if (m < 2) throw std::invalid_argument("has_infinite_flow: need dim >= 2");
  detail::ChainFlowTables tables(chain, zero_tol);
  std::uint32_t full = (std::uint32_t{1} << m) - 1;
  for (std::uint32_t s = 1; s < full; ++s) {
    double per_cycle = 0.0;
    for (long t = 0; t < chain.cycle_length(); ++t)
      per_cycle += tables.cycle_table(t).cut(s);
    if (per_cycle == 0.0) return {false, IndexSet(m, s)};
  }
  return {true, std::nullopt};
}

struct AbsoluteFlowResult {
  bool holds;
  std::optional<RegularSeq> witness;  // finite-flow sequence when !holds
};

/// Absolute infinite flow: total flow diverges along every regular sequence.
/// Decided per cardinality class on the "zero-step graph" whose nodes are
/// (cut, cycle phase) and whose edges are steps with zeroed flow exactly 0;
/// the property fails iff some zero-step cycle exists, and any such cycle
/// yields an eventually periodic sequence with finite total flow.
inline AbsoluteFlowResult has_absolute_infinite_flow(
    const Chain& chain, double zero_tol = default_zero_tol,
    int dim_cap = subset_dim_cap) {
  int m = chain.dim();
  if (m < 2)
    throw std::invalid_argument("has_absolute_infinite_flow: need dim >= 2");
  if (m > dim_cap)
    throw CapacityError("has_absolute_infinite_flow: dim " +
                        std::to_string(m) + " exceeds subset cap " +
                        std::to_string(dim_cap));
  long phases = chain.cycle_length();
  detail::ChainFlowTables tables(chain, zero_tol);

  for (int card = 1; card < m; ++card) {
    std::vector<std::uint32_t> masks;
    std::vector<int> set_id(std::size_t{1} << m, -1);
    for (std::uint32_t s = 1; s < (std::uint32_t{1} << m); ++s)
      if (std::popcount(s) == card) {
        set_id[s] = static_cast<int>(masks.size());
        masks.push_back(s);
      }
    long n_sets = static_cast<long>(masks.size());
    long n_nodes = n_sets * phases;
    // 0 = unvisited, 1 = on the current DFS path, 2 = done.
    std::vector<std::uint8_t> color(static_cast<std::size_t>(n_nodes), 0);

    struct Frame {
      long node;
      long next_t;  // cursor into masks for neighbor enumeration
    };
    std::vector<Frame> stack;

    auto node_of = [&](int sid, long phase) { return sid * phases + phase; };

    for (long start = 0; start < n_nodes; ++start) {
      if (color[static_cast<std::size_t>(start)] != 0) continue;
      stack.push_back({start, 0});
      color[static_cast<std::size_t>(start)] = 1;
      while (!stack.empty()) {
        long node = stack.back().node;
        long sid = node / phases;
        long phase = node % phases;
        long next_phase = (phase + 1) % phases;
        std::uint32_t s_mask = masks[static_cast<std::size_t>(sid)];
        bool advanced = false;
        while (stack.back().next_t < n_sets) {
          long t = stack.back().next_t++;
          std::uint32_t t_mask = masks[static_cast<std::size_t>(t)];
          long to = node_of(set_id[t_mask], next_phase);
          if (color[static_cast<std::size_t>(to)] == 2) continue;
          if (tables.cycle_table(phase).step(t_mask, s_mask) != 0.0) continue;
          if (color[static_cast<std::size_t>(to)] == 1) {
            // Zero-step cycle: nodes from `to` to the stack top, in order.
            std::size_t pos = 0;
            while (stack[pos].node != to) ++pos;
            std::vector<IndexSet> cyc;
            for (std::size_t i = pos; i < stack.size(); ++i)
              cyc.emplace_back(m, masks[static_cast<std::size_t>(
                                      stack[i].node / phases)]);
            long r = static_cast<long>(cyc.size());
            if (r % phases != 0)
              throw std::logic_error(
                  "zero-step cycle length not a multiple of the chain period");
            long phi0 = stack[pos].node % phases;
            std::vector<IndexSet> pre(
                static_cast<std::size_t>(chain.prefix_length() + phi0),
                cyc.front());
            return {false, RegularSeq(m, std::move(pre), std::move(cyc))};
          }
          color[static_cast<std::size_t>(to)] = 1;
          stack.push_back({to, 0});
          advanced = true;
          break;
        }
        if (!advanced) {
          color[static_cast<std::size_t>(node)] = 2;
          stack.pop_back();
        }
      }
    }
  }
  return {true, std::nullopt};
}

/// Orbit of a cut under a permutation chain: S(k+1) = P(k)(S(k)), returned in
/// eventually periodic form by detecting the first repeated (cut, phase)
/// state.
inline RegularSeq trajectory(const PermChain& pchain, const IndexSet& s0) {
  if (pchain.dim() != s0.dim())
    throw std::invalid_argument("trajectory: dimension mismatch");
  if (!s0.is_nontrivial())
    throw std::invalid_argument("trajectory: cut must be nontrivial");
  long pp = pchain.prefix_length();
  long pc = pchain.cycle_length();
  auto phase_id = [&](long k) { return k < pp ? k : pp + (k - pp) % pc; };

  std::unordered_map<std::uint64_t, long> seen;  // (mask, phase) -> time
  std::vector<IndexSet> sets;
  IndexSet cur = s0;
  for (long k = 0;; ++k) {
    std::uint64_t key = (static_cast<std::uint64_t>(phase_id(k)) << 32) |
                        cur.mask();
    auto [it, inserted] = seen.emplace(key, k);
    if (!inserted) {
      long start = it->second;
      std::vector<IndexSet> pre(sets.begin(), sets.begin() + start);
      std::vector<IndexSet> cyc(sets.begin() + start, sets.end());
      return RegularSeq(pchain.dim(), std::move(pre), std::move(cyc));
    }
    sets.push_back(cur);
    cur = apply_perm_to_set(pchain.perm_at(k), cur);
  }
}

}  // namespace stochflow
