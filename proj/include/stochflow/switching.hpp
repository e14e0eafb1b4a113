#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stochflow/chain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/matrix.hpp"

namespace stochflow {

enum class CollectionFlavor {
  stochastic,
  doubly_stochastic,
  doubly_stochastic_trivial_component  // doubly stochastic, diagonal > 0
};

inline const char* to_string(CollectionFlavor f) {
  switch (f) {
    case CollectionFlavor::stochastic: return "stochastic";
    case CollectionFlavor::doubly_stochastic: return "doubly_stochastic";
    default: return "doubly_stochastic_trivial_component";
  }
}

/// Finite set of stochastic matrices closed under arbitrary switching.
class Collection {
 public:
  Collection(std::vector<StochMatrix> mats, CollectionFlavor flavor,
             double stoch_tol = default_stoch_tol,
             double zero_tol = default_zero_tol)
      : mats_(std::move(mats)), flavor_(flavor) {
    if (mats_.empty())
      throw std::invalid_argument("Collection: needs at least one matrix");
    int m = mats_.front().dim();
    for (const StochMatrix& a : mats_) {
      if (a.dim() != m)
        throw std::invalid_argument("Collection: dimension mismatch");
      if (flavor_ != CollectionFlavor::stochastic &&
          !a.is_doubly_stochastic(stoch_tol))
        throw std::invalid_argument(
            "Collection: matrix is not doubly stochastic");
      if (flavor_ == CollectionFlavor::doubly_stochastic_trivial_component)
        for (int i = 0; i < m; ++i)
          if (!(a(i, i) > zero_tol))
            throw std::invalid_argument(
                "Collection: diagonal entry not positive");
    }
  }

  int dim() const { return mats_.front().dim(); }
  CollectionFlavor flavor() const { return flavor_; }
  std::size_t size() const { return mats_.size(); }
  const StochMatrix& mat(std::size_t t) const { return mats_.at(t); }
  const std::vector<StochMatrix>& mats() const { return mats_; }

 private:
  std::vector<StochMatrix> mats_;
  CollectionFlavor flavor_;
};

/// Directed graph over the cuts of one cardinality class: edge S -> T iff
/// some matrix in the collection moves no flow across the step from current
/// set S to next set T (entries at or below the zero tolerance count as 0).
struct ZeroFlowGraph {
  int dim = 0;
  int cardinality = 0;
  std::vector<std::uint32_t> nodes;     // ascending masks, popcount == c
  std::vector<std::vector<int>> adj;    // adj[u]: ascending node ids

  bool has_edge(int u, int v) const {
    const auto& row = adj[static_cast<std::size_t>(u)];
    return std::binary_search(row.begin(), row.end(), v);
  }
  bool has_loop() const {
    for (int u = 0; u < static_cast<int>(nodes.size()); ++u)
      if (has_edge(u, u)) return true;
    return false;
  }
};

/// One graph per cardinality class 1..m-1, ascending.
inline std::vector<ZeroFlowGraph> build_zero_flow_graphs(
    const Collection& coll, double zero_tol = default_zero_tol) {
  int m = coll.dim();
  if (m < 2)
    throw std::invalid_argument("zero-flow graphs: need dim >= 2");
  if (m > subset_dim_cap)
    throw CapacityError("zero-flow graphs: dimension exceeds subset cap of " +
                        std::to_string(subset_dim_cap));
  std::vector<detail::FlowTable> tables;
  tables.reserve(coll.size());
  for (const StochMatrix& a : coll.mats()) tables.emplace_back(a, zero_tol);
  std::uint32_t full = (std::uint32_t{1} << m) - 1;

  std::vector<ZeroFlowGraph> graphs;
  graphs.reserve(static_cast<std::size_t>(m) - 1);
  for (int c = 1; c < m; ++c) {
    ZeroFlowGraph g;
    g.dim = m;
    g.cardinality = c;
    for (std::uint32_t s = 1; s <= full; ++s)
      if (std::popcount(s) == c) g.nodes.push_back(s);
    int n = static_cast<int>(g.nodes.size());
    g.adj.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        bool zero = false;
        for (const auto& tb : tables)
          if (tb.step(g.nodes[static_cast<std::size_t>(v)],
                      g.nodes[static_cast<std::size_t>(u)]) == 0.0) {
            zero = true;
            break;
          }
        if (zero) g.adj[static_cast<std::size_t>(u)].push_back(v);
      }
    graphs.push_back(std::move(g));
  }
  return graphs;
}

/// First directed cycle across the per-cardinality graphs, in deterministic
/// order (cardinality ascending, start node ascending, neighbors ascending).
/// Returned as [S_0, ..., S_{r-1}] with edges S_t -> S_{t+1 mod r};
/// self-loops come back as a single-element cycle.
inline std::optional<std::vector<IndexSet>> find_zero_flow_cycle(
    const std::vector<ZeroFlowGraph>& graphs) {
  for (const ZeroFlowGraph& g : graphs) {
    int n = static_cast<int>(g.nodes.size());
    std::vector<int> color(static_cast<std::size_t>(n), 0);
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    struct Frame {
      int node;
      std::size_t next;
    };
    for (int s = 0; s < n; ++s) {
      if (color[static_cast<std::size_t>(s)] != 0) continue;
      std::vector<Frame> stack;
      stack.push_back({s, 0});
      color[static_cast<std::size_t>(s)] = 1;
      pos[static_cast<std::size_t>(s)] = 0;
      while (!stack.empty()) {
        int u = stack.back().node;
        std::size_t idx = stack.back().next;
        const auto& row = g.adj[static_cast<std::size_t>(u)];
        if (idx < row.size()) {
          stack.back().next = idx + 1;
          int v = row[idx];
          if (color[static_cast<std::size_t>(v)] == 0) {
            color[static_cast<std::size_t>(v)] = 1;
            pos[static_cast<std::size_t>(v)] = static_cast<int>(stack.size());
            stack.push_back({v, 0});
          } else if (color[static_cast<std::size_t>(v)] == 1) {
            std::vector<IndexSet> cyc;
            for (std::size_t t = static_cast<std::size_t>(
                     pos[static_cast<std::size_t>(v)]);
                 t < stack.size(); ++t)
              cyc.emplace_back(g.dim,
                               g.nodes[static_cast<std::size_t>(stack[t].node)]);
            return cyc;
          }
        } else {
          color[static_cast<std::size_t>(u)] = 2;
          pos[static_cast<std::size_t>(u)] = -1;
          stack.pop_back();
        }
      }
    }
  }
  return std::nullopt;
}

inline bool is_cycle_free(const std::vector<ZeroFlowGraph>& graphs) {
  return !find_zero_flow_cycle(graphs).has_value();
}

enum class StabilityAnswer { yes, no, undecided };

inline const char* to_string(StabilityAnswer a) {
  switch (a) {
    case StabilityAnswer::yes: return "yes";
    case StabilityAnswer::no: return "no";
    default: return "undecided";
  }
}

struct StabilityVerdict {
  StabilityAnswer answer;
  std::optional<std::vector<IndexSet>> witness_cycle;
};

/// Absolute asymptotic stability of every switching sequence drawn from the
/// collection. Doubly stochastic: exact (stable iff the zero-flow graphs are
/// cycle-free). Trivial-component flavor: only self-loops can occur, checked
/// against an independent minimum-cut scan. General stochastic: a cycle
/// certifies instability, its absence leaves the question open.
inline StabilityVerdict stability_verdict(const Collection& coll,
                                          double zero_tol =
                                              default_zero_tol) {
  auto graphs = build_zero_flow_graphs(coll, zero_tol);
  auto cycle = find_zero_flow_cycle(graphs);

  if (coll.flavor() == CollectionFlavor::doubly_stochastic_trivial_component) {
    // With positive diagonals any edge S -> T (S != T) would carry at least
    // one diagonal entry, so cycles reduce to self-loops; self-loops in turn
    // coincide with zero cuts.
    for (const ZeroFlowGraph& g : graphs)
      for (int u = 0; u < static_cast<int>(g.nodes.size()); ++u)
        for (int v : g.adj[static_cast<std::size_t>(u)])
          if (v != u)
            throw std::logic_error(
                "stability_verdict: non-loop edge with positive diagonals");
    bool zero_cut = false;
    int m = coll.dim();
    std::uint32_t full = (std::uint32_t{1} << m) - 1;
    for (const StochMatrix& a : coll.mats()) {
      detail::FlowTable tb(a, zero_tol);
      for (std::uint32_t s = 1; s < full && !zero_cut; ++s)
        if (tb.cut(s) == 0.0) zero_cut = true;
      if (zero_cut) break;
    }
    if (zero_cut != cycle.has_value())
      throw std::logic_error(
          "stability_verdict: loop/zero-cut cross-check failed");
  }

  if (cycle)
    return {StabilityAnswer::no, std::move(cycle)};
  if (coll.flavor() == CollectionFlavor::stochastic)
    return {StabilityAnswer::undecided, std::nullopt};
  return {StabilityAnswer::yes, std::nullopt};
}

/// Periodic switching sequence realizing a zero-flow cycle: step t uses the
/// first matrix with zero step flow from S_t to S_{t+1}. The produced chain
/// and set sequence have exactly zero total flow.
struct WitnessChain {
  Chain chain;
  RegularSeq seq;
};

inline WitnessChain witness_chain_from_cycle(
    const Collection& coll, const std::vector<IndexSet>& cycle,
    double zero_tol = default_zero_tol) {
  if (cycle.empty())
    throw std::invalid_argument("witness chain: empty cycle");
  int m = coll.dim();
  int card = cycle.front().cardinality();
  for (const IndexSet& s : cycle) {
    if (s.dim() != m)
      throw std::invalid_argument("witness chain: set dimension mismatch");
    if (!s.is_nontrivial())
      throw std::invalid_argument("witness chain: set must be nontrivial");
    if (s.cardinality() != card)
      throw std::invalid_argument("witness chain: cardinality mismatch");
  }
  std::vector<detail::FlowTable> tables;
  tables.reserve(coll.size());
  for (const StochMatrix& a : coll.mats()) tables.emplace_back(a, zero_tol);

  std::size_t r = cycle.size();
  std::vector<StochMatrix> picked;
  picked.reserve(r);
  for (std::size_t t = 0; t < r; ++t) {
    const IndexSet& cur = cycle[t];
    const IndexSet& nxt = cycle[(t + 1) % r];
    std::optional<std::size_t> choice;
    for (std::size_t a = 0; a < tables.size(); ++a)
      if (tables[a].step(nxt.mask(), cur.mask()) == 0.0) {
        choice = a;
        break;
      }
    if (!choice)
      throw std::invalid_argument(
          "witness chain: cycle step is not a zero-flow edge");
    picked.push_back(coll.mat(*choice));
  }
  Flavor fl = coll.flavor() == CollectionFlavor::stochastic
                  ? Flavor::stochastic
                  : Flavor::doubly_stochastic;
  return {Chain(m, fl, {}, std::move(picked)),
          RegularSeq(m, {}, std::vector<IndexSet>(cycle.begin(), cycle.end()))};
}

}  // namespace stochflow
