#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stochflow/chain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/matrix.hpp"

namespace stochflow {

namespace detail {

/// Augmenting-path step for bipartite matching on bitmask adjacency.
/// col_of_row / row_of_col hold the current partial matching (-1 = free).
inline bool match_augment(int i, const std::vector<std::uint32_t>& adj,
                          std::vector<int>& col_of_row,
                          std::vector<int>& row_of_col,
                          std::uint32_t& visited) {
  std::uint32_t cand = adj[static_cast<std::size_t>(i)] & ~visited;
  while (cand) {
    int j = std::countr_zero(cand);
    cand &= cand - 1;
    visited |= std::uint32_t{1} << j;
    if (row_of_col[static_cast<std::size_t>(j)] < 0 ||
        match_augment(row_of_col[static_cast<std::size_t>(j)], adj, col_of_row,
                      row_of_col, visited)) {
      col_of_row[static_cast<std::size_t>(i)] = j;
      row_of_col[static_cast<std::size_t>(j)] = i;
      return true;
    }
  }
  return false;
}

/// Matches every left node to a distinct right node; right nodes are the bit
/// positions of the adjacency masks. Returns left->right or nullopt.
inline std::optional<std::vector<int>> match_all(
    const std::vector<std::uint32_t>& adj, int n_right) {
  int n_left = static_cast<int>(adj.size());
  std::vector<int> col_of_row(n_left, -1), row_of_col(n_right, -1);
  for (int i = 0; i < n_left; ++i) {
    std::uint32_t visited = 0;
    if (!match_augment(i, adj, col_of_row, row_of_col, visited))
      return std::nullopt;
  }
  return col_of_row;
}

}  // namespace detail

/// One term of a Birkhoff decomposition extraction.
struct BirkhoffDecomp {
  std::vector<double> weights;
  std::vector<Permutation> perms;  // perm p has entry (p(i), i) = 1
  double residual;                 // leftover mass, <= mass_tol
};

/// Greedy Birkhoff peeling: repeatedly extract a permutation supported on the
/// positive entries (always routed through the current minimum entry, which
/// guarantees the extracted permutations are distinct and each step kills at
/// least one entry) with the largest weight that keeps the rest nonnegative.
/// The classical bound of (m-1)^2 + 1 terms is enforced as an invariant.
inline BirkhoffDecomp birkhoff_decompose(const StochMatrix& a,
                                         double zero_tol = default_zero_tol,
                                         double mass_tol = 1e-10) {
  int m = a.dim();
  if (!a.is_doubly_stochastic())
    throw std::invalid_argument(
        "birkhoff_decompose: matrix is not doubly stochastic");
  std::vector<double> work = a.data();
  auto at = [&](int i, int j) -> double& {
    return work[static_cast<std::size_t>(i) * m + j];
  };

  BirkhoffDecomp out;
  out.residual = 1.0;
  int max_terms = (m - 1) * (m - 1) + 1;
  while (out.residual > mass_tol) {
    std::vector<std::uint32_t> adj(static_cast<std::size_t>(m), 0);
    int min_i = -1, min_j = -1;
    double min_v = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = at(i, j);
        if (v > zero_tol) {
          adj[static_cast<std::size_t>(i)] |= std::uint32_t{1} << j;
          if (min_i < 0 || v < min_v) {
            min_v = v;
            min_i = i;
            min_j = j;
          }
        }
      }
    if (min_i < 0)
      throw std::invalid_argument(
          "birkhoff_decompose: mass left but support is empty");

    // Force the minimum entry onto the matching; for a doubly stochastic
    // remainder every support entry lies on some permutation, so this only
    // fails when the input was out of tolerance.
    std::vector<std::uint32_t> forced_adj = adj;
    for (int i = 0; i < m; ++i)
      if (i != min_i)
        forced_adj[static_cast<std::size_t>(i)] &=
            ~(std::uint32_t{1} << min_j);
    forced_adj[static_cast<std::size_t>(min_i)] = std::uint32_t{1} << min_j;
    auto match = detail::match_all(forced_adj, m);
    if (!match) match = detail::match_all(adj, m);
    if (!match)
      throw std::invalid_argument(
          "birkhoff_decompose: support has no perfect matching (input not "
          "doubly stochastic within tolerance)");

    double w = at(0, (*match)[0]);
    for (int i = 1; i < m; ++i) w = std::min(w, at(i, (*match)[i]));
    std::vector<int> map(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      int j = (*match)[i];
      map[static_cast<std::size_t>(j)] = i;  // entry (i, j): image of j is i
      double& e = at(i, j);
      e -= w;
      if (e <= zero_tol) e = 0.0;
    }
    out.weights.push_back(w);
    out.perms.emplace_back(std::move(map));
    out.residual -= w;
    if (static_cast<int>(out.perms.size()) > max_terms)
      throw std::logic_error("birkhoff_decompose: term bound exceeded");
  }
  return out;
}

struct MixingPermutation {
  Permutation perm;  // entry (perm(i), i) carries weight >= gamma
  double gamma;
};

/// Bottleneck-optimal permutation inside a stochastic matrix: the permutation
/// maximizing min_i a_{p(i), i}, i.e. the largest gamma with a >= gamma P.
/// Ties are broken toward the lexicographically smallest map. Returns nullopt
/// when every permutation has bottleneck <= zero_tol.
inline std::optional<MixingPermutation> max_mixing_permutation(
    const StochMatrix& a, double zero_tol = default_zero_tol) {
  int m = a.dim();
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(m) * m);
  for (double v : a.data())
    if (v > zero_tol) vals.push_back(v);
  if (vals.empty()) return std::nullopt;
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());

  // Feasibility of threshold t: the graph of entries >= t (columns as left
  // nodes, rows as right nodes) has a perfect matching.
  auto col_adj = [&](double t, std::uint32_t used_rows, int first_col) {
    std::vector<std::uint32_t> adj;
    adj.reserve(static_cast<std::size_t>(m - first_col));
    for (int j = first_col; j < m; ++j) {
      std::uint32_t mask = 0;
      for (int i = 0; i < m; ++i)
        if (a(i, j) >= t && !((used_rows >> i) & 1u))
          mask |= std::uint32_t{1} << i;
      adj.push_back(mask);
    }
    return adj;
  };
  auto feasible = [&](double t) {
    return detail::match_all(col_adj(t, 0, 0), m).has_value();
  };

  if (!feasible(vals.front())) return std::nullopt;
  std::size_t lo = 0, hi = vals.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo + 1) / 2;
    if (feasible(vals[mid]))
      lo = mid;
    else
      hi = mid - 1;
  }
  double gamma = vals[lo];

  // Lexicographically smallest map at the optimal threshold: fix columns in
  // order, picking the smallest row that keeps the rest matchable.
  std::vector<int> map(static_cast<std::size_t>(m), -1);
  std::uint32_t used_rows = 0;
  for (int j = 0; j < m; ++j) {
    bool placed = false;
    for (int i = 0; i < m && !placed; ++i) {
      if (((used_rows >> i) & 1u) || a(i, j) < gamma) continue;
      std::uint32_t used2 = used_rows | (std::uint32_t{1} << i);
      if (detail::match_all(col_adj(gamma, used2, j + 1), m).has_value()) {
        map[static_cast<std::size_t>(j)] = i;
        used_rows = used2;
        placed = true;
      }
    }
    if (!placed)
      throw std::logic_error(
          "max_mixing_permutation: feasible threshold lost during selection");
  }
  return MixingPermutation{Permutation(std::move(map)), gamma};
}

/// Mixing decomposition of a chain: A(k) = gamma P(k) + (1-gamma) R(k) with a
/// single gamma (the smallest per-matrix bottleneck). A chain of permutation
/// matrices is returned with gamma = 1, identity residual and the degenerate
/// flag set.
struct PermComponent {
  double gamma;
  PermChain pchain;
  Chain residual;
  bool degenerate;
};

inline std::optional<PermComponent> decompose_chain(
    const Chain& chain, double zero_tol = default_zero_tol) {
  int m = chain.dim();
  std::vector<MixingPermutation> pre, cyc;
  double gamma = 1.0;
  auto solve = [&](const StochMatrix& a,
                   std::vector<MixingPermutation>& out) -> bool {
    auto r = max_mixing_permutation(a, zero_tol);
    if (!r) return false;
    gamma = std::min(gamma, r->gamma);
    out.push_back(std::move(*r));
    return true;
  };
  for (const auto& a : chain.prefix())
    if (!solve(a, pre)) return std::nullopt;
  for (const auto& a : chain.cycle())
    if (!solve(a, cyc)) return std::nullopt;

  std::vector<Permutation> ppre, pcyc;
  for (const auto& r : pre) ppre.push_back(r.perm);
  for (const auto& r : cyc) pcyc.push_back(r.perm);
  PermChain pchain(m, std::move(ppre), std::move(pcyc));

  bool degenerate = gamma == 1.0;
  auto residual_of = [&](const StochMatrix& a,
                         const Permutation& p) -> StochMatrix {
    if (degenerate) return StochMatrix::identity(m);
    std::vector<double> e(static_cast<std::size_t>(m) * m);
    double scale = 1.0 / (1.0 - gamma);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = a(i, j);
        if (p(j) == i) v -= gamma;  // gamma <= bottleneck entry, stays >= 0
        e[static_cast<std::size_t>(i) * m + j] = v * scale;
      }
    // Division by (1-gamma) magnifies the input row-sum slack.
    double tol = default_stoch_tol * std::max(1.0, 4.0 * scale);
    return StochMatrix(m, std::move(e), tol);
  };
  std::vector<StochMatrix> rpre, rcyc;
  for (std::size_t i = 0; i < chain.prefix().size(); ++i)
    rpre.push_back(residual_of(chain.prefix()[i], pre[i].perm));
  for (std::size_t i = 0; i < chain.cycle().size(); ++i)
    rcyc.push_back(residual_of(chain.cycle()[i], cyc[i].perm));
  double rtol = default_stoch_tol *
                std::max(1.0, degenerate ? 1.0 : 4.0 / (1.0 - gamma));
  Chain residual(m, chain.flavor(), std::move(rpre), std::move(rcyc), rtol);
  return PermComponent{gamma, std::move(pchain), std::move(residual),
                       degenerate};
}

/// Rotated chain B(k) = P^T(k+1:0) A(k) P(k:0), materialized in eventually
/// periodic form. B repeats once the chain phase, the permutation phase and
/// the cumulative permutation product all line up, so the cycle length is
/// lcm(chain cycle, pchain cycle * order of the one-period product).
inline Chain rotate_chain(const Chain& chain, const PermChain& pchain,
                          long cap = rotation_state_cap) {
  if (chain.dim() != pchain.dim())
    throw std::invalid_argument("rotate_chain: dimension mismatch");
  int m = chain.dim();
  auto jp = detail::joint_period(chain, pchain, cap);
  if (jp.start + jp.length > cap)
    throw CapacityError("rotate_chain: materialized length exceeds cap");

  std::vector<StochMatrix> pre, cyc;
  Permutation p_k = Permutation::identity(m);  // P(k:0)
  for (long k = 0; k < jp.start + jp.length; ++k) {
    Permutation p_k1 = pchain.perm_at(k) * p_k;  // P(k+1:0)
    const StochMatrix& a = chain.matrix_at(k);
    std::vector<double> e(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        e[static_cast<std::size_t>(i) * m + j] = a(p_k1(i), p_k(j));
    (k < jp.start ? pre : cyc).emplace_back(m, std::move(e));
    p_k = p_k1;
  }
  return Chain(m, chain.flavor(), std::move(pre), std::move(cyc));
}

/// Verifies B(k:s) = P^T(k:0) A(k:s) P(s:0) elementwise within tol.
inline bool rotated_product_identity_check(const Chain& chain,
                                           const PermChain& pchain, long k,
                                           long s, double tol = 1e-10) {
  Chain b = rotate_chain(chain, pchain);
  StochMatrix lhs = backward_product(b, k, s);
  StochMatrix prod = backward_product(chain, k, s);
  Permutation pk = perm_product(pchain, k, 0);
  Permutation ps = perm_product(pchain, s, 0);
  int m = chain.dim();
  double err = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      err = std::max(err, std::abs(lhs(i, j) - prod(pk(i), ps(j))));
  return err <= tol;
}

}  // namespace stochflow
