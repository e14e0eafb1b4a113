#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stochflow/birkhoff.hpp"
#include "stochflow/chain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/index_set.hpp"
#include "stochflow/matrix.hpp"

namespace stochflow {

/// x(0..horizon) under x(k+1) = A(k) x(k).
inline std::vector<std::vector<double>> simulate(const Chain& chain,
                                                 std::vector<double> x0,
                                                 long horizon) {
  int m = chain.dim();
  if (static_cast<int>(x0.size()) != m)
    throw std::invalid_argument("simulate: x0 size mismatch");
  if (horizon < 0) throw std::invalid_argument("simulate: negative horizon");
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(horizon) + 1);
  out.push_back(std::move(x0));
  for (long k = 0; k < horizon; ++k) {
    const StochMatrix& a = chain.matrix_at(k);
    const std::vector<double>& x = out.back();
    std::vector<double> y(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += a(i, j) * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    out.push_back(std::move(y));
  }
  return out;
}

/// V(x) = sum_i (x_i - mean(x))^2.
inline double lyapunov(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("lyapunov: empty vector");
  double mean = std::accumulate(x.begin(), x.end(), 0.0) /
                static_cast<double>(x.size());
  double v = 0.0;
  for (double xi : x) v += (xi - mean) * (xi - mean);
  return v;
}

/// Signals that some cut's trajectory stops receiving flow before the next
/// accumulation threshold is met (the chain lacks absolute infinite flow).
struct FlowStarvation : std::runtime_error {
  IndexSet starving;
  explicit FlowStarvation(IndexSet s)
      : std::runtime_error("accumulation starves: trajectory of a cut stops "
                           "receiving flow before reaching delta"),
        starving(std::move(s)) {}
};

/// Accumulation times t_1 < t_2 < ... < t_count: t_q is the first t > t_{q-1}
/// such that, for every nontrivial cut S, the flow accumulated along the
/// trajectory of S (under the permutation chain, rooted at time 0) since
/// t_{q-1} reaches at least delta. t_0 = 0 is implicit and not returned.
inline std::vector<long> accumulation_times(const Chain& chain,
                                            const PermChain& pchain,
                                            double delta, int count,
                                            double zero_tol =
                                                default_zero_tol) {
  int m = chain.dim();
  if (m < 2) throw std::invalid_argument("accumulation_times: need dim >= 2");
  if (pchain.dim() != m)
    throw std::invalid_argument("accumulation_times: dimension mismatch");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("accumulation_times: delta must be in (0,1)");
  if (count < 1)
    throw std::invalid_argument("accumulation_times: count must be >= 1");

  auto jp = detail::joint_period(chain, pchain);
  detail::ChainFlowTables tables(chain, zero_tol);
  std::uint32_t full = (std::uint32_t{1} << m) - 1;

  // Per-period flow gain of every cut's trajectory past jp.start. A gain of
  // exactly zero means that trajectory never receives flow again.
  std::vector<double> gain(static_cast<std::size_t>(full) + 1, 0.0);
  {
    std::vector<std::uint32_t> img(static_cast<std::size_t>(full) + 1);
    for (std::uint32_t s = 1; s < full; ++s) img[s] = s;
    for (long k = 0; k < jp.start + jp.length; ++k) {
      const Permutation& p = pchain.perm_at(k);
      const auto& tb = tables.at(k);
      for (std::uint32_t s = 1; s < full; ++s) {
        std::uint32_t nxt = p.apply_mask(img[s]);
        if (k >= jp.start) gain[s] += tb.step(nxt, img[s]);
        img[s] = nxt;
      }
    }
  }
  bool any_zero_gain = false;
  double min_pos_gain = std::numeric_limits<double>::infinity();
  for (std::uint32_t s = 1; s < full; ++s) {
    if (gain[s] == 0.0)
      any_zero_gain = true;
    else
      min_pos_gain = std::min(min_pos_gain, gain[s]);
  }
  double est;
  if (any_zero_gain) {
    // Starvation is detected within one step of entering the periodic part.
    est = static_cast<double>(jp.start) + static_cast<double>(jp.length) +
          count + 16.0;
  } else {
    est = static_cast<double>(jp.start) +
          (std::ceil(delta / min_pos_gain) + 2.0) *
              static_cast<double>(jp.length) * count +
          static_cast<double>(jp.length) + 16.0;
  }
  if (!(est <= 1e8))
    throw CapacityError("accumulation_times: step budget exceeded");
  long budget = static_cast<long>(est);

  std::vector<double> acc(static_cast<std::size_t>(full) + 1, 0.0);
  std::vector<std::uint32_t> img(static_cast<std::size_t>(full) + 1);
  for (std::uint32_t s = 1; s < full; ++s) img[s] = s;
  std::vector<long> times;
  times.reserve(static_cast<std::size_t>(count));
  for (long k = 0;; ++k) {
    if (k > budget)
      throw std::logic_error("accumulation_times: budget overrun");
    const Permutation& p = pchain.perm_at(k);
    const auto& tb = tables.at(k);
    double mn = std::numeric_limits<double>::infinity();
    for (std::uint32_t s = 1; s < full; ++s) {
      std::uint32_t nxt = p.apply_mask(img[s]);
      acc[s] += tb.step(nxt, img[s]);
      img[s] = nxt;
      mn = std::min(mn, acc[s]);
    }
    long t = k + 1;
    if (mn >= delta) {
      times.push_back(t);
      if (static_cast<int>(times.size()) == count) return times;
      std::fill(acc.begin(), acc.end(), 0.0);
    } else if (t >= jp.start) {
      for (std::uint32_t s = 1; s < full; ++s)
        if (acc[s] < delta && gain[s] == 0.0)
          throw FlowStarvation(IndexSet(m, s));
    }
  }
}

/// Certificate that V contracts by a fixed factor across accumulation
/// intervals: V(x(t_q)) <= (1 - gamma delta (1-delta)^2 / (m (m-1)^2))
/// V(x(t_{q-1})). The inequality is re-verified on the simulated trajectory
/// before the certificate is returned.
struct RateCertificate {
  double gamma;
  double delta;
  double contraction;
  std::vector<long> times;             // t_1 .. t_count
  std::vector<double> lyapunov_values; // V(x(t_q)) for q = 0..count, t_0 = 0
};

inline RateCertificate rate_certificate(const Chain& chain,
                                        const std::vector<double>& x0,
                                        double delta, int count,
                                        double zero_tol = default_zero_tol) {
  if (chain.flavor() != Flavor::doubly_stochastic)
    throw std::invalid_argument(
        "rate_certificate: chain must be doubly stochastic");
  int m = chain.dim();
  if (m < 2) throw std::invalid_argument("rate_certificate: need dim >= 2");
  if (static_cast<int>(x0.size()) != m)
    throw std::invalid_argument("rate_certificate: x0 size mismatch");
  auto pc = decompose_chain(chain, zero_tol);
  if (!pc)
    throw CapacityError(
        "rate_certificate: mixing coefficient below zero tolerance");
  std::vector<long> times =
      accumulation_times(chain, pc->pchain, delta, count, zero_tol);
  auto traj = simulate(chain, x0, times.back());
  double contraction =
      1.0 - pc->gamma * delta * (1.0 - delta) * (1.0 - delta) /
                (static_cast<double>(m) * (m - 1) * (m - 1));
  std::vector<double> vs;
  vs.reserve(times.size() + 1);
  vs.push_back(lyapunov(traj[0]));
  for (long t : times)
    vs.push_back(lyapunov(traj[static_cast<std::size_t>(t)]));
  for (std::size_t q = 1; q < vs.size(); ++q) {
    double bound = contraction * vs[q - 1] + 1e-12 * std::max(1.0, vs[q - 1]);
    if (vs[q] > bound)
      throw std::logic_error("rate_certificate: contraction violated");
  }
  return {pc->gamma, delta, contraction, std::move(times), std::move(vs)};
}

/// Checks the exact one-step decrease identity for a doubly stochastic A:
/// V(Ax) = V(x) - sum_{i<j} H_ij (x_i - x_j)^2 with H = A^T A.
inline bool lyapunov_decrease_identity_check(const StochMatrix& a,
                                             const std::vector<double>& x,
                                             double tol = 1e-10) {
  int m = a.dim();
  if (static_cast<int>(x.size()) != m)
    throw std::invalid_argument("lyapunov identity: size mismatch");
  if (!a.is_doubly_stochastic())
    throw std::invalid_argument(
        "lyapunov identity: matrix must be doubly stochastic");
  std::vector<double> ax(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      ax[static_cast<std::size_t>(i)] += a(i, j) * x[static_cast<std::size_t>(j)];
  double lhs = lyapunov(ax);
  double rhs = lyapunov(x);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double h = 0.0;
      for (int l = 0; l < m; ++l) h += a(l, i) * a(l, j);
      double d = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      rhs -= h * d * d;
    }
  return std::abs(lhs - rhs) <= tol * std::max(1.0, lyapunov(x));
}

/// Pairwise flow graph under a permutation chain: {i, j} is an edge iff the
/// entry flow sum_k a(k)[i(k+1), j(k)] + a(k)[j(k+1), i(k)] diverges, where
/// i(k) is the singleton trajectory of i. Decided on one joint period with
/// sub-tolerance entries treated as zeros.
struct InfiniteFlowGraph {
  int dim = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, lexicographically sorted

  std::vector<std::vector<int>> components() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(dim));
    for (auto [i, j] : edges) {
      adj[static_cast<std::size_t>(i)].push_back(j);
      adj[static_cast<std::size_t>(j)].push_back(i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(dim), false);
    std::vector<std::vector<int>> comps;
    for (int i = 0; i < dim; ++i) {
      if (seen[static_cast<std::size_t>(i)]) continue;
      std::vector<int> comp, stack{i};
      seen[static_cast<std::size_t>(i)] = true;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        comp.push_back(v);
        for (int w : adj[static_cast<std::size_t>(v)])
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = true;
            stack.push_back(w);
          }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  }

  bool connected() const { return components().size() == 1; }
};

inline InfiniteFlowGraph infinite_flow_graph(const Chain& chain,
                                             const PermChain& pchain,
                                             double zero_tol =
                                                 default_zero_tol) {
  if (chain.dim() != pchain.dim())
    throw std::invalid_argument("infinite_flow_graph: dimension mismatch");
  int m = chain.dim();
  auto jp = detail::joint_period(chain, pchain);
  auto z = [zero_tol](double v) { return v > zero_tol ? v : 0.0; };
  std::vector<int> img(static_cast<std::size_t>(m));
  std::iota(img.begin(), img.end(), 0);
  std::vector<std::vector<char>> e(static_cast<std::size_t>(m),
                                   std::vector<char>(static_cast<std::size_t>(m), 0));
  for (long k = 0; k < jp.start + jp.length; ++k) {
    const Permutation& p = pchain.perm_at(k);
    const StochMatrix& a = chain.matrix_at(k);
    std::vector<int> nxt(static_cast<std::size_t>(m));
    for (int v = 0; v < m; ++v)
      nxt[static_cast<std::size_t>(v)] = p(img[static_cast<std::size_t>(v)]);
    if (k >= jp.start)
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
          if (z(a(nxt[static_cast<std::size_t>(i)],
                  img[static_cast<std::size_t>(j)])) +
                  z(a(nxt[static_cast<std::size_t>(j)],
                      img[static_cast<std::size_t>(i)])) >
              0.0)
            e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
    img = std::move(nxt);
  }
  InfiniteFlowGraph g;
  g.dim = m;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (e[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        g.edges.emplace_back(i, j);
  return g;
}

/// Row spread max_{i,j} ||row_i - row_j||_inf of A(k:0) sampled at powers of
/// two up to 2^horizon_log2.
inline std::vector<std::pair<long, double>> spread_trace(
    const Chain& chain, int horizon_log2 = 20) {
  if (horizon_log2 < 0 || horizon_log2 > 30)
    throw std::invalid_argument("spread_trace: horizon_log2 out of range");
  std::vector<std::pair<long, double>> out;
  StochMatrix prod = StochMatrix::identity(chain.dim());
  long next = 1;
  long limit = 1L << horizon_log2;
  for (long k = 1; k <= limit; ++k) {
    prod = chain.matrix_at(k - 1) * prod;
    if (k == next) {
      out.emplace_back(k, prod.max_row_pair_distance());
      next <<= 1;
    }
  }
  return out;
}

enum class ErgodicStatus { ergodic, not_ergodic, undecided };
enum class ErgodicReason {
  absolute_flow_equivalence,  // doubly stochastic: decided via flow graph
  absolute_flow_violation,    // general: a finite-flow sequence exists
  numerical_only              // general: flow tests pass, spread attached
};

inline const char* to_string(ErgodicStatus s) {
  switch (s) {
    case ErgodicStatus::ergodic: return "ergodic";
    case ErgodicStatus::not_ergodic: return "not_ergodic";
    default: return "undecided";
  }
}
inline const char* to_string(ErgodicReason r) {
  switch (r) {
    case ErgodicReason::absolute_flow_equivalence:
      return "absolute_flow_equivalence";
    case ErgodicReason::absolute_flow_violation:
      return "absolute_flow_violation";
    default: return "numerical_only";
  }
}

struct ErgodicityVerdict {
  ErgodicStatus status;
  ErgodicReason reason;
  std::optional<RegularSeq> witness;           // finite-flow sequence
  std::vector<std::pair<long, double>> spread; // only for undecided
};

/// For doubly stochastic chains the verdict is exact: ergodic iff the
/// pairwise flow graph under the mixing permutation component is connected.
/// For general stochastic chains a failed absolute-flow test certifies
/// non-ergodicity; otherwise the verdict stays undecided with a numerical
/// spread diagnostic.
inline ErgodicityVerdict ergodicity_verdict(const Chain& chain,
                                            double zero_tol = default_zero_tol,
                                            int spread_horizon_log2 = 20) {
  int m = chain.dim();
  if (m < 2) throw std::invalid_argument("ergodicity_verdict: need dim >= 2");
  if (chain.flavor() == Flavor::doubly_stochastic) {
    auto pc = decompose_chain(chain, zero_tol);
    if (!pc)
      throw CapacityError(
          "ergodicity_verdict: mixing coefficient below zero tolerance");
    auto g = infinite_flow_graph(chain, pc->pchain, zero_tol);
    if (g.connected())
      return {ErgodicStatus::ergodic, ErgodicReason::absolute_flow_equivalence,
              std::nullopt,
              {}};
    auto comps = g.components();
    IndexSet c0 = IndexSet::from_indices(m, comps.front());
    return {ErgodicStatus::not_ergodic,
            ErgodicReason::absolute_flow_equivalence,
            trajectory(pc->pchain, c0),
            {}};
  }
  auto aif = has_absolute_infinite_flow(chain, zero_tol);
  if (!aif.holds)
    return {ErgodicStatus::not_ergodic, ErgodicReason::absolute_flow_violation,
            aif.witness,
            {}};
  return {ErgodicStatus::undecided, ErgodicReason::numerical_only,
          std::nullopt, spread_trace(chain, spread_horizon_log2)};
}

/// Limit structure of a doubly stochastic chain modulo its permutation
/// component: Q(horizon) A(horizon:t0) converges as horizon grows, and its
/// rows cluster exactly by the components of the pairwise flow graph.
struct LimitResult {
  Permutation q;        // Q(horizon) = P^T(horizon:0)
  StochMatrix limit;    // Q(horizon) A(horizon:t0)
  std::vector<std::vector<int>> clusters;
};

inline LimitResult limit_up_to_permutation(const Chain& chain, long t0,
                                           long horizon,
                                           double zero_tol =
                                               default_zero_tol) {
  if (chain.flavor() != Flavor::doubly_stochastic)
    throw std::invalid_argument(
        "limit_up_to_permutation: chain must be doubly stochastic");
  if (t0 < 0 || horizon < t0)
    throw std::invalid_argument(
        "limit_up_to_permutation: need 0 <= t0 <= horizon");
  int m = chain.dim();
  auto pc = decompose_chain(chain, zero_tol);
  if (!pc)
    throw CapacityError(
        "limit_up_to_permutation: mixing coefficient below zero tolerance");
  StochMatrix prod = backward_product(chain, horizon, t0);
  Permutation pk = perm_product(pc->pchain, horizon, 0);
  std::vector<double> e(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      e[static_cast<std::size_t>(i) * m + j] = prod(pk(i), j);
  StochMatrix unrotated(m, std::move(e), 64 * m * default_stoch_tol);
  auto clusters = infinite_flow_graph(chain, pc->pchain, zero_tol).components();
  return {pk.inverse(), std::move(unrotated), std::move(clusters)};
}

}  // namespace stochflow
