#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"

using namespace stochflow;
using testsupport::brute_accumulation_times;
using testsupport::random_ds_chain;
using testsupport::random_perm_chain;
using testsupport::unit_double;

namespace {

StochMatrix swap2() { return StochMatrix(2, {0.0, 1.0, 1.0, 0.0}); }
StochMatrix mix2() { return StochMatrix(2, {0.75, 0.25, 0.25, 0.75}); }
StochMatrix gate3() {
  return StochMatrix(3, {1.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0,
                         0.0, 1.0});
}
Chain mix_chain() {
  return Chain::constant(mix2(), Flavor::doubly_stochastic);
}

}  // namespace

TEST_CASE("simulation applies the chain step by step", "[ergodicity]") {
  auto traj = simulate(mix_chain(), {1.0, 0.0}, 2);
  REQUIRE(traj.size() == 3);
  CHECK(traj[1][0] == 0.75);
  CHECK(traj[1][1] == 0.25);
  CHECK(traj[2][0] == 0.625);
  CHECK_THROWS_AS(simulate(mix_chain(), {1.0, 0.0, 0.0}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate(mix_chain(), {1.0, 0.0}, -1),
                  std::invalid_argument);
}

TEST_CASE("lyapunov function is the squared spread around the mean",
          "[ergodicity]") {
  CHECK(lyapunov({1.0, 0.0}) == 0.5);
  CHECK(lyapunov({0.75, 0.25}) == 0.125);
  CHECK(lyapunov({0.3, 0.3, 0.3}) == 0.0);
  CHECK_THROWS_AS(lyapunov({}), std::invalid_argument);
}

TEST_CASE("one-step lyapunov decrease identity", "[ergodicity]") {
  std::mt19937_64 g(53);
  for (int it = 0; it < 200; ++it) {
    int m = 2 + static_cast<int>(g() % 7);
    StochMatrix a = testsupport::random_doubly_stochastic(g, m, m);
    std::vector<double> x(static_cast<std::size_t>(m));
    for (double& v : x) v = 2.0 * unit_double(g) - 1.0;
    CHECK(lyapunov_decrease_identity_check(a, x));
  }
  CHECK_THROWS_AS(
      lyapunov_decrease_identity_check(StochMatrix(2, {1.0, 0.0, 1.0, 0.0}),
                                       {1.0, 0.0}),
      std::invalid_argument);
}

TEST_CASE("accumulation times on constant mixing chains", "[ergodicity]") {
  PermChain id = PermChain::identity(2);
  // Every cut of the two-state chain gains exactly 1/2 per step.
  CHECK(accumulation_times(mix_chain(), id, 0.5, 4) ==
        std::vector<long>{1, 2, 3, 4});
  CHECK(accumulation_times(mix_chain(), id, 0.6, 3) ==
        std::vector<long>{2, 4, 6});

  // The worst three-state cut gains 1/3 per step, so thresholds just above
  // it double the spacing.
  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  CHECK(accumulation_times(gate, PermChain::identity(3), 0.5, 3) ==
        std::vector<long>{2, 4, 6});

  CHECK_THROWS_AS(accumulation_times(mix_chain(), id, 0.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(accumulation_times(mix_chain(), id, 1.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(accumulation_times(mix_chain(), id, 0.5, 0),
                  std::invalid_argument);
}

TEST_CASE("accumulation starves when a trajectory stops receiving flow",
          "[ergodicity]") {
  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  PermChain psw = PermChain::constant(Permutation({1, 0}));
  // Under its own permutation component the swap chain moves no flow.
  CHECK_THROWS_AS(accumulation_times(sw, psw, 0.5, 2), FlowStarvation);
  try {
    accumulation_times(sw, psw, 0.5, 2);
  } catch (const FlowStarvation& e) {
    CHECK(e.starving.cardinality() == 1);
  }
  // Against the identity the same chain accumulates every step.
  CHECK(accumulation_times(sw, PermChain::identity(2), 0.5, 2) ==
        std::vector<long>{1, 2});
}

TEST_CASE("accumulation times match the entrywise oracle", "[ergodicity]") {
  std::mt19937_64 g(59);
  int starved = 0;
  for (int it = 0; it < 60; ++it) {
    int m = 2 + static_cast<int>(g() % 4);
    Chain chain = random_ds_chain(g, m, static_cast<int>(g() % 2),
                                  1 + static_cast<int>(g() % 3), m, true);
    PermChain pchain = random_perm_chain(g, m, static_cast<int>(g() % 2),
                                         1 + static_cast<int>(g() % 3));
    double delta = it % 2 == 0 ? 0.3 : 0.6;
    try {
      std::vector<long> mine =
          accumulation_times(chain, pchain, delta, 5);
      CHECK(mine == brute_accumulation_times(chain, pchain, delta, 5,
                                             default_zero_tol,
                                             4 * mine.back() + 100));
    } catch (const FlowStarvation&) {
      ++starved;
      CHECK_THROWS(brute_accumulation_times(chain, pchain, delta, 5,
                                            default_zero_tol, 2000));
    }
  }
  CHECK(starved < 60);
}

TEST_CASE("rate certificate for the two-state mixing chain", "[ergodicity]") {
  RateCertificate rc = rate_certificate(mix_chain(), {1.0, 0.0}, 0.5, 6);
  CHECK(rc.gamma == 0.75);
  CHECK(rc.delta == 0.5);
  CHECK(rc.contraction == 0.953125);
  CHECK(rc.times == std::vector<long>{1, 2, 3, 4, 5, 6});
  REQUIRE(rc.lyapunov_values.size() == 7);
  CHECK(rc.lyapunov_values[0] == 0.5);
  for (std::size_t q = 1; q < rc.lyapunov_values.size(); ++q)
    CHECK(rc.lyapunov_values[q] <=
          rc.contraction * rc.lyapunov_values[q - 1] + 1e-12);
}

TEST_CASE("rate certificate input validation", "[ergodicity]") {
  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  CHECK_THROWS_AS(rate_certificate(gate, {1.0, 0.0, 0.0}, 0.5, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(rate_certificate(mix_chain(), {1.0}, 0.5, 2),
                  std::invalid_argument);
  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  CHECK_THROWS_AS(rate_certificate(sw, {1.0, 0.0}, 0.5, 2), FlowStarvation);
}

TEST_CASE("rate certificates hold on random mixing chains", "[ergodicity]") {
  std::mt19937_64 g(61);
  for (int it = 0; it < 40; ++it) {
    int m = 2 + static_cast<int>(g() % 4);
    // Blend every drawn matrix with the uniform one so flow never starves.
    std::vector<StochMatrix> cyc;
    int len = 1 + static_cast<int>(g() % 3);
    for (int t = 0; t < len; ++t) {
      StochMatrix a = testsupport::random_doubly_stochastic(g, m, m);
      std::vector<double> e;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          e.push_back(0.75 * a(i, j) + 0.25 / m);
      cyc.emplace_back(m, std::move(e));
    }
    Chain chain(m, Flavor::doubly_stochastic, {}, std::move(cyc));
    std::vector<double> x0(static_cast<std::size_t>(m));
    for (double& v : x0) v = unit_double(g);
    double delta = it % 2 == 0 ? 1.0 / 3.0 : 0.5;
    RateCertificate rc = rate_certificate(chain, x0, delta, 4);
    CHECK(rc.contraction < 1.0);
    CHECK(rc.times.size() == 4);
  }
}

TEST_CASE("pairwise flow graph of mixing and non-mixing chains",
          "[ergodicity]") {
  InfiniteFlowGraph g1 =
      infinite_flow_graph(mix_chain(), PermChain::identity(2));
  CHECK(g1.edges == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(g1.connected());

  // The swap chain looks connected against the identity but has no flow at
  // all along its own permutation trajectories.
  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  CHECK(infinite_flow_graph(sw, PermChain::identity(2)).connected());
  InfiniteFlowGraph g2 =
      infinite_flow_graph(sw, PermChain::constant(Permutation({1, 0})));
  CHECK(g2.edges.empty());
  CHECK(g2.components() == std::vector<std::vector<int>>{{0}, {1}});

  // Block diagonal chain splits into its blocks.
  StochMatrix blocks(4, {0.75, 0.25, 0.0, 0.0, 0.25, 0.75, 0.0, 0.0, 0.0,
                         0.0, 0.75, 0.25, 0.0, 0.0, 0.25, 0.75});
  Chain bc = Chain::constant(blocks, Flavor::doubly_stochastic);
  InfiniteFlowGraph g3 = infinite_flow_graph(bc, PermChain::identity(4));
  CHECK(g3.edges == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  CHECK(g3.components() == std::vector<std::vector<int>>{{0, 1}, {2, 3}});
  CHECK_FALSE(g3.connected());
}

TEST_CASE("row spread of backward products at power-of-two horizons",
          "[ergodicity]") {
  auto tr = spread_trace(mix_chain(), 4);
  REQUIRE(tr.size() == 5);
  CHECK(tr[0] == std::pair<long, double>{1, 0.5});
  CHECK(tr[1] == std::pair<long, double>{2, 0.25});
  CHECK(tr[2] == std::pair<long, double>{4, 0.0625});
  CHECK(tr[4].first == 16);
  CHECK(tr[4].second == std::pow(2.0, -16));
  CHECK_THROWS_AS(spread_trace(mix_chain(), 31), std::invalid_argument);
}

TEST_CASE("ergodicity verdicts on the reference chains", "[ergodicity]") {
  ErgodicityVerdict v1 = ergodicity_verdict(mix_chain());
  CHECK(v1.status == ErgodicStatus::ergodic);
  CHECK(v1.reason == ErgodicReason::absolute_flow_equivalence);
  CHECK_FALSE(v1.witness.has_value());

  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  ErgodicityVerdict v2 = ergodicity_verdict(sw);
  CHECK(v2.status == ErgodicStatus::not_ergodic);
  REQUIRE(v2.witness.has_value());
  CHECK_FALSE(total_flow(sw, *v2.witness).infinite);

  Chain id2 = Chain::constant(StochMatrix::identity(2),
                              Flavor::doubly_stochastic);
  CHECK(ergodicity_verdict(id2).status == ErgodicStatus::not_ergodic);

  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  ErgodicityVerdict v3 = ergodicity_verdict(gate, default_zero_tol, 6);
  CHECK(v3.status == ErgodicStatus::undecided);
  CHECK(v3.reason == ErgodicReason::numerical_only);
  REQUIRE(v3.spread.size() == 7);
  CHECK(v3.spread.back().second == 1.0);

  Chain mix(2, Flavor::doubly_stochastic, {},
            {swap2(), StochMatrix::uniform(2)});
  CHECK(ergodicity_verdict(mix).status == ErgodicStatus::ergodic);
}

TEST_CASE("limits modulo the permutation component", "[ergodicity]") {
  LimitResult lr = limit_up_to_permutation(mix_chain(), 0, 40);
  CHECK(lr.q.is_identity());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(lr.limit(i, j) - 0.5) <= 1e-10);
  CHECK(lr.clusters == std::vector<std::vector<int>>{{0, 1}});

  // Pure swap: the unrotated product is exactly the identity at any horizon.
  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  LimitResult ls = limit_up_to_permutation(sw, 0, 7);
  CHECK(ls.q.map() == std::vector<int>{1, 0});
  CHECK(StochMatrix::max_abs_diff(ls.limit, StochMatrix::identity(2)) == 0.0);
  CHECK(ls.clusters == std::vector<std::vector<int>>{{0}, {1}});

  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  CHECK_THROWS_AS(limit_up_to_permutation(gate, 0, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(limit_up_to_permutation(mix_chain(), 5, 4),
                  std::invalid_argument);
}
