#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "test_support.hpp"

using namespace stochflow;
using testsupport::brute_step_flow;
using testsupport::random_regular_seq;
using testsupport::random_sparse_stochastic;
using testsupport::random_stoch_chain;

namespace {

StochMatrix swap2() { return StochMatrix(2, {0.0, 1.0, 1.0, 0.0}); }
StochMatrix mix2() { return StochMatrix(2, {0.75, 0.25, 0.25, 0.75}); }
StochMatrix gate3() {
  return StochMatrix(3, {1.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0,
                         0.0, 1.0});
}

}  // namespace

TEST_CASE("set flow sums both directions across a cut", "[flow]") {
  CHECK(set_flow(mix2(), IndexSet::from_indices(2, {0})) == 0.5);
  CHECK(set_flow(gate3(), IndexSet::from_indices(3, {0})) == 1.0 / 3.0);
  CHECK(set_flow(gate3(), IndexSet::from_indices(3, {1})) == 2.0 / 3.0);
  CHECK(set_flow(gate3(), IndexSet::from_indices(3, {0, 1})) == 1.0 / 3.0);
}

TEST_CASE("step flow between equal-cardinality sets", "[flow]") {
  IndexSet s0 = IndexSet::from_indices(2, {0});
  IndexSet s1 = IndexSet::from_indices(2, {1});
  CHECK(step_flow(swap2(), s1, s0) == 0.0);
  CHECK(step_flow(swap2(), s0, s0) == 2.0);
  CHECK(step_flow(mix2(), s1, s0) == 1.5);
  // step_flow(A, S, S) is the cut flow.
  CHECK(step_flow(mix2(), s0, s0) == set_flow(mix2(), s0));
  CHECK_THROWS_AS(step_flow(gate3(), IndexSet::from_indices(3, {0}),
                            IndexSet::from_indices(3, {0, 1})),
                  std::invalid_argument);
}

TEST_CASE("step flow matches the entrywise oracle", "[flow]") {
  std::mt19937_64 g(17);
  for (int it = 0; it < 200; ++it) {
    int m = 2 + static_cast<int>(g() % 5);
    StochMatrix a = testsupport::random_dyadic_stochastic(g, m);
    int card = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(m - 1));
    IndexSet cur = testsupport::random_set_of_cardinality(g, m, card);
    IndexSet nxt = testsupport::random_set_of_cardinality(g, m, card);
    CHECK(step_flow(a, nxt, cur) == brute_step_flow(a, nxt, cur, 0.0));
  }
}

TEST_CASE("total flow of a matched swap sequence is exactly zero", "[flow]") {
  Chain chain = Chain::constant(swap2(), Flavor::doubly_stochastic);
  RegularSeq alt(2, {},
                 {IndexSet::from_indices(2, {0}), IndexSet::from_indices(2, {1})});
  FlowReport rep = total_flow(chain, alt);
  CHECK_FALSE(rep.infinite);
  REQUIRE(rep.finite_value.has_value());
  CHECK(*rep.finite_value == 0.0);
  CHECK(rep.per_period_flow == 0.0);
}

TEST_CASE("total flow diverges for a static set under the swap chain",
          "[flow]") {
  Chain chain = Chain::constant(swap2(), Flavor::doubly_stochastic);
  RegularSeq still(2, {}, {IndexSet::from_indices(2, {0})});
  FlowReport rep = total_flow(chain, still);
  CHECK(rep.infinite);
  CHECK(rep.per_period_flow == 2.0);
  CHECK_FALSE(rep.finite_value.has_value());
}

TEST_CASE("total flow splits prefix from periodic part", "[flow]") {
  Chain chain(2, Flavor::doubly_stochastic, {StochMatrix::uniform(2)},
              {swap2()});
  RegularSeq alt(2, {},
                 {IndexSet::from_indices(2, {0}), IndexSet::from_indices(2, {1})});
  FlowReport rep = total_flow(chain, alt);
  CHECK_FALSE(rep.infinite);
  CHECK(rep.period_start == 1);
  CHECK(rep.period_length == 2);
  CHECK(rep.prefix_flow == 1.0);
  CHECK(*rep.finite_value == 1.0);
}

TEST_CASE("infinite flow decider on static cuts", "[flow]") {
  Chain sw = Chain::constant(swap2(), Flavor::doubly_stochastic);
  CHECK(has_infinite_flow(sw).holds);

  Chain id = Chain::constant(StochMatrix::identity(2),
                             Flavor::doubly_stochastic);
  InfiniteFlowResult r = has_infinite_flow(id);
  CHECK_FALSE(r.holds);
  REQUIRE(r.witness.has_value());
  CHECK(*r.witness == IndexSet::from_indices(2, {0}));

  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  CHECK(has_infinite_flow(gate).holds);

  Chain one(1, Flavor::stochastic, {}, {StochMatrix::identity(1)});
  CHECK_THROWS_AS(has_infinite_flow(one), std::invalid_argument);
}

TEST_CASE("entries at or below the zero tolerance are exact zeros",
          "[flow]") {
  double eps = 1e-13;
  StochMatrix nearly(2, {1.0 - eps, eps, eps, 1.0 - eps});
  Chain chain = Chain::constant(nearly, Flavor::doubly_stochastic);
  // Raw flow is positive but the decider treats it as zero.
  CHECK(set_flow(nearly, IndexSet::from_indices(2, {0})) > 0.0);
  CHECK_FALSE(has_infinite_flow(chain).holds);
  CHECK_FALSE(has_absolute_infinite_flow(chain).holds);
  // With a tighter tolerance the same chain has infinite flow.
  CHECK(has_infinite_flow(chain, 1e-14).holds);
}

TEST_CASE("absolute flow fails on the swap chain with an alternating witness",
          "[flow]") {
  Chain chain = Chain::constant(swap2(), Flavor::doubly_stochastic);
  AbsoluteFlowResult r = has_absolute_infinite_flow(chain);
  CHECK_FALSE(r.holds);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->cardinality() == 1);
  FlowReport rep = total_flow(chain, *r.witness);
  CHECK_FALSE(rep.infinite);
  CHECK(*rep.finite_value == 0.0);
}

TEST_CASE("absolute flow on identity, gate, and mixing cycles", "[flow]") {
  Chain id = Chain::constant(StochMatrix::identity(2),
                             Flavor::doubly_stochastic);
  AbsoluteFlowResult r = has_absolute_infinite_flow(id);
  CHECK_FALSE(r.holds);
  REQUIRE(r.witness.has_value());
  CHECK(total_flow(id, *r.witness).finite_value.value() == 0.0);

  // Every proposed step either keeps or crosses positive mass here.
  Chain gate = Chain::constant(gate3(), Flavor::stochastic);
  CHECK(has_absolute_infinite_flow(gate).holds);

  // A uniform step inside the cycle forces flow on every regular sequence.
  Chain mix(2, Flavor::doubly_stochastic, {},
            {swap2(), StochMatrix::uniform(2)});
  CHECK(has_absolute_infinite_flow(mix).holds);

  Chain big = Chain::constant(StochMatrix::identity(13), Flavor::stochastic);
  CHECK_THROWS_AS(has_absolute_infinite_flow(big), CapacityError);
}

TEST_CASE("absolute flow witnesses are sound on random chains", "[flow]") {
  std::mt19937_64 g(23);
  int failures_seen = 0;
  for (int it = 0; it < 60; ++it) {
    int m = 2 + static_cast<int>(g() % 4);
    Chain chain = [&] {
      // Routing-like draws can starve cuts; dense dyadic draws cannot.
      if (it % 2 == 0) {
        std::vector<StochMatrix> pre, cyc;
        for (std::uint64_t i = 0, n = g() % 2; i < n; ++i)
          pre.push_back(random_sparse_stochastic(g, m));
        for (std::uint64_t i = 0, n = 1 + g() % 3; i < n; ++i)
          cyc.push_back(random_sparse_stochastic(g, m));
        return Chain(m, Flavor::stochastic, std::move(pre), std::move(cyc));
      }
      return random_stoch_chain(g, m, static_cast<int>(g() % 2),
                                1 + static_cast<int>(g() % 3), true, 3);
    }();
    AbsoluteFlowResult r = has_absolute_infinite_flow(chain);
    if (!r.holds) {
      ++failures_seen;
      REQUIRE(r.witness.has_value());
      FlowReport rep = total_flow(chain, *r.witness);
      CHECK_FALSE(rep.infinite);
      // Re-verify one full period entrywise past the joint prefix.
      long n0 = std::max(chain.prefix_length(), r.witness->prefix_length());
      long period = std::lcm(chain.cycle_length(), r.witness->cycle_length());
      for (long k = n0; k < n0 + period; ++k)
        CHECK(brute_step_flow(chain.matrix_at(k), r.witness->set_at(k + 1),
                              r.witness->set_at(k),
                              default_zero_tol) == 0.0);
    } else {
      for (int s = 0; s < 10; ++s) {
        RegularSeq seq = random_regular_seq(g, m, static_cast<int>(g() % 2),
                                            1 + static_cast<int>(g() % 3));
        CHECK(total_flow(chain, seq).infinite);
      }
    }
  }
  // Routing draws can starve cuts, dense draws cannot; both branches must run.
  CHECK(failures_seen > 0);
  CHECK(failures_seen < 60);
}

TEST_CASE("singleton trajectories under permutation chains", "[flow]") {
  PermChain sw = PermChain::constant(Permutation({1, 0}));
  RegularSeq tr = trajectory(sw, IndexSet::from_indices(2, {0}));
  CHECK(tr.prefix_length() == 0);
  CHECK(tr.cycle_length() == 2);
  CHECK(tr.set_at(0) == IndexSet::from_indices(2, {0}));
  CHECK(tr.set_at(1) == IndexSet::from_indices(2, {1}));

  PermChain mixed(2, {Permutation::identity(2)}, {Permutation({1, 0})});
  RegularSeq tr2 = trajectory(mixed, IndexSet::from_indices(2, {0}));
  CHECK(tr2.prefix_length() == 1);
  CHECK(tr2.cycle_length() == 2);
  CHECK(tr2.set_at(0) == IndexSet::from_indices(2, {0}));
  CHECK(tr2.set_at(1) == IndexSet::from_indices(2, {0}));
  CHECK(tr2.set_at(2) == IndexSet::from_indices(2, {1}));
  CHECK(tr2.set_at(3) == IndexSet::from_indices(2, {0}));
}
