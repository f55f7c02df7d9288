#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

#include "doctest.h"
#include "graphgrpo/canonical.hpp"
#include "graphgrpo/refinement.hpp"
#include "graphgrpo/rollout.hpp"
#include "helpers.hpp"

using namespace graphgrpo;

namespace {

GraphPriors tree_priors(int n) {
  return GraphPriors{CategoricalDistribution::uniform(1), CategoricalDistribution({0.75, 0.25}),
                     CategoricalDistribution::onehot(n + 1, n)};
}

Denoiser small_model(std::uint64_t seed) {
  DenoiserConfig c;
  c.hidden = 16;
  c.output_init_scale = 1.0;
  return Denoiser(c, seed);
}

// Reward with many distinct values: fewer edges is better, ties broken by degrees.
double edge_reward(const GraphState& g) {
  auto d = g.degrees();
  double s = 0.0;
  for (int x : d) s += x * x;
  return 1.0 / (1.0 + g.num_edges() + 0.01 * s);
}

}  // namespace

TEST_SUITE("refinement") {

TEST_CASE("renoise limits") {
  RandomStream rng(1);
  auto pri = tree_priors(6);
  auto g = testutil::path_graph(6);
  CHECK(renoise(g, 1.0, pri, rng) == g);
  // t_eps = 0 ignores the input: pair labels follow the prior.
  int edges = 0, pairs = 0;
  for (int i = 0; i < 4000; ++i) {
    auto r = renoise(testutil::complete_graph(6), 0.0, pri, rng);
    edges += r.num_edges();
    pairs += r.num_pairs();
  }
  CHECK(static_cast<double>(edges) / pairs == doctest::Approx(0.25).epsilon(0.03));
  CHECK_THROWS_AS(renoise(g, 1.5, pri, rng), std::domain_error);
}

TEST_CASE("renoise changes the expected number of dimensions") {
  // The first 100 binary pair dimensions of a 15-node graph.
  GraphPriors pri{CategoricalDistribution::uniform(1), CategoricalDistribution::uniform(2),
                  CategoricalDistribution::onehot(16, 15)};
  RandomStream rng(2);
  GraphState g(15);
  for (int p = 0; p < g.num_pairs(); p += 2) g.set_dim(15 + p, 1);
  double total = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto r = renoise(g, 0.8, pri, rng);
    int changed = 0;
    for (int p = 0; p < 100; ++p) changed += r.dim(15 + p) != g.dim(15 + p);
    total += changed;
  }
  double mean = total / trials;
  CHECK(mean >= 9.7);
  CHECK(mean <= 10.3);
}

TEST_CASE("renoise marginal matches the noising path") {
  GraphPriors pri{CategoricalDistribution({0.5, 0.3, 0.2}), CategoricalDistribution({0.6, 0.4}),
                  CategoricalDistribution::onehot(2, 1)};
  RandomStream rng(3);
  const double t_eps = 0.6;
  for (int z = 0; z < 3; ++z) {
    GraphState g(1);
    g.set_node(0, z);
    std::vector<double> freq(3, 0.0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) freq[renoise(g, t_eps, pri, rng).node(0)] += 1.0 / trials;
    double tv = 0.0;
    for (int l = 0; l < 3; ++l) tv += 0.5 * std::abs(freq[l] - (t_eps * (l == z) + (1 - t_eps) * pri.node[l]));
    CHECK(tv < 0.01);
  }
}

TEST_CASE("resume step sits on the grid") {
  CHECK(resume_step(0.8, 50) == 40);
  CHECK(resume_step(0.7, 50) == 35);
  CHECK(resume_step(0.3, 50) == 15);
  CHECK(resume_step(0.81, 50) == 41);
  CHECK(resume_step(0.0, 50) == 0);
  CHECK(resume_step(1.0, 50) == 50);
}

TEST_CASE("priority pool semantics") {
  PriorityPool pool(3);
  std::vector<GraphState> gs;
  for (int n = 1; n <= 6; ++n) gs.push_back(testutil::path_graph(n));
  CHECK(pool.offer(gs[0], 0.5, 1));
  CHECK(pool.offer(gs[1], 0.5, 2));
  CHECK(pool.offer(gs[2], 0.9, 3));
  // Equal rewards keep discovery order.
  CHECK(pool.entries()[1].discovery == 1);
  CHECK(pool.entries()[2].discovery == 2);
  // A tie with the minimum does not enter a full pool.
  CHECK_FALSE(pool.offer(gs[3], 0.5, 4));
  // Strictly better than the minimum always enters.
  CHECK(pool.offer(gs[3], 0.51, 5));
  CHECK(pool.size() == 3);
  CHECK(pool.min_reward() == 0.5);
  CHECK(pool.best_reward() == 0.9);
  // An isomorphic copy is a duplicate: ignored unless better.
  auto copy = gs[2].permuted(std::vector<int>{2, 1, 0});
  CHECK_FALSE(pool.offer(copy, 0.8, 6));
  CHECK(pool.offer(copy, 0.95, 7));
  CHECK(pool.size() == 3);
  std::set<std::string> keys;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    keys.insert(pool.entries()[i].key);
    if (i > 0) CHECK(pool.entries()[i - 1].reward >= pool.entries()[i].reward);
  }
  CHECK(keys.size() == pool.size());
  CHECK_THROWS(PriorityPool(0));
}

TEST_CASE("budget schedule phases") {
  BudgetSchedule s;
  CHECK(s.phase_at(0) == 0);
  CHECK(s.phase_at(299) == 0);
  CHECK(s.phase_at(300) == 1);
  CHECK(s.phase_at(1999) == 1);
  CHECK(s.phase_at(2000) == 2);
  CHECK(s.variants_at(300) == 150);
  CHECK(s.variants_at(5000) == 500);
  CHECK(s.phase_limit(400) == 2000);
  CHECK(s.phase_limit(2500) == 10000);
  BudgetSchedule bad;
  bad.phase1_end = 100;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("run_refinement accounting and phase boundaries") {
  auto model = small_model(1);
  auto pri = tree_priors(5);
  std::atomic<int> invocations{0};
  CountingOracle oracle([&](const GraphState& g) {
    ++invocations;
    return edge_reward(g);
  });
  BudgetSchedule s{30, 7, 120, 11, 400};
  RefineSettings set;
  set.steps = 10;
  auto res = run_refinement(model, oracle, s, pri, set, RandomStream(2));
  CHECK(res.oracle_calls == 400);
  CHECK(oracle.calls() == 400);
  CHECK(invocations.load() == 400);
  REQUIRE(res.log.size() == 400);
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    CHECK(res.log[i].call_index == i + 1);
    int expect = i < 30 ? 0 : i < 120 ? 1 : 2;
    CHECK(res.log[i].phase == expect);
    CHECK(res.log[i].refined == (i >= 30));
  }
  auto curve = top_k_curve(res.log, 10);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] >= curve[i - 1] - 1e-12);
}

TEST_CASE("a 300-call budget is pure de novo sampling") {
  auto model = small_model(3);
  auto pri = tree_priors(5);
  CountingOracle a(edge_reward), b(edge_reward);
  BudgetSchedule s;
  s.total_budget = 300;
  RefineSettings set;
  set.steps = 10;
  auto ref = run_refinement(model, a, s, pri, set, RandomStream(4));
  auto dn = run_denovo(model, b, 300, pri, set, RandomStream(4));
  CHECK(ref.oracle_calls == 300);
  REQUIRE(ref.pool.size() == dn.pool.size());
  for (std::size_t i = 0; i < ref.pool.size(); ++i) {
    CHECK(ref.pool.entries()[i].key == dn.pool.entries()[i].key);
    CHECK(ref.pool.entries()[i].reward == dn.pool.entries()[i].reward);
  }
  for (const auto& rec : ref.log) CHECK_FALSE(rec.refined);
}

TEST_CASE("constant rewards leave the pool unchanged") {
  auto model = small_model(5);
  auto pri = tree_priors(5);
  CountingOracle oracle([](const GraphState&) { return 0.5; });
  RefineSettings set;
  set.steps = 10;
  PriorityPool pool(5);
  pool.offer(testutil::path_graph(5), 0.5, 1);
  pool.offer(testutil::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}), 0.5, 6);
  pool.offer(testutil::from_edges(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}}), 0.5, 7);
  pool.offer(testutil::from_edges(5, {{0, 1}}), 0.5, 8);
  pool.offer(testutil::from_edges(5, {}), 0.5, 9);
  REQUIRE(pool.size() == 5);
  auto before = pool.entries();
  for (int round = 0; round < 3; ++round) {
    refine_round(pool, model, 20, oracle, 1000, pri, set, RandomStream(8).derive(round), 1, nullptr);
  }
  REQUIRE(pool.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(pool.entries()[i].key == before[i].key);
}

TEST_CASE("pool minimum never decreases and rounds truncate at the limit") {
  auto model = small_model(9);
  auto pri = tree_priors(6);
  CountingOracle oracle(edge_reward);
  RefineSettings set;
  set.steps = 10;
  set.t_eps = 0.5;
  auto init = run_denovo(model, oracle, 20, pri, set, RandomStream(10));
  PriorityPool pool = init.pool;
  double last_min = pool.min_reward();
  std::vector<ScoreRecord> log;
  for (int round = 0; round < 5; ++round) {
    auto st = refine_round(pool, model, 8, oracle, 1000, pri, set, RandomStream(11).derive(round), 1, &log);
    CHECK(st.generated == 8 * 5);
    CHECK(pool.min_reward() >= last_min);
    last_min = pool.min_reward();
  }
  CHECK(oracle.calls() == 20 + 5 * 40);
  auto st = refine_round(pool, model, 8, oracle, oracle.calls() + 13, pri, set, RandomStream(12), 1, &log);
  CHECK(st.truncated);
  CHECK(st.generated == 13);
  for (const auto& r : log) {
    CHECK(r.refined);
    CHECK(r.phase == 1);
  }
}

TEST_CASE("refinement keeps the node count and is thread-independent") {
  auto model = small_model(13);
  auto pri = tree_priors(6);
  RefineSettings one;
  one.steps = 10;
  RefineSettings many = one;
  many.threads = 4;
  BudgetSchedule s{10, 5, 40, 6, 80};
  CountingOracle a(edge_reward), b(edge_reward);
  auto ra = run_refinement(model, a, s, pri, one, RandomStream(14));
  auto rb = run_refinement(model, b, s, pri, many, RandomStream(14));
  REQUIRE(ra.log.size() == rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) {
    CHECK(ra.log[i].key == rb.log[i].key);
    CHECK(ra.log[i].reward == rb.log[i].reward);
  }
  for (const auto& e : ra.pool.entries()) CHECK(e.graph.num_nodes() == 6);
}

TEST_CASE("top-k curve over unique keys") {
  std::vector<ScoreRecord> log = {
      {1, 0.5, "a", 0, false}, {2, 0.7, "b", 0, false}, {3, 0.9, "a", 0, false},
      {4, 0.1, "c", 0, false}, {5, 0.7, "b", 0, false}};
  auto c = top_k_curve(log, 2);
  REQUIRE(c.size() == 5);
  CHECK(c[0] == doctest::Approx(0.25));
  CHECK(c[1] == doctest::Approx(0.6));
  CHECK(c[2] == doctest::Approx(0.8));
  CHECK(c[3] == doctest::Approx(0.8));
  CHECK(c[4] == doctest::Approx(0.8));
  CHECK(auc_top_k(log, 2) == doctest::Approx((0.25 + 0.6 + 0.8 * 3) / 5));
  // A key that improves after falling out of the top-k must not displace a
  // different key with the same old value.
  std::vector<ScoreRecord> tie = {
      {1, 0.3, "x", 0, false}, {2, 0.3, "y", 0, false}, {3, 0.9, "z", 0, false},
      {4, 0.5, "x", 0, false}};
  auto t = top_k_curve(tie, 2);
  CHECK(t[2] == doctest::Approx(0.6));
  CHECK(t[3] == doctest::Approx(0.7));
  CHECK(auc_top_k({}, 10) == 0.0);
}

}
