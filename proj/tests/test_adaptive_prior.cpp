#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "graphgrpo/adaptive_prior.hpp"
#include "graphgrpo/canonical.hpp"
#include "graphgrpo/rewards.hpp"
#include "helpers.hpp"

using namespace graphgrpo;

namespace {

GraphPriors start_priors() {
  return GraphPriors{CategoricalDistribution::uniform(1), CategoricalDistribution({0.7, 0.3}),
                     CategoricalDistribution::from_weights({0, 0, 1, 1, 1, 1, 1, 1, 2})};
}

double simplex_error(const CategoricalDistribution& d) {
  double s = 0.0;
  for (double p : d.probs()) {
    if (p < 0.0) return 1.0;
    s += p;
  }
  return std::abs(s - 1.0);
}

}  // namespace

TEST_SUITE("adaptive_prior") {

TEST_CASE("buffer merge examples") {
  RewardBuffer buf(10);
  std::vector<ScoredGraph> three = {{testutil::path_graph(3), 0.2},
                                    {testutil::path_graph(4), 0.9},
                                    {testutil::complete_graph(3), 0.5}};
  buf.merge(three);
  REQUIRE(buf.size() == 3);
  CHECK(buf.entries()[0].reward == 0.9);
  CHECK(buf.entries()[1].reward == 0.5);
  CHECK(buf.entries()[2].reward == 0.2);
  std::vector<ScoredGraph> dup = {{testutil::path_graph(4).permuted(std::vector<int>{3, 2, 1, 0}), 0.1}};
  CHECK(buf.merge(dup) == 0);
  CHECK(buf.entries()[0].reward == 0.9);
  std::vector<ScoredGraph> better = {{testutil::path_graph(3), 0.95}};
  CHECK(buf.merge(better) == 1);
  CHECK(buf.entries()[0].reward == 0.95);
  CHECK(buf.size() == 3);
  std::vector<ScoredGraph> low = {{GraphState(2), 0.0}};
  buf.merge(low);
  CHECK(buf.size() == 3);  // at the default min_reward of 0
  CHECK(buf.mean_reward() == doctest::Approx((0.95 + 0.9 + 0.5) / 3));
}

TEST_CASE("capacity keeps exactly the highest rewards") {
  RandomStream rng(1);
  std::vector<ScoredGraph> cands;
  std::vector<double> rewards;
  std::set<std::string> seen;
  while (cands.size() < 1500) {
    auto g = random_tree(16, rng);
    if (!seen.insert(canonical_key(g)).second) continue;
    double r = rng.uniform() + 1e-9;
    cands.push_back({g, r});
    rewards.push_back(r);
  }
  RewardBuffer buf(1000);
  buf.merge(cands);
  REQUIRE(buf.size() == 1000);
  std::sort(rewards.begin(), rewards.end(), std::greater<>());
  for (std::size_t i = 0; i < 1000; ++i) CHECK(buf.entries()[i].reward == rewards[i]);
}

TEST_CASE("buffer contents do not depend on insertion order") {
  RandomStream rng(2);
  std::vector<ScoredGraph> cands;
  for (int i = 0; i < 400; ++i) {
    auto g = random_tree(7, rng);
    // Coarse rewards so that ties and duplicates are common.
    cands.push_back({g, 0.1 * (1 + static_cast<int>(rng.uniform_index(5)))});
  }
  RewardBuffer a(25);
  for (std::size_t i = 0; i < cands.size(); i += 37) {
    a.merge(std::span(cands).subspan(i, std::min<std::size_t>(37, cands.size() - i)));
  }
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = cands;
    auto perm = testutil::random_permutation(static_cast<int>(cands.size()), rng);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      auto g = cands[i].graph;
      shuffled[perm[i]] = {g.permuted(testutil::random_permutation(g.num_nodes(), rng)), cands[i].reward};
    }
    RewardBuffer b(25);
    for (std::size_t i = 0; i < shuffled.size(); i += 11) {
      b.merge(std::span(shuffled).subspan(i, std::min<std::size_t>(11, shuffled.size() - i)));
    }
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.entries()[i].key == b.entries()[i].key);
      CHECK(a.entries()[i].reward == b.entries()[i].reward);
      CHECK(a.entries()[i].graph == b.entries()[i].graph);
    }
  }
}

TEST_CASE("size probability follows the geometric closed form") {
  RewardBuffer buf(100);
  RandomStream rng(3);
  std::vector<ScoredGraph> eights;
  for (int i = 0; i < 30; ++i) eights.push_back({random_tree(8, rng), 0.5 + 0.01 * i});
  buf.merge(eights);
  AdaptivePriors ap(start_priors());
  const double p0 = start_priors().size[8];
  double worst = 0.0;
  for (int k = 1; k <= 100; ++k) {
    ap.ema_update(buf);
    double expect = 1.0 - std::pow(0.95, k) * (1.0 - p0);
    worst = std::max(worst, std::abs(ap.priors().size[8] - expect));
  }
  CHECK(worst < 1e-12);
  CHECK(ap.updates() == 100);
}

TEST_CASE("fixed point, zero momentum and empty buffer") {
  // A buffer whose histograms equal the prior leaves it unchanged.
  RewardBuffer buf(10);
  std::vector<ScoredGraph> gs = {{testutil::from_edges(3, {{0, 1}}), 0.5}};
  buf.merge(gs);
  auto h = buffer_histograms(buf, LabelSpace{1, 2});
  GraphPriors matched{CategoricalDistribution::uniform(1), CategoricalDistribution(h.edge),
                      CategoricalDistribution(h.size)};
  AdaptivePriors ap(matched);
  ap.ema_update(buf);
  for (int i = 0; i < 2; ++i) CHECK(ap.priors().edge[i] == doctest::Approx(matched.edge[i]).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) CHECK(ap.priors().size[i] == doctest::Approx(matched.size[i]).epsilon(1e-12));

  AdaptivePriors frozen(start_priors(), AdaptivePriorConfig{0.0, 0.001});
  frozen.ema_update(buf);
  CHECK(frozen.priors().edge == start_priors().edge);
  for (int i = 0; i < 9; ++i) CHECK(frozen.priors().size[i] == doctest::Approx(start_priors().size[i]).epsilon(1e-14));

  AdaptivePriors idle(start_priors());
  idle.ema_update(RewardBuffer(5));
  CHECK(idle.updates() == 0);
  CHECK(idle.priors().size == start_priors().size);
}

TEST_CASE("trigger is strict") {
  RewardBuffer buf(10);
  std::vector<ScoredGraph> gs = {{testutil::path_graph(8), 0.9}};
  buf.merge(gs);
  AdaptivePriors ap(start_priors());
  CHECK_FALSE(ap.maybe_update(buf, 0.0005));
  CHECK(ap.priors().size == start_priors().size);
  CHECK_FALSE(ap.maybe_update(buf, 0.001));
  CHECK(ap.maybe_update(buf, 0.01));
  CHECK(ap.updates() == 1);
}

TEST_CASE("updates stay on the simplex and keep the floor") {
  RandomStream rng(4);
  AdaptivePriors ap(start_priors());
  RewardBuffer buf(50);
  for (int round = 0; round < 40; ++round) {
    std::vector<ScoredGraph> cands;
    for (int i = 0; i < 5; ++i) {
      int n = 3 + static_cast<int>(rng.uniform_index(10));
      cands.push_back({testutil::random_graph(n, 0.9, rng), rng.uniform() + 1e-6});
    }
    buf.merge(cands);
    ap.ema_update(buf);
    CHECK(simplex_error(ap.priors().node) < 1e-9);
    CHECK(simplex_error(ap.priors().edge) < 1e-9);
    CHECK(simplex_error(ap.priors().size) < 1e-9);
    CHECK(ap.priors().edge.has_full_support());
  }
  // Sizes up to 12 appeared, so the size support grew.
  CHECK(ap.priors().size.size() >= 13);
}

}
