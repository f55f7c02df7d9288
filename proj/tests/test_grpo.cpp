#include <cmath>

#include "doctest.h"
#include "graphgrpo/grpo.hpp"
#include "graphgrpo/oracle.hpp"
#include "helpers.hpp"

using namespace graphgrpo;

namespace {

// Independent piecewise form of the clipped surrogate.
double closed_form_loss(double r, double a, double lo, double hi) {
  if (a >= 0) return r <= 1 + hi ? r * a : (1 + hi) * a;
  return r >= 1 - lo ? r * a : (1 - lo) * a;
}

GraphPriors bandit_priors() {
  return GraphPriors{CategoricalDistribution::uniform(2), CategoricalDistribution::uniform(2),
                     CategoricalDistribution::onehot(2, 1)};
}

Denoiser bandit_model(std::uint64_t seed) {
  DenoiserConfig c;
  c.node_classes = 2;
  c.hidden = 32;
  return Denoiser(c, seed);
}

double p_label_one(const Denoiser& m, int steps) {
  return oracle::exact_chain_distribution(m, {0.5, 0.5}, steps)[1];
}

std::vector<RolloutGroup> sample_groups(const Denoiser& model, const GraphPriors& pri, int count,
                                        int k, int steps, std::uint64_t seed,
                                        const RewardFn& reward) {
  std::vector<RolloutGroup> groups;
  for (int gi = 0; gi < count; ++gi) {
    RandomStream rng = RandomStream(seed).derive(gi);
    auto origin = sample_noise_graph(pri, rng);
    auto g = collect_group(model, origin, k, steps, pri, rng.split(1));
    std::vector<double> r;
    for (auto& t : g.trajectories) r.push_back(t.reward = reward(t.final_graph()));
    g.advantages = compute_advantages(r);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

TEST_SUITE("grpo") {

TEST_CASE("step_loss examples") {
  GrpoConfig cfg;
  CHECK(step_loss(1.0, 2.0, cfg) == 2.0);
  CHECK(step_loss(1.5, 1.0, cfg) == doctest::Approx(1.28).epsilon(1e-15));
  CHECK(step_loss(0.5, -1.0, cfg) == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("step_loss grid matches the closed form in both clip regimes") {
  GrpoConfig cfg;
  for (int i = 1; i <= 300; ++i) {
    double r = 0.01 * i;
    for (double a : {-3.0, -1.0, -0.25, 0.0, 0.5, 1.0, 4.0}) {
      CHECK(step_loss(r, a, cfg) == closed_form_loss(r, a, cfg.eps_low, cfg.eps_high));
    }
  }
  for (double a : {-2.0, -0.5, 0.0, 0.3, 7.0}) CHECK(step_loss(1.0, a, cfg) == a);
}

TEST_CASE("step_loss monotonicity and derivative") {
  GrpoConfig cfg;
  for (double a : {1.0, -1.0}) {
    double prev = step_loss(0.01, a, cfg);
    for (int i = 2; i <= 300; ++i) {
      double r = 0.01 * i;
      double v = step_loss(r, a, cfg);
      if (a > 0) {
        CHECK(v >= prev);
        if (r > 1 + cfg.eps_high) CHECK(v == prev);
      } else {
        CHECK(v <= prev);
        if (r > 1.0) CHECK(v < prev);
        if (r - 0.01 < 1 - cfg.eps_low) CHECK(v == doctest::Approx(prev));
      }
      prev = v;
    }
  }
  CHECK(step_loss_dratio(1.5, 1.0, cfg) == 0.0);
  CHECK(step_loss_dratio(1.1, 1.0, cfg) == 1.0);
  CHECK(step_loss_dratio(0.5, -1.0, cfg) == 0.0);
  CHECK(step_loss_dratio(0.5, 1.0, cfg) == 1.0);
  CHECK(step_loss_dratio(1.5, -1.0, cfg) == -1.0);
}

TEST_CASE("kl point estimate") {
  CHECK(kl_point(0.4, 0.4) == 0.0);
  CHECK(kl_point(0.5, 0.25) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(kl_point(0.1, 0.9) == doctest::Approx(-0.219722).epsilon(1e-6));
  CHECK(kl_point_log(std::log(0.5), std::log(0.25)) == doctest::Approx(0.346574).epsilon(1e-6));
  auto before = kl_floor_count();
  double v = kl_point(0.5, 0.0);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(0.5 * std::log(0.5 / 1e-12)));
  CHECK(kl_floor_count() == before + 1);
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(kl_point(rng.uniform() + 1e-9, rng.uniform() + 1e-9) >= -1.0 / std::exp(1.0) - 1e-12);
}

TEST_CASE("config validation and batch arithmetic") {
  GrpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.groups_per_update() == 4);
  GrpoConfig bad = cfg;
  bad.eps_low = 0.3;
  bad.eps_high = 0.2;
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.beta = -1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("on-policy objective: unit ratios, no clipping, zero policy term") {
  DenoiserConfig c;
  c.hidden = 16;
  c.output_init_scale = 1.0;
  Denoiser model(c, 3);
  GraphPriors pri{CategoricalDistribution::uniform(1), CategoricalDistribution({0.7, 0.3}),
                  CategoricalDistribution::onehot(6, 5)};
  RewardFn reward = [](const GraphState& g) { return static_cast<double>(g.num_edges()); };
  auto groups = sample_groups(model, pri, 2, 6, 10, 4, reward);
  GrpoConfig cfg;
  cfg.beta = 0.0;
  auto obj = grpo_objective(model, model, groups, cfg);
  CHECK(obj.stats.terms == 2 * 6 * 10);
  CHECK(obj.stats.ratio_mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(obj.stats.clip_frac == 0.0);
  CHECK(std::abs(obj.value) < 1e-12);
  CHECK(obj.stats.kl_mean == 0.0);
}

TEST_CASE("gradient at the old policy is the REINFORCE estimator") {
  DenoiserConfig c;
  c.hidden = 16;
  c.output_init_scale = 1.0;
  Denoiser model(c, 5);
  GraphPriors pri{CategoricalDistribution::uniform(1), CategoricalDistribution({0.7, 0.3}),
                  CategoricalDistribution::onehot(5, 4)};
  RewardFn reward = [](const GraphState& g) { return g.num_edges() == 3 ? 1.0 : 0.1 * g.num_edges(); };
  const int steps = 8;
  auto groups = sample_groups(model, pri, 2, 5, steps, 6, reward);
  GrpoConfig cfg;
  cfg.beta = 0.0;
  auto obj = grpo_objective(model, model, groups, cfg, 3);

  Eigen::VectorXd reinforce = Eigen::VectorXd::Zero(model.num_params());
  int terms = 0;
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.trajectories.size(); ++k) {
      const auto& tr = g.trajectories[k];
      for (int s = 0; s < steps; ++s) {
        auto lg = grad_log_transition(model, tr.states[s], tr.states[s + 1], grid_point(s, steps), pri);
        REQUIRE(lg.finite);
        reinforce += g.advantages[k] * lg.grad;
        ++terms;
      }
    }
  }
  reinforce /= terms;
  CHECK(reinforce.norm() > 1e-6);
  CHECK((obj.grad - reinforce).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant rewards without KL give no gradient") {
  DenoiserConfig c;
  c.hidden = 16;
  Denoiser model(c, 7);
  GraphPriors pri{CategoricalDistribution::uniform(1), CategoricalDistribution({0.7, 0.3}),
                  CategoricalDistribution::onehot(5, 4)};
  auto groups = sample_groups(model, pri, 1, 4, 6, 8, [](const GraphState&) { return 0.5; });
  GrpoConfig cfg;
  cfg.beta = 0.0;
  auto obj = grpo_objective(model, model, groups, cfg);
  CHECK(obj.grad.norm() < 1e-9);
  // With the KL term on, the policy still moves away from the reference only
  // through KL, and at policy == reference the gradient of J is the KL
  // gradient e^l (l - l_ref + 1) = e^l.
  cfg.beta = 0.005;
  auto kl_obj = grpo_objective(model, model, groups, cfg);
  CHECK(kl_obj.stats.kl_mean == 0.0);
  CHECK(kl_obj.grad.norm() > 0.0);
}

TEST_CASE("objective is independent of the thread count") {
  DenoiserConfig c;
  c.hidden = 16;
  c.output_init_scale = 1.0;
  Denoiser model(c, 9), ref(c, 10);
  GraphPriors pri{CategoricalDistribution::uniform(1), CategoricalDistribution({0.7, 0.3}),
                  CategoricalDistribution::onehot(5, 4)};
  auto groups = sample_groups(model, pri, 3, 4, 5, 11,
                              [](const GraphState& g) { return 1.0 * g.num_edges(); });
  GrpoConfig cfg;
  auto a = grpo_objective(model, ref, groups, cfg, 1);
  auto b = grpo_objective(model, ref, groups, cfg, 4);
  CHECK(a.value == b.value);
  CHECK(a.grad == b.grad);
}

TEST_CASE("plateau schedule halves the rate after a flat window") {
  PlateauSchedule s(3, 1e-3, 0.5, 1e-5);
  double lr = 1e-3;
  for (int i = 0; i < 3; ++i) lr = s.observe(0.1 * i, lr);  // first full window
  CHECK(lr == 1e-3);
  // A new best median, then a full window without improvement.
  for (int i = 0; i < 3; ++i) lr = s.observe(0.2, lr);
  CHECK(lr == 1e-3);
  lr = s.observe(0.2, lr);
  CHECK(lr == 5e-4);
  CHECK(s.decays() == 1);
  PlateauSchedule f(1, 1e-3, 0.5, 1e-5);
  double x = 2e-5;
  x = f.observe(0.0, x);
  for (int i = 0; i < 5; ++i) x = f.observe(0.0, x);
  CHECK(x == 1e-5);
}

TEST_CASE("single-node bandit learns the rewarded label") {
  auto pri = bandit_priors();
  TrainerConfig tc;
  tc.grpo.group_size = 16;
  tc.grpo.effective_batch = 64;
  tc.grpo.lr = 1e-2;
  tc.adapt_priors = false;
  tc.steps = 20;
  Denoiser policy = bandit_model(1);
  double before = p_label_one(policy, tc.steps);
  GrpoTrainer trainer(policy, policy, pri, [](const GraphState& g) { return g.node(0) == 1 ? 1.0 : 0.0; },
                      tc, 2);
  double p = before;
  int updates = 0;
  while (p <= 0.95 && updates < 60) {
    trainer.step();
    ++updates;
    p = p_label_one(trainer.policy(), tc.steps);
  }
  MESSAGE("bandit: P(label 1) " << before << " -> " << p << " after " << updates << " updates");
  CHECK(before == doctest::Approx(0.5).epsilon(0.1));
  CHECK(p > 0.95);
  CHECK(trainer.oracle_calls() == static_cast<std::uint64_t>(updates) * 64);
}

TEST_CASE("a dominant KL keeps the policy at the reference") {
  auto pri = bandit_priors();
  TrainerConfig tc;
  tc.grpo.group_size = 16;
  tc.grpo.effective_batch = 64;
  tc.grpo.lr = 1e-2;
  tc.grpo.beta = 10.0;
  tc.adapt_priors = false;
  tc.steps = 20;
  Denoiser ref = bandit_model(3);
  GrpoTrainer trainer(ref, ref, pri, [](const GraphState& g) { return g.node(0) == 1 ? 1.0 : 0.0; },
                      tc, 4);
  for (int i = 0; i < 30; ++i) trainer.step();
  auto a = oracle::exact_chain_distribution(ref, {0.5, 0.5}, tc.steps);
  auto b = oracle::exact_chain_distribution(trainer.policy(), {0.5, 0.5}, tc.steps);
  double tv = 0.5 * (std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]));
  MESSAGE("beta=10 TV to reference: " << tv);
  CHECK(tv < 0.05);
}

TEST_CASE("trainer is reproducible and independent of threads") {
  auto pri = bandit_priors();
  TrainerConfig tc;
  tc.grpo.group_size = 4;
  tc.grpo.effective_batch = 8;
  tc.grpo.lr = 1e-3;
  tc.steps = 5;
  RewardFn rf = [](const GraphState& g) { return g.node(0) == 1 ? 1.0 : 0.2; };
  GrpoTrainer a(bandit_model(5), bandit_model(5), pri, rf, tc, 6);
  tc.threads = 3;
  GrpoTrainer b(bandit_model(5), bandit_model(5), pri, rf, tc, 6);
  for (int i = 0; i < 4; ++i) {
    auto ra = a.step(), rb = b.step();
    CHECK(ra.stats.objective == rb.stats.objective);
    CHECK(ra.stats.reward_mean == rb.stats.reward_mean);
  }
  CHECK(a.policy().params() == b.policy().params());
  CHECK(a.updates() == 4);
}

}
