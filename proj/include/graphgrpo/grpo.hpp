#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "graphgrpo/adaptive_prior.hpp"
#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/optimizer.hpp"
#include "graphgrpo/rewards.hpp"
#include "graphgrpo/rollout.hpp"

namespace graphgrpo {

struct GrpoConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double beta = 0.005;
  int group_size = 60;
  int effective_batch = 200;
  double lr = 2e-5;
  double lr_decay = 0.5;
  double lr_floor = 1e-5;
  int plateau_window = 20;
  double plateau_tolerance = 1e-3;
  double grad_clip = 5.0;
  double weight_decay = 1e-4;

  void validate() const;
  // ceil(effective_batch / group_size)
  int groups_per_update() const;
};

// min(r A, clip(r, 1 - eps_low, 1 + eps_high) A), to be maximized.
double step_loss(double ratio, double advantage, const GrpoConfig& cfg);
// d step_loss / d ratio.
double step_loss_dratio(double ratio, double advantage, const GrpoConfig& cfg);

// pi log(pi / pi_ref) at the sampled transition. pi_ref below 1e-12 is raised
// to 1e-12 and counted.
double kl_point(double pi_theta, double pi_ref);
// Same quantity from log-probabilities, exp(l) (l - l_ref).
double kl_point_log(double log_pi, double log_ref);
std::uint64_t kl_floor_count();

inline constexpr double kLogRatioClamp = 20.0;

struct UpdateStats {
  double objective = 0.0;
  double ratio_mean = 0.0;
  double clip_frac = 0.0;
  double kl_mean = 0.0;
  double reward_mean = 0.0;
  double reward_max = 0.0;
  double grad_norm = 0.0;
  std::uint64_t terms = 0;
  // Steps whose current log-probability was not finite.
  std::uint64_t skipped_terms = 0;
  bool applied = false;
};

struct Objective {
  double value = 0.0;
  Eigen::VectorXd grad;  // d value / d theta
  UpdateStats stats;
};

// J = mean over (group, member, step) of step_loss(r, A) - beta * KL, with
// r = exp(clamp(log pi_theta - log pi_old)) and the point KL against `ref`.
Objective grpo_objective(const Denoiser& policy, const Denoiser& ref,
                         std::span<const RolloutGroup> groups, const GrpoConfig& cfg,
                         int threads = 1);

// One gradient-ascent step on J. Skipped when J or its gradient is not finite.
UpdateStats grpo_update(Denoiser& policy, const Denoiser& ref, AdamW& optimizer,
                        std::span<const RolloutGroup> groups, const GrpoConfig& cfg,
                        int threads = 1);

// Halves the learning rate when the trailing-window median reward has not
// improved on its best by `tolerance` for a full window.
class PlateauSchedule {
 public:
  PlateauSchedule(int window, double tolerance, double factor, double floor);
  // Records one update's mean reward and returns the learning rate to use.
  double observe(double reward_mean, double lr);
  int decays() const { return decays_; }

 private:
  int window_;
  double tolerance_;
  double factor_;
  double floor_;
  std::deque<double> recent_;
  std::optional<double> best_median_;
  int stale_ = 0;
  int decays_ = 0;
};

struct TrainerConfig {
  GrpoConfig grpo;
  int steps = 50;
  bool adapt_priors = true;
  std::size_t buffer_capacity = 1000;
  double buffer_min_reward = 0.0;
  AdaptivePriorConfig prior;
  int threads = 1;
};

struct UpdateRecord {
  int update = 0;
  UpdateStats stats;
  double lr = 0.0;
  std::uint64_t oracle_calls = 0;
  bool prior_updated = false;
};

// Rollout -> reward -> advantage -> update loop with a frozen reference,
// a global reward buffer and EMA-adapted priors (applied between updates).
class GrpoTrainer {
 public:
  GrpoTrainer(Denoiser policy, Denoiser reference, GraphPriors priors, RewardFn reward,
              TrainerConfig config, std::uint64_t seed);

  UpdateRecord step();

  const Denoiser& policy() const { return policy_; }
  const Denoiser& reference() const { return reference_; }
  const GraphPriors& priors() const { return priors_.priors(); }
  const RewardBuffer& buffer() const { return buffer_; }
  const AdamW& optimizer() const { return optimizer_; }
  AdamW& optimizer() { return optimizer_; }
  std::uint64_t oracle_calls() const { return oracle_.calls(); }
  int updates() const { return update_; }
  const TrainerConfig& config() const { return config_; }

 private:
  Denoiser policy_;
  Denoiser reference_;
  AdaptivePriors priors_;
  CountingOracle oracle_;
  TrainerConfig config_;
  RandomStream rng_;
  AdamW optimizer_;
  RewardBuffer buffer_;
  PlateauSchedule plateau_;
  double last_prior_mean_ = 0.0;
  int update_ = 0;
};

}  // namespace graphgrpo
