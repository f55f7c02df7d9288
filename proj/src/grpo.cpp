#include "graphgrpo/grpo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "graphgrpo/parallel.hpp"
#include "graphgrpo/policy.hpp"

namespace graphgrpo {
namespace {

std::atomic<std::uint64_t> g_kl_floor{0};
constexpr double kKlFloor = 1e-12;
// Fixed reduction layout: the summation order does not depend on the thread
// count.
constexpr std::size_t kReductionChunks = 16;

}  // namespace

void GrpoConfig::validate() const {
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0)) {
    throw std::invalid_argument("need 0 < eps_low <= eps_high < 1");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  if (group_size < 2) throw std::invalid_argument("group_size must be at least 2");
  if (effective_batch < 1) throw std::invalid_argument("effective_batch must be positive");
  if (!(lr > 0.0) || !(lr_floor > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must lie in (0, 1]");
  if (plateau_window < 1) throw std::invalid_argument("plateau_window must be positive");
}

int GrpoConfig::groups_per_update() const {
  return (effective_batch + group_size - 1) / group_size;
}

double step_loss(double ratio, double advantage, const GrpoConfig& cfg) {
  const double clipped = std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  return std::min(ratio * advantage, clipped * advantage);
}

double step_loss_dratio(double ratio, double advantage, const GrpoConfig& cfg) {
  const double clipped = std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  // The unclipped branch is the minimum (ties included) exactly when the
  // gradient flows.
  return ratio * advantage <= clipped * advantage ? advantage : 0.0;
}

double kl_point(double pi_theta, double pi_ref) {
  if (pi_ref < kKlFloor) {
    ++g_kl_floor;
    pi_ref = kKlFloor;
  }
  if (pi_theta <= 0.0) return 0.0;
  return pi_theta * std::log(pi_theta / pi_ref);
}

double kl_point_log(double log_pi, double log_ref) {
  static const double log_floor = std::log(kKlFloor);
  if (!(log_ref >= log_floor)) {
    ++g_kl_floor;
    log_ref = log_floor;
  }
  return std::exp(log_pi) * (log_pi - log_ref);
}

std::uint64_t kl_floor_count() { return g_kl_floor.load(); }

Objective grpo_objective(const Denoiser& policy, const Denoiser& ref,
                         std::span<const RolloutGroup> groups, const GrpoConfig& cfg,
                         int threads) {
  struct Item {
    const RolloutGroup* group;
    std::size_t member;
  };
  std::vector<Item> items;
  for (const auto& g : groups) {
    if (g.advantages.size() != g.trajectories.size()) {
      throw std::invalid_argument("group advantages are not filled");
    }
    for (std::size_t k = 0; k < g.trajectories.size(); ++k) items.push_back({&g, k});
  }
  struct Partial {
    Eigen::VectorXd grad;
    double value = 0.0, ratio = 0.0, kl = 0.0;
    std::uint64_t terms = 0, skipped = 0, clipped = 0;
  };
  const std::size_t chunks = std::min(kReductionChunks, std::max<std::size_t>(items.size(), 1));
  std::vector<Partial> parts(chunks);
  static const double log_floor = std::log(kKlFloor);

  parallel_for(chunks, threads, [&](std::size_t c) {
    Partial& part = parts[c];
    part.grad = Eigen::VectorXd::Zero(policy.num_params());
    const std::size_t lo = items.size() * c / chunks;
    const std::size_t hi = items.size() * (c + 1) / chunks;
    for (std::size_t it = lo; it < hi; ++it) {
      const RolloutGroup& group = *items[it].group;
      const Trajectory& traj = group.trajectories[items[it].member];
      const double adv = group.advantages[items[it].member];
      const auto grid = grid_statistics(group.priors, group.steps);
      for (int s = 0; s < group.steps; ++s) {
        const TimePoint tp = grid_point(s, group.steps);
        const GraphState& cur = traj.states[s];
        const GraphState& nxt = traj.states[s + 1];
        double l_ref = log_transition(ref, cur, nxt, tp, grid[s]);
        if (!(l_ref >= log_floor)) l_ref = log_floor;
        double r = 1.0;
        double kl = 0.0;
        // The step coefficient dJ/dl is known only after the policy forward,
        // so the backward pass is scaled from inside.
        auto coefficient = [&](double l) {
          const double delta = l - traj.step_log_probs[s];
          const double clamped = std::clamp(delta, -kLogRatioClamp, kLogRatioClamp);
          r = std::exp(clamped);
          kl = kl_point_log(l, l_ref);
          double dl = delta == clamped ? step_loss_dratio(r, adv, cfg) * r : 0.0;
          dl -= cfg.beta * std::exp(l) * (l - l_ref + 1.0);
          return dl;
        };
        const double l =
            accumulate_grad_log_transition(policy, cur, nxt, tp, grid[s], coefficient, part.grad);
        if (!std::isfinite(l)) {
          ++part.skipped;
          continue;
        }
        part.value += step_loss(r, adv, cfg) - cfg.beta * kl;
        part.ratio += r;
        part.kl += kl;
        part.clipped += (r < 1.0 - cfg.eps_low || r > 1.0 + cfg.eps_high);
        ++part.terms;
      }
    }
  });

  Objective out;
  out.grad = Eigen::VectorXd::Zero(policy.num_params());
  UpdateStats& st = out.stats;
  for (const auto& p : parts) {
    out.grad += p.grad;
    out.value += p.value;
    st.ratio_mean += p.ratio;
    st.kl_mean += p.kl;
    st.clip_frac += static_cast<double>(p.clipped);
    st.terms += p.terms;
    st.skipped_terms += p.skipped;
  }
  if (st.terms > 0) {
    const double n = static_cast<double>(st.terms);
    out.value /= n;
    out.grad /= n;
    st.ratio_mean /= n;
    st.kl_mean /= n;
    st.clip_frac /= n;
  }
  st.objective = out.value;
  double rsum = 0.0;
  std::size_t rcount = 0;
  st.reward_max = -std::numeric_limits<double>::infinity();
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      rsum += t.reward;
      st.reward_max = std::max(st.reward_max, t.reward);
      ++rcount;
    }
  }
  st.reward_mean = rcount > 0 ? rsum / static_cast<double>(rcount) : 0.0;
  if (rcount == 0) st.reward_max = 0.0;
  return out;
}

UpdateStats grpo_update(Denoiser& policy, const Denoiser& ref, AdamW& optimizer,
                        std::span<const RolloutGroup> groups, const GrpoConfig& cfg,
                        int threads) {
  Objective obj = grpo_objective(policy, ref, groups, cfg, threads);
  UpdateStats st = obj.stats;
  st.grad_norm = obj.grad.norm();
  if (st.terms == 0 || !std::isfinite(obj.value) || !obj.grad.allFinite()) return st;
  // The optimizer minimizes; ascend on J.
  optimizer.step(policy.mutable_params(), -obj.grad);
  st.applied = true;
  return st;
}

PlateauSchedule::PlateauSchedule(int window, double tolerance, double factor, double floor)
    : window_(window), tolerance_(tolerance), factor_(factor), floor_(floor) {}

double PlateauSchedule::observe(double reward_mean, double lr) {
  recent_.push_back(reward_mean);
  if (static_cast<int>(recent_.size()) > window_) recent_.pop_front();
  if (static_cast<int>(recent_.size()) < window_) return lr;
  std::vector<double> sorted(recent_.begin(), recent_.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  if (!best_median_ || median > *best_median_ + tolerance_) {
    best_median_ = median;
    stale_ = 0;
    return lr;
  }
  if (++stale_ < window_) return lr;
  stale_ = 0;
  const double next = std::max(floor_, lr * factor_);
  if (next < lr) ++decays_;
  return next;
}

GrpoTrainer::GrpoTrainer(Denoiser policy, Denoiser reference, GraphPriors priors,
                         RewardFn reward, TrainerConfig config, std::uint64_t seed)
    : policy_(std::move(policy)),
      reference_(std::move(reference)),
      priors_(std::move(priors), config.prior),
      oracle_(std::move(reward)),
      config_(config),
      rng_(seed),
      optimizer_(policy_.num_params(),
                 AdamWConfig{config.grpo.lr, 0.9, 0.999, 1e-8, config.grpo.weight_decay,
                             config.grpo.grad_clip}),
      buffer_(config.buffer_capacity, config.buffer_min_reward),
      plateau_(config.grpo.plateau_window, config.grpo.plateau_tolerance,
               config.grpo.lr_decay, config.grpo.lr_floor) {
  config_.grpo.validate();
  if (!(policy_.config() == reference_.config())) {
    throw std::invalid_argument("policy and reference architectures differ");
  }
}

UpdateRecord GrpoTrainer::step() {
  const GrpoConfig& cfg = config_.grpo;
  const int n_groups = cfg.groups_per_update();
  const RandomStream round = rng_.derive(update_);
  std::vector<RolloutGroup> groups;
  groups.reserve(n_groups);
  for (int gi = 0; gi < n_groups; ++gi) {
    RandomStream origin_rng = round.derive(gi, 0);
    GraphState origin = sample_noise_graph(priors_.priors(), origin_rng);
    groups.push_back(collect_group(policy_, origin, cfg.group_size, config_.steps,
                                   priors_.priors(), round.derive(gi, 1), config_.threads));
  }
  std::vector<ScoredGraph> scored;
  for (auto& g : groups) {
    std::vector<double> rewards;
    for (auto& t : g.trajectories) {
      t.reward = oracle_(t.final_graph());
      rewards.push_back(t.reward);
      scored.push_back({t.final_graph(), t.reward});
    }
    g.advantages = compute_advantages(rewards);
  }

  UpdateRecord rec;
  rec.update = update_;
  rec.stats = grpo_update(policy_, reference_, optimizer_, groups, cfg, config_.threads);
  rec.lr = optimizer_.lr();

  // Priors change only between updates, never inside a trajectory.
  buffer_.merge(scored);
  if (config_.adapt_priors) {
    const double mean = buffer_.mean_reward();
    if (priors_.maybe_update(buffer_, mean - last_prior_mean_)) {
      last_prior_mean_ = mean;
      rec.prior_updated = true;
    }
  }
  optimizer_.set_lr(plateau_.observe(rec.stats.reward_mean, optimizer_.lr()));
  rec.oracle_calls = oracle_.calls();
  ++update_;
  return rec;
}

}  // namespace graphgrpo
