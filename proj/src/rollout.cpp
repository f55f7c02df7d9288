#include "graphgrpo/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphgrpo/parallel.hpp"

namespace graphgrpo {

GraphState sample_noise_graph(const GraphPriors& priors, RandomStream& rng) {
  const int n = sample_categorical(priors.size, rng);
  GraphState g(n);
  for (int i = 0; i < n; ++i) g.set_node(i, sample_categorical(priors.node, rng));
  for (int p = 0; p < g.num_pairs(); ++p) {
    g.set_dim(n + p, sample_categorical(priors.edge, rng));
  }
  return g;
}

RolloutGroup collect_group(const Denoiser& model, const GraphState& origin, int group_size,
                           int steps, const GraphPriors& priors, const RandomStream& rng,
                           int threads) {
  if (group_size < 2) throw std::invalid_argument("group size must be at least 2");
  if (steps < 1) throw std::invalid_argument("need at least one step");
  RolloutGroup group;
  group.origin = origin;
  group.priors = priors;
  group.steps = steps;
  group.trajectories.resize(group_size);
  const auto grid = grid_statistics(priors, steps);
  parallel_for(group_size, threads, [&](std::size_t k) {
    Trajectory& traj = group.trajectories[k];
    traj.group_index = static_cast<int>(k);
    traj.states.reserve(steps + 1);
    traj.states.push_back(origin);
    traj.step_log_probs.reserve(steps);
    for (int s = 0; s < steps; ++s) {
      RandomStream step_rng = rng.derive(k, s);
      StepSample next = sample_step(model, traj.states.back(), grid_point(s, steps), grid[s],
                                    step_rng);
      traj.step_log_probs.push_back(next.log_prob);
      traj.states.push_back(std::move(next.next));
    }
  });
  return group;
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw std::invalid_argument("advantages need at least two rewards");
  const double k = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= k;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / k);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < kDegenerateStd) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = std::clamp((rewards[i] - mean) / sd, -kAdvantageClip, kAdvantageClip);
  }
  return adv;
}

double replay_log_prob(const Denoiser& model, const Trajectory& traj,
                       const GraphPriors& priors, int steps) {
  if (static_cast<int>(traj.states.size()) != steps + 1) {
    throw std::invalid_argument("trajectory length does not match the grid");
  }
  double total = 0.0;
  for (int s = 0; s < steps; ++s) {
    total += log_transition(model, traj.states[s], traj.states[s + 1], grid_point(s, steps),
                            priors);
  }
  return total;
}

}  // namespace graphgrpo
