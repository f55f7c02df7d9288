#pragma once

#include <span>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/graph.hpp"
#include "graphgrpo/policy.hpp"
#include "graphgrpo/random.hpp"

namespace graphgrpo {

// n ~ priors.size, then every node and pair label i.i.d. from its prior.
GraphState sample_noise_graph(const GraphPriors& priors, RandomStream& rng);

// One generation path G_0, G_dt, ..., G_1 with the sampling-time
// log-probability of every realized step.
struct Trajectory {
  std::vector<GraphState> states;      // T + 1 states
  std::vector<double> step_log_probs;  // T entries
  double reward = 0.0;
  int group_index = 0;

  const GraphState& final_graph() const { return states.back(); }
};

struct RolloutGroup {
  GraphState origin;
  std::vector<Trajectory> trajectories;
  std::vector<double> advantages;
  // Noise distributions the group was sampled under; the rate statistics of
  // every replayed step must come from the same priors.
  GraphPriors priors;
  int steps = 0;
};

// K trajectories from the shared origin under the analytical kernel. Member
// k draws from rng.derive(k, step), so results do not depend on `threads`.
RolloutGroup collect_group(const Denoiser& model, const GraphState& origin, int group_size,
                           int steps, const GraphPriors& priors, const RandomStream& rng,
                           int threads = 1);

// (r - mean) / std with the population std, zero when std < 1e-8, then
// clipped to [-5, 5].
std::vector<double> compute_advantages(std::span<const double> rewards);

inline constexpr double kAdvantageClip = 5.0;
inline constexpr double kDegenerateStd = 1e-8;

// Sum of step log-probabilities recomputed from the cached states.
double replay_log_prob(const Denoiser& model, const Trajectory& traj,
                       const GraphPriors& priors, int steps);

}  // namespace graphgrpo
