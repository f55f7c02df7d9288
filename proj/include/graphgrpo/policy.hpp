#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/graph.hpp"
#include "graphgrpo/rates.hpp"

namespace graphgrpo {

// t_k = k / T, dt = 1 / T.
TimePoint grid_point(int k, int steps);

// Rate statistics for node and pair dimensions at one time step.
struct StepStatistics {
  RateStatistics node;
  RateStatistics edge;
  double dt = 0.0;
};
StepStatistics step_statistics(const GraphPriors& priors, TimePoint time);
// Statistics for every step of the T-step grid.
std::vector<StepStatistics> grid_statistics(const GraphPriors& priors, int steps);

struct StepSample {
  GraphState next;
  // log pi(next | current), summed over all dimensions.
  double log_prob = 0.0;
  bool saturated = false;
};

// Draws G_{t+dt} from the analytical transition kernel under the model.
StepSample sample_step(const Denoiser& model, const GraphState& current,
                       TimePoint time, const GraphPriors& priors, RandomStream& rng);
StepSample sample_step(const Denoiser& model, const GraphState& current,
                       TimePoint time, const StepStatistics& stats, RandomStream& rng);

// log pi_theta(next | current) under the analytical kernel.
double log_transition(const Denoiser& model, const GraphState& current,
                      const GraphState& next, TimePoint time, const GraphPriors& priors);
double log_transition(const Denoiser& model, const GraphState& current,
                      const GraphState& next, TimePoint time, const StepStatistics& stats);

struct LogTransitionGrad {
  double log_prob = 0.0;
  Eigen::VectorXd grad;
  // False when a realized dimension had zero probability (saturated row).
  bool finite = true;
};

// log pi_theta(next | current) and its exact gradient in theta, through
// forward -> softmax -> analytical rates -> log.
LogTransitionGrad grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const GraphPriors& priors);

// Accumulating form: adds scale * d log pi / d theta into `grad` and returns
// the log-probability. Nothing is added when the result is not finite.
double accumulate_grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const StepStatistics& stats, double scale,
                                      Eigen::VectorXd& grad);

// Same, with the scale chosen from the log-probability after the forward
// pass. A zero scale skips the backward pass.
double accumulate_grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const StepStatistics& stats,
                                      const std::function<double(double)>& scale_of,
                                      Eigen::VectorXd& grad);

// Runs the chain from `start` over grid steps [first_step, steps) and returns
// the final graph and the summed log-probability of the realized path.
struct ChainResult {
  GraphState final_graph;
  double log_prob = 0.0;
};
ChainResult run_chain(const Denoiser& model, const GraphState& start, int first_step,
                      int steps, const GraphPriors& priors, RandomStream& rng);
ChainResult run_chain(const Denoiser& model, const GraphState& start, int first_step,
                      std::span<const StepStatistics> grid, RandomStream& rng);

}  // namespace graphgrpo
