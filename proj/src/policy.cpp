#include "graphgrpo/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace graphgrpo {

TimePoint grid_point(int k, int steps) {
  if (steps <= 0 || k < 0 || k >= steps) throw std::domain_error("grid index out of range");
  return TimePoint{static_cast<double>(k) / steps, 1.0 / steps};
}

StepStatistics step_statistics(const GraphPriors& priors, TimePoint time) {
  time.validate();
  return StepStatistics{precompute_stats(priors.node, time.t),
                        precompute_stats(priors.edge, time.t), time.dt};
}

std::vector<StepStatistics> grid_statistics(const GraphPriors& priors, int steps) {
  std::vector<StepStatistics> out;
  out.reserve(steps);
  for (int k = 0; k < steps; ++k) out.push_back(step_statistics(priors, grid_point(k, steps)));
  return out;
}

StepSample sample_step(const Denoiser& model, const GraphState& current, TimePoint time,
                       const StepStatistics& stats, RandomStream& rng) {
  const GraphDistribution pred = model.forward(current, time.t);
  StepSample out{current, 0.0, false};
  std::vector<double> row;
  const int n = current.num_nodes();
  for (int d = 0; d < current.num_dims(); ++d) {
    const bool is_node = d < n;
    const RateStatistics& rs = is_node ? stats.node : stats.edge;
    const auto ptheta = is_node ? pred.node_row(d) : pred.edge_row(d - n);
    row.assign(rs.size, 0.0);
    const Label zt = current.dim(d);
    out.saturated |= analytical_transition_probs(zt, ptheta, rs, stats.dt, row);
    const Label next = sample_categorical(row, rng);
    out.next.set_dim(d, next);
    out.log_prob += std::log(row[next]);
  }
  return out;
}

StepSample sample_step(const Denoiser& model, const GraphState& current, TimePoint time,
                       const GraphPriors& priors, RandomStream& rng) {
  return sample_step(model, current, time, step_statistics(priors, time), rng);
}

namespace {

double transition_terms(const Denoiser& model, const GraphState& current,
                        const GraphState& next, TimePoint time, const StepStatistics& stats,
                        ForwardTape* tape, RowMatrix* d_node, RowMatrix* d_edge) {
  if (current.num_nodes() != next.num_nodes()) {
    throw std::invalid_argument("transition between graphs of different size");
  }
  const GraphDistribution pred = model.forward(current, time.t, tape);
  const int n = current.num_nodes();
  if (d_node != nullptr) {
    d_node->setZero(pred.node_probs.rows(), pred.node_probs.cols());
    d_edge->setZero(pred.edge_probs.rows(), pred.edge_probs.cols());
  }
  double total = 0.0;
  for (int d = 0; d < current.num_dims(); ++d) {
    const bool is_node = d < n;
    const RateStatistics& rs = is_node ? stats.node : stats.edge;
    const auto ptheta = is_node ? pred.node_row(d) : pred.edge_row(d - n);
    std::span<double> g;
    if (d_node != nullptr) {
      g = is_node ? std::span<double>(d_node->data() + d * d_node->cols(), d_node->cols())
                  : std::span<double>(d_edge->data() + (d - n) * d_edge->cols(),
                                      d_edge->cols());
    }
    const double lp = analytical_log_transition(current.dim(d), next.dim(d), ptheta, rs,
                                                stats.dt, g);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    total += lp;
  }
  return total;
}

}  // namespace

double log_transition(const Denoiser& model, const GraphState& current,
                      const GraphState& next, TimePoint time, const GraphPriors& priors) {
  return transition_terms(model, current, next, time, step_statistics(priors, time),
                          nullptr, nullptr, nullptr);
}

double log_transition(const Denoiser& model, const GraphState& current,
                      const GraphState& next, TimePoint time, const StepStatistics& stats) {
  return transition_terms(model, current, next, time, stats, nullptr, nullptr, nullptr);
}

double accumulate_grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const StepStatistics& stats, double scale,
                                      Eigen::VectorXd& grad) {
  return accumulate_grad_log_transition(
      model, current, next, time, stats, [scale](double) { return scale; }, grad);
}

double accumulate_grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const StepStatistics& stats,
                                      const std::function<double(double)>& scale_of,
                                      Eigen::VectorXd& grad) {
  ForwardTape tape;
  RowMatrix d_node;
  RowMatrix d_edge;
  const double lp = transition_terms(model, current, next, time, stats, &tape, &d_node, &d_edge);
  if (!std::isfinite(lp)) return lp;
  const double scale = scale_of(lp);
  if (scale != 0.0) {
    d_node *= scale;
    d_edge *= scale;
    model.backward_from_probs(tape, d_node, d_edge, grad);
  }
  return lp;
}

LogTransitionGrad grad_log_transition(const Denoiser& model, const GraphState& current,
                                      const GraphState& next, TimePoint time,
                                      const GraphPriors& priors) {
  LogTransitionGrad out;
  out.grad = Eigen::VectorXd::Zero(model.num_params());
  out.log_prob = accumulate_grad_log_transition(model, current, next, time,
                                                step_statistics(priors, time), 1.0, out.grad);
  out.finite = std::isfinite(out.log_prob);
  if (!out.finite) out.grad.setZero();
  return out;
}

ChainResult run_chain(const Denoiser& model, const GraphState& start, int first_step,
                      int steps, const GraphPriors& priors, RandomStream& rng) {
  const auto grid = grid_statistics(priors, steps);
  return run_chain(model, start, first_step, grid, rng);
}

ChainResult run_chain(const Denoiser& model, const GraphState& start, int first_step,
                      std::span<const StepStatistics> grid, RandomStream& rng) {
  ChainResult out{start, 0.0};
  const int steps = static_cast<int>(grid.size());
  for (int k = first_step; k < steps; ++k) {
    RandomStream step_rng = rng.split(static_cast<std::uint64_t>(k));
    StepSample s = sample_step(model, out.final_graph, grid_point(k, steps), grid[k], step_rng);
    out.final_graph = std::move(s.next);
    out.log_prob += s.log_prob;
  }
  return out;
}

}  // namespace graphgrpo
