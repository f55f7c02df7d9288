#pragma once

#include <functional>
#include <string>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/graph.hpp"
#include "graphgrpo/random.hpp"

namespace graphgrpo::oracle {

// Reference implementations on plain vectors. Nothing here calls into the
// rate engine, so agreement between the two is a real check.

std::vector<double> path_marginal(int z1, double t, const std::vector<double>& prior);
double cond_rate(int zt, int ztarget, int z1, double t, const std::vector<double>& prior);

// sum_{z1} ptheta(z1) R_t(zt -> ztarget | z1), by enumeration.
double enumerate_expectation_rate(int zt, int ztarget, const std::vector<double>& ptheta,
                                  double t, const std::vector<double>& prior);

struct MarginalCheck {
  // max over grid points of TV(evolved, closed form)
  double max_tv = 0.0;
  // Steps whose off-diagonal mass exceeded 1 and were rescaled.
  int saturated_rows = 0;
};

// Evolves p_{0|1} with T_fine Euler steps of the exact conditional rate
// matrix (row-stochastic update, overflow rows rescaled) and compares to the
// closed-form path at every grid point.
MarginalCheck marginal_evolution_check(int z1, const std::vector<double>& prior, int t_fine);

struct GradCase {
  GraphState current;
  GraphState next;
  double t = 0.0;
  double dt = 0.0;
  GraphPriors priors;
};

// Random case with n <= max_nodes: current ~ noise, next = one analytical step.
GradCase random_grad_case(const Denoiser& model, int max_nodes, RandomStream& rng);

struct GradCheck {
  double max_rel_error = 0.0;
  int coordinates = 0;
};

// Central differences with step h on `coordinates` random parameter
// coordinates of log pi(next | current). Relative error is
// |a - f| / max(|a|, |f|, denom_floor).
GradCheck finite_diff_grad_check(const Denoiser& model, const GradCase& c, int coordinates,
                                 RandomStream& rng, double h = 1e-5,
                                 double denom_floor = 1e-6);

inline constexpr double kGradRelFloor = 1e-6;

// Terminal distribution of a single-node chain by exact propagation of the
// label distribution through T analytical transition rows, starting from the
// prior. `predict(z, t)` returns the clean-label prediction at state z.
using NodePredictor = std::function<std::vector<double>(int z, double t)>;
std::vector<double> exact_chain_distribution(const NodePredictor& predict,
                                             const std::vector<double>& prior, int steps);
std::vector<double> exact_chain_distribution(const Denoiser& model,
                                             const std::vector<double>& prior, int steps);

struct GateResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  // Diagnostics are reported but do not decide the exit status.
  bool gate = true;
};

// Oracle suite behind `verify`.
std::vector<GateResult> run_verify_suite(std::uint64_t seed);

}  // namespace graphgrpo::oracle
