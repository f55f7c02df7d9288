#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphgrpo/categorical.hpp"
#include "graphgrpo/random.hpp"

namespace graphgrpo {

// How the rate matrix behind a transition row was obtained: one sampled
// clean-state guess per dimension, or the closed-form expectation over the
// model's prediction.
enum class Provenance { kConditionalMC, kAnalytical };

// The two (prior, t)-dependent factors of the analytical rate:
//   V1[i][j] = (1 + p0(i) - p0(j)) / (S (1 - t) p0(i))
//   V2[i][j] = ReLU(p0(i) - p0(j)) / (S (1 - t) p0(i))
// Shared by every dimension and every group member at one time step.
struct RateStatistics {
  int size = 0;
  double t = 0.0;
  std::vector<double> v1;  // row-major size x size
  std::vector<double> v2;

  double V1(Label i, Label j) const { return v1[i * size + j]; }
  double V2(Label i, Label j) const { return v2[i * size + j]; }
};

// Requires a full-support prior and t < 1.
RateStatistics precompute_stats(const CategoricalDistribution& prior, double t);

// R_t(zt -> ztarget | z1) = ReLU[d_t p(ztarget|z1) - d_t p(zt|z1)]
//                           / (Z_t^{>0} p_{t|1}(zt|z1)).
double conditional_rate(Label zt, Label ztarget, Label z1, double t,
                        const CategoricalDistribution& prior);

// R^theta_t(zt -> ztarget) = p(ztarget) V1 + (1 - p(zt) - p(ztarget)) V2.
double analytical_rate(Label zt, Label ztarget, std::span<const double> ptheta,
                       const RateStatistics& stats);
double analytical_rate(Label zt, Label ztarget,
                       const CategoricalDistribution& ptheta, double t,
                       const CategoricalDistribution& prior);

struct TransitionRow {
  CategoricalDistribution probs;
  Label source = 0;
  Provenance provenance = Provenance::kAnalytical;
  // True when the off-diagonal mass exceeded 1 and was rescaled.
  bool saturated = false;
};

// Off-diagonal entries are R * dt; the diagonal is the complement. When the
// off-diagonal mass exceeds 1 the entries are rescaled to sum to 1 and the
// diagonal is set to 0 (counted by saturation_count()). Conditional-MC mode
// draws exactly one clean-state guess from `ptheta` using `rng`.
TransitionRow transition_row(Label zt, const CategoricalDistribution& ptheta,
                             TimePoint time, const CategoricalDistribution& prior,
                             Provenance mode, RandomStream* rng = nullptr);

// Hot-loop form of the analytical row. Writes S probabilities to `out` and
// returns true when the overflow rescale was applied.
bool analytical_transition_probs(Label zt, std::span<const double> ptheta,
                                 const RateStatistics& stats, double dt,
                                 std::span<double> out);

// log p(target | zt) under the analytical row, and optionally its gradient
// with respect to ptheta written to `dlog_dptheta` (size S, overwritten).
// Returns -infinity when the target has zero probability.
double analytical_log_transition(Label zt, Label target,
                                 std::span<const double> ptheta,
                                 const RateStatistics& stats, double dt,
                                 std::span<double> dlog_dptheta = {});

std::uint64_t saturation_count();
void reset_saturation_count();

}  // namespace graphgrpo
