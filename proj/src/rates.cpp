#include "graphgrpo/rates.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace graphgrpo {
namespace {

std::atomic<std::uint64_t> g_saturations{0};

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_time(double t) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("rate evaluated at t outside [0, 1)");
}

// Rescale when the off-diagonal mass exceeds one; returns whether it did.
bool finish_row(Label zt, std::span<double> row) {
  double off = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (static_cast<Label>(j) != zt) off += row[j];
  }
  if (off > 1.0) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] /= off;
    row[zt] = 0.0;
    g_saturations.fetch_add(1, std::memory_order_relaxed);
    return true;
  }
  row[zt] = 1.0 - off;
  return false;
}

}  // namespace

RateStatistics precompute_stats(const CategoricalDistribution& prior, double t) {
  check_time(t);
  if (!prior.has_full_support()) {
    throw std::domain_error("rate statistics need a full-support prior");
  }
  RateStatistics s;
  s.size = prior.size();
  s.t = t;
  s.v1.resize(s.size * s.size);
  s.v2.resize(s.size * s.size);
  for (Label i = 0; i < s.size; ++i) {
    const double denom = s.size * (1.0 - t) * prior[i];
    for (Label j = 0; j < s.size; ++j) {
      s.v1[i * s.size + j] = (1.0 + prior[i] - prior[j]) / denom;
      s.v2[i * s.size + j] = relu(prior[i] - prior[j]) / denom;
    }
  }
  return s;
}

double conditional_rate(Label zt, Label ztarget, Label z1, double t,
                        const CategoricalDistribution& prior) {
  check_time(t);
  if (!prior.contains(zt) || !prior.contains(ztarget) || !prior.contains(z1)) {
    throw std::domain_error("conditional_rate: label out of range");
  }
  const CategoricalDistribution path = noising_path(z1, t, prior);
  int support = 0;
  for (double p : path.probs()) support += p > 0.0 ? 1 : 0;
  if (!(path[zt] > 0.0)) {
    throw std::domain_error("conditional_rate: current state has zero path mass");
  }
  const double flux = path_time_derivative(ztarget, z1, prior) -
                      path_time_derivative(zt, z1, prior);
  return relu(flux) / (support * path[zt]);
}

double analytical_rate(Label zt, Label ztarget, std::span<const double> ptheta,
                       const RateStatistics& stats) {
  return ptheta[ztarget] * stats.V1(zt, ztarget) +
         (1.0 - ptheta[zt] - ptheta[ztarget]) * stats.V2(zt, ztarget);
}

double analytical_rate(Label zt, Label ztarget,
                       const CategoricalDistribution& ptheta, double t,
                       const CategoricalDistribution& prior) {
  if (ptheta.size() != prior.size()) {
    throw std::invalid_argument("analytical_rate: prediction and prior sizes differ");
  }
  if (!prior.contains(zt) || !prior.contains(ztarget)) {
    throw std::domain_error("analytical_rate: label out of range");
  }
  return analytical_rate(zt, ztarget, ptheta.probs(), precompute_stats(prior, t));
}

bool analytical_transition_probs(Label zt, std::span<const double> ptheta,
                                 const RateStatistics& stats, double dt,
                                 std::span<double> out) {
  for (Label j = 0; j < stats.size; ++j) {
    out[j] = j == zt ? 0.0 : dt * analytical_rate(zt, j, ptheta, stats);
  }
  return finish_row(zt, out);
}

TransitionRow transition_row(Label zt, const CategoricalDistribution& ptheta,
                             TimePoint time, const CategoricalDistribution& prior,
                             Provenance mode, RandomStream* rng) {
  time.validate();
  if (ptheta.size() != prior.size()) {
    throw std::invalid_argument("transition_row: prediction and prior sizes differ");
  }
  if (!prior.contains(zt)) throw std::domain_error("transition_row: label out of range");
  const int S = prior.size();
  std::vector<double> row(S, 0.0);
  bool saturated = false;
  if (mode == Provenance::kAnalytical) {
    saturated = analytical_transition_probs(zt, ptheta.probs(),
                                            precompute_stats(prior, time.t),
                                            time.dt, row);
  } else {
    if (rng == nullptr) {
      throw std::invalid_argument("conditional-MC transition needs a random stream");
    }
    const Label guess = sample_categorical(ptheta, *rng);
    for (Label j = 0; j < S; ++j) {
      if (j != zt) row[j] = time.dt * conditional_rate(zt, j, guess, time.t, prior);
    }
    saturated = finish_row(zt, row);
  }
  // Re-normalize rounding before the validating constructor sees it.
  double sum = 0.0;
  for (double p : row) sum += p;
  for (double& p : row) p = std::clamp(p / sum, 0.0, 1.0);
  return TransitionRow{CategoricalDistribution(std::move(row)), zt, mode, saturated};
}

double analytical_log_transition(Label zt, Label target,
                                 std::span<const double> ptheta,
                                 const RateStatistics& stats, double dt,
                                 std::span<double> dlog_dptheta) {
  const int S = stats.size;
  const bool want_grad = !dlog_dptheta.empty();
  if (want_grad) std::fill(dlog_dptheta.begin(), dlog_dptheta.end(), 0.0);
  if (S == 1) return 0.0;

  // off_j = dt (p_j a_j + (1 - p_zt - p_j) b_j)
  // d off_j / d p_k = dt [ (k==j)(a_j - b_j) - (k==zt) b_j ]
  double off_sum = 0.0;
  double b_sum = 0.0;
  double off_target = 0.0;
  for (Label j = 0; j < S; ++j) {
    if (j == zt) continue;
    const double off = dt * analytical_rate(zt, j, ptheta, stats);
    off_sum += off;
    b_sum += stats.V2(zt, j);
    if (j == target) off_target = off;
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Gradient of the off-diagonal sum, needed by the diagonal target and the
  // saturated branch.
  auto add_sum_grad = [&](double scale) {
    for (Label k = 0; k < S; ++k) {
      if (k == zt) {
        dlog_dptheta[k] += scale * -dt * b_sum;
      } else {
        dlog_dptheta[k] += scale * dt * (stats.V1(zt, k) - stats.V2(zt, k));
      }
    }
  };

  if (off_sum > 1.0) {
    if (target == zt || !(off_target > 0.0)) return kNegInf;
    if (want_grad) {
      dlog_dptheta[target] += dt * (stats.V1(zt, target) - stats.V2(zt, target)) / off_target;
      dlog_dptheta[zt] += -dt * stats.V2(zt, target) / off_target;
      add_sum_grad(-1.0 / off_sum);
    }
    return std::log(off_target) - std::log(off_sum);
  }
  if (target == zt) {
    const double stay = 1.0 - off_sum;
    if (!(stay > 0.0)) return kNegInf;
    if (want_grad) add_sum_grad(-1.0 / stay);
    return std::log(stay);
  }
  if (!(off_target > 0.0)) return kNegInf;
  if (want_grad) {
    dlog_dptheta[target] += dt * (stats.V1(zt, target) - stats.V2(zt, target)) / off_target;
    dlog_dptheta[zt] += -dt * stats.V2(zt, target) / off_target;
  }
  return std::log(off_target);
}

std::uint64_t saturation_count() { return g_saturations.load(); }
void reset_saturation_count() { g_saturations.store(0); }

}  // namespace graphgrpo
