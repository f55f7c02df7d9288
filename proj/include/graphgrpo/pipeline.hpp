#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/optimizer.hpp"
#include "graphgrpo/rewards.hpp"

namespace graphgrpo {

struct PretrainSettings {
  int steps = 5000;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

// Runs pretraining iterations [start, start + steps). Iteration i draws its
// batch and corruption from RandomStream(seed).derive(i), so a resumed run
// continues exactly where an uninterrupted one would be.
void pretrain(Denoiser& model, AdamW& optimizer, std::span<const GraphState> data,
              const GraphPriors& priors, const PretrainSettings& settings,
              std::uint64_t start,
              const std::function<void(std::uint64_t iteration, double loss)>& on_step = {});

// `count` independent generations from noise over the T-step grid. Sample i
// uses rng.derive(i).
std::vector<GraphState> sample_graphs(const Denoiser& model, const GraphPriors& priors,
                                      int count, int steps, const RandomStream& rng,
                                      int threads = 1);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

struct EvalSummary {
  std::vector<SampleMetrics> per_seed;
  MetricSummary valid, unique, novel, vun, ratio;
};

EvalSummary summarize(std::vector<SampleMetrics> per_seed);

// seeds x count samples, one metric set per seed.
EvalSummary evaluate_model(const Denoiser& model, const GraphPriors& priors, int steps,
                           int seeds, int count, std::uint64_t seed,
                           std::span<const GraphState> train,
                           std::span<const GraphState> heldout, const RewardSpec& spec,
                           int threads = 1);

}  // namespace graphgrpo
