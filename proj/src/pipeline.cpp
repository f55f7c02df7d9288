#include "graphgrpo/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "graphgrpo/parallel.hpp"
#include "graphgrpo/policy.hpp"
#include "graphgrpo/rollout.hpp"

namespace graphgrpo {

void pretrain(Denoiser& model, AdamW& optimizer, std::span<const GraphState> data,
              const GraphPriors& priors, const PretrainSettings& settings,
              std::uint64_t start,
              const std::function<void(std::uint64_t, double)>& on_step) {
  if (data.empty()) throw std::invalid_argument("pretraining needs data");
  const RandomStream root(settings.seed);
  std::vector<GraphState> batch(settings.batch_size);
  for (std::uint64_t it = start; it < start + static_cast<std::uint64_t>(settings.steps); ++it) {
    RandomStream r = root.derive(it);
    for (auto& g : batch) g = data[r.uniform_index(data.size())];
    RandomStream noise = r.split(1);
    const double loss = pretrain_step(model, optimizer, batch, priors, noise);
    if (on_step) on_step(it, loss);
  }
}

std::vector<GraphState> sample_graphs(const Denoiser& model, const GraphPriors& priors,
                                      int count, int steps, const RandomStream& rng,
                                      int threads) {
  const auto grid = grid_statistics(priors, steps);
  std::vector<GraphState> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    RandomStream r = rng.derive(i);
    const GraphState noise = sample_noise_graph(priors, r);
    out[i] = run_chain(model, noise, 0, grid, r).final_graph;
  });
  return out;
}

namespace {

MetricSummary describe(const std::vector<SampleMetrics>& m, double SampleMetrics::*field) {
  MetricSummary s;
  if (m.empty()) return s;
  for (const auto& x : m) s.mean += x.*field;
  s.mean /= static_cast<double>(m.size());
  for (const auto& x : m) s.std += (x.*field - s.mean) * (x.*field - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(m.size()));
  return s;
}

}  // namespace

EvalSummary summarize(std::vector<SampleMetrics> per_seed) {
  EvalSummary e;
  e.per_seed = std::move(per_seed);
  e.valid = describe(e.per_seed, &SampleMetrics::valid);
  e.unique = describe(e.per_seed, &SampleMetrics::unique);
  e.novel = describe(e.per_seed, &SampleMetrics::novel);
  e.vun = describe(e.per_seed, &SampleMetrics::vun);
  e.ratio = describe(e.per_seed, &SampleMetrics::ratio);
  return e;
}

EvalSummary evaluate_model(const Denoiser& model, const GraphPriors& priors, int steps,
                           int seeds, int count, std::uint64_t seed,
                           std::span<const GraphState> train,
                           std::span<const GraphState> heldout, const RewardSpec& spec,
                           int threads) {
  std::vector<SampleMetrics> per_seed;
  const RandomStream root(seed);
  for (int s = 0; s < seeds; ++s) {
    const auto samples = sample_graphs(model, priors, count, steps, root.derive(s), threads);
    per_seed.push_back(vun_ratio_metrics(
        samples, train, heldout, [&spec](const GraphState& g) { return spec.valid(g); },
        spec.reference.stats));
  }
  return summarize(std::move(per_seed));
}

}  // namespace graphgrpo
