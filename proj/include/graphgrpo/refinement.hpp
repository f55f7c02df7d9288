#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/graph.hpp"
#include "graphgrpo/random.hpp"
#include "graphgrpo/rewards.hpp"

namespace graphgrpo {

// Top-M graphs by reward, unique by canonical key. Equal rewards keep the
// order of discovery.
class PriorityPool {
 public:
  explicit PriorityPool(std::size_t capacity = 5);

  struct Entry {
    GraphState graph;
    double reward;
    std::string key;
    std::uint64_t discovery;
  };

  // Returns true when the candidate is in the pool afterwards as a new entry
  // or an improved one.
  bool offer(const GraphState& g, double reward, std::uint64_t discovery);
  bool offer(const GraphState& g, double reward, const std::string& key,
             std::uint64_t discovery);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  double min_reward() const;
  double best_reward() const;

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

// Variants per pool candidate as a function of oracle calls already spent.
struct BudgetSchedule {
  std::uint64_t init_calls = 300;
  std::uint64_t phase1_variants = 150;
  std::uint64_t phase1_end = 2000;
  std::uint64_t phase2_variants = 500;
  std::uint64_t total_budget = 10000;

  void validate() const;
  // 0 while calls < init_calls, 1 until phase1_end, then 2.
  int phase_at(std::uint64_t calls) const;
  // Calls index at which the phase containing `calls` ends.
  std::uint64_t phase_limit(std::uint64_t calls) const;
  std::uint64_t variants_at(std::uint64_t calls) const;
};

// Each dimension keeps its label with probability t_eps, otherwise it is
// redrawn from the prior, so after renoising
// P(l | z) = t_eps delta(l, z) + (1 - t_eps) prior(l).
GraphState renoise(const GraphState& g, double t_eps, const GraphPriors& priors,
                   RandomStream& rng);

// First grid step at or after t_eps: ceil(t_eps * T).
int resume_step(double t_eps, int steps);

struct ScoreRecord {
  std::uint64_t call_index = 0;  // 1-based
  double reward = 0.0;
  std::string key;
  int phase = 0;
  bool refined = false;  // false: de novo
};

struct RefineSettings {
  double t_eps = 0.8;
  int steps = 50;
  std::size_t pool_size = 5;
  int threads = 1;
};

struct RoundStats {
  std::uint64_t generated = 0;
  std::uint64_t entered = 0;
  bool truncated = false;
};

// Renoises every pool entry, regenerates `variants` graphs from it over the
// remaining grid, scores each (one oracle call apiece) and merges them into
// the pool. Stops early once `call_limit` calls are spent.
RoundStats refine_round(PriorityPool& pool, const Denoiser& model, std::uint64_t variants,
                        CountingOracle& oracle, std::uint64_t call_limit,
                        const GraphPriors& priors, const RefineSettings& settings,
                        const RandomStream& rng, int phase, std::vector<ScoreRecord>* log);

struct RefinementResult {
  PriorityPool pool;
  std::vector<ScoreRecord> log;
  std::uint64_t oracle_calls = 0;
};

// Phase 0 samples init_calls graphs de novo; later phases run refinement
// rounds with the scheduled variant counts until total_budget calls.
RefinementResult run_refinement(const Denoiser& model, CountingOracle& oracle,
                                const BudgetSchedule& schedule, const GraphPriors& priors,
                                const RefineSettings& settings, const RandomStream& rng);

// De novo baseline: `budget` independent samples, all scored.
RefinementResult run_denovo(const Denoiser& model, CountingOracle& oracle,
                            std::uint64_t budget, const GraphPriors& priors,
                            const RefineSettings& settings, const RandomStream& rng);

// Mean of the k best unique rewards seen so far (missing entries count as 0)
// after each call.
std::vector<double> top_k_curve(const std::vector<ScoreRecord>& log, std::size_t k = 10);
// Average of top_k_curve over all calls.
double auc_top_k(const std::vector<ScoreRecord>& log, std::size_t k = 10);

}  // namespace graphgrpo
