#include "graphgrpo/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "graphgrpo/canonical.hpp"
#include "graphgrpo/parallel.hpp"
#include "graphgrpo/policy.hpp"
#include "graphgrpo/rollout.hpp"

namespace graphgrpo {

PriorityPool::PriorityPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("pool capacity must be positive");
}

bool PriorityPool::offer(const GraphState& g, double reward, std::uint64_t discovery) {
  return offer(g, reward, canonical_key(g), discovery);
}

bool PriorityPool::offer(const GraphState& g, double reward, const std::string& key,
                         std::uint64_t discovery) {
  auto same = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Entry& e) { return e.key == key; });
  if (same != entries_.end()) {
    if (!(reward > same->reward)) return false;
    entries_.erase(same);
  }
  if (entries_.size() >= capacity_ && !(reward > entries_.back().reward)) return false;
  auto pos = std::find_if(entries_.begin(), entries_.end(),
                          [&](const Entry& e) { return e.reward < reward; });
  entries_.insert(pos, Entry{g, reward, key, discovery});
  if (entries_.size() > capacity_) entries_.pop_back();
  return true;
}

double PriorityPool::min_reward() const {
  if (entries_.empty()) throw std::logic_error("empty pool");
  return entries_.back().reward;
}

double PriorityPool::best_reward() const {
  if (entries_.empty()) throw std::logic_error("empty pool");
  return entries_.front().reward;
}

void BudgetSchedule::validate() const {
  if (init_calls == 0) throw std::invalid_argument("init_calls must be positive");
  if (phase1_end < init_calls) throw std::invalid_argument("phase1_end precedes init_calls");
  if (phase1_variants == 0 || phase2_variants == 0) {
    throw std::invalid_argument("variant counts must be positive");
  }
}

int BudgetSchedule::phase_at(std::uint64_t calls) const {
  if (calls < init_calls) return 0;
  if (calls < phase1_end) return 1;
  return 2;
}

std::uint64_t BudgetSchedule::phase_limit(std::uint64_t calls) const {
  switch (phase_at(calls)) {
    case 0:
      return std::min(init_calls, total_budget);
    case 1:
      return std::min(phase1_end, total_budget);
    default:
      return total_budget;
  }
}

std::uint64_t BudgetSchedule::variants_at(std::uint64_t calls) const {
  return phase_at(calls) == 2 ? phase2_variants : phase1_variants;
}

GraphState renoise(const GraphState& g, double t_eps, const GraphPriors& priors,
                   RandomStream& rng) {
  if (!(t_eps >= 0.0 && t_eps <= 1.0)) throw std::domain_error("t_eps must lie in [0, 1]");
  GraphState out = g;
  const int n = g.num_nodes();
  for (int d = 0; d < g.num_dims(); ++d) {
    if (rng.uniform() < t_eps) continue;
    out.set_dim(d, sample_categorical(d < n ? priors.node : priors.edge, rng));
  }
  return out;
}

int resume_step(double t_eps, int steps) {
  // The tolerance keeps products such as 0.8 * 50 on their grid point.
  const int k = static_cast<int>(std::ceil(t_eps * steps - 1e-9));
  return std::clamp(k, 0, steps);
}

namespace {

void score_batch(const std::vector<GraphState>& graphs, CountingOracle& oracle, int phase,
                 bool refined, PriorityPool& pool, std::vector<ScoreRecord>* log,
                 RoundStats* stats) {
  for (const auto& g : graphs) {
    const double r = oracle(g);
    const std::uint64_t call = oracle.calls();
    const std::string key = canonical_key(g);
    const bool entered = pool.offer(g, r, key, call);
    if (stats != nullptr) stats->entered += entered;
    if (log != nullptr) log->push_back({call, r, key, phase, refined});
  }
}

std::vector<GraphState> denovo_batch(const Denoiser& model, std::uint64_t count,
                                     const GraphPriors& priors, const RefineSettings& settings,
                                     const RandomStream& rng, std::uint64_t offset) {
  const auto grid = grid_statistics(priors, settings.steps);
  std::vector<GraphState> out(count);
  parallel_for(count, settings.threads, [&](std::size_t i) {
    RandomStream r = rng.derive(offset + i);
    GraphState noise = sample_noise_graph(priors, r);
    out[i] = run_chain(model, noise, 0, grid, r).final_graph;
  });
  return out;
}

}  // namespace

RoundStats refine_round(PriorityPool& pool, const Denoiser& model, std::uint64_t variants,
                        CountingOracle& oracle, std::uint64_t call_limit,
                        const GraphPriors& priors, const RefineSettings& settings,
                        const RandomStream& rng, int phase, std::vector<ScoreRecord>* log) {
  if (pool.empty()) throw std::invalid_argument("refinement needs a nonempty pool");
  RoundStats stats;
  const auto grid = grid_statistics(priors, settings.steps);
  const int start = resume_step(settings.t_eps, settings.steps);
  // Candidates are fixed at the start of the round.
  const std::vector<PriorityPool::Entry> candidates = pool.entries();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::uint64_t spent = oracle.calls();
    if (spent >= call_limit) {
      stats.truncated = true;
      break;
    }
    const std::uint64_t count = std::min(variants, call_limit - spent);
    stats.truncated |= count < variants;
    std::vector<GraphState> batch(count);
    parallel_for(count, settings.threads, [&](std::size_t v) {
      RandomStream r = rng.derive(c, v);
      GraphState noisy = renoise(candidates[c].graph, settings.t_eps, priors, r);
      batch[v] = run_chain(model, noisy, start, grid, r).final_graph;
    });
    stats.generated += count;
    score_batch(batch, oracle, phase, true, pool, log, &stats);
  }
  return stats;
}

RefinementResult run_refinement(const Denoiser& model, CountingOracle& oracle,
                                const BudgetSchedule& schedule, const GraphPriors& priors,
                                const RefineSettings& settings, const RandomStream& rng) {
  schedule.validate();
  RefinementResult result{PriorityPool(settings.pool_size), {}, 0};
  const std::uint64_t base = oracle.calls();
  const std::uint64_t initial = std::min(schedule.init_calls, schedule.total_budget);
  score_batch(denovo_batch(model, initial, priors, settings, rng.split(0), 0), oracle, 0, false,
              result.pool, &result.log, nullptr);
  std::uint64_t round = 0;
  while (oracle.calls() - base < schedule.total_budget) {
    const std::uint64_t spent = oracle.calls() - base;
    const int phase = schedule.phase_at(spent);
    const std::uint64_t limit = base + schedule.phase_limit(spent);
    refine_round(result.pool, model, schedule.variants_at(spent), oracle, limit, priors,
                 settings, rng.derive(1, round), phase, &result.log);
    ++round;
  }
  result.oracle_calls = oracle.calls() - base;
  for (auto& rec : result.log) rec.call_index -= base;
  return result;
}

RefinementResult run_denovo(const Denoiser& model, CountingOracle& oracle,
                            std::uint64_t budget, const GraphPriors& priors,
                            const RefineSettings& settings, const RandomStream& rng) {
  RefinementResult result{PriorityPool(settings.pool_size), {}, 0};
  const std::uint64_t base = oracle.calls();
  score_batch(denovo_batch(model, budget, priors, settings, rng.split(0), 0), oracle, 0, false,
              result.pool, &result.log, nullptr);
  result.oracle_calls = oracle.calls() - base;
  for (auto& rec : result.log) rec.call_index -= base;
  return result;
}

std::vector<double> top_k_curve(const std::vector<ScoreRecord>& log, std::size_t k) {
  std::vector<double> curve;
  curve.reserve(log.size());
  // Best reward per key, and the current top-k as (reward, key) pairs.
  std::map<std::string, double> best;
  std::set<std::pair<double, std::string>, std::greater<>> top;
  double sum = 0.0;
  for (const auto& rec : log) {
    auto [it, inserted] = best.emplace(rec.key, rec.reward);
    if (!inserted) {
      if (rec.reward <= it->second) {
        curve.push_back(sum / static_cast<double>(k));
        continue;
      }
      if (top.erase({it->second, rec.key}) > 0) sum -= it->second;
      it->second = rec.reward;
    }
    top.emplace(rec.reward, rec.key);
    sum += rec.reward;
    if (top.size() > k) {
      auto last = std::prev(top.end());
      sum -= last->first;
      top.erase(last);
    }
    curve.push_back(sum / static_cast<double>(k));
  }
  return curve;
}

double auc_top_k(const std::vector<ScoreRecord>& log, std::size_t k) {
  if (log.empty()) return 0.0;
  const auto curve = top_k_curve(log, k);
  double s = 0.0;
  for (double v : curve) s += v;
  return s / static_cast<double>(curve.size());
}

}  // namespace graphgrpo
