#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/grpo.hpp"
#include "graphgrpo/refinement.hpp"
#include "graphgrpo/rewards.hpp"

namespace graphgrpo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowSection {
  int steps = 50;
  int pretrain_steps = 5000;
  int batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double grad_clip = 5.0;
  int log_every = 50;
};

struct GrpoSection {
  GrpoConfig grpo;
  int updates = 100;
  int checkpoint_every = 25;
};

struct RefineSection {
  double t_eps = 0.8;
  std::size_t pool_size = 5;
  BudgetSchedule schedule;
};

struct RewardSection {
  std::string task = "tree";
  double alpha = 0.65;
  std::vector<Statistic> stats = {Statistic::kDegree, Statistic::kClustering,
                                  Statistic::kTriangles};
};

struct PriorSection {
  bool adapt = true;
  double momentum = 0.05;
  double trigger = 0.001;
  std::size_t buffer_capacity = 1000;
  // Buffer candidacy threshold.
  double min_reward = 0.0;
};

// JSON run configuration with sections model, flow, grpo, refine, reward and
// prior. Every section and key is optional; unknown ones are errors.
struct RunConfig {
  DenoiserConfig model;  // class counts come from the dataset
  FlowSection flow;
  GrpoSection grpo;
  RefineSection refine;
  RewardSection reward;
  PriorSection prior;

  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
// Canonical JSON of every field, defaults included.
std::string config_to_json(const RunConfig& cfg);
// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace graphgrpo
