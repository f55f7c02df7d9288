#include "graphgrpo/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace graphgrpo {
namespace {

using nlohmann::json;

// Reads recognised keys of one section and rejects the rest.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw ConfigError("section '" + name + "' must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections = {"model", "flow", "grpo", "refine", "reward", "prior"};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::validate() const {
  require(model.hidden > 0 && model.time_dim >= 0, "model.hidden and model.time_dim must be positive");
  require(model.output_init_scale > 0.0, "model.output_init_scale must be positive");
  require(flow.steps >= 1, "flow.steps must be at least 1");
  require(flow.pretrain_steps >= 0, "flow.pretrain_steps must be non-negative");
  require(flow.batch_size >= 1, "flow.batch_size must be positive");
  require(flow.lr > 0.0, "flow.lr must be positive");
  require(flow.log_every >= 1, "flow.log_every must be positive");
  try {
    grpo.grpo.validate();
    refine.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(grpo.updates >= 0, "grpo.updates must be non-negative");
  require(grpo.checkpoint_every >= 1, "grpo.checkpoint_every must be positive");
  require(refine.t_eps >= 0.0 && refine.t_eps <= 1.0, "refine.t_eps must lie in [0, 1]");
  require(refine.pool_size >= 1, "refine.pool_size must be positive");
  require(is_known_reward(reward.task), "unknown reward task '" + reward.task + "'");
  require(reward.alpha > 0.0 && reward.alpha < 1.0, "reward.alpha must lie in (0, 1)");
  require(prior.momentum >= 0.0 && prior.momentum <= 1.0, "prior.momentum must lie in [0, 1]");
  require(prior.buffer_capacity >= 1, "prior.buffer_capacity must be positive");
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(root.is_object(), "config must be a JSON object");
  for (const auto& [key, value] : root.items()) {
    require(kSections.contains(key), "unknown section '" + key + "'");
  }
  RunConfig cfg;

  Section model(root, "model");
  model.get("hidden", cfg.model.hidden);
  model.get("time_dim", cfg.model.time_dim);
  model.get("output_init_scale", cfg.model.output_init_scale);
  model.finish();

  Section flow(root, "flow");
  flow.get("steps", cfg.flow.steps);
  flow.get("pretrain_steps", cfg.flow.pretrain_steps);
  flow.get("batch_size", cfg.flow.batch_size);
  flow.get("lr", cfg.flow.lr);
  flow.get("weight_decay", cfg.flow.weight_decay);
  flow.get("grad_clip", cfg.flow.grad_clip);
  flow.get("log_every", cfg.flow.log_every);
  flow.finish();

  Section grpo(root, "grpo");
  GrpoConfig& g = cfg.grpo.grpo;
  grpo.get("eps_low", g.eps_low);
  grpo.get("eps_high", g.eps_high);
  grpo.get("beta", g.beta);
  grpo.get("group_size", g.group_size);
  grpo.get("effective_batch", g.effective_batch);
  grpo.get("lr", g.lr);
  grpo.get("lr_decay", g.lr_decay);
  grpo.get("lr_floor", g.lr_floor);
  grpo.get("plateau_window", g.plateau_window);
  grpo.get("plateau_tolerance", g.plateau_tolerance);
  grpo.get("grad_clip", g.grad_clip);
  grpo.get("weight_decay", g.weight_decay);
  grpo.get("updates", cfg.grpo.updates);
  grpo.get("checkpoint_every", cfg.grpo.checkpoint_every);
  grpo.finish();

  Section refine(root, "refine");
  BudgetSchedule& b = cfg.refine.schedule;
  refine.get("t_eps", cfg.refine.t_eps);
  refine.get("pool_size", cfg.refine.pool_size);
  refine.get("init_calls", b.init_calls);
  refine.get("phase1_variants", b.phase1_variants);
  refine.get("phase1_end", b.phase1_end);
  refine.get("phase2_variants", b.phase2_variants);
  refine.get("total_budget", b.total_budget);
  refine.finish();

  Section reward(root, "reward");
  reward.get("task", cfg.reward.task);
  reward.get("alpha", cfg.reward.alpha);
  std::vector<std::string> stats;
  for (Statistic s : cfg.reward.stats) stats.push_back(statistic_name(s));
  reward.get("stats", stats);
  cfg.reward.stats.clear();
  try {
    for (const auto& s : stats) cfg.reward.stats.push_back(parse_statistic(s));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("reward.stats: ") + e.what());
  }
  reward.finish();

  Section prior(root, "prior");
  prior.get("adapt", cfg.prior.adapt);
  prior.get("momentum", cfg.prior.momentum);
  prior.get("trigger", cfg.prior.trigger);
  prior.get("buffer_capacity", cfg.prior.buffer_capacity);
  prior.get("min_reward", cfg.prior.min_reward);
  prior.finish();

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = {{"hidden", cfg.model.hidden},
                {"time_dim", cfg.model.time_dim},
                {"output_init_scale", cfg.model.output_init_scale}};
  j["flow"] = {{"steps", cfg.flow.steps},
               {"pretrain_steps", cfg.flow.pretrain_steps},
               {"batch_size", cfg.flow.batch_size},
               {"lr", cfg.flow.lr},
               {"weight_decay", cfg.flow.weight_decay},
               {"grad_clip", cfg.flow.grad_clip},
               {"log_every", cfg.flow.log_every}};
  const GrpoConfig& g = cfg.grpo.grpo;
  j["grpo"] = {{"eps_low", g.eps_low},
               {"eps_high", g.eps_high},
               {"beta", g.beta},
               {"group_size", g.group_size},
               {"effective_batch", g.effective_batch},
               {"lr", g.lr},
               {"lr_decay", g.lr_decay},
               {"lr_floor", g.lr_floor},
               {"plateau_window", g.plateau_window},
               {"plateau_tolerance", g.plateau_tolerance},
               {"grad_clip", g.grad_clip},
               {"weight_decay", g.weight_decay},
               {"updates", cfg.grpo.updates},
               {"checkpoint_every", cfg.grpo.checkpoint_every}};
  const BudgetSchedule& b = cfg.refine.schedule;
  j["refine"] = {{"t_eps", cfg.refine.t_eps},
                 {"pool_size", cfg.refine.pool_size},
                 {"init_calls", b.init_calls},
                 {"phase1_variants", b.phase1_variants},
                 {"phase1_end", b.phase1_end},
                 {"phase2_variants", b.phase2_variants},
                 {"total_budget", b.total_budget}};
  std::vector<std::string> stats;
  for (Statistic s : cfg.reward.stats) stats.push_back(statistic_name(s));
  j["reward"] = {{"task", cfg.reward.task}, {"alpha", cfg.reward.alpha}, {"stats", stats}};
  j["prior"] = {{"adapt", cfg.prior.adapt},
                {"momentum", cfg.prior.momentum},
                {"trigger", cfg.prior.trigger},
                {"buffer_capacity", cfg.prior.buffer_capacity},
                {"min_reward", cfg.prior.min_reward}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config_to_json(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace graphgrpo
