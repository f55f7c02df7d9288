#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "graphgrpo/config.hpp"

using namespace graphgrpo;

TEST_SUITE("config") {

TEST_CASE("empty config gives the defaults") {
  auto cfg = parse_config("{}");
  CHECK(cfg.flow.steps == 50);
  CHECK(cfg.grpo.grpo.eps_low == 0.2);
  CHECK(cfg.grpo.grpo.eps_high == 0.28);
  CHECK(cfg.grpo.grpo.beta == 0.005);
  CHECK(cfg.grpo.grpo.group_size == 60);
  CHECK(cfg.grpo.grpo.effective_batch == 200);
  CHECK(cfg.grpo.grpo.lr == 2e-5);
  CHECK(cfg.refine.t_eps == 0.8);
  CHECK(cfg.refine.pool_size == 5);
  CHECK(cfg.refine.schedule.init_calls == 300);
  CHECK(cfg.refine.schedule.phase1_end == 2000);
  CHECK(cfg.refine.schedule.total_budget == 10000);
  CHECK(cfg.reward.alpha == 0.65);
  CHECK(cfg.reward.stats.size() == 3);
  CHECK(cfg.prior.momentum == 0.05);
  CHECK(cfg.prior.trigger == 0.001);
  CHECK(cfg.prior.buffer_capacity == 1000);
  CHECK(cfg.model.hidden == 128);
  CHECK(cfg.flow.lr == 1e-3);
}

TEST_CASE("values override defaults") {
  auto cfg = parse_config(R"({"model": {"hidden": 64}, "grpo": {"beta": 0.1, "group_size": 8},
                             "reward": {"task": "tree-path6", "stats": ["deg"]},
                             "refine": {"t_eps": 0.5}, "prior": {"adapt": false}})");
  CHECK(cfg.model.hidden == 64);
  CHECK(cfg.grpo.grpo.beta == 0.1);
  CHECK(cfg.grpo.grpo.group_size == 8);
  CHECK(cfg.reward.task == "tree-path6");
  REQUIRE(cfg.reward.stats.size() == 1);
  CHECK(cfg.reward.stats[0] == Statistic::kDegree);
  CHECK(cfg.refine.t_eps == 0.5);
  CHECK_FALSE(cfg.prior.adapt);
}

TEST_CASE("unknown keys, wrong types and bad values are errors") {
  CHECK_THROWS_AS(parse_config(R"({"modle": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"grpo": {"betta": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"grpo": {"beta": "high"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"grpo": {"eps_low": 0.5, "eps_high": 0.3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"reward": {"task": "docking"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"reward": {"stats": ["spectral"]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"refine": {"t_eps": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"flow": 3})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  try {
    parse_config(R"({"grpo": {"betta": 0.1}})");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grpo.betta") != std::string::npos);
  }
}

TEST_CASE("canonical JSON round trips and hashes stably") {
  auto cfg = parse_config(R"({"grpo": {"beta": 0.02}, "reward": {"task": "planar"}})");
  auto again = parse_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);
  CHECK(config_hash(cfg) != config_hash(parse_config("{}")));
  // Key order in the input does not matter.
  auto a = parse_config(R"({"flow": {"steps": 20, "lr": 0.01}})");
  auto b = parse_config(R"({"flow": {"lr": 0.01, "steps": 20}})");
  CHECK(config_hash(a) == config_hash(b));

  auto path = std::filesystem::temp_directory_path() / "graphgrpo_cfg.json";
  std::ofstream(path) << config_to_json(cfg);
  CHECK(config_hash(load_config(path.string())) == config_hash(cfg));
}

}
