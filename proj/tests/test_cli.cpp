#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "graphgrpo/dataset.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("graphgrpo_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

struct Run {
  int code = -1;
  std::string output;
};

Run cli(const std::string& args) {
  const std::string out = path("last_output.txt");
  const std::string cmd = std::string(GRAPHGRPO_CLI_PATH) + " " + args + " > " + out + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const std::string& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const std::string& file) {
  std::vector<json> rows;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

// Value printed after `name` in eval output, e.g. "valid   100.00 +- 0.00".
double eval_value(const std::string& output, const std::string& name) {
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    double v = 0.0;
    if (ls >> key >> v && key == name) return v;
  }
  FAIL("metric " << name << " missing in: " << output);
  return 0.0;
}

const std::string& small_config() {
  static const std::string file = [] {
    const std::string f = path("small.json");
    std::ofstream(f) << R"({
  "model": {"hidden": 16, "time_dim": 4},
  "flow": {"steps": 8, "pretrain_steps": 20, "batch_size": 8, "log_every": 5},
  "grpo": {"group_size": 4, "effective_batch": 8, "lr": 1e-3, "updates": 2, "checkpoint_every": 1},
  "refine": {"init_calls": 20, "phase1_variants": 2, "phase1_end": 60, "phase2_variants": 4,
             "total_budget": 120, "pool_size": 5},
  "reward": {"task": "tree"}
})";
    return f;
  }();
  return file;
}

// Train and held-out tree sets plus a short pretrained checkpoint, made once.
struct Fixture {
  std::string train = path("train.txt");
  std::string heldout = path("heldout.txt");
  std::string ckpt = path("pre.ckpt");
  Fixture() {
    REQUIRE(cli("synthesize --kind tree --nodes 6 --count 40 --heldout 20 --heldout-out " +
                heldout + " --out " + train + " --seed 3")
                .code == 0);
    REQUIRE(cli("pretrain --config " + small_config() + " --data " + train + " --out " + ckpt +
                " --seed 1")
                .code == 0);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synthesize writes a loadable dataset and a held-out split") {
  const auto& f = fixture();
  const auto train = graphgrpo::read_dataset(f.train);
  const auto held = graphgrpo::read_dataset(f.heldout);
  CHECK(train.graphs.size() == 40);
  CHECK(held.graphs.size() == 20);
  for (const auto& g : train.graphs) CHECK(g.num_nodes() == 6);
}

TEST_CASE("missing dataset exits with 2") {
  const Run r = cli("pretrain --data " + path("nope.txt") + " --out " + path("x.ckpt"));
  CHECK(r.code == 2);
  CHECK(r.output.find("nope.txt") != std::string::npos);
}

TEST_CASE("bad config exits with 2") {
  const std::string bad = path("bad.json");
  std::ofstream(bad) << R"({"flow": {"stepz": 3}})";
  const Run r = cli("pretrain --config " + bad + " --data " + fixture().train + " --out " +
                    path("x.ckpt"));
  CHECK(r.code == 2);
  CHECK(r.output.find("stepz") != std::string::npos);

  const std::string broken = path("broken.json");
  std::ofstream(broken) << "{ not json";
  CHECK(cli("pretrain --config " + broken + " --data " + fixture().train + " --out " +
            path("x.ckpt"))
            .code == 2);
}

TEST_CASE("unknown reward exits with 2") {
  const auto& f = fixture();
  const Run r = cli("refine --ckpt " + f.ckpt + " --data " + f.train + " --out " +
                    path("r.jsonl") + " --reward nosuchtask");
  CHECK(r.code == 2);
  CHECK(r.output.find("nosuchtask") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("sample --out " + path("s.txt")).code == 2);
}

TEST_CASE("verify passes its gates") {
  const Run r = cli("verify --seed 0");
  CHECK(r.code == 0);
  CHECK(r.output.find("FAIL") == std::string::npos);
}

TEST_CASE("eval of the training set is fully valid and never novel") {
  const auto& f = fixture();
  const Run r = cli("eval --samples " + f.train + " --train " + f.train + " --heldout " +
                    f.heldout + " --out " + path("eval.json"));
  REQUIRE(r.code == 0);
  CHECK(eval_value(r.output, "valid") == doctest::Approx(100.0));
  CHECK(eval_value(r.output, "novel") == doctest::Approx(0.0));
  const json j = json::parse(slurp(path("eval.json")));
  CHECK(j["summary"]["valid"]["mean"].get<double>() == doctest::Approx(1.0));
  CHECK(fs::exists(path("eval.json") + ".manifest.json"));
}

TEST_CASE("pretrain writes a manifest and a loss log") {
  const auto& f = fixture();
  const json m = json::parse(slurp(f.ckpt + ".manifest.json"));
  CHECK(m["command"] == "pretrain");
  CHECK(m["seed"] == 1);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m["config"]["model"]["hidden"] == 16);
  const auto rows = read_jsonl(f.ckpt + ".log.jsonl");
  REQUIRE(rows.size() == 20);
  for (const auto& row : rows) {
    CHECK(row.contains("step"));
    CHECK(row.contains("loss"));
    CHECK(row.contains("lr"));
    CHECK(std::isfinite(row["loss"].get<double>()));
  }
}

TEST_CASE("resumed pretraining reproduces the uninterrupted run") {
  const auto& f = fixture();
  const std::string half = path("half.ckpt"), rest = path("rest.ckpt");
  REQUIRE(cli("pretrain --config " + small_config() + " --data " + f.train + " --out " + half +
              " --steps 10 --seed 1")
              .code == 0);
  REQUIRE(cli("pretrain --config " + small_config() + " --data " + f.train + " --out " + rest +
              " --resume " + half + " --steps 10 --seed 1")
              .code == 0);
  const auto full = read_jsonl(f.ckpt + ".log.jsonl");
  const auto second = read_jsonl(rest + ".log.jsonl");
  REQUIRE(full.size() == 20);
  REQUIRE(second.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(second[i]["step"] == full[10 + i]["step"]);
    CHECK(second[i]["loss"].get<double>() ==
          doctest::Approx(full[10 + i]["loss"].get<double>()).epsilon(1e-12));
  }
  CHECK(slurp(rest) == slurp(f.ckpt));
}

TEST_CASE("sample is deterministic given the seed") {
  const auto& f = fixture();
  const std::string a = path("s_a.txt"), b = path("s_b.txt"), c = path("s_c.txt");
  REQUIRE(cli("sample --config " + small_config() + " --ckpt " + f.ckpt + " --count 12 --out " +
              a + " --seed 5")
              .code == 0);
  REQUIRE(cli("sample --config " + small_config() + " --ckpt " + f.ckpt + " --count 12 --out " +
              b + " --seed 5 --threads 2")
              .code == 0);
  REQUIRE(cli("sample --config " + small_config() + " --ckpt " + f.ckpt + " --count 12 --out " +
              c + " --seed 6")
              .code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
  CHECK(graphgrpo::read_dataset(a).graphs.size() == 12);
  CHECK(fs::exists(a + ".manifest.json"));
}

TEST_CASE("train-rl logs every update with the required fields") {
  const auto& f = fixture();
  const std::string out = path("rl.ckpt");
  const Run r = cli("train-rl --config " + small_config() + " --ckpt " + f.ckpt + " --data " +
                    f.train + " --out " + out + " --seed 2");
  REQUIRE(r.code == 0);
  const auto rows = read_jsonl(out + ".log.jsonl");
  REQUIRE(rows.size() == 2);
  for (const char* key : {"update", "reward_mean", "reward_max", "ratio_mean", "clip_frac",
                          "kl_mean", "lr", "oracle_calls"})
    CHECK(rows[0].contains(key));
  CHECK(rows[1]["oracle_calls"].get<int>() == 16);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out + ".update1"));
  CHECK(fs::exists(out + ".manifest.json"));
  // The fine-tuned checkpoint samples like any other.
  CHECK(cli("sample --config " + small_config() + " --ckpt " + out + " --count 4 --out " +
            path("rl_s.txt"))
            .code == 0);
}

TEST_CASE("refine with budget equal to the initial calls matches de novo") {
  const auto& f = fixture();
  const std::string base = " --config " + small_config() + " --ckpt " + f.ckpt + " --data " +
                           f.train + " --seed 4 --budget 20";
  const Run a = cli("refine" + base + " --out " + path("r1.jsonl") + " --best-out " +
                    path("b1.txt"));
  const Run b = cli("refine" + base + " --denovo --out " + path("r2.jsonl") + " --best-out " +
                    path("b2.txt"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(path("b1.txt")) == slurp(path("b2.txt")));
  CHECK(a.output.find("oracle calls 20") != std::string::npos);
}

TEST_CASE("refine spends exactly the budget and logs each call") {
  const auto& f = fixture();
  const Run r = cli("refine --config " + small_config() + " --ckpt " + f.ckpt + " --data " +
                    f.train + " --seed 4 --out " + path("r3.jsonl"));
  REQUIRE(r.code == 0);
  const auto rows = read_jsonl(path("r3.jsonl"));
  REQUIRE(rows.size() == 120);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i]["call_index"].get<std::size_t>() == i + 1);
    CHECK(rows[i].contains("canonical_key"));
    CHECK(rows[i].contains("phase"));
  }
  CHECK(rows[0]["source"] == "denovo");
  CHECK(rows[119]["source"] == "refine");
  CHECK(r.output.find("oracle calls 120") != std::string::npos);
  const json m = json::parse(slurp(path("r3.jsonl") + ".manifest.json"));
  CHECK(m["extra"]["total_budget"] == 120);
}

}  // TEST_SUITE
