// graphgrpo: synthesize, pretrain, train-rl, sample, refine, eval, verify.
//
// Exit codes: 0 success, 1 gate failure (verify), 2 usage or input error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphgrpo/canonical.hpp"
#include "graphgrpo/config.hpp"
#include "graphgrpo/dataset.hpp"
#include "graphgrpo/denoiser.hpp"
#include "graphgrpo/grpo.hpp"
#include "graphgrpo/oracle.hpp"
#include "graphgrpo/parallel.hpp"
#include "graphgrpo/pipeline.hpp"
#include "graphgrpo/refinement.hpp"
#include "graphgrpo/rewards.hpp"
#include "json.hpp"

using namespace graphgrpo;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = default_thread_count();
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_config(path);
}

Dataset load_data(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw UsageError("cannot open dataset '" + path + "'");
  return read_dataset(path);
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw UsageError("cannot write '" + path + "'");
  }
  void write(const json& row) {
    if (out_.is_open()) out_ << row.dump() << '\n';
  }

 private:
  std::ofstream out_;
};

void write_manifest(const std::string& out, const std::string& command, const RunConfig& cfg,
                    const Common& common, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["version"] = GRAPHGRPO_VERSION;
  m["config_hash"] = config_hash(cfg);
  m["config"] = json::parse(config_to_json(cfg));
  m["seed"] = common.seed;
  m["threads"] = common.threads;
  m["created_unix"] = static_cast<long long>(std::time(nullptr));
  m["extra"] = std::move(extra);
  std::ofstream f(out + ".manifest.json");
  f << m.dump(2) << '\n';
}

DenoiserConfig model_config(const RunConfig& cfg, const LabelSpace& labels) {
  DenoiserConfig m = cfg.model;
  m.node_classes = labels.node_classes;
  m.edge_classes = labels.edge_classes;
  return m;
}

GraphPriors checkpoint_priors(const Checkpoint& ckpt) {
  if (!ckpt.priors) throw UsageError("checkpoint carries no priors");
  return *ckpt.priors;
}

json metrics_json(const SampleMetrics& m) {
  return {{"valid", m.valid}, {"unique", m.unique}, {"novel", m.novel},
          {"vun", m.vun},     {"ratio", m.ratio},   {"ratio_terms", m.ratio_terms}};
}

std::string to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    hex += digits[c >> 4];
    hex += digits[c & 15];
  }
  return hex;
}

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) sub->add_option("--config", c.config_path, "JSON run configuration");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph generation with discrete flow matching and group-relative policy optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(GRAPHGRPO_VERSION));

  Common common;

  // synthesize
  std::string syn_kind = "tree", syn_out, syn_heldout_out;
  int syn_nodes = 8, syn_count = 128, syn_heldout = 0;
  auto* syn = app.add_subcommand("synthesize", "write a synthetic tree or planar dataset");
  syn->add_option("--kind", syn_kind)->check(CLI::IsMember({"tree", "planar"}));
  syn->add_option("--nodes", syn_nodes)->check(CLI::PositiveNumber);
  syn->add_option("--count", syn_count)->check(CLI::NonNegativeNumber);
  syn->add_option("--out", syn_out)->required();
  syn->add_option("--heldout", syn_heldout, "extra graphs written to --heldout-out");
  syn->add_option("--heldout-out", syn_heldout_out);
  add_common(syn, common, false);

  // pretrain
  std::string pt_data, pt_out, pt_resume, pt_log;
  std::optional<int> pt_steps;
  auto* pt = app.add_subcommand("pretrain", "cross-entropy pretraining of the denoiser");
  pt->add_option("--data", pt_data)->required();
  pt->add_option("--out", pt_out)->required();
  pt->add_option("--resume", pt_resume, "continue from a pretraining checkpoint");
  pt->add_option("--log", pt_log, "JSONL loss log (default <out>.log.jsonl)");
  pt->add_option("--steps", pt_steps, "override flow.pretrain_steps");
  add_common(pt, common);

  // train-rl
  std::string rl_ckpt, rl_reward, rl_data, rl_out, rl_log;
  std::optional<int> rl_updates;
  auto* rl = app.add_subcommand("train-rl", "GRPO fine-tuning against a verifiable reward");
  rl->add_option("--ckpt", rl_ckpt, "pretrained checkpoint (also the frozen reference)")->required();
  rl->add_option("--reward", rl_reward, "reward task, overrides reward.task");
  rl->add_option("--data", rl_data, "reference dataset for the structural statistics")->required();
  rl->add_option("--out", rl_out)->required();
  rl->add_option("--log", rl_log, "JSONL training log (default <out>.log.jsonl)");
  rl->add_option("--updates", rl_updates, "override grpo.updates");
  add_common(rl, common);

  // sample
  std::string sm_ckpt, sm_out;
  int sm_count = 40;
  auto* sm = app.add_subcommand("sample", "generate graphs from a checkpoint");
  sm->add_option("--ckpt", sm_ckpt)->required();
  sm->add_option("--count", sm_count)->check(CLI::NonNegativeNumber);
  sm->add_option("--out", sm_out)->required();
  add_common(sm, common);

  // refine
  std::string rf_ckpt, rf_reward, rf_data, rf_out, rf_best;
  std::optional<double> rf_teps;
  std::optional<std::uint64_t> rf_budget;
  bool rf_denovo = false;
  auto* rf = app.add_subcommand("refine", "renoise-and-regenerate search under an oracle budget");
  rf->add_option("--ckpt", rf_ckpt)->required();
  rf->add_option("--reward", rf_reward, "reward task, overrides reward.task");
  rf->add_option("--data", rf_data, "reference dataset for the structural statistics")->required();
  rf->add_option("--out", rf_out, "JSONL score log")->required();
  rf->add_option("--best-out", rf_best, "dataset file for the final pool");
  rf->add_option("--t-eps", rf_teps, "override refine.t_eps")->check(CLI::Range(0.0, 1.0));
  rf->add_option("--budget", rf_budget, "override refine.total_budget");
  rf->add_flag("--denovo", rf_denovo, "spend the whole budget on de novo samples");
  add_common(rf, common);

  // eval
  std::string ev_ckpt, ev_samples, ev_train, ev_heldout, ev_reward, ev_out;
  int ev_seeds = 5, ev_count = 40;
  auto* ev = app.add_subcommand("eval", "validity, uniqueness, novelty and distribution ratio");
  auto* ev_ck = ev->add_option("--ckpt", ev_ckpt, "evaluate fresh samples of a checkpoint");
  auto* ev_sm = ev->add_option("--samples", ev_samples, "evaluate a dataset file instead");
  ev_ck->excludes(ev_sm);
  ev->add_option("--train", ev_train)->required();
  ev->add_option("--heldout", ev_heldout, "held-out split for the ratio baseline")->required();
  ev->add_option("--reward", ev_reward, "validity predicate from this task (default reward.task)");
  ev->add_option("--seeds", ev_seeds)->check(CLI::PositiveNumber);
  ev->add_option("--count", ev_count)->check(CLI::PositiveNumber);
  ev->add_option("--out", ev_out, "JSON summary file");
  add_common(ev, common);

  // verify
  auto* vf = app.add_subcommand("verify", "run the oracle suite");
  add_common(vf, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_run_config(common.config_path);

    if (syn->parsed()) {
      RandomStream rng(common.seed);
      const DatasetKind kind = syn_kind == "tree" ? DatasetKind::kTree : DatasetKind::kPlanar;
      if (kind == DatasetKind::kPlanar && syn_nodes > 16) throw UsageError("planar synthesis supports --nodes <= 16");
      Dataset d{{1, 2}, synthesize_dataset(kind, syn_nodes, syn_count, rng)};
      write_dataset(d, syn_out);
      if (syn_heldout > 0) {
        if (syn_heldout_out.empty()) throw UsageError("--heldout needs --heldout-out");
        RandomStream h = rng.split(0x68656c64);
        write_dataset(Dataset{{1, 2}, synthesize_dataset(kind, syn_nodes, syn_heldout, h)},
                      syn_heldout_out);
      }
      std::cout << "wrote " << d.graphs.size() << " graphs to " << syn_out << "\n";
      return 0;
    }

    if (pt->parsed()) {
      const Dataset data = load_data(pt_data);
      if (data.graphs.empty()) throw UsageError("dataset is empty");
      Checkpoint ckpt;
      std::uint64_t start = 0;
      std::optional<Denoiser> model;
      std::optional<AdamW> opt;
      const AdamWConfig ocfg{cfg.flow.lr, 0.9, 0.999, 1e-8, cfg.flow.weight_decay, cfg.flow.grad_clip};
      GraphPriors priors = empirical_priors(data.graphs, data.labels);
      if (!pt_resume.empty()) {
        const Checkpoint prev = load_checkpoint(pt_resume);
        if (!(prev.config.labels() == data.labels)) throw UsageError("checkpoint label space differs from the dataset");
        model.emplace(prev.config, prev.params);
        opt.emplace(model->num_params(), ocfg);
        if (prev.optimizer) {
          opt->restore(prev.optimizer->steps, prev.optimizer->m, prev.optimizer->v);
          opt->set_lr(prev.optimizer->lr);
        }
        if (prev.priors) priors = *prev.priors;
        start = prev.iteration;
      } else {
        model.emplace(model_config(cfg, data.labels), common.seed);
        opt.emplace(model->num_params(), ocfg);
      }
      const int steps = pt_steps.value_or(cfg.flow.pretrain_steps);
      JsonlWriter log(pt_log.empty() ? pt_out + ".log.jsonl" : pt_log);
      double window = 0.0;
      int in_window = 0;
      double last = 0.0;
      pretrain(*model, *opt, data.graphs, priors,
               PretrainSettings{steps, cfg.flow.batch_size, common.seed}, start,
               [&](std::uint64_t it, double loss) {
                 log.write({{"step", it}, {"loss", loss}, {"lr", opt->lr()}});
                 window += loss;
                 ++in_window;
                 if (in_window == cfg.flow.log_every) {
                   last = window / in_window;
                   std::cout << "step " << it + 1 << " loss " << last << "\n";
                   window = 0.0;
                   in_window = 0;
                 }
               });
      ckpt.config = model->config();
      ckpt.params = model->params();
      ckpt.priors = priors;
      ckpt.optimizer = Checkpoint::OptimizerState{opt->steps(), opt->lr(), opt->first_moment(),
                                                  opt->second_moment()};
      ckpt.iteration = start + steps;
      save_checkpoint(ckpt, pt_out);
      write_manifest(pt_out, "pretrain", cfg, common, {{"data", pt_data}, {"resume", pt_resume}});
      return 0;
    }

    if (rl->parsed()) {
      if (rl_reward.empty()) rl_reward = cfg.reward.task;
      if (!is_known_reward(rl_reward)) throw UsageError("unknown reward '" + rl_reward + "'");
      const Dataset data = load_data(rl_data);
      const Checkpoint base = load_checkpoint(rl_ckpt);
      const RewardSpec spec = make_reward_spec(rl_reward, data.graphs, cfg.reward.alpha, cfg.reward.stats);
      TrainerConfig tc;
      tc.grpo = cfg.grpo.grpo;
      tc.steps = cfg.flow.steps;
      tc.adapt_priors = cfg.prior.adapt;
      tc.buffer_capacity = cfg.prior.buffer_capacity;
      tc.buffer_min_reward = cfg.prior.min_reward;
      tc.prior = {cfg.prior.momentum, cfg.prior.trigger};
      tc.threads = common.threads;
      Denoiser policy(base.config, base.params);
      Denoiser reference(base.config, base.params);
      GrpoTrainer trainer(std::move(policy), std::move(reference), checkpoint_priors(base),
                          [spec](const GraphState& g) { return composite_reward(g, spec); }, tc,
                          common.seed);
      JsonlWriter log(rl_log.empty() ? rl_out + ".log.jsonl" : rl_log);
      auto save = [&](const std::string& path) {
        Checkpoint c;
        c.config = trainer.policy().config();
        c.params = trainer.policy().params();
        c.priors = trainer.priors();
        const AdamW& o = trainer.optimizer();
        c.optimizer = Checkpoint::OptimizerState{o.steps(), o.lr(), o.first_moment(), o.second_moment()};
        c.iteration = static_cast<std::uint64_t>(trainer.updates());
        save_checkpoint(c, path);
      };
      const int updates = rl_updates.value_or(cfg.grpo.updates);
      for (int u = 0; u < updates; ++u) {
        const UpdateRecord rec = trainer.step();
        const UpdateStats& s = rec.stats;
        log.write({{"update", rec.update},
                   {"reward_mean", s.reward_mean},
                   {"reward_max", s.reward_max},
                   {"ratio_mean", s.ratio_mean},
                   {"clip_frac", s.clip_frac},
                   {"kl_mean", s.kl_mean},
                   {"lr", rec.lr},
                   {"oracle_calls", rec.oracle_calls},
                   {"applied", s.applied},
                   {"skipped_terms", s.skipped_terms},
                   {"prior_updated", rec.prior_updated}});
        std::cout << "update " << rec.update << " reward " << s.reward_mean << " max "
                  << s.reward_max << " kl " << s.kl_mean << "\n";
        if ((u + 1) % cfg.grpo.checkpoint_every == 0) save(rl_out + ".update" + std::to_string(u + 1));
      }
      save(rl_out);
      write_manifest(rl_out, "train-rl", cfg, common,
                     {{"ckpt", rl_ckpt}, {"reward", rl_reward}, {"data", rl_data}});
      return 0;
    }

    if (sm->parsed()) {
      const Checkpoint ck = load_checkpoint(sm_ckpt);
      const Denoiser model(ck.config, ck.params);
      const auto graphs = sample_graphs(model, checkpoint_priors(ck), sm_count, cfg.flow.steps,
                                        RandomStream(common.seed), common.threads);
      write_dataset(Dataset{ck.config.labels(), graphs}, sm_out);
      write_manifest(sm_out, "sample", cfg, common, {{"ckpt", sm_ckpt}});
      return 0;
    }

    if (rf->parsed()) {
      if (rf_reward.empty()) rf_reward = cfg.reward.task;
      if (!is_known_reward(rf_reward)) throw UsageError("unknown reward '" + rf_reward + "'");
      const Dataset data = load_data(rf_data);
      const Checkpoint ck = load_checkpoint(rf_ckpt);
      const Denoiser model(ck.config, ck.params);
      const RewardSpec spec = make_reward_spec(rf_reward, data.graphs, cfg.reward.alpha, cfg.reward.stats);
      CountingOracle oracle([spec](const GraphState& g) { return composite_reward(g, spec); });
      BudgetSchedule schedule = cfg.refine.schedule;
      if (rf_budget) schedule.total_budget = *rf_budget;
      RefineSettings settings{rf_teps.value_or(cfg.refine.t_eps), cfg.flow.steps,
                              cfg.refine.pool_size, common.threads};
      const RandomStream rng(common.seed);
      const RefinementResult res =
          rf_denovo ? run_denovo(model, oracle, schedule.total_budget, checkpoint_priors(ck), settings, rng)
                    : run_refinement(model, oracle, schedule, checkpoint_priors(ck), settings, rng);
      JsonlWriter log(rf_out);
      for (const auto& r : res.log) {
        log.write({{"call_index", r.call_index},
                   {"reward", r.reward},
                   {"canonical_key", to_hex(r.key)},
                   {"phase", r.phase},
                   {"source", r.refined ? "refine" : "denovo"}});
      }
      if (!rf_best.empty()) {
        std::vector<GraphState> best;
        for (const auto& e : res.pool.entries()) best.push_back(e.graph);
        write_dataset(Dataset{ck.config.labels(), best}, rf_best);
      }
      std::cout << "oracle calls " << res.oracle_calls << " best reward "
                << (res.pool.empty() ? 0.0 : res.pool.best_reward()) << " auc-top10 "
                << auc_top_k(res.log, 10) << "\n";
      write_manifest(rf_out, "refine", cfg, common,
                     {{"ckpt", rf_ckpt}, {"reward", rf_reward}, {"t_eps", settings.t_eps},
                      {"total_budget", schedule.total_budget}, {"denovo", rf_denovo}});
      return 0;
    }

    if (ev->parsed()) {
      if (ev_ckpt.empty() == ev_samples.empty()) throw UsageError("eval needs exactly one of --ckpt or --samples");
      if (ev_reward.empty()) ev_reward = cfg.reward.task;
      if (!is_known_reward(ev_reward)) throw UsageError("unknown reward '" + ev_reward + "'");
      const Dataset train = load_data(ev_train);
      const Dataset heldout = load_data(ev_heldout);
      const RewardSpec spec = make_reward_spec(ev_reward, train.graphs, cfg.reward.alpha, cfg.reward.stats);
      EvalSummary summary;
      if (!ev_samples.empty()) {
        const Dataset samples = load_data(ev_samples);
        if (samples.graphs.empty()) throw UsageError("sample file is empty");
        summary = summarize({vun_ratio_metrics(
            samples.graphs, train.graphs, heldout.graphs,
            [&spec](const GraphState& g) { return spec.valid(g); }, spec.reference.stats)});
      } else {
        const Checkpoint ck = load_checkpoint(ev_ckpt);
        const Denoiser model(ck.config, ck.params);
        summary = evaluate_model(model, checkpoint_priors(ck), cfg.flow.steps, ev_seeds, ev_count,
                                 common.seed, train.graphs, heldout.graphs, spec, common.threads);
      }
      auto line = [](const char* name, const MetricSummary& m, double scale) {
        std::printf("%-7s %8.2f +- %.2f\n", name, m.mean * scale, m.std * scale);
      };
      line("valid", summary.valid, 100.0);
      line("unique", summary.unique, 100.0);
      line("novel", summary.novel, 100.0);
      line("vun", summary.vun, 100.0);
      line("ratio", summary.ratio, 1.0);
      if (!ev_out.empty()) {
        json j;
        json seeds = json::array();
        for (const auto& m : summary.per_seed) seeds.push_back(metrics_json(m));
        j["per_seed"] = seeds;
        auto ms = [](const MetricSummary& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
        j["summary"] = {{"valid", ms(summary.valid)}, {"unique", ms(summary.unique)},
                        {"novel", ms(summary.novel)}, {"vun", ms(summary.vun)},
                        {"ratio", ms(summary.ratio)}};
        std::ofstream(ev_out) << j.dump(2) << '\n';
        write_manifest(ev_out, "eval", cfg, common, {{"ckpt", ev_ckpt}, {"samples", ev_samples}});
      }
      return 0;
    }

    if (vf->parsed()) {
      const auto results = oracle::run_verify_suite(common.seed);
      bool ok = true;
      for (const auto& r : results) {
        const char* status = r.gate ? (r.passed ? "PASS" : "FAIL") : (r.passed ? "info" : "info*");
        std::printf("[%-5s] %-55s value=%.3e limit=%.1e\n", status, r.name.c_str(), r.value, r.threshold);
        if (r.gate && !r.passed) ok = false;
      }
      return ok ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DatasetParseError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
