// Command line front end: workload generation, trace ingestion, splitting,
// policy training, single simulations, and batched evaluation.  Every
// subcommand is deterministic under its seed flags.  Exit codes: 0 on
// success, 2 on usage errors, 1 on runtime failures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coflowforge/checkpoint.hpp"
#include "coflowforge/fabric.hpp"
#include "coflowforge/heuristics.hpp"
#include "coflowforge/policy.hpp"
#include "coflowforge/trainer.hpp"
#include "coflowforge/workload.hpp"

namespace {

// Thrown by handlers for operator mistakes that CLI11 cannot catch itself
// (bad list syntax, inconsistent flag combinations).  Mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s)) {
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(flag + ": expected comma-separated numbers, got '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

double default_horizon(const std::vector<cf::Job>& jobs) {
  double last = 0.0;
  for (const cf::Job& j : jobs) last = std::max(last, j.arrival_time);
  return 1.5 * last + 500.0;
}

cf::PolicyKind expected_kind(cf::SchedulerChoice c) {
  switch (c) {
    case cf::SchedulerChoice::drl: return cf::PolicyKind::attention;
    case cf::SchedulerChoice::drl_noattn: return cf::PolicyKind::no_attention;
    case cf::SchedulerChoice::drl_flat: return cf::PolicyKind::flat;
    default: throw std::logic_error("expected_kind: not a learned scheduler");
  }
}

cf::SchedulerChoice parse_scheduler_or_die(const std::string& name) {
  auto c = cf::parse_scheduler(name);
  if (!c) throw UsageError("unknown scheduler '" + name + "'");
  return *c;
}

// The learned schedulers replay a checkpoint greedily; heuristics draw any
// randomness (only `random` has some) from the given seed.
std::unique_ptr<cf::OrderingPolicy> make_policy(cf::SchedulerChoice choice,
                                                const cf::AgentParams* agent,
                                                uint64_t seed) {
  if (cf::is_drl(choice)) {
    if (!agent) throw UsageError(std::string("scheduler '") + cf::to_string(choice) +
                                 "' needs --checkpoint");
    if (agent->kind != expected_kind(choice))
      throw std::runtime_error(std::string("checkpoint holds a '") +
                               cf::to_string(agent->kind) + "' policy, scheduler '" +
                               cf::to_string(choice) + "' expects '" +
                               cf::to_string(expected_kind(choice)) + "'");
    return std::make_unique<cf::DrlPolicy>(*agent, /*sample=*/false, seed);
  }
  return std::make_unique<cf::HeuristicPolicy>(choice, seed);
}

struct GenArgs {
  int ports = 20;
  int jobs = 0;
  double lambda = 20.0;
  double window = 100.0;
  int mean_coflows = 8;
  std::string weights = "1,4";
  int templates = 20;
  uint64_t seed = 1;
  std::string trace;
  std::string out;
};

int run_gen(const GenArgs& a) {
  std::vector<double> w = parse_doubles(a.weights, "--weights");
  if (w.size() != 2) throw UsageError("--weights: expected LO,HI");

  cf::WorkloadSpec spec;
  spec.ports = a.ports;
  spec.job_count = a.jobs;
  spec.arrival_rate = a.lambda;
  spec.arrival_window = a.window;
  spec.mean_coflows = a.mean_coflows;
  spec.weight_low = w[0];
  spec.weight_high = w[1];
  spec.seed = a.seed;

  std::vector<cf::CoflowTemplate> templates;
  if (!a.trace.empty()) {
    templates = cf::ingest_trace_file(a.trace);
    if (templates.empty()) throw std::runtime_error("trace has no coflows: " + a.trace);
  } else {
    cf::Rng trng(a.seed);
    templates = cf::synthetic_templates(a.templates, trng, a.ports);
  }

  std::vector<cf::Job> jobs = cf::generate_workload(spec, templates);
  cf::save_workload_file(jobs, a.out);
  std::cout << "jobs=" << jobs.size() << " templates=" << templates.size()
            << " out=" << a.out << '\n';
  return 0;
}

struct IngestArgs {
  std::string trace;
  std::string out;
};

int run_ingest(const IngestArgs& a) {
  std::vector<cf::CoflowTemplate> ts = cf::ingest_trace_file(a.trace);
  std::ofstream out = open_out(a.out);
  cf::save_templates(ts, out);
  std::cout << "templates=" << ts.size() << " out=" << a.out << '\n';
  return 0;
}

struct SplitArgs {
  std::string in;
  std::string ratios = "8,1,1";
  uint64_t seed = 1;
  std::string prefix;
};

int run_split(const SplitArgs& a) {
  std::vector<double> ratios = parse_doubles(a.ratios, "--ratios");
  if (ratios.size() != 3) throw UsageError("--ratios: expected TRAIN,VAL,TEST");

  std::vector<cf::Job> jobs = cf::load_workload_file(a.in);
  std::vector<std::vector<cf::Job>> parts = cf::split_workload(jobs, ratios, a.seed);

  const char* ext[] = {".train", ".val", ".test"};
  for (int i = 0; i < 3; ++i) {
    std::string path = a.prefix + ext[i];
    cf::save_workload_file(parts[static_cast<size_t>(i)], path);
    std::cout << "part=" << ext[i] + 1 << " jobs=" << parts[static_cast<size_t>(i)].size()
              << " out=" << path << '\n';
  }
  return 0;
}

// Flat JSON config mirroring TrainConfig; unknown keys are rejected so typos
// do not silently fall back to defaults.
cf::TrainConfig parse_train_config(const std::string& path) {
  cf::TrainConfig cfg;
  if (path.empty()) return cfg;

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config " + path + ": not a JSON object");

  static const char* known[] = {
      "policy",          "embed_dim",      "layers",         "flat_max_nodes",
      "lr",              "lr_decay",       "episodes_per_iter", "iterations",
      "seed",            "l_mean_init",    "l_mean_increment", "episode_window",
      "eval_every",      "literal_reward", "ports"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok |= (key == k);
    if (!ok) throw std::runtime_error("config " + path + ": unknown key '" + key + "'");
  }

  if (j.contains("policy")) {
    auto kind = cf::parse_policy_kind(j["policy"].get<std::string>());
    if (!kind)
      throw std::runtime_error("config " + path + ": unknown policy '" +
                               j["policy"].get<std::string>() + "'");
    cfg.kind = *kind;
  }
  cfg.enc.embed_dim = j.value("embed_dim", cfg.enc.embed_dim);
  cfg.enc.layers = j.value("layers", cfg.enc.layers);
  cfg.flat_max_nodes = j.value("flat_max_nodes", cfg.flat_max_nodes);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.lr_decay = j.value("lr_decay", cfg.lr_decay);
  cfg.episodes_per_iter = j.value("episodes_per_iter", cfg.episodes_per_iter);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.l_mean_init = j.value("l_mean_init", cfg.l_mean_init);
  cfg.l_mean_increment = j.value("l_mean_increment", cfg.l_mean_increment);
  cfg.episode_window = j.value("episode_window", cfg.episode_window);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  cfg.literal_reward = j.value("literal_reward", cfg.literal_reward);
  cfg.ports = j.value("ports", cfg.ports);
  return cfg;
}

struct TrainArgs {
  std::string workload;
  std::string val;
  std::string config;
  std::string out_checkpoint;
  std::string curve;
  std::string policy;     // override
  int iterations = -1;    // override when >= 0
  int64_t seed = -1;      // override when >= 0
};

int run_train(const TrainArgs& a) {
  cf::TrainConfig cfg = parse_train_config(a.config);
  if (!a.policy.empty()) {
    auto kind = cf::parse_policy_kind(a.policy);
    if (!kind) throw UsageError("--policy: unknown policy '" + a.policy + "'");
    cfg.kind = *kind;
  }
  if (a.iterations >= 0) cfg.iterations = a.iterations;
  if (a.seed >= 0) cfg.seed = static_cast<uint64_t>(a.seed);

  std::vector<cf::Job> train_jobs = cf::load_workload_file(a.workload);
  std::vector<cf::Job> val_jobs = cf::load_workload_file(a.val);

  std::optional<std::ofstream> curve;
  if (!a.curve.empty()) curve.emplace(open_out(a.curve));

  std::cout.precision(17);
  auto progress = [](int iter, double val) {
    std::cout << "iter=" << iter << " val_avg_weighted_jct=" << val << '\n';
  };

  cf::TrainResult res = cf::train_agent(train_jobs, val_jobs, cfg,
                                        curve ? &*curve : nullptr, progress);
  cf::save_agent_file(a.out_checkpoint, res.best);
  std::cout << "best_val=" << res.best_val << " checkpoint=" << a.out_checkpoint << '\n';
  return 0;
}

struct SimArgs {
  std::string workload;
  std::string scheduler;
  std::string checkpoint;
  std::string report;
  double noise = -1.0;    // < 0: no perturbation
  uint64_t seed = 1;
  double horizon = -1.0;  // < 0: derive from the workload
  int ports = 0;
};

int run_simulate(const SimArgs& a) {
  cf::SchedulerChoice choice = parse_scheduler_or_die(a.scheduler);
  if (cf::is_drl(choice) && a.checkpoint.empty())
    throw UsageError("scheduler '" + a.scheduler + "' needs --checkpoint");

  std::vector<cf::Job> jobs = cf::load_workload_file(a.workload);
  if (a.noise >= 0.0) jobs = cf::inject_noise(jobs, a.noise, a.seed);

  std::optional<cf::AgentParams> agent;
  if (!a.checkpoint.empty()) agent.emplace(cf::load_agent_file(a.checkpoint));

  cf::SimOptions opt;
  opt.horizon = a.horizon >= 0.0 ? a.horizon : default_horizon(jobs);
  opt.ports = a.ports;

  auto policy = make_policy(choice, agent ? &*agent : nullptr, a.seed);
  cf::SimResult res = cf::run_simulation(std::move(jobs), *policy, opt);

  if (!a.report.empty()) {
    std::ofstream out = open_out(a.report);
    cf::write_report_csv(res, out);
  }
  std::cout.precision(17);
  std::cout << "avg_jct=" << res.metrics.avg_jct
            << " avg_weighted_jct=" << res.metrics.avg_weighted_jct
            << " completed=" << res.metrics.completed << '\n';
  return 0;
}

struct EvalArgs {
  std::string workload;
  std::string schedulers;
  std::string checkpoint;
  std::string cdf;
  int batches = 10;
  int batch_size = 100;
  uint64_t seed = 1;
  int ports = 0;
};

// Paired comparison: every scheduler sees the same contiguous job windows,
// drawn once from the seed.  Per-batch metrics land in the CSV alongside the
// empirical CDF of each scheduler's batch averages.
int run_eval(const EvalArgs& a) {
  if (a.batches < 1 || a.batch_size < 1)
    throw UsageError("--batches and --batch-size must be positive");

  std::vector<cf::SchedulerChoice> choices;
  std::vector<std::string> names = split_list(a.schedulers);
  if (names.empty()) throw UsageError("--schedulers: empty list");
  for (const std::string& n : names) choices.push_back(parse_scheduler_or_die(n));

  std::optional<cf::AgentParams> agent;
  if (!a.checkpoint.empty()) agent.emplace(cf::load_agent_file(a.checkpoint));
  for (cf::SchedulerChoice c : choices)
    if (cf::is_drl(c) && !agent)
      throw UsageError(std::string("scheduler '") + cf::to_string(c) +
                       "' needs --checkpoint");

  std::vector<cf::Job> jobs = cf::load_workload_file(a.workload);
  if (jobs.empty()) throw std::runtime_error("empty workload: " + a.workload);
  std::sort(jobs.begin(), jobs.end(), [](const cf::Job& x, const cf::Job& y) {
    if (x.arrival_time != y.arrival_time) return x.arrival_time < y.arrival_time;
    return x.job_id < y.job_id;
  });

  size_t size = std::min(static_cast<size_t>(a.batch_size), jobs.size());
  cf::Rng rng(a.seed);
  std::vector<size_t> starts;
  std::vector<uint64_t> sub_seeds;
  for (int b = 0; b < a.batches; ++b) {
    starts.push_back(static_cast<size_t>(
        rng.uniform_int(static_cast<int>(jobs.size() - size) + 1)));
    sub_seeds.push_back(rng.raw());
  }

  // metric[s][b] = (avg_jct, avg_weighted_jct)
  std::vector<std::vector<std::pair<double, double>>> metric(
      choices.size(), std::vector<std::pair<double, double>>(static_cast<size_t>(a.batches)));

  for (size_t s = 0; s < choices.size(); ++s) {
    for (int b = 0; b < a.batches; ++b) {
      std::vector<cf::Job> window(jobs.begin() + static_cast<long>(starts[static_cast<size_t>(b)]),
                                  jobs.begin() + static_cast<long>(starts[static_cast<size_t>(b)] + size));
      window = cf::rebase_arrivals(std::move(window));

      cf::SimOptions opt;
      opt.horizon = default_horizon(window);
      opt.ports = a.ports;
      auto policy = make_policy(choices[s], agent ? &*agent : nullptr,
                                sub_seeds[static_cast<size_t>(b)] + s);
      cf::SimResult res = cf::run_simulation(std::move(window), *policy, opt);
      metric[s][static_cast<size_t>(b)] = {res.metrics.avg_jct,
                                           res.metrics.avg_weighted_jct};
    }
  }

  std::ofstream out = open_out(a.cdf);
  out.precision(17);
  out << "kind,scheduler,metric,x,y\n";
  for (size_t s = 0; s < choices.size(); ++s)
    for (int b = 0; b < a.batches; ++b) {
      out << "batch," << names[s] << ",avg_jct," << b << ','
          << metric[s][static_cast<size_t>(b)].first << '\n';
      out << "batch," << names[s] << ",avg_weighted_jct," << b << ','
          << metric[s][static_cast<size_t>(b)].second << '\n';
    }
  auto emit_cdf = [&](size_t s, const char* label, auto pick) {
    std::vector<double> vals;
    for (int b = 0; b < a.batches; ++b) vals.push_back(pick(metric[s][static_cast<size_t>(b)]));
    std::sort(vals.begin(), vals.end());
    for (size_t i = 0; i < vals.size(); ++i)
      out << "cdf," << names[s] << ',' << label << ',' << vals[i] << ','
          << static_cast<double>(i + 1) / static_cast<double>(vals.size()) << '\n';
  };
  for (size_t s = 0; s < choices.size(); ++s) {
    emit_cdf(s, "avg_jct", [](const std::pair<double, double>& m) { return m.first; });
    emit_cdf(s, "avg_weighted_jct", [](const std::pair<double, double>& m) { return m.second; });
  }

  std::cout.precision(17);
  for (size_t s = 0; s < choices.size(); ++s) {
    double mj = 0.0, mw = 0.0;
    for (int b = 0; b < a.batches; ++b) {
      mj += metric[s][static_cast<size_t>(b)].first;
      mw += metric[s][static_cast<size_t>(b)].second;
    }
    std::cout << "scheduler=" << names[s] << " mean_avg_jct=" << mj / a.batches
              << " mean_avg_weighted_jct=" << mw / a.batches << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coflow scheduling sandbox: generate, train, simulate, evaluate"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a workload from coflow templates");
  gen->add_option("--ports", gen_args.ports, "fabric port count")->capture_default_str();
  gen->add_option("--jobs", gen_args.jobs, "number of jobs")->required();
  gen->add_option("--lambda", gen_args.lambda, "mean arrivals per window")->capture_default_str();
  gen->add_option("--window", gen_args.window, "arrival window in time units")->capture_default_str();
  gen->add_option("--mean-coflows", gen_args.mean_coflows, "mean coflows per job")->capture_default_str();
  gen->add_option("--weights", gen_args.weights, "job weight range LO,HI")->capture_default_str();
  gen->add_option("--templates", gen_args.templates, "synthetic template count (no --trace)")->capture_default_str();
  gen->add_option("--seed", gen_args.seed, "generator seed")->capture_default_str();
  gen->add_option("--trace", gen_args.trace, "draw coflow shapes from this trace file");
  gen->add_option("--out", gen_args.out, "output workload file")->required();

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand("ingest", "normalize a trace into a template file");
  ingest->add_option("--trace", ingest_args.trace, "input trace file")->required();
  ingest->add_option("--out", ingest_args.out, "output template file")->required();

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand("split", "split a workload into train/val/test");
  split->add_option("--in", split_args.in, "input workload file")->required();
  split->add_option("--ratios", split_args.ratios, "TRAIN,VAL,TEST proportions")->capture_default_str();
  split->add_option("--seed", split_args.seed, "shuffle seed")->capture_default_str();
  split->add_option("--out-prefix", split_args.prefix, "output path prefix")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a scheduling policy");
  train->add_option("--workload", train_args.workload, "training workload file")->required();
  train->add_option("--val", train_args.val, "validation workload file")->required();
  train->add_option("--config", train_args.config, "JSON training config");
  train->add_option("--out-checkpoint", train_args.out_checkpoint, "best checkpoint path")->required();
  train->add_option("--curve", train_args.curve, "validation curve CSV path");
  train->add_option("--policy", train_args.policy, "attention | no_attention | flat");
  train->add_option("--iterations", train_args.iterations, "override iteration count");
  train->add_option("--seed", train_args.seed, "override training seed");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run one workload under one scheduler");
  sim->add_option("--workload", sim_args.workload, "workload file")->required();
  sim->add_option("--scheduler", sim_args.scheduler,
                  "drl | drl_noattn | drl_flat | fifo | sebf | wsebf | random")->required();
  sim->add_option("--checkpoint", sim_args.checkpoint, "agent checkpoint (drl schedulers)");
  sim->add_option("--noise", sim_args.noise, "flow size noise stddev");
  sim->add_option("--seed", sim_args.seed, "noise / tie-shuffle seed")->capture_default_str();
  sim->add_option("--horizon", sim_args.horizon, "simulation cutoff (default 1.5 * last arrival + 500)");
  sim->add_option("--ports", sim_args.ports, "fabric port count (0: derive)")->capture_default_str();
  sim->add_option("--report", sim_args.report, "per-job CSV report path");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "compare schedulers over sampled job windows");
  eval->add_option("--workload", eval_args.workload, "workload file")->required();
  eval->add_option("--schedulers", eval_args.schedulers, "comma-separated scheduler list")->required();
  eval->add_option("--batches", eval_args.batches, "number of sampled windows")->capture_default_str();
  eval->add_option("--batch-size", eval_args.batch_size, "jobs per window")->capture_default_str();
  eval->add_option("--cdf", eval_args.cdf, "output CSV (per-batch metrics + CDFs)")->required();
  eval->add_option("--seed", eval_args.seed, "window sampling seed")->capture_default_str();
  eval->add_option("--checkpoint", eval_args.checkpoint, "agent checkpoint (drl schedulers)");
  eval->add_option("--ports", eval_args.ports, "fabric port count (0: derive)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (split->parsed()) return run_split(split_args);
    if (train->parsed()) return run_train(train_args);
    if (sim->parsed()) return run_simulate(sim_args);
    if (eval->parsed()) return run_eval(eval_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
