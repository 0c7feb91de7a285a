#pragma once

// Policy-gradient training: sampled episodes over workload windows, rewards
// from the weighted-residency integral, per-step baselines averaged across
// the episode batch, Adam on the flattened agent parameters.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fabric.hpp"
#include "policy.hpp"
#include "workload.hpp"

namespace cf {

struct TrainConfig {
  PolicyKind kind = PolicyKind::attention;
  EncoderConfig enc;
  int flat_max_nodes = 128;

  double lr = 1e-3;
  double lr_decay = 1.0;  // per-iteration multiplicative factor
  int episodes_per_iter = 8;
  int iterations = 2000;
  uint64_t seed = 1;

  // episode length is drawn once per iteration from Exp(l_mean), and the
  // mean itself drifts upward so later iterations see longer horizons
  double l_mean_init = 50.0;
  double l_mean_increment = 1.0;

  int episode_window = 16;  // jobs per episode
  int eval_every = 50;
  bool literal_reward = false;
  int ports = 0;

  void validate() const {
    if (episodes_per_iter < 2)
      throw std::invalid_argument("train config: need at least two episodes per iteration");
    if (iterations < 1 || episode_window < 1 || eval_every < 1)
      throw std::invalid_argument("train config: counts must be positive");
    if (lr <= 0.0 || l_mean_init <= 0.0)
      throw std::invalid_argument("train config: rates must be positive");
    if (lr_decay <= 0.0 || lr_decay > 1.0)
      throw std::invalid_argument("train config: lr_decay must be in (0, 1]");
  }
};

// Records action instants during a run; turns them into per-action rewards.
// Exact mode charges the growth of the weighted-residency integral between
// consecutive actions; literal mode charges resident_weight * elapsed time
// sampled at the action instant.
class RewardTape : public EpisodeHooks {
 public:
  explicit RewardTape(long budget = -1) : budget_(budget) {}

  bool on_action(double now, double integral, double resident) override {
    if (budget_ >= 0 && static_cast<long>(times_.size()) >= budget_) return false;
    times_.push_back(now);
    integrals_.push_back(integral);
    residents_.push_back(resident);
    return true;
  }

  void on_end(double now, double integral) override {
    end_time_ = now;
    end_integral_ = integral;
  }

  size_t actions() const { return times_.size(); }

  std::vector<double> rewards(bool literal) const {
    size_t n = times_.size();
    std::vector<double> r(n);
    for (size_t k = 0; k < n; ++k) {
      double t_next = k + 1 < n ? times_[k + 1] : end_time_;
      double i_next = k + 1 < n ? integrals_[k + 1] : end_integral_;
      r[k] = literal ? -(residents_[k] * (t_next - times_[k])) : -(i_next - integrals_[k]);
    }
    return r;
  }

 private:
  long budget_;
  std::vector<double> times_, integrals_, residents_;
  double end_time_ = 0.0, end_integral_ = 0.0;
};

struct EpisodeResult {
  std::vector<AgentStep> steps;
  std::vector<double> rewards;  // aligned with steps
  SimResult sim;
};

inline EpisodeResult run_episode(const std::vector<Job>& jobs, const AgentParams& params,
                                 bool sample, uint64_t seed, long action_budget,
                                 SimOptions opt, bool literal_reward = false,
                                 bool record_steps = true) {
  EpisodeResult ep;
  RewardTape tape(action_budget);
  DrlPolicy policy(params, sample, seed, record_steps ? &ep.steps : nullptr);
  opt.hooks = &tape;
  ep.sim = run_simulation(jobs, policy, opt);
  ep.rewards = tape.rewards(literal_reward);
  if (record_steps && ep.rewards.size() != ep.steps.size())
    throw std::logic_error("episode: reward/step count mismatch");
  return ep;
}

// Gradient ascent direction for the expected return: per-step suffix returns
// against a cross-episode baseline at the same step index.  Needs at least
// two episodes so every baseline is an actual average.
inline std::vector<double> reinforce_gradient(const std::vector<EpisodeResult>& episodes,
                                              size_t dim) {
  size_t n = episodes.size();
  if (n < 2) throw std::invalid_argument("reinforce: need at least two episodes");

  std::vector<std::vector<double>> suffix(n);
  size_t kmax = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto& r = episodes[i].rewards;
    suffix[i].resize(r.size());
    double acc = 0.0;
    for (size_t k = r.size(); k-- > 0;) {
      acc += r[k];
      suffix[i][k] = acc;
    }
    kmax = std::max(kmax, r.size());
  }

  std::vector<double> baseline(kmax, 0.0);
  for (size_t k = 0; k < kmax; ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (size_t i = 0; i < n; ++i)
      if (k < suffix[i].size()) {
        sum += suffix[i][k];
        ++cnt;
      }
    baseline[k] = sum / cnt;
  }

  // Scale advantages to unit spread: reward magnitude varies widely between
  // batches, and without this the largest-reward batches dominate the update.
  double sq = 0.0;
  size_t cnt = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < suffix[i].size(); ++k) {
      double a = suffix[i][k] - baseline[k];
      sq += a * a;
      ++cnt;
    }
  double spread = cnt ? std::sqrt(sq / static_cast<double>(cnt)) : 0.0;
  if (spread < 1e-12) spread = 1.0;  // identical episodes keep a zero gradient

  std::vector<double> grad(dim, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < suffix[i].size(); ++k) {
      double coeff = (suffix[i][k] - baseline[k]) / (spread * static_cast<double>(n));
      const auto& g = episodes[i].steps[k].grad_logp;
      if (g.size() != dim) throw std::logic_error("reinforce: gradient size mismatch");
      for (size_t j = 0; j < dim; ++j) grad[j] += coeff * g[j];
    }
  return grad;
}

struct TrainResult {
  AgentParams params;                           // final iterate
  AgentParams best;                             // best validation greedy
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, double>> curve;    // (iteration, val avg weighted jct)
};

inline double evaluate_greedy(const std::vector<Job>& jobs, const AgentParams& params,
                              SimOptions opt) {
  DrlPolicy policy(params, false, 0);
  SimResult res = run_simulation(jobs, policy, opt);
  return res.metrics.avg_weighted_jct;
}

inline TrainResult train_agent(const std::vector<Job>& train_jobs,
                               const std::vector<Job>& val_jobs, const TrainConfig& cfg,
                               std::ostream* curve_out = nullptr,
                               const std::function<void(int, double)>& progress = {}) {
  cfg.validate();
  if (train_jobs.empty()) throw std::invalid_argument("train: empty workload");

  Rng master(cfg.seed);
  AgentParams params = init_agent(cfg.enc, cfg.kind, master, cfg.flat_max_nodes);
  size_t dim = agent_param_count(params);
  AdamState adam(dim);

  SimOptions opt;
  opt.ports = cfg.ports;

  TrainResult out;
  out.best = params;

  if (curve_out) *curve_out << std::setprecision(17) << "iteration,val_avg_weighted_jct\n";
  auto eval_point = [&](int iter) {
    if (val_jobs.empty()) return;
    double v = evaluate_greedy(val_jobs, params, opt);
    out.curve.emplace_back(iter, v);
    if (curve_out) *curve_out << iter << "," << v << "\n";
    if (v < out.best_val) {
      out.best_val = v;
      out.best = params;
    }
    if (progress) progress(iter, v);
  };

  size_t window = std::min(static_cast<size_t>(cfg.episode_window), train_jobs.size());
  std::vector<double> flat = flatten_agent(params);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double l_mean = cfg.l_mean_init + cfg.l_mean_increment * iter;
    long budget = std::max<long>(1, static_cast<long>(std::ceil(master.exponential(l_mean))));

    size_t start = train_jobs.size() == window
                       ? 0
                       : master.uniform_int(static_cast<uint64_t>(train_jobs.size() - window + 1));
    std::vector<Job> slice(train_jobs.begin() + static_cast<std::ptrdiff_t>(start),
                           train_jobs.begin() + static_cast<std::ptrdiff_t>(start + window));
    slice = rebase_arrivals(std::move(slice));

    std::vector<EpisodeResult> episodes;
    episodes.reserve(static_cast<size_t>(cfg.episodes_per_iter));
    for (int e = 0; e < cfg.episodes_per_iter; ++e)
      episodes.push_back(
          run_episode(slice, params, true, master.raw(), budget, opt, cfg.literal_reward));

    std::vector<double> grad = reinforce_gradient(episodes, dim);
    for (double& g : grad) g = -g;  // optimizer descends; we want ascent
    adam_step(flat, grad, adam, cfg.lr * std::pow(cfg.lr_decay, iter));
    unflatten_agent(flat, params);

    if ((iter + 1) % cfg.eval_every == 0 || iter + 1 == cfg.iterations) eval_point(iter + 1);
  }

  out.params = params;
  if (out.curve.empty()) {
    out.best = params;
    out.best_val = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace cf
