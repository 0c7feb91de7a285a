#pragma once

// P x P non-blocking switch plus the online scheduling loop: ordering on job
// arrivals and coflow completions, rate allocation on flow completions and
// coflow releases, linear byte drain in between.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "model.hpp"

namespace cf {

constexpr double kFinishSnap = 1e-12;   // bytes below this count as drained
constexpr double kRateFloor = 1e-15;    // rates below this are treated as zero
constexpr double kPortSlackEps = 1e-12; // backfill eligibility threshold

struct FabricState {
  int ports = 0;
  double capacity = 1.0;
  std::vector<double> ingress_free, egress_free;

  explicit FabricState(int p = 0, double cap = 1.0)
      : ports(p),
        capacity(cap),
        ingress_free(static_cast<size_t>(p), cap),
        egress_free(static_cast<size_t>(p), cap) {}

  void reset() {
    std::fill(ingress_free.begin(), ingress_free.end(), capacity);
    std::fill(egress_free.begin(), egress_free.end(), capacity);
  }
};

enum class EventKind { job_arrival, flow_finish, coflow_finish, job_finish };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::job_arrival: return "job_arrival";
    case EventKind::flow_finish: return "flow_finish";
    case EventKind::coflow_finish: return "coflow_finish";
    case EventKind::job_finish: return "job_finish";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::job_arrival;
  int job_id = -1;
  int coflow_id = -1;  // -1 for job-level events
  int flow_id = -1;    // -1 unless flow_finish

  bool operator==(const Event&) const = default;
};

// Disjoint queue membership; a coflow never moves from active back to waiting.
struct Queues {
  std::vector<std::pair<int, int>> active;    // (job_id, coflow_id), promotion order
  std::vector<std::pair<int, int>> waiting;
  std::vector<std::pair<int, int>> finished;
};

struct SnapshotNode {
  int coflow_id = 0;
  CoflowState state = CoflowState::pending;
  double remaining_mb = 0.0;
  int unfinished_flows = 0;
  int distinct_src = 0;      // over unfinished flows
  int distinct_dst = 0;
  double bottleneck_mb = 0.0;  // busiest port's unfinished byte load
  int out_degree = 0;
  std::vector<int> preds;

  bool operator==(const SnapshotNode&) const = default;
};

struct SnapshotJob {
  int job_id = 0;
  double arrival_time = 0.0;
  double weight = 1.0;
  std::vector<SnapshotNode> nodes;

  bool operator==(const SnapshotJob&) const = default;
};

// Immutable view handed to ordering policies.
struct SchedulerSnapshot {
  double now = 0.0;
  std::vector<SnapshotJob> jobs;                   // released unfinished, by job_id
  std::vector<std::pair<int, int>> to_order;       // schedulable + waiting coflows
  std::vector<std::pair<int, int>> active_order;   // current actives, priority order
  std::vector<double> ingress_free, egress_free;

  int ports() const { return static_cast<int>(ingress_free.size()); }

  bool operator==(const SchedulerSnapshot&) const = default;
};

struct PriorityEntry {
  int job_id = 0;
  int coflow_id = 0;
  double score = 0.0;

  bool operator==(const PriorityEntry&) const = default;
};
using PriorityList = std::vector<PriorityEntry>;

class OrderingPolicy {
 public:
  virtual ~OrderingPolicy() = default;
  // Called with a nonempty to_order set; must return actives first (previous
  // relative order kept) followed by every to_order coflow.
  virtual PriorityList order(const SchedulerSnapshot& snap) = 0;
};

// Training hook.  on_action fires just before the policy is consulted with
// the accumulated weighted residency integral and the weight currently
// resident; returning false ends the run (action budget exhausted).
class EpisodeHooks {
 public:
  virtual ~EpisodeHooks() = default;
  virtual bool on_action(double now, double weighted_residency, double resident_weight) = 0;
  virtual void on_end(double now, double weighted_residency) {}
};

namespace detail {

inline Coflow& coflow_at(std::vector<Job>& jobs, std::pair<int, int> ref) {
  return jobs[static_cast<size_t>(ref.first)].coflows[static_cast<size_t>(ref.second)];
}

inline void drop_ref(std::vector<std::pair<int, int>>& list, std::pair<int, int> ref) {
  list.erase(std::remove(list.begin(), list.end(), ref), list.end());
}

}  // namespace detail

// Rate allocation.  Order entries are (job index, coflow id) and must cover
// every schedulable, waiting, and active unfinished coflow exactly once.
//
// Phase 1 walks the priority order giving each coflow one rate
//   r = min over used ports p of free_p / (unfinished flows of C at p),
// so a port shared by several of C's flows is never oversubscribed.  r > 0
// promotes the coflow to active; r = 0 parks a non-active coflow in waiting.
// Phase 2 water-fills residual port capacity equally across active flows
// whose ports both still have slack, up to 32 rounds or until a round adds
// less than 1e-9 total rate.
inline void allocate_rates(const std::vector<std::pair<int, int>>& order,
                           std::vector<Job>& jobs, FabricState& fabric,
                           Queues& queues, double now) {
  fabric.reset();
  int ports = fabric.ports;

  // contract check: exact cover of live coflows
  {
    std::vector<std::pair<int, int>> live;
    for (size_t ji = 0; ji < jobs.size(); ++ji)
      for (const Coflow& c : jobs[ji].coflows)
        if (c.state == CoflowState::schedulable || c.state == CoflowState::waiting ||
            c.state == CoflowState::active)
          live.emplace_back(static_cast<int>(ji), c.coflow_id);
    std::vector<std::pair<int, int>> got;
    for (auto ref : order) {
      const Coflow& c = detail::coflow_at(jobs, ref);
      if (c.state != CoflowState::finished) got.push_back(ref);
    }
    auto sorted_live = live;
    auto sorted_got = got;
    std::sort(sorted_live.begin(), sorted_live.end());
    std::sort(sorted_got.begin(), sorted_got.end());
    if (sorted_live != sorted_got)
      throw std::logic_error("allocate_rates: priority list does not cover the live coflows");
  }

  for (auto ref : order) {
    Coflow& c = detail::coflow_at(jobs, ref);
    for (Flow& f : c.flows)
      if (!f.finish_time) f.rate = 0.0;
  }

  std::vector<int> use_in(static_cast<size_t>(ports), 0);
  std::vector<int> use_out(static_cast<size_t>(ports), 0);

  for (auto ref : order) {
    Job& job = jobs[static_cast<size_t>(ref.first)];
    Coflow& c = detail::coflow_at(jobs, ref);
    if (c.state == CoflowState::finished) continue;

    std::vector<int> touched_in, touched_out;
    for (const Flow& f : c.flows) {
      if (f.finish_time) continue;
      if (f.src_port >= ports || f.dst_port >= ports)
        throw std::invalid_argument("allocate_rates: flow port outside fabric");
      if (use_in[static_cast<size_t>(f.src_port)]++ == 0) touched_in.push_back(f.src_port);
      if (use_out[static_cast<size_t>(f.dst_port)]++ == 0) touched_out.push_back(f.dst_port);
    }

    double r = std::numeric_limits<double>::infinity();
    for (int p : touched_in)
      r = std::min(r, fabric.ingress_free[static_cast<size_t>(p)] / use_in[static_cast<size_t>(p)]);
    for (int p : touched_out)
      r = std::min(r, fabric.egress_free[static_cast<size_t>(p)] / use_out[static_cast<size_t>(p)]);

    if (r > kRateFloor && !touched_in.empty()) {
      for (Flow& f : c.flows) {
        if (f.finish_time) continue;
        f.rate = r;
        fabric.ingress_free[static_cast<size_t>(f.src_port)] -= r;
        fabric.egress_free[static_cast<size_t>(f.dst_port)] -= r;
        if (!f.start_time) f.start_time = now;
      }
      if (c.state != CoflowState::active) {
        detail::drop_ref(queues.waiting, {job.job_id, c.coflow_id});
        queues.active.emplace_back(job.job_id, c.coflow_id);
        c.state = CoflowState::active;
      }
    } else if (c.state != CoflowState::active) {
      c.state = CoflowState::waiting;
      auto key = std::make_pair(job.job_id, c.coflow_id);
      if (std::find(queues.waiting.begin(), queues.waiting.end(), key) == queues.waiting.end())
        queues.waiting.push_back(key);
    }

    for (int p : touched_in) use_in[static_cast<size_t>(p)] = 0;
    for (int p : touched_out) use_out[static_cast<size_t>(p)] = 0;
    // clamp accumulated float error
    for (int p : touched_in)
      if (fabric.ingress_free[static_cast<size_t>(p)] < 0.0)
        fabric.ingress_free[static_cast<size_t>(p)] = 0.0;
    for (int p : touched_out)
      if (fabric.egress_free[static_cast<size_t>(p)] < 0.0)
        fabric.egress_free[static_cast<size_t>(p)] = 0.0;
  }

  // Phase 2: residual backfill over active coflows' unfinished flows.
  std::vector<Flow*> eligible;
  std::vector<int> m_in(static_cast<size_t>(ports), 0);
  std::vector<int> m_out(static_cast<size_t>(ports), 0);
  std::vector<double> snap_in, snap_out;
  for (int round = 0; round < 32; ++round) {
    eligible.clear();
    std::fill(m_in.begin(), m_in.end(), 0);
    std::fill(m_out.begin(), m_out.end(), 0);
    for (auto ref : order) {
      Coflow& c = detail::coflow_at(jobs, ref);
      if (c.state != CoflowState::active) continue;
      for (Flow& f : c.flows) {
        if (f.finish_time) continue;
        if (fabric.ingress_free[static_cast<size_t>(f.src_port)] > kPortSlackEps &&
            fabric.egress_free[static_cast<size_t>(f.dst_port)] > kPortSlackEps) {
          eligible.push_back(&f);
          ++m_in[static_cast<size_t>(f.src_port)];
          ++m_out[static_cast<size_t>(f.dst_port)];
        }
      }
    }
    if (eligible.empty()) break;

    snap_in = fabric.ingress_free;
    snap_out = fabric.egress_free;
    double added = 0.0;
    for (Flow* f : eligible) {
      double share = std::min(snap_in[static_cast<size_t>(f->src_port)] /
                                  m_in[static_cast<size_t>(f->src_port)],
                              snap_out[static_cast<size_t>(f->dst_port)] /
                                  m_out[static_cast<size_t>(f->dst_port)]);
      f->rate += share;
      fabric.ingress_free[static_cast<size_t>(f->src_port)] -= share;
      fabric.egress_free[static_cast<size_t>(f->dst_port)] -= share;
      if (!f->start_time && f->rate > kRateFloor) f->start_time = now;
      added += share;
    }
    for (double& v : fabric.ingress_free)
      if (v < 0.0) v = 0.0;
    for (double& v : fabric.egress_free)
      if (v < 0.0) v = 0.0;
    if (added < 1e-9) break;
  }
}

struct SimMetrics {
  double avg_jct = 0.0;
  double avg_weighted_jct = 0.0;
  int completed = 0;
  int total = 0;
  bool truncated = false;
};

struct SimResult {
  std::vector<Job> jobs;
  std::vector<Event> events;
  SimMetrics metrics;
  double weighted_residency = 0.0;  // integral of resident job weight over time
  double end_time = 0.0;
  bool stopped_by_hook = false;
};

struct SimOptions {
  double horizon = std::numeric_limits<double>::infinity();
  int ports = 0;  // 0: derive from the widest port index used
  bool check_invariants = false;
  EpisodeHooks* hooks = nullptr;
};

inline SchedulerSnapshot make_snapshot(const std::vector<Job>& jobs,
                                       const FabricState& fabric,
                                       const std::vector<std::pair<int, int>>& order_cur,
                                       double now) {
  SchedulerSnapshot s;
  s.now = now;
  s.ingress_free = fabric.ingress_free;
  s.egress_free = fabric.egress_free;

  std::vector<size_t> live;
  for (size_t ji = 0; ji < jobs.size(); ++ji)
    if (jobs[ji].release_time <= now && !jobs[ji].finished()) live.push_back(ji);
  std::sort(live.begin(), live.end(), [&](size_t a, size_t b) {
    return jobs[a].job_id < jobs[b].job_id;
  });

  for (size_t ji : live) {
    const Job& job = jobs[ji];
    SnapshotJob row;
    row.job_id = job.job_id;
    row.arrival_time = job.arrival_time;
    row.weight = job.weight;
    std::vector<int> outdeg(job.coflows.size(), 0);
    for (const Coflow& c : job.coflows)
      for (int p : c.predecessors) ++outdeg[static_cast<size_t>(p)];
    for (const Coflow& c : job.coflows) {
      SnapshotNode n;
      n.coflow_id = c.coflow_id;
      n.state = c.state;
      n.out_degree = outdeg[static_cast<size_t>(c.coflow_id)];
      n.preds = c.predecessors;
      std::vector<int> srcs, dsts;
      std::unordered_map<int, double> load;
      for (const Flow& f : c.flows) {
        if (f.finish_time) continue;
        n.remaining_mb += f.remaining_mb;
        ++n.unfinished_flows;
        if (std::find(srcs.begin(), srcs.end(), f.src_port) == srcs.end())
          srcs.push_back(f.src_port);
        if (std::find(dsts.begin(), dsts.end(), f.dst_port) == dsts.end())
          dsts.push_back(f.dst_port);
        load[f.src_port] += f.remaining_mb;
        load[-1 - f.dst_port] += f.remaining_mb;  // egress keyed negatively
      }
      n.distinct_src = static_cast<int>(srcs.size());
      n.distinct_dst = static_cast<int>(dsts.size());
      for (const auto& [port, mb] : load) n.bottleneck_mb = std::max(n.bottleneck_mb, mb);
      row.nodes.push_back(std::move(n));
      if (c.state == CoflowState::schedulable || c.state == CoflowState::waiting)
        s.to_order.emplace_back(job.job_id, c.coflow_id);
    }
    s.jobs.push_back(std::move(row));
  }
  std::sort(s.to_order.begin(), s.to_order.end());

  for (auto ref : order_cur) {
    const Job& job = jobs[static_cast<size_t>(ref.first)];
    const Coflow& c = job.coflows[static_cast<size_t>(ref.second)];
    if (c.state == CoflowState::active)
      s.active_order.emplace_back(job.job_id, c.coflow_id);
  }
  return s;
}

inline int derive_ports(const std::vector<Job>& jobs) {
  int hi = -1;
  for (const Job& j : jobs)
    for (const Coflow& c : j.coflows)
      for (const Flow& f : c.flows) hi = std::max({hi, f.src_port, f.dst_port});
  return hi + 1;
}

namespace detail {

inline void check_port_sums(const std::vector<Job>& jobs, int ports, double capacity) {
  std::vector<double> in_sum(static_cast<size_t>(ports), 0.0);
  std::vector<double> out_sum(static_cast<size_t>(ports), 0.0);
  for (const Job& j : jobs)
    for (const Coflow& c : j.coflows)
      for (const Flow& f : c.flows) {
        if (f.finish_time || f.rate == 0.0) continue;
        if (c.state != CoflowState::active)
          throw std::logic_error("invariant: nonzero rate on a non-active coflow");
        in_sum[static_cast<size_t>(f.src_port)] += f.rate;
        out_sum[static_cast<size_t>(f.dst_port)] += f.rate;
      }
  for (int p = 0; p < ports; ++p)
    if (in_sum[static_cast<size_t>(p)] > capacity + 1e-9 ||
        out_sum[static_cast<size_t>(p)] > capacity + 1e-9)
      throw std::logic_error("invariant: port oversubscribed at port " + std::to_string(p));
}

inline int state_rank(CoflowState s) {
  switch (s) {
    case CoflowState::pending: return 0;
    case CoflowState::schedulable: return 1;
    case CoflowState::waiting: return 2;
    case CoflowState::active: return 3;
    case CoflowState::finished: return 4;
  }
  return -1;
}

}  // namespace detail

// Runs the online loop until drained, past the horizon, or stopped by hooks.
// The jobs vector is copied; scheduling state inside it is reset first.
inline SimResult run_simulation(std::vector<Job> jobs, OrderingPolicy& policy,
                                const SimOptions& opt = {}) {
  for (Job& j : jobs) {
    if (j.release_time < j.arrival_time)
      throw std::invalid_argument("run_simulation: release before arrival");
    j.completion_time.reset();
    for (Coflow& c : j.coflows) {
      c.state = CoflowState::pending;
      c.release_time.reset();
      c.completion_time.reset();
      for (Flow& f : c.flows) {
        f.remaining_mb = f.total_mb;
        f.rate = 0.0;
        f.start_time.reset();
        f.finish_time.reset();
      }
    }
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    return a.job_id < b.job_id;
  });

  int ports = opt.ports > 0 ? opt.ports : derive_ports(jobs);
  for (const Job& j : jobs)
    for (const Coflow& c : j.coflows)
      for (const Flow& f : c.flows)
        if (f.src_port >= ports || f.dst_port >= ports)
          throw std::invalid_argument("run_simulation: flow port outside fabric");

  std::unordered_map<int, size_t> by_id;
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (by_id.count(jobs[i].job_id))
      throw std::invalid_argument("run_simulation: duplicate job id");
    by_id[jobs[i].job_id] = i;
  }

  SimResult res;
  FabricState fabric(ports);
  Queues queues;
  std::vector<std::pair<int, int>> order_cur;  // (job index, coflow id)
  std::vector<int> state_seen;                 // non-preemption watchdog
  if (opt.check_invariants)
    for (const Job& j : jobs)
      for (size_t k = 0; k < j.coflows.size(); ++k) state_seen.push_back(0);

  double now = 0.0;
  double wres_sum = 0.0;       // resident weight right now
  double wres_integral = 0.0;
  size_t next_arrival = 0;
  bool stopped = false;

  auto invariant_sweep = [&]() {
    detail::check_port_sums(jobs, ports, fabric.capacity);
    size_t slot = 0;
    for (const Job& j : jobs)
      for (const Coflow& c : j.coflows) {
        int rank = detail::state_rank(c.state);
        if (rank < state_seen[slot])
          throw std::logic_error("invariant: coflow state moved backwards");
        state_seen[slot++] = rank;
      }
  };

  while (true) {
    double t_arrival = next_arrival < jobs.size()
                           ? jobs[next_arrival].arrival_time
                           : std::numeric_limits<double>::infinity();
    double t_finish = std::numeric_limits<double>::infinity();
    for (const Job& j : jobs) {
      if (j.finished() || j.release_time > now) continue;
      for (const Coflow& c : j.coflows) {
        if (c.state != CoflowState::active) continue;
        for (const Flow& f : c.flows)
          if (!f.finish_time && f.rate > 0.0)
            t_finish = std::min(t_finish, now + f.remaining_mb / f.rate);
      }
    }
    double t_next = std::min(t_arrival, t_finish);
    if (t_next == std::numeric_limits<double>::infinity()) break;
    if (t_next > opt.horizon) {
      wres_integral += (opt.horizon - now) * wres_sum;
      now = opt.horizon;
      res.metrics.truncated = true;
      break;
    }

    // drain bytes up to the event
    double dt = t_next - now;
    if (dt > 0.0) {
      wres_integral += dt * wres_sum;
      for (Job& j : jobs) {
        if (j.finished() || j.release_time > now) continue;
        for (Coflow& c : j.coflows) {
          if (c.state != CoflowState::active) continue;
          for (Flow& f : c.flows) {
            if (f.finish_time || f.rate == 0.0) continue;
            f.remaining_mb -= f.rate * dt;
            if (f.remaining_mb < kFinishSnap) f.remaining_mb = 0.0;
          }
        }
      }
    }
    now = t_next;

    bool ordering_event = false;

    while (next_arrival < jobs.size() && jobs[next_arrival].arrival_time <= now) {
      Job& j = jobs[next_arrival];
      res.events.push_back({now, EventKind::job_arrival, j.job_id, -1, -1});
      wres_sum += j.weight;
      ordering_event = true;
      ++next_arrival;
    }

    for (size_t ji = 0; ji < jobs.size(); ++ji) {
      Job& j = jobs[ji];
      if (j.finished() || j.release_time > now) continue;
      bool job_done = true;
      for (Coflow& c : j.coflows) {
        if (c.state == CoflowState::active) {
          bool coflow_done = true;
          for (Flow& f : c.flows) {
            if (f.finish_time) continue;
            if (f.remaining_mb == 0.0) {
              f.finish_time = now;
              f.rate = 0.0;
              res.events.push_back({now, EventKind::flow_finish, j.job_id, c.coflow_id,
                                    f.flow_id});
            } else {
              coflow_done = false;
            }
          }
          if (coflow_done) {
            c.state = CoflowState::finished;
            c.completion_time = now;  // equals max flow finish by construction
            detail::drop_ref(queues.active, {j.job_id, c.coflow_id});
            queues.finished.emplace_back(j.job_id, c.coflow_id);
            detail::drop_ref(order_cur, {static_cast<int>(ji), c.coflow_id});
            res.events.push_back({now, EventKind::coflow_finish, j.job_id, c.coflow_id, -1});
            ordering_event = true;
          }
        }
        if (c.state != CoflowState::finished) job_done = false;
      }
      if (job_done) {
        j.completion_time = now;
        wres_sum -= j.weight;
        res.events.push_back({now, EventKind::job_finish, j.job_id, -1, -1});
      }
    }

    if (ordering_event) {
      schedulable_set(jobs, now);
      SchedulerSnapshot snap = make_snapshot(jobs, fabric, order_cur, now);
      if (!snap.to_order.empty()) {
        if (opt.hooks && !opt.hooks->on_action(now, wres_integral, wres_sum)) {
          stopped = true;
          break;
        }
        PriorityList list = policy.order(snap);
        order_cur.clear();
        for (const PriorityEntry& e : list) {
          auto it = by_id.find(e.job_id);
          if (it == by_id.end())
            throw std::logic_error("scheduler returned unknown job id");
          order_cur.emplace_back(static_cast<int>(it->second), e.coflow_id);
        }
      }
    }

    bool has_live = false;
    for (const Job& j : jobs) {
      if (j.finished() || j.release_time > now) continue;
      for (const Coflow& c : j.coflows)
        if (c.state == CoflowState::schedulable || c.state == CoflowState::waiting ||
            c.state == CoflowState::active) {
          has_live = true;
          break;
        }
      if (has_live) break;
    }
    if (has_live) {
      allocate_rates(order_cur, jobs, fabric, queues, now);
      if (opt.check_invariants) invariant_sweep();
    }
  }

  if (opt.hooks) opt.hooks->on_end(now, wres_integral);

  res.end_time = now;
  res.weighted_residency = wres_integral;
  res.stopped_by_hook = stopped;
  res.metrics.total = static_cast<int>(jobs.size());
  double jct_sum = 0.0, wjct_sum = 0.0;
  for (const Job& j : jobs) {
    if (!j.completion_time) continue;
    ++res.metrics.completed;
    jct_sum += *j.completion_time - j.arrival_time;
    wjct_sum += j.weight * (*j.completion_time - j.arrival_time);
  }
  if (res.metrics.completed > 0) {
    res.metrics.avg_jct = jct_sum / res.metrics.completed;
    res.metrics.avg_weighted_jct = wjct_sum / res.metrics.completed;
  }
  res.jobs = std::move(jobs);
  return res;
}

// Recomposes completion times from the flow level and checks the dependency
// and capacity bookkeeping of a finished (or truncated) run.  Throws on the
// first violation.
inline void verify_schedule(const SimResult& res) {
  for (const Job& j : res.jobs) {
    double job_max = -1.0;
    bool all_done = true;
    for (const Coflow& c : j.coflows) {
      if (c.state == CoflowState::finished) {
        if (!c.completion_time) throw std::logic_error("finished coflow lacks completion");
        double fmax = -1.0;
        for (const Flow& f : c.flows) {
          if (!f.finish_time || f.remaining_mb != 0.0)
            throw std::logic_error("finished coflow with unfinished flow");
          fmax = std::max(fmax, *f.finish_time);
        }
        if (fmax != *c.completion_time)
          throw std::logic_error("coflow completion is not the max flow finish");
        job_max = std::max(job_max, *c.completion_time);
      } else {
        all_done = false;
      }
      for (const Flow& f : c.flows) {
        if (f.finish_time.has_value() != (f.remaining_mb == 0.0))
          throw std::logic_error("flow finish flag disagrees with remaining bytes");
        if (f.remaining_mb > f.total_mb + 1e-9)
          throw std::logic_error("flow gained bytes");
      }
      for (const Flow& f : c.flows) {
        if (!f.start_time) continue;
        if (*f.start_time < j.release_time)
          throw std::logic_error("flow started before job release");
        for (int p : c.predecessors) {
          const Coflow& pred = j.coflows[static_cast<size_t>(p)];
          if (!pred.completion_time || *f.start_time < *pred.completion_time)
            throw std::logic_error("flow started before predecessor completion");
        }
      }
    }
    if (all_done && !j.coflows.empty()) {
      if (!j.completion_time || *j.completion_time != job_max)
        throw std::logic_error("job completion is not the max coflow completion");
    }
  }
}

// One row per job plus a trailing summary comment.
inline void write_report_csv(const SimResult& res, std::ostream& out) {
  out << "job_id,arrival,weight,completion,weighted_jct\n";
  out.precision(17);
  for (const Job& j : res.jobs) {
    out << j.job_id << ',' << j.arrival_time << ',' << j.weight << ',';
    if (j.completion_time) {
      double jct = *j.completion_time - j.arrival_time;
      out << *j.completion_time << ',' << j.weight * jct << '\n';
    } else {
      out << "," << '\n';
    }
  }
  out << "# summary avg_jct=" << res.metrics.avg_jct
      << " avg_weighted_jct=" << res.metrics.avg_weighted_jct
      << " completed=" << res.metrics.completed << " total=" << res.metrics.total
      << " truncated=" << (res.metrics.truncated ? 1 : 0) << '\n';
}

}  // namespace cf
