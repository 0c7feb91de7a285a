#pragma once

// Jobs, coflows, flows.  A job is a DAG of coflows (start-after edges only);
// a coflow is a set of parallel flows between switch ports.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cf {

enum class CoflowState { pending, schedulable, waiting, active, finished };

inline const char* to_string(CoflowState s) {
  switch (s) {
    case CoflowState::pending: return "pending";
    case CoflowState::schedulable: return "schedulable";
    case CoflowState::waiting: return "waiting";
    case CoflowState::active: return "active";
    case CoflowState::finished: return "finished";
  }
  return "?";
}

struct Flow {
  int job_id = 0;
  int coflow_id = 0;
  int flow_id = 0;
  int src_port = 0;
  int dst_port = 0;
  double total_mb = 0.0;
  double remaining_mb = 0.0;
  double rate = 0.0;  // MB per time unit, written by the allocator
  std::optional<double> start_time;
  std::optional<double> finish_time;
};

struct Coflow {
  int job_id = 0;
  int coflow_id = 0;
  std::vector<int> predecessors;  // job-local coflow ids
  std::vector<Flow> flows;
  CoflowState state = CoflowState::pending;
  std::optional<double> release_time;     // set when the coflow becomes schedulable
  std::optional<double> completion_time;  // max flow finish

  bool finished() const { return state == CoflowState::finished; }

  double remaining_mb() const {
    double s = 0.0;
    for (const Flow& f : flows) s += f.remaining_mb;
    return s;
  }

  int unfinished_flows() const {
    int n = 0;
    for (const Flow& f : flows)
      if (!f.finish_time) ++n;
    return n;
  }
};

struct Job {
  int job_id = 0;
  double arrival_time = 0.0;
  double release_time = 0.0;  // equals arrival unless a caller stages releases
  double weight = 1.0;
  std::vector<Coflow> coflows;
  std::optional<double> completion_time;

  bool finished() const { return completion_time.has_value(); }
};

struct JobDag {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // pred -> succ
};

inline JobDag dag_of(const Job& job) {
  JobDag d;
  d.node_count = static_cast<int>(job.coflows.size());
  for (const Coflow& c : job.coflows)
    for (int p : c.predecessors) d.edges.emplace_back(p, c.coflow_id);
  return d;
}

// Structural errors (bad endpoints) throw; a cycle just returns false.
inline bool validate_dag(const JobDag& dag) {
  std::vector<int> indeg(static_cast<size_t>(dag.node_count), 0);
  std::vector<std::vector<int>> succ(static_cast<size_t>(dag.node_count));
  for (auto [a, b] : dag.edges) {
    if (a < 0 || b < 0 || a >= dag.node_count || b >= dag.node_count)
      throw std::invalid_argument("dag edge endpoint out of range: " + std::to_string(a) +
                                  "->" + std::to_string(b));
    if (a == b) return false;
    ++indeg[static_cast<size_t>(b)];
    succ[static_cast<size_t>(a)].push_back(b);
  }
  std::vector<int> ready;
  for (int v = 0; v < dag.node_count; ++v)
    if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int s : succ[static_cast<size_t>(v)])
      if (--indeg[static_cast<size_t>(s)] == 0) ready.push_back(s);
  }
  return seen == dag.node_count;
}

// Promotes pending coflows of released jobs whose predecessors have all
// finished to schedulable (stamping release_time = now) and returns exactly
// the coflows promoted by this call.  Coflows already past pending are not
// reported again; the simulator tracks waiting ones through its snapshot.
inline std::vector<std::pair<int, int>> schedulable_set(std::vector<Job>& jobs, double now) {
  std::vector<std::pair<int, int>> out;
  for (Job& job : jobs) {
    if (job.release_time > now || job.finished()) continue;
    for (Coflow& c : job.coflows) {
      if (c.state != CoflowState::pending) continue;
      bool ready = true;
      for (int p : c.predecessors)
        if (!job.coflows[static_cast<size_t>(p)].finished()) {
          ready = false;
          break;
        }
      if (ready) {
        c.state = CoflowState::schedulable;
        if (!c.release_time) c.release_time = now;
        out.emplace_back(job.job_id, c.coflow_id);
      }
    }
  }
  return out;
}

// Sum of weight * completion over all jobs; throws if any job is unfinished.
inline double objective(const std::vector<Job>& jobs) {
  double s = 0.0;
  for (const Job& j : jobs) {
    if (!j.completion_time)
      throw std::logic_error("objective: job " + std::to_string(j.job_id) + " unfinished");
    s += j.weight * *j.completion_time;
  }
  return s;
}

}  // namespace cf
