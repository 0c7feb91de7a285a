#pragma once

// Baseline ordering policies.  All keys are ascending-is-better; entries carry
// score = -key so the list still reads "higher score first".

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fabric.hpp"
#include "rng.hpp"

namespace cf {

enum class SchedulerChoice { drl, drl_noattn, drl_flat, fifo, sebf, wsebf, random };

inline const char* to_string(SchedulerChoice c) {
  switch (c) {
    case SchedulerChoice::drl: return "drl";
    case SchedulerChoice::drl_noattn: return "drl_noattn";
    case SchedulerChoice::drl_flat: return "drl_flat";
    case SchedulerChoice::fifo: return "fifo";
    case SchedulerChoice::sebf: return "sebf";
    case SchedulerChoice::wsebf: return "wsebf";
    case SchedulerChoice::random: return "random";
  }
  return "?";
}

inline std::optional<SchedulerChoice> parse_scheduler(const std::string& name) {
  for (SchedulerChoice c :
       {SchedulerChoice::drl, SchedulerChoice::drl_noattn, SchedulerChoice::drl_flat,
        SchedulerChoice::fifo, SchedulerChoice::sebf, SchedulerChoice::wsebf,
        SchedulerChoice::random})
    if (name == to_string(c)) return c;
  return std::nullopt;
}

inline bool is_drl(SchedulerChoice c) {
  return c == SchedulerChoice::drl || c == SchedulerChoice::drl_noattn ||
         c == SchedulerChoice::drl_flat;
}

// fifo: ascending job arrival; sebf: ascending bottleneck drain time
// Gamma = bottleneck_mb / capacity (capacity is 1 MB/time-unit throughout);
// wsebf: ascending Gamma / job weight; random: seeded shuffle.  Every choice
// ranks only the to_order tail: actives keep their previous relative order,
// the same non-preemptive action space the learned policy operates in.
inline PriorityList heuristic_order(const SchedulerSnapshot& snap, SchedulerChoice choice,
                                    Rng* rng = nullptr) {
  if (is_drl(choice)) throw std::invalid_argument("heuristic_order: not a heuristic");

  PriorityList out;
  out.reserve(snap.active_order.size() + snap.to_order.size());
  for (auto [job_id, coflow_id] : snap.active_order)
    out.push_back({job_id, coflow_id, std::numeric_limits<double>::infinity()});

  if (choice == SchedulerChoice::random) {
    if (!rng) throw std::invalid_argument("heuristic_order: random needs an rng");
    std::vector<std::pair<int, int>> refs = snap.to_order;
    rng->shuffle(refs);
    double score = static_cast<double>(refs.size());
    for (auto [job_id, coflow_id] : refs) out.push_back({job_id, coflow_id, score--});
    return out;
  }

  std::unordered_map<int, const SnapshotJob*> row;
  for (const SnapshotJob& j : snap.jobs) row[j.job_id] = &j;

  struct Keyed {
    double key;
    double arrival;
    int job_id;
    int coflow_id;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(snap.to_order.size());
  for (auto [job_id, coflow_id] : snap.to_order) {
    auto it = row.find(job_id);
    if (it == row.end()) throw std::logic_error("heuristic_order: ref outside snapshot");
    const SnapshotJob& j = *it->second;
    const SnapshotNode& n = j.nodes[static_cast<size_t>(coflow_id)];
    double key = 0.0;
    switch (choice) {
      case SchedulerChoice::fifo:
        key = j.arrival_time;
        break;
      case SchedulerChoice::sebf:
        key = n.bottleneck_mb;
        break;
      case SchedulerChoice::wsebf:
        key = n.bottleneck_mb / j.weight;
        break;
      default:
        break;
    }
    keyed.push_back({key, j.arrival_time, job_id, coflow_id});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    if (a.job_id != b.job_id) return a.job_id < b.job_id;
    return a.coflow_id < b.coflow_id;
  });

  for (const Keyed& k : keyed) out.push_back({k.job_id, k.coflow_id, -k.key});
  return out;
}

class HeuristicPolicy : public OrderingPolicy {
 public:
  explicit HeuristicPolicy(SchedulerChoice choice, uint64_t seed = 0)
      : choice_(choice), rng_(seed) {}

  PriorityList order(const SchedulerSnapshot& snap) override {
    return heuristic_order(snap, choice_, &rng_);
  }

 private:
  SchedulerChoice choice_;
  Rng rng_;
};

}  // namespace cf
