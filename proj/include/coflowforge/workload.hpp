#pragma once

// Workload construction: trace ingestion, synthetic templates, job generation,
// train/val/test splitting, byte-count noise, and the on-disk formats.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "model.hpp"
#include "rng.hpp"

namespace cf {

constexpr const char* kWorkloadHeader = "coflowforge-workload v1";

// One coflow shape lifted from a trace record: who sends, who receives how
// many MB.  Port numbers are the trace's machine ids until generation remaps
// them onto the target fabric.
struct CoflowTemplate {
  std::vector<int> sender_ports;
  std::vector<std::pair<int, double>> receivers;  // (port, mb)
};

// Equal integer-MB shares per sender; the leftover whole MBs go one each to
// the lowest-indexed senders.  Any fractional residue lands on sender 0 so
// the total is conserved exactly.
inline std::vector<double> split_shares(double mb, int senders) {
  double base = std::floor(mb / senders);
  double rem = mb - base * senders;
  int extra = static_cast<int>(std::floor(rem + 1e-9));
  double frac = rem - extra;
  if (frac < 1e-9) frac = 0.0;
  std::vector<double> shares(static_cast<size_t>(senders), base);
  for (int i = 0; i < extra; ++i) shares[static_cast<size_t>(i)] += 1.0;
  shares[0] += frac;
  return shares;
}

struct TemplateFlow {
  int src_port = 0;
  int dst_port = 0;
  double mb = 0.0;
};

// Expands a template into per-flow byte counts; zero-byte flows are dropped.
inline std::vector<TemplateFlow> template_flows(const CoflowTemplate& t) {
  std::vector<TemplateFlow> out;
  int ns = static_cast<int>(t.sender_ports.size());
  for (const auto& [rport, mb] : t.receivers) {
    std::vector<double> shares = split_shares(mb, ns);
    for (int i = 0; i < ns; ++i)
      if (shares[static_cast<size_t>(i)] > 0.0)
        out.push_back({t.sender_ports[static_cast<size_t>(i)], rport,
                       shares[static_cast<size_t>(i)]});
  }
  return out;
}

// Trace record: coflow_id arrival_ms num_senders s1..sk num_receivers p1:mb1..
inline std::vector<CoflowTemplate> ingest_trace(std::istream& in) {
  std::vector<CoflowTemplate> out;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long cid;
    double arrival;
    int ns;
    if (!(ls >> cid >> arrival >> ns)) fail("expected 'id arrival num_senders'");
    if (ns < 1) fail("num_senders must be positive");
    CoflowTemplate t;
    for (int i = 0; i < ns; ++i) {
      int p;
      if (!(ls >> p)) fail("missing sender port");
      if (p < 0) fail("negative sender port");
      t.sender_ports.push_back(p);
    }
    int nr;
    if (!(ls >> nr)) fail("missing num_receivers");
    if (nr < 1) fail("num_receivers must be positive");
    for (int i = 0; i < nr; ++i) {
      std::string tok;
      if (!(ls >> tok)) fail("missing receiver entry");
      auto colon = tok.find(':');
      if (colon == std::string::npos) fail("receiver entry not port:mb");
      int p;
      double mb;
      try {
        p = std::stoi(tok.substr(0, colon));
        mb = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        fail("bad receiver entry '" + tok + "'");
        return out;  // unreachable
      }
      if (p < 0) fail("negative receiver port");
      if (mb < 0.0) fail("negative receiver bytes");
      t.receivers.emplace_back(p, mb);
    }
    std::string rest;
    if (ls >> rest) fail("trailing tokens");
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<CoflowTemplate> ingest_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  return ingest_trace(in);
}

// Writes templates back out as trace records (ids renumbered, arrival 0).
inline void save_templates(const std::vector<CoflowTemplate>& ts, std::ostream& out) {
  for (size_t i = 0; i < ts.size(); ++i) {
    const CoflowTemplate& t = ts[i];
    out << i << " 0 " << t.sender_ports.size();
    for (int p : t.sender_ports) out << ' ' << p;
    out << ' ' << t.receivers.size();
    for (const auto& [p, mb] : t.receivers) out << ' ' << p << ':' << mb;
    out << '\n';
  }
}

// Random coflow shapes for when no trace is available: 1-4 senders, 1-4
// receivers on distinct ports, per-receiver bytes log-uniform in [1, 100] MB.
inline std::vector<CoflowTemplate> synthetic_templates(int count, Rng& rng,
                                                       int port_space = 150) {
  if (count < 1) throw std::invalid_argument("synthetic_templates: count must be positive");
  if (port_space < 1)
    throw std::invalid_argument("synthetic_templates: port_space must be positive");
  // ingress and egress are separate resources, so a port may appear on both
  // sides; distinctness is only required within each side
  int cap = std::min(4, port_space);
  auto draw_distinct = [&](int n) {
    std::vector<int> ports;
    while (static_cast<int>(ports.size()) < n) {
      int p = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(port_space)));
      bool dup = false;
      for (int q : ports) dup |= (q == p);
      if (!dup) ports.push_back(p);
    }
    return ports;
  };
  std::vector<CoflowTemplate> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    int ns = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cap)));
    int nr = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cap)));
    CoflowTemplate t;
    t.sender_ports = draw_distinct(ns);
    for (int p : draw_distinct(nr)) {
      double mb = std::round(std::pow(10.0, rng.uniform(0.0, 2.0)));
      if (mb < 1.0) mb = 1.0;
      t.receivers.emplace_back(p, mb);
    }
    out.push_back(std::move(t));
  }
  return out;
}

struct WorkloadSpec {
  int ports = 20;
  int job_count = 0;
  double arrival_rate = 20.0;     // jobs per arrival_window time units
  double arrival_window = 100.0;
  int mean_coflows = 8;           // coflow count is 1 + Poisson(mean_coflows - 1)
  double weight_low = 1.0;
  double weight_high = 4.0;
  uint64_t seed = 1;
};

inline void validate(const WorkloadSpec& s) {
  if (s.ports < 2) throw std::invalid_argument("workload: ports must be >= 2");
  if (s.job_count < 1) throw std::invalid_argument("workload: job_count must be positive");
  if (s.arrival_rate <= 0 || s.arrival_window <= 0)
    throw std::invalid_argument("workload: arrival rate/window must be positive");
  if (s.mean_coflows < 1) throw std::invalid_argument("workload: mean_coflows must be >= 1");
  if (s.weight_low <= 0 || s.weight_high < s.weight_low)
    throw std::invalid_argument("workload: bad weight range");
}

// Online arrivals: exponential inter-arrival times, coflow shapes sampled from
// the templates with ports remapped uniformly onto the fabric (collisions
// allowed), and a random chain edge giving each coflow k one predecessor in
// [0, k).  Everything is driven by the spec seed.
inline std::vector<Job> generate_workload(const WorkloadSpec& spec,
                                          const std::vector<CoflowTemplate>& templates) {
  validate(spec);
  if (templates.empty()) throw std::invalid_argument("generate_workload: no templates");
  Rng rng(spec.seed);
  std::vector<Job> jobs;
  jobs.reserve(static_cast<size_t>(spec.job_count));
  double t = 0.0;
  double mean_gap = spec.arrival_window / spec.arrival_rate;
  for (int j = 0; j < spec.job_count; ++j) {
    t += rng.exponential(mean_gap);
    Job job;
    job.job_id = j;
    job.arrival_time = t;
    job.release_time = t;
    job.weight = rng.uniform(spec.weight_low, spec.weight_high);
    int k = 1 + rng.poisson(static_cast<double>(spec.mean_coflows - 1));
    for (int c = 0; c < k; ++c) {
      const CoflowTemplate& tpl =
          templates[static_cast<size_t>(rng.uniform_int(static_cast<int>(templates.size())))];
      // remap the template's distinct ports (first-appearance order) onto the fabric
      std::vector<int> seen;
      std::vector<int> mapped;
      auto map_port = [&](int p) {
        for (size_t i = 0; i < seen.size(); ++i)
          if (seen[i] == p) return mapped[i];
        seen.push_back(p);
        mapped.push_back(rng.uniform_int(spec.ports));
        return mapped.back();
      };
      Coflow cf;
      cf.job_id = j;
      cf.coflow_id = c;
      std::vector<TemplateFlow> tf = template_flows(tpl);
      for (const TemplateFlow& f : tf) {
        Flow flow;
        flow.job_id = j;
        flow.coflow_id = c;
        flow.flow_id = static_cast<int>(cf.flows.size());
        flow.src_port = map_port(f.src_port);
        flow.dst_port = map_port(f.dst_port);
        flow.total_mb = f.mb;
        flow.remaining_mb = f.mb;
        cf.flows.push_back(flow);
      }
      if (c > 0) cf.predecessors.push_back(rng.uniform_int(c));
      job.coflows.push_back(std::move(cf));
    }
    jobs.push_back(std::move(job));
  }
  return jobs;
}

// Largest-remainder split of shuffled jobs; each part re-sorted by arrival.
inline std::vector<std::vector<Job>> split_workload(const std::vector<Job>& jobs,
                                                    const std::vector<double>& ratios,
                                                    uint64_t seed) {
  if (ratios.empty()) throw std::invalid_argument("split_workload: no ratios");
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0) throw std::invalid_argument("split_workload: negative ratio");
    total += r;
  }
  if (total <= 0) throw std::invalid_argument("split_workload: ratios sum to zero");

  size_t n = jobs.size();
  std::vector<size_t> counts(ratios.size(), 0);
  std::vector<std::pair<double, size_t>> rema;  // (-remainder, index) for stable ties
  size_t assigned = 0;
  for (size_t i = 0; i < ratios.size(); ++i) {
    double exact = static_cast<double>(n) * ratios[i] / total;
    counts[i] = static_cast<size_t>(std::floor(exact));
    assigned += counts[i];
    rema.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(rema.begin(), rema.end());
  for (size_t k = 0; k < n - assigned; ++k) ++counts[rema[k % rema.size()].second];

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::vector<Job>> parts(ratios.size());
  size_t pos = 0;
  for (size_t i = 0; i < ratios.size(); ++i) {
    for (size_t k = 0; k < counts[i]; ++k) parts[i].push_back(jobs[order[pos++]]);
    std::sort(parts[i].begin(), parts[i].end(), [](const Job& a, const Job& b) {
      if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
      return a.job_id < b.job_id;
    });
  }
  return parts;
}

// Perturbs every flow's byte count by factor max(0.01, 1 + N(0, sigma)).
inline std::vector<Job> inject_noise(const std::vector<Job>& jobs, double sigma,
                                     uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("inject_noise: negative sigma");
  Rng rng(seed);
  std::vector<Job> out = jobs;
  for (Job& j : out)
    for (Coflow& c : j.coflows)
      for (Flow& f : c.flows) {
        double factor = 1.0 + rng.normal(sigma);
        if (factor < 0.01) factor = 0.01;
        f.total_mb *= factor;
        f.remaining_mb = f.total_mb;
      }
  return out;
}

inline void save_workload(const std::vector<Job>& jobs, std::ostream& out) {
  out << kWorkloadHeader << '\n';
  for (const Job& j : jobs) {
    nlohmann::json co = nlohmann::json::array();
    for (const Coflow& c : j.coflows) {
      nlohmann::json fl = nlohmann::json::array();
      for (const Flow& f : c.flows)
        fl.push_back({{"src", f.src_port}, {"dst", f.dst_port}, {"mb", f.total_mb}});
      co.push_back({{"id", c.coflow_id}, {"preds", c.predecessors}, {"flows", fl}});
    }
    nlohmann::json job = {{"id", j.job_id},
                          {"arrival", j.arrival_time},
                          {"weight", j.weight},
                          {"coflows", co}};
    out << job.dump() << '\n';
  }
}

inline void save_workload_file(const std::vector<Job>& jobs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write workload file " + path);
  save_workload(jobs, out);
}

inline std::vector<Job> load_workload(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kWorkloadHeader)
    throw std::runtime_error("workload file: missing '" + std::string(kWorkloadHeader) +
                             "' header");
  std::vector<Job> jobs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      throw std::runtime_error("workload line " + std::to_string(lineno) + ": " + what);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
    Job job;
    try {
      job.job_id = j.at("id").get<int>();
      job.arrival_time = j.at("arrival").get<double>();
      job.release_time = job.arrival_time;
      job.weight = j.at("weight").get<double>();
      const auto& cos = j.at("coflows");
      for (size_t ci = 0; ci < cos.size(); ++ci) {
        const auto& cj = cos[ci];
        Coflow c;
        c.job_id = job.job_id;
        c.coflow_id = cj.at("id").get<int>();
        if (c.coflow_id != static_cast<int>(ci)) fail("coflow ids must be 0..K-1 in order");
        c.predecessors = cj.at("preds").get<std::vector<int>>();
        const auto& fls = cj.at("flows");
        if (fls.empty()) fail("coflow with no flows");
        for (const auto& fj : fls) {
          Flow f;
          f.job_id = job.job_id;
          f.coflow_id = c.coflow_id;
          f.flow_id = static_cast<int>(c.flows.size());
          f.src_port = fj.at("src").get<int>();
          f.dst_port = fj.at("dst").get<int>();
          f.total_mb = fj.at("mb").get<double>();
          f.remaining_mb = f.total_mb;
          if (f.src_port < 0 || f.dst_port < 0) fail("negative port");
          if (!(f.total_mb > 0.0)) fail("flow bytes must be positive");
          c.flows.push_back(std::move(f));
        }
        job.coflows.push_back(std::move(c));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
    if (job.weight <= 0) fail("weight must be positive");
    JobDag dag = dag_of(job);
    try {
      if (!validate_dag(dag)) fail("coflow dependencies contain a cycle");
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    jobs.push_back(std::move(job));
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    return a.job_id < b.job_id;
  });
  return jobs;
}

inline std::vector<Job> load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open workload file " + path);
  return load_workload(in);
}

// Shifts a contiguous window of jobs so the first arrival is at time zero.
inline std::vector<Job> rebase_arrivals(std::vector<Job> jobs) {
  if (jobs.empty()) return jobs;
  double base = jobs.front().arrival_time;
  for (Job& j : jobs) {
    j.arrival_time -= base;
    j.release_time -= base;
  }
  return jobs;
}

}  // namespace cf
