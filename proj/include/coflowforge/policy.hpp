#pragma once

// Scoring policy: self-attention over candidate-node embeddings, a small
// dense scorer producing one value per candidate, weight multiplication, and
// greedy or Plackett-Luce list construction.  Also holds the flat-embedding
// baseline that scores every node from one fixed-width concatenation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "encoder.hpp"
#include "fabric.hpp"
#include "matrix.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace cf {

struct AttentionParams {
  Matrix wq, wk, wv;  // d x d, no biases
};

inline AttentionParams init_attention(int d, Rng& rng) {
  AttentionParams p;
  double bound = std::sqrt(6.0 / (d + d));
  p.wq = Matrix(d, d);
  p.wk = Matrix(d, d);
  p.wv = Matrix(d, d);
  for (double& v : p.wq.data) v = rng.uniform(-bound, bound);
  for (double& v : p.wk.data) v = rng.uniform(-bound, bound);
  for (double& v : p.wv.data) v = rng.uniform(-bound, bound);
  return p;
}

struct AttentionTrace {
  Matrix z, q, k, v;
  Matrix logits;  // scaled
  Matrix attn;    // row-stochastic
};

// Scaled dot-product attention.  Each row's softmax denominator and each
// output contraction are summed in value order, so permuting the input rows
// permutes the output rows without any floating-point drift.
inline Matrix self_attention(const Matrix& z, const AttentionParams& p,
                             AttentionTrace* trace = nullptr) {
  if (z.rows < 1) throw std::invalid_argument("self_attention: empty input");
  int n = z.rows;
  int d = z.cols;
  Matrix q = matmul(z, p.wq);
  Matrix k = matmul(z, p.wk);
  Matrix v = matmul(z, p.wv);
  Matrix logits = matmul_bt(q, k);
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& x : logits.data) x *= scale;

  Matrix attn = logits;
  std::vector<double> terms(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::span<double> row = attn.row(i);
    double m = row[0];
    for (double x : row)
      if (x > m) m = x;
    for (double& x : row) x = std::exp(x - m);
    for (int j = 0; j < n; ++j) terms[static_cast<size_t>(j)] = row[static_cast<size_t>(j)];
    double denom = ordered_sum(terms);
    for (double& x : row) x /= denom;
  }

  Matrix out(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) {
      for (int j = 0; j < n; ++j)
        terms[static_cast<size_t>(j)] = attn.at(i, j) * v.at(j, c);
      out.at(i, c) = ordered_sum(terms);
    }

  if (trace) {
    trace->z = z;
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->logits = std::move(logits);
    trace->attn = std::move(attn);
  }
  return out;
}

// Returns dz and accumulates parameter gradients.
inline Matrix self_attention_backward(const AttentionParams& p, const AttentionTrace& tr,
                                      const Matrix& dout, AttentionParams& grads) {
  int d = tr.z.cols;
  double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix dv = matmul_at(tr.attn, dout);
  Matrix dattn = matmul_bt(dout, tr.v);

  // softmax rows: dl_ij = a_ij * (da_ij - sum_l da_il * a_il)
  Matrix dlogits(dattn.rows, dattn.cols);
  for (int i = 0; i < dattn.rows; ++i) {
    double dot = 0.0;
    for (int j = 0; j < dattn.cols; ++j) dot += dattn.at(i, j) * tr.attn.at(i, j);
    for (int j = 0; j < dattn.cols; ++j)
      dlogits.at(i, j) = tr.attn.at(i, j) * (dattn.at(i, j) - dot) * scale;
  }

  Matrix dq = matmul(dlogits, tr.k);
  Matrix dk = matmul_at(dlogits, tr.q);

  add_inplace(grads.wq, matmul_at(tr.z, dq));
  add_inplace(grads.wk, matmul_at(tr.z, dk));
  add_inplace(grads.wv, matmul_at(tr.z, dv));

  Matrix dz = matmul_bt(dq, p.wq);
  add_inplace(dz, matmul_bt(dk, p.wk));
  add_inplace(dz, matmul_bt(dv, p.wv));
  return dz;
}

// Per-candidate scorer over [node embedding ; job embedding].
struct ScoreNet {
  DenseLayer h1;   // 2d -> 32 relu
  DenseLayer h2;   // 32 -> 16 relu
  DenseLayer out;  // 16 -> 1
};

inline ScoreNet init_score(int d, Rng& rng) {
  ScoreNet s;
  s.h1 = make_dense(2 * d, 32, Activation::relu, rng);
  s.h2 = make_dense(32, 16, Activation::relu, rng);
  s.out = make_dense(16, 1, Activation::identity, rng);
  return s;
}

inline ScoreNet zero_like(const ScoreNet& s) {
  return {zero_like(s.h1), zero_like(s.h2), zero_like(s.out)};
}

struct ScoreTrace {
  Matrix x, a1, a2;
  std::vector<double> q;
};

inline std::vector<double> score_nodes(const Matrix& x, const ScoreNet& net,
                                       ScoreTrace* trace = nullptr) {
  Matrix a1 = dense_forward(net.h1, x);
  Matrix a2 = dense_forward(net.h2, a1);
  Matrix o = dense_forward(net.out, a2);
  std::vector<double> q(static_cast<size_t>(o.rows));
  for (int i = 0; i < o.rows; ++i) q[static_cast<size_t>(i)] = o.at(i, 0);
  if (trace) {
    trace->x = x;
    trace->a1 = std::move(a1);
    trace->a2 = std::move(a2);
    trace->q = q;
  }
  return q;
}

// Returns dx rows aligned with the forward input.
inline Matrix score_backward(const ScoreNet& net, const ScoreTrace& tr,
                             const std::vector<double>& dq, ScoreNet& grads) {
  Matrix dout(static_cast<int>(dq.size()), 1);
  for (size_t i = 0; i < dq.size(); ++i) dout.at(static_cast<int>(i), 0) = dq[i];
  Matrix o(static_cast<int>(tr.q.size()), 1);
  for (size_t i = 0; i < tr.q.size(); ++i) o.at(static_cast<int>(i), 0) = tr.q[i];
  Matrix da2 = dense_backward(net.out, tr.a2, o, dout, grads.out);
  Matrix da1 = dense_backward(net.h2, tr.a1, tr.a2, da2, grads.h2);
  return dense_backward(net.h1, tr.x, tr.a1, da1, grads.h1);
}

// Fixed-width baseline: every node embedding concatenated (zero padded) into
// one vector, scored by a single dense stack emitting max_nodes outputs.
struct FlatNet {
  int max_nodes = 0;
  DenseLayer hidden;  // max_nodes*d -> 64 relu
  DenseLayer out;     // 64 -> max_nodes
};

inline FlatNet init_flat(int d, int max_nodes, Rng& rng) {
  FlatNet f;
  f.max_nodes = max_nodes;
  f.hidden = make_dense(max_nodes * d, 64, Activation::relu, rng);
  f.out = make_dense(64, max_nodes, Activation::identity, rng);
  return f;
}

inline FlatNet zero_like(const FlatNet& f) {
  return {f.max_nodes, zero_like(f.hidden), zero_like(f.out)};
}

struct FlatTrace {
  Matrix x, a1, o;  // single-row
};

inline std::vector<double> flat_scores(const Matrix& embeds, const FlatNet& net,
                                       FlatTrace* trace = nullptr) {
  int d = embeds.cols;
  if (embeds.rows > net.max_nodes)
    throw std::length_error("flat policy: node count " + std::to_string(embeds.rows) +
                            " exceeds capacity " + std::to_string(net.max_nodes));
  Matrix x(1, net.max_nodes * d);
  for (int v = 0; v < embeds.rows; ++v)
    for (int c = 0; c < d; ++c) x.at(0, v * d + c) = embeds.at(v, c);
  Matrix a1 = dense_forward(net.hidden, x);
  Matrix o = dense_forward(net.out, a1);
  std::vector<double> q(static_cast<size_t>(embeds.rows));
  for (int v = 0; v < embeds.rows; ++v) q[static_cast<size_t>(v)] = o.at(0, v);
  if (trace) {
    trace->x = std::move(x);
    trace->a1 = std::move(a1);
    trace->o = std::move(o);
  }
  return q;
}

// dq is per live node; returns per-node embedding gradients.
inline Matrix flat_backward(const FlatNet& net, const FlatTrace& tr,
                            const std::vector<double>& dq, int d, FlatNet& grads) {
  Matrix dout(1, net.max_nodes);
  for (size_t v = 0; v < dq.size(); ++v) dout.at(0, static_cast<int>(v)) = dq[v];
  Matrix da1 = dense_backward(net.out, tr.a1, tr.o, dout, grads.out);
  Matrix dx = dense_backward(net.hidden, tr.x, tr.a1, da1, grads.hidden);
  Matrix de(static_cast<int>(dq.size()), d);
  for (int v = 0; v < de.rows; ++v)
    for (int c = 0; c < d; ++c) de.at(v, c) = dx.at(0, v * d + c);
  return de;
}

enum class PolicyKind { attention, no_attention, flat };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::attention:
      return "attention";
    case PolicyKind::no_attention:
      return "no_attention";
    case PolicyKind::flat:
      return "flat";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  if (s == "attention") return PolicyKind::attention;
  if (s == "no_attention") return PolicyKind::no_attention;
  if (s == "flat") return PolicyKind::flat;
  return std::nullopt;
}

struct AgentParams {
  PolicyKind kind = PolicyKind::attention;
  EncoderConfig enc;
  EncoderParams encoder;
  AttentionParams attn;  // attention kind only
  ScoreNet score;        // attention and no_attention kinds
  FlatNet flat;          // flat kind only
};

inline AgentParams init_agent(const EncoderConfig& enc, PolicyKind kind, Rng& rng,
                              int flat_max_nodes = 0) {
  AgentParams a;
  a.kind = kind;
  a.enc = enc;
  a.encoder = init_encoder(enc, rng);
  if (kind == PolicyKind::attention) a.attn = init_attention(enc.embed_dim, rng);
  if (kind != PolicyKind::flat) a.score = init_score(enc.embed_dim, rng);
  if (kind == PolicyKind::flat) {
    if (flat_max_nodes < 1)
      throw std::invalid_argument("flat policy needs a positive node capacity");
    a.flat = init_flat(enc.embed_dim, flat_max_nodes, rng);
  }
  return a;
}

inline AgentParams zero_like(const AgentParams& a) {
  AgentParams z;
  z.kind = a.kind;
  z.enc = a.enc;
  z.encoder = zero_like(a.encoder);
  if (a.kind == PolicyKind::attention) {
    z.attn.wq = Matrix(a.attn.wq.rows, a.attn.wq.cols);
    z.attn.wk = Matrix(a.attn.wk.rows, a.attn.wk.cols);
    z.attn.wv = Matrix(a.attn.wv.rows, a.attn.wv.cols);
  }
  if (a.kind != PolicyKind::flat) z.score = zero_like(a.score);
  if (a.kind == PolicyKind::flat) z.flat = zero_like(a.flat);
  return z;
}

// Canonical parameter order shared by flatten, unflatten, and the optimizer.
template <class F>
void visit_agent(AgentParams& a, F&& f) {
  auto layer = [&](DenseLayer& l) {
    for (double& x : l.w.data) f(x);
    for (double& x : l.b) f(x);
  };
  layer(a.encoder.input);
  for (auto& l : a.encoder.agg) layer(l);
  for (auto& l : a.encoder.comb) layer(l);
  layer(a.encoder.readout);
  if (a.kind == PolicyKind::attention) {
    for (double& x : a.attn.wq.data) f(x);
    for (double& x : a.attn.wk.data) f(x);
    for (double& x : a.attn.wv.data) f(x);
  }
  if (a.kind != PolicyKind::flat) {
    layer(a.score.h1);
    layer(a.score.h2);
    layer(a.score.out);
  }
  if (a.kind == PolicyKind::flat) {
    layer(a.flat.hidden);
    layer(a.flat.out);
  }
}

inline size_t agent_param_count(const AgentParams& a) {
  size_t n = 0;
  visit_agent(const_cast<AgentParams&>(a), [&](double&) { ++n; });
  return n;
}

inline std::vector<double> flatten_agent(const AgentParams& a) {
  std::vector<double> out;
  out.reserve(agent_param_count(a));
  visit_agent(const_cast<AgentParams&>(a), [&](double& x) { out.push_back(x); });
  return out;
}

inline void unflatten_agent(std::span<const double> flat, AgentParams& a) {
  size_t i = 0;
  visit_agent(a, [&](double& x) { x = flat[i++]; });
  if (i != flat.size()) throw std::invalid_argument("unflatten_agent: size mismatch");
}

// One ordering decision made under the stochastic policy.
struct AgentStep {
  double time = 0.0;
  double log_prob = 0.0;
  std::vector<double> grad_logp;  // d log pi / d theta, canonical order
};

inline std::vector<double> weighted_priorities(const std::vector<double>& q,
                                               const std::vector<double>& w) {
  if (q.size() != w.size()) throw std::invalid_argument("weighted_priorities: size mismatch");
  std::vector<double> p(q.size());
  for (size_t i = 0; i < q.size(); ++i) p[i] = q[i] * w[i];
  return p;
}

// Greedy tie-breaks: earlier job arrival, then ids.
struct OrderKeys {
  double arrival = 0.0;
  int job_id = 0;
  int coflow_id = 0;
};

namespace detail {

// Plackett-Luce: repeatedly softmax-sample the head among remaining
// candidates.  Returns drawn order; accumulates log prob and its gradient
// wrt the utilities.
inline std::vector<int> plackett_luce(const std::vector<double>& p, Rng& rng,
                                      double& log_prob, std::vector<double>* dlogp) {
  size_t m = p.size();
  std::vector<int> remaining(m);
  for (size_t i = 0; i < m; ++i) remaining[i] = static_cast<int>(i);
  std::vector<int> order;
  order.reserve(m);
  log_prob = 0.0;
  std::vector<double> prob;
  while (!remaining.empty()) {
    double mx = p[static_cast<size_t>(remaining[0])];
    for (int i : remaining) mx = std::max(mx, p[static_cast<size_t>(i)]);
    prob.assign(remaining.size(), 0.0);
    double denom = 0.0;
    for (size_t r = 0; r < remaining.size(); ++r) {
      prob[r] = std::exp(p[static_cast<size_t>(remaining[r])] - mx);
      denom += prob[r];
    }
    for (double& x : prob) x /= denom;
    double u = rng.uniform01();
    size_t pick = remaining.size() - 1;
    double acc = 0.0;
    for (size_t r = 0; r < remaining.size(); ++r) {
      acc += prob[r];
      if (u < acc) {
        pick = r;
        break;
      }
    }
    log_prob += std::log(prob[pick]);
    if (dlogp) {
      for (size_t r = 0; r < remaining.size(); ++r)
        (*dlogp)[static_cast<size_t>(remaining[r])] -= prob[r];
      (*dlogp)[static_cast<size_t>(remaining[pick])] += 1.0;
    }
    order.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return order;
}

}  // namespace detail

// Ranks candidates by descending priority.  Greedy mode is deterministic;
// sample mode draws a Plackett-Luce ordering and reports its log probability
// (and optionally the gradient of that log probability wrt p).
inline std::vector<int> priority_order(const std::vector<double>& p,
                                       const std::vector<OrderKeys>& keys, bool sample,
                                       Rng* rng, double* log_prob = nullptr,
                                       std::vector<double>* dlogp = nullptr) {
  if (p.size() != keys.size()) throw std::invalid_argument("priority_order: size mismatch");
  if (sample) {
    if (!rng) throw std::invalid_argument("priority_order: sampling needs an rng");
    double lp = 0.0;
    std::vector<int> order = detail::plackett_luce(p, *rng, lp, dlogp);
    if (log_prob) *log_prob = lp;
    return order;
  }
  std::vector<int> order(p.size());
  for (size_t i = 0; i < p.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    size_t ia = static_cast<size_t>(a), ib = static_cast<size_t>(b);
    if (p[ia] != p[ib]) return p[ia] > p[ib];
    if (keys[ia].arrival != keys[ib].arrival) return keys[ia].arrival < keys[ib].arrival;
    if (keys[ia].job_id != keys[ib].job_id) return keys[ia].job_id < keys[ib].job_id;
    return keys[ia].coflow_id < keys[ib].coflow_id;
  });
  if (log_prob) *log_prob = 0.0;
  return order;
}

// Scores the snapshot's candidate set and returns the full priority list:
// already-active coflows first in their previous relative order, then the
// candidates by descending weighted score (or a sampled ordering).
inline PriorityList agent_order(const SchedulerSnapshot& snap, const AgentParams& params,
                                bool sample, Rng* rng, AgentStep* step = nullptr) {
  if (sample && !rng) throw std::invalid_argument("agent_order: sampling needs an rng");
  size_t m = snap.to_order.size();
  if (m == 0) throw std::invalid_argument("agent_order: nothing to order");

  EncoderTrace enc_trace;
  EmbeddingSet emb =
      dagnn_forward(snap, params.enc, params.encoder, step ? &enc_trace : nullptr);
  NodeIndex idx = step ? enc_trace.index : node_index(snap);

  std::vector<int> job_of(m), flat_of(m);
  std::vector<double> weight_of(m), arrival_of(m);
  for (size_t i = 0; i < m; ++i) {
    auto [jid, cid] = snap.to_order[i];
    int ji = -1;
    for (size_t j = 0; j < snap.jobs.size(); ++j)
      if (snap.jobs[j].job_id == jid) ji = static_cast<int>(j);
    if (ji < 0) throw std::logic_error("agent_order: candidate outside snapshot");
    job_of[i] = ji;
    flat_of[i] = idx.flat(ji, cid);
    weight_of[i] = snap.jobs[static_cast<size_t>(ji)].weight;
    arrival_of[i] = snap.jobs[static_cast<size_t>(ji)].arrival_time;
  }

  int d = params.enc.embed_dim;
  std::vector<double> q;
  AttentionTrace attn_trace;
  ScoreTrace score_trace;
  FlatTrace flat_trace;
  Matrix z(static_cast<int>(m), d);

  if (params.kind == PolicyKind::flat) {
    q = flat_scores(emb.node_embed, params.flat, step ? &flat_trace : nullptr);
    std::vector<double> picked(m);
    for (size_t i = 0; i < m; ++i) picked[i] = q[static_cast<size_t>(flat_of[i])];
    q = std::move(picked);
  } else {
    for (size_t i = 0; i < m; ++i)
      for (int c = 0; c < d; ++c)
        z.at(static_cast<int>(i), c) = emb.node_embed.at(flat_of[i], c);
    Matrix s = params.kind == PolicyKind::attention
                   ? self_attention(z, params.attn, step ? &attn_trace : nullptr)
                   : z;
    Matrix x(static_cast<int>(m), 2 * d);
    for (size_t i = 0; i < m; ++i)
      for (int c = 0; c < d; ++c) {
        x.at(static_cast<int>(i), c) = s.at(static_cast<int>(i), c);
        x.at(static_cast<int>(i), d + c) = emb.job_embed.at(job_of[i], c);
      }
    q = score_nodes(x, params.score, step ? &score_trace : nullptr);
  }

  std::vector<double> p = weighted_priorities(q, weight_of);
  std::vector<OrderKeys> keys(m);
  for (size_t i = 0; i < m; ++i)
    keys[i] = {arrival_of[i], snap.to_order[i].first, snap.to_order[i].second};

  double log_prob = 0.0;
  std::vector<double> dlogp(m, 0.0);
  std::vector<int> order =
      priority_order(p, keys, sample, rng, &log_prob, step ? &dlogp : nullptr);

  PriorityList list;
  for (auto [jid, cid] : snap.active_order)
    list.push_back({jid, cid, std::numeric_limits<double>::infinity()});
  for (int i : order)
    list.push_back({snap.to_order[static_cast<size_t>(i)].first,
                    snap.to_order[static_cast<size_t>(i)].second, p[static_cast<size_t>(i)]});

  if (step) {
    step->time = snap.now;
    step->log_prob = log_prob;

    AgentParams grads = zero_like(params);
    std::vector<double> dq(m);
    for (size_t i = 0; i < m; ++i) dq[i] = dlogp[i] * weight_of[i];

    Matrix de(idx.total, d);
    Matrix dy;
    if (params.kind == PolicyKind::flat) {
      std::vector<double> dq_all(static_cast<size_t>(idx.total), 0.0);
      for (size_t i = 0; i < m; ++i) dq_all[static_cast<size_t>(flat_of[i])] += dq[i];
      de = flat_backward(params.flat, flat_trace, dq_all, d, grads.flat);
    } else {
      Matrix dx = score_backward(params.score, score_trace, dq, grads.score);
      Matrix ds(static_cast<int>(m), d);
      dy = Matrix(static_cast<int>(snap.jobs.size()), d);
      for (size_t i = 0; i < m; ++i)
        for (int c = 0; c < d; ++c) {
          ds.at(static_cast<int>(i), c) = dx.at(static_cast<int>(i), c);
          dy.at(job_of[i], c) += dx.at(static_cast<int>(i), d + c);
        }
      Matrix dz = params.kind == PolicyKind::attention
                      ? self_attention_backward(params.attn, attn_trace, ds, grads.attn)
                      : ds;
      for (size_t i = 0; i < m; ++i)
        for (int c = 0; c < d; ++c) de.at(flat_of[i], c) += dz.at(static_cast<int>(i), c);
    }
    dagnn_backward(params.enc, params.encoder, enc_trace, de, dy, grads.encoder);
    step->grad_logp = flatten_agent(grads);
  }
  return list;
}

// Ordering policy backed by agent parameters; optionally records each
// decision for training.
class DrlPolicy : public OrderingPolicy {
 public:
  DrlPolicy(const AgentParams& params, bool sample, uint64_t seed,
            std::vector<AgentStep>* sink = nullptr)
      : params_(params), sample_(sample), rng_(seed), sink_(sink) {}

  PriorityList order(const SchedulerSnapshot& snap) override {
    if (sink_) {
      AgentStep step;
      PriorityList list = agent_order(snap, params_, sample_, &rng_, &step);
      sink_->push_back(std::move(step));
      return list;
    }
    return agent_order(snap, params_, sample_, &rng_);
  }

 private:
  const AgentParams& params_;
  bool sample_;
  Rng rng_;
  std::vector<AgentStep>* sink_;
};

}  // namespace cf
