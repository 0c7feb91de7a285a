#pragma once

// DAG neural encoder: per-node features -> per-node embeddings e_v and
// per-job embeddings y.  Nodes are grouped into topological batches merged
// across jobs; (layer, batch) cells can then run as anti-diagonal wavefront
// stages, which is a pure reordering of the sequential layer-by-batch sweep.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fabric.hpp"
#include "matrix.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace cf {

struct EncoderConfig {
  int feature_dim = 7;
  int embed_dim = 16;
  int layers = 2;
  // feature normalizers
  double norm_bytes = 100.0;
  double norm_flows = 10.0;
  double norm_time = 100.0;
  double norm_degree = 5.0;
};

// Flat numbering of every node of every snapshot job, job-major.
struct NodeIndex {
  std::vector<int> job_offset;
  int total = 0;

  int flat(int job_idx, int node_idx) const {
    return job_offset[static_cast<size_t>(job_idx)] + node_idx;
  }
};

inline NodeIndex node_index(const SchedulerSnapshot& snap) {
  NodeIndex idx;
  for (const SnapshotJob& j : snap.jobs) {
    idx.job_offset.push_back(idx.total);
    idx.total += static_cast<int>(j.nodes.size());
  }
  return idx;
}

struct BatchPlan {
  std::vector<std::vector<int>> batches;  // flat node ids, each ascending
  int layers = 0;

  int batch_count() const { return static_cast<int>(batches.size()); }
};

// Batch index of a node = longest predecessor path length; batches of the
// same index are merged across jobs.  Throws on a cyclic dependency set.
inline BatchPlan topological_batches(const SchedulerSnapshot& snap, int layers) {
  NodeIndex idx = node_index(snap);
  std::vector<int> depth(static_cast<size_t>(idx.total), -1);

  for (size_t ji = 0; ji < snap.jobs.size(); ++ji) {
    const auto& nodes = snap.jobs[ji].nodes;
    // Kahn with longest-path relaxation
    std::vector<int> indeg(nodes.size(), 0);
    std::vector<std::vector<int>> succ(nodes.size());
    for (size_t v = 0; v < nodes.size(); ++v)
      for (int p : nodes[v].preds) {
        if (p < 0 || p >= static_cast<int>(nodes.size()))
          throw std::invalid_argument("topological_batches: bad predecessor id");
        ++indeg[v];
        succ[static_cast<size_t>(p)].push_back(static_cast<int>(v));
      }
    std::vector<int> ready;
    for (size_t v = 0; v < nodes.size(); ++v)
      if (indeg[v] == 0) {
        ready.push_back(static_cast<int>(v));
        depth[static_cast<size_t>(idx.flat(static_cast<int>(ji), static_cast<int>(v)))] = 0;
      }
    size_t seen = 0;
    while (!ready.empty()) {
      int v = ready.back();
      ready.pop_back();
      ++seen;
      int dv = depth[static_cast<size_t>(idx.flat(static_cast<int>(ji), v))];
      for (int s : succ[static_cast<size_t>(v)]) {
        int& ds = depth[static_cast<size_t>(idx.flat(static_cast<int>(ji), s))];
        ds = std::max(ds, dv + 1);
        if (--indeg[static_cast<size_t>(s)] == 0) ready.push_back(s);
      }
    }
    if (seen != nodes.size())
      throw std::invalid_argument("topological_batches: dependency cycle in job " +
                                  std::to_string(snap.jobs[ji].job_id));
  }

  BatchPlan plan;
  plan.layers = layers;
  for (int v = 0; v < idx.total; ++v) {
    int d = depth[static_cast<size_t>(v)];
    if (d >= plan.batch_count()) plan.batches.resize(static_cast<size_t>(d) + 1);
    plan.batches[static_cast<size_t>(d)].push_back(v);
  }
  return plan;
}

// Wavefront stages: stage s holds cells (layer, batch) with layer+batch = s.
inline std::vector<std::vector<std::pair<int, int>>> pipeline_schedule(int layers,
                                                                       int batch_count) {
  std::vector<std::vector<std::pair<int, int>>> stages;
  if (layers <= 0 || batch_count <= 0) return stages;
  stages.resize(static_cast<size_t>(layers + batch_count - 1));
  for (int l = 0; l < layers; ++l)
    for (int j = 0; j < batch_count; ++j)
      stages[static_cast<size_t>(l + j)].emplace_back(l, j);
  return stages;
}

inline Matrix node_features(const SchedulerSnapshot& snap, const EncoderConfig& cfg) {
  NodeIndex idx = node_index(snap);
  Matrix x(idx.total, cfg.feature_dim);
  double ports = static_cast<double>(snap.ports());
  int row = 0;
  for (const SnapshotJob& j : snap.jobs)
    for (const SnapshotNode& n : j.nodes) {
      double* r = x.data.data() + static_cast<size_t>(row) * x.cols;
      r[0] = n.remaining_mb / cfg.norm_bytes;
      r[1] = n.unfinished_flows / cfg.norm_flows;
      r[2] = ports > 0 ? n.distinct_src / ports : 0.0;
      r[3] = ports > 0 ? n.distinct_dst / ports : 0.0;
      r[4] = j.weight;
      r[5] = (snap.now - j.arrival_time) / cfg.norm_time;
      r[6] = n.out_degree / cfg.norm_degree;
      ++row;
    }
  return x;
}

struct EncoderParams {
  DenseLayer input;                // feature_dim -> d, tanh
  std::vector<DenseLayer> agg;     // per layer: d -> d, identity
  std::vector<DenseLayer> comb;    // per layer: 2d -> d, tanh
  DenseLayer readout;              // 2d -> d, tanh
};

inline EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.layers < 1) throw std::invalid_argument("encoder: layers must be >= 1");
  EncoderParams p;
  p.input = make_dense(cfg.feature_dim, cfg.embed_dim, Activation::tanh, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    p.agg.push_back(make_dense(cfg.embed_dim, cfg.embed_dim, Activation::identity, rng));
    p.comb.push_back(make_dense(2 * cfg.embed_dim, cfg.embed_dim, Activation::tanh, rng));
  }
  p.readout = make_dense(2 * cfg.embed_dim, cfg.embed_dim, Activation::tanh, rng);
  return p;
}

inline EncoderParams zero_like(const EncoderParams& p) {
  EncoderParams z;
  z.input = zero_like(p.input);
  for (const DenseLayer& l : p.agg) z.agg.push_back(zero_like(l));
  for (const DenseLayer& l : p.comb) z.comb.push_back(zero_like(l));
  z.readout = zero_like(p.readout);
  return z;
}

struct EmbeddingSet {
  Matrix node_embed;  // total x d, e_v
  Matrix job_embed;   // jobs x d, y
};

// Forward activations kept for the backward pass.
struct EncoderTrace {
  NodeIndex index;
  BatchPlan plan;
  std::vector<std::vector<int>> preds_flat;  // per node, ascending
  Matrix features;
  Matrix h0;
  std::vector<Matrix> h;       // per layer
  std::vector<Matrix> t;       // per layer: agg(h)
  std::vector<Matrix> g;       // per layer: max-pooled predecessor transform
  std::vector<std::vector<int>> argmax;  // per layer, total*d: winning pred or -1
  std::vector<std::vector<int>> sinks;   // per job, flat ids
  Matrix sink_concat;          // jobs x 2d
  Matrix job_embed;
};

inline EmbeddingSet dagnn_forward(const SchedulerSnapshot& snap, const EncoderConfig& cfg,
                                  const EncoderParams& params, EncoderTrace* trace = nullptr,
                                  bool pipelined = true) {
  if (cfg.layers < 1) throw std::invalid_argument("encoder: layers must be >= 1");
  NodeIndex idx = node_index(snap);
  BatchPlan plan = topological_batches(snap, cfg.layers);
  Matrix x = node_features(snap, cfg);
  int d = cfg.embed_dim;
  int total = idx.total;

  std::vector<std::vector<int>> preds_flat(static_cast<size_t>(total));
  {
    int row = 0;
    for (size_t ji = 0; ji < snap.jobs.size(); ++ji)
      for (const SnapshotNode& n : snap.jobs[ji].nodes) {
        for (int p : n.preds)
          preds_flat[static_cast<size_t>(row)].push_back(
              idx.flat(static_cast<int>(ji), p));
        std::sort(preds_flat[static_cast<size_t>(row)].begin(),
                  preds_flat[static_cast<size_t>(row)].end());
        ++row;
      }
  }

  Matrix h0 = dense_forward(params.input, x);
  std::vector<Matrix> h(static_cast<size_t>(cfg.layers), Matrix(total, d));
  std::vector<Matrix> t(static_cast<size_t>(cfg.layers), Matrix(total, d));
  std::vector<Matrix> g(static_cast<size_t>(cfg.layers), Matrix(total, d));
  std::vector<std::vector<int>> argmax(
      static_cast<size_t>(cfg.layers),
      std::vector<int>(static_cast<size_t>(total) * static_cast<size_t>(d), -1));

  std::vector<double> concat(static_cast<size_t>(2 * d));
  auto run_cell = [&](int layer, int batch) {
    const Matrix& hprev = layer == 0 ? h0 : h[static_cast<size_t>(layer - 1)];
    for (int v : plan.batches[static_cast<size_t>(batch)]) {
      std::span<double> grow = g[static_cast<size_t>(layer)].row(v);
      int* arow = argmax[static_cast<size_t>(layer)].data() +
                  static_cast<size_t>(v) * static_cast<size_t>(d);
      for (int c = 0; c < d; ++c) grow[static_cast<size_t>(c)] = 0.0;
      bool first = true;
      for (int u : preds_flat[static_cast<size_t>(v)]) {
        std::span<const double> tu = t[static_cast<size_t>(layer)].row(u);
        for (int c = 0; c < d; ++c) {
          if (first || tu[static_cast<size_t>(c)] > grow[static_cast<size_t>(c)]) {
            grow[static_cast<size_t>(c)] = tu[static_cast<size_t>(c)];
            arow[c] = u;
          }
        }
        first = false;
      }
      for (int c = 0; c < d; ++c) concat[static_cast<size_t>(c)] = grow[static_cast<size_t>(c)];
      std::span<const double> pv = hprev.row(v);
      for (int c = 0; c < d; ++c) concat[static_cast<size_t>(d + c)] = pv[static_cast<size_t>(c)];
      dense_forward_row(params.comb[static_cast<size_t>(layer)], concat,
                        h[static_cast<size_t>(layer)].row(v));
      dense_forward_row(params.agg[static_cast<size_t>(layer)],
                        h[static_cast<size_t>(layer)].row(v),
                        t[static_cast<size_t>(layer)].row(v));
    }
  };

  if (pipelined) {
    for (const auto& stage : pipeline_schedule(cfg.layers, plan.batch_count()))
      for (auto [layer, batch] : stage) run_cell(layer, batch);
  } else {
    for (int layer = 0; layer < cfg.layers; ++layer)
      for (int batch = 0; batch < plan.batch_count(); ++batch) run_cell(layer, batch);
  }

  // readout: mean over sink nodes of [top-layer ; layer-0] through one dense
  int njobs = static_cast<int>(snap.jobs.size());
  Matrix sink_concat(njobs, 2 * d);
  std::vector<std::vector<int>> sinks(static_cast<size_t>(njobs));
  const Matrix& htop = cfg.layers > 0 ? h[static_cast<size_t>(cfg.layers - 1)] : h0;
  for (int ji = 0; ji < njobs; ++ji) {
    const auto& nodes = snap.jobs[static_cast<size_t>(ji)].nodes;
    for (size_t v = 0; v < nodes.size(); ++v)
      if (nodes[v].out_degree == 0)
        sinks[static_cast<size_t>(ji)].push_back(idx.flat(ji, static_cast<int>(v)));
    double m = static_cast<double>(sinks[static_cast<size_t>(ji)].size());
    std::span<double> srow = sink_concat.row(ji);
    for (int v : sinks[static_cast<size_t>(ji)]) {
      std::span<const double> top = htop.row(v);
      std::span<const double> base = h0.row(v);
      for (int c = 0; c < d; ++c) {
        srow[static_cast<size_t>(c)] += top[static_cast<size_t>(c)] / m;
        srow[static_cast<size_t>(d + c)] += base[static_cast<size_t>(c)] / m;
      }
    }
  }
  Matrix y = dense_forward(params.readout, sink_concat);

  EmbeddingSet out;
  out.node_embed = htop;
  out.job_embed = y;
  if (trace) {
    trace->index = std::move(idx);
    trace->plan = std::move(plan);
    trace->preds_flat = std::move(preds_flat);
    trace->features = std::move(x);
    trace->h0 = std::move(h0);
    trace->h = std::move(h);
    trace->t = std::move(t);
    trace->g = std::move(g);
    trace->argmax = std::move(argmax);
    trace->sinks = std::move(sinks);
    trace->sink_concat = std::move(sink_concat);
    trace->job_embed = out.job_embed;
  }
  return out;
}

// Gradients of a scalar loss wrt encoder parameters, given upstream gradients
// on node embeddings (de) and job embeddings (dy).  Max-pooling routes each
// coordinate's gradient to the winning predecessor recorded at forward time.
inline void dagnn_backward(const EncoderConfig& cfg, const EncoderParams& params,
                           const EncoderTrace& trace, const Matrix& de, const Matrix& dy,
                           EncoderParams& grads) {
  int d = cfg.embed_dim;
  int total = trace.index.total;
  int layers = cfg.layers;

  Matrix dsink(trace.sink_concat.rows, trace.sink_concat.cols);
  if (dy.rows == trace.job_embed.rows && dy.cols == trace.job_embed.cols && dy.rows > 0)
    dsink = dense_backward(params.readout, trace.sink_concat, trace.job_embed, dy,
                           grads.readout);

  std::vector<Matrix> dh(static_cast<size_t>(layers), Matrix(total, d));
  Matrix dh0(total, d);
  std::vector<Matrix> dt(static_cast<size_t>(layers), Matrix(total, d));

  if (de.rows == total && de.cols == d) add_inplace(dh[static_cast<size_t>(layers - 1)], de);

  for (size_t ji = 0; ji < trace.sinks.size(); ++ji) {
    double m = static_cast<double>(trace.sinks[ji].size());
    std::span<const double> srow = dsink.row(static_cast<int>(ji));
    for (int v : trace.sinks[ji]) {
      std::span<double> top = dh[static_cast<size_t>(layers - 1)].row(v);
      std::span<double> base = dh0.row(v);
      for (int c = 0; c < d; ++c) {
        top[static_cast<size_t>(c)] += srow[static_cast<size_t>(c)] / m;
        base[static_cast<size_t>(c)] += srow[static_cast<size_t>(d + c)] / m;
      }
    }
  }

  std::vector<double> scratch(static_cast<size_t>(2 * d));
  std::vector<double> concat(static_cast<size_t>(2 * d));
  std::vector<double> dconcat(static_cast<size_t>(2 * d));

  for (int layer = layers - 1; layer >= 0; --layer) {
    const Matrix& hprev = layer == 0 ? trace.h0 : trace.h[static_cast<size_t>(layer - 1)];
    Matrix& dhprev = layer == 0 ? dh0 : dh[static_cast<size_t>(layer - 1)];
    for (int batch = trace.plan.batch_count() - 1; batch >= 0; --batch) {
      for (int v : trace.plan.batches[static_cast<size_t>(batch)]) {
        // successors have already deposited into dt; fold it through agg
        dense_backward_row(params.agg[static_cast<size_t>(layer)],
                           trace.h[static_cast<size_t>(layer)].row(v),
                           trace.t[static_cast<size_t>(layer)].row(v),
                           dt[static_cast<size_t>(layer)].row(v),
                           dh[static_cast<size_t>(layer)].row(v),
                           grads.agg[static_cast<size_t>(layer)], scratch);

        std::span<const double> grow = trace.g[static_cast<size_t>(layer)].row(v);
        std::span<const double> pv = hprev.row(v);
        for (int c = 0; c < d; ++c) {
          concat[static_cast<size_t>(c)] = grow[static_cast<size_t>(c)];
          concat[static_cast<size_t>(d + c)] = pv[static_cast<size_t>(c)];
          dconcat[static_cast<size_t>(c)] = 0.0;
          dconcat[static_cast<size_t>(d + c)] = 0.0;
        }
        dense_backward_row(params.comb[static_cast<size_t>(layer)], concat,
                           trace.h[static_cast<size_t>(layer)].row(v),
                           dh[static_cast<size_t>(layer)].row(v), dconcat,
                           grads.comb[static_cast<size_t>(layer)], scratch);

        const int* arow = trace.argmax[static_cast<size_t>(layer)].data() +
                          static_cast<size_t>(v) * static_cast<size_t>(d);
        for (int c = 0; c < d; ++c) {
          int u = arow[c];
          if (u >= 0)
            dt[static_cast<size_t>(layer)].at(u, c) += dconcat[static_cast<size_t>(c)];
        }
        std::span<double> dpv = dhprev.row(v);
        for (int c = 0; c < d; ++c)
          dpv[static_cast<size_t>(c)] += dconcat[static_cast<size_t>(d + c)];
      }
    }
  }

  dense_backward(params.input, trace.features, trace.h0, dh0, grads.input);
}

}  // namespace cf
