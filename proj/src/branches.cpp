#include "eppnet/branches.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eppnet/error.hpp"
#include "eppnet/ops.hpp"
#include "eppnet/rng.hpp"

namespace eppnet {

AdjacencySpec build_adjacency(const std::vector<std::pair<int, int>>& edges,
                              int vertex_count) {
  AdjacencySpec spec;
  spec.vertex_count = vertex_count;
  spec.edges = edges;
  Tensor a({vertex_count, vertex_count});
  for (const auto& [i, j] : edges) {
    if (i < 0 || i >= vertex_count || j < 0 || j >= vertex_count)
      throw Error(ErrorCode::IndexOutOfRange, "edge index out of range");
    a.at(i, j) = 1.0f;
    a.at(j, i) = 1.0f;
  }
  for (int i = 0; i < vertex_count; ++i) a.at(i, i) = 1.0f;  // self-loops
  std::vector<double> inv_sqrt_deg(static_cast<size_t>(vertex_count));
  for (int i = 0; i < vertex_count; ++i) {
    double deg = 0.0;
    for (int j = 0; j < vertex_count; ++j) deg += a.at(i, j);
    inv_sqrt_deg[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  spec.normalized = Tensor({vertex_count, vertex_count});
  for (int i = 0; i < vertex_count; ++i)
    for (int j = 0; j < vertex_count; ++j)
      spec.normalized.at(i, j) = static_cast<float>(
          a.at(i, j) * inv_sqrt_deg[static_cast<size_t>(i)] *
          inv_sqrt_deg[static_cast<size_t>(j)]);
  spec.learned_offset =
      Parameter("adjacency_offset", Tensor({vertex_count, vertex_count}));
  return spec;
}

namespace {

Tensor xavier(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  const float s = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  return Tensor::random_uniform(std::move(shape), rng, -s, s);
}

}  // namespace

// ---------------------------------------------------------------------------
// GCN branch

struct GcnModel::Block {
  Parameter w;        // [Cin,Cout]
  Parameter bias;     // [Cout]
  Parameter t_kernel; // [Cout,Kt]
  Parameter t_bias;   // [Cout]
  int c_in = 0, c_out = 0;
};

struct GcnModel::Cache {
  // per body, per block
  struct BlockCache {
    Tensor x;    // [T,V,Cin] block input
    Tensor ax;   // [T,V,Cin] A_eff * x
    Tensor lin;  // [T,V,Cout] pre-activation
    Tensor s;    // [T,V,Cout] relu output
  };
  std::vector<std::vector<BlockCache>> bodies;
  std::vector<Tensor> final_features;  // per body [T,V,C_last]
  std::vector<Tensor> pooled;         // per body [C_last]
  std::vector<int> argmax_body;       // per channel
  Tensor fused;                       // [C_last]
  Tensor a_eff;                       // [V,V]
  int t = 0, v = 0, m = 0;
};

GcnModel::~GcnModel() = default;

GcnModel::GcnModel(const GcnConfig& cfg, AdjacencySpec adjacency, uint64_t seed)
    : cfg_(cfg), adjacency_(std::move(adjacency)) {
  if (cfg_.blocks < 1 ||
      static_cast<int>(cfg_.channels.size()) != cfg_.blocks)
    throw Error(ErrorCode::ConfigError, "gcn channels must list one entry per block");
  if (cfg_.temporal_kernel % 2 == 0)
    throw Error(ErrorCode::ConfigError, "temporal kernel must be odd");
  Rng rng(seed);
  int c_in = 3;
  for (int bi = 0; bi < cfg_.blocks; ++bi) {
    const int c_out = cfg_.channels[static_cast<size_t>(bi)];
    Block blk;
    blk.c_in = c_in;
    blk.c_out = c_out;
    const std::string prefix = "gcn.block" + std::to_string(bi) + ".";
    blk.w = Parameter(prefix + "w", xavier({c_in, c_out}, c_in, c_out, rng));
    blk.bias = Parameter(prefix + "bias", Tensor({c_out}));
    // identity start for the temporal filter
    Tensor tk({c_out, cfg_.temporal_kernel});
    for (int c = 0; c < c_out; ++c) tk.at(c, cfg_.temporal_kernel / 2) = 1.0f;
    blk.t_kernel = Parameter(prefix + "t_kernel", std::move(tk));
    blk.t_bias = Parameter(prefix + "t_bias", Tensor({c_out}));
    blocks_.push_back(std::move(blk));
    c_in = c_out;
  }
  head_w_ = Parameter("gcn.head.w", xavier({c_in, cfg_.classes}, c_in,
                                           cfg_.classes, rng));
  head_b_ = Parameter("gcn.head.bias", Tensor({cfg_.classes}));
}

std::vector<Parameter*> GcnModel::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&adjacency_.learned_offset);
  for (auto& blk : blocks_) {
    out.push_back(&blk.w);
    out.push_back(&blk.bias);
    out.push_back(&blk.t_kernel);
    out.push_back(&blk.t_bias);
  }
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

Tensor GcnModel::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(0) != 3 || x.dim(2) != adjacency_.vertex_count)
    throw Error(ErrorCode::ShapeMismatch, "gcn input must be [3,T,V,M]");
  const int t = x.dim(1), v = x.dim(2), m = x.dim(3);
  const int kt = cfg_.temporal_kernel, pad = kt / 2;
  cache_ = std::make_unique<Cache>();
  cache_->t = t;
  cache_->v = v;
  cache_->m = m;
  cache_->a_eff = adjacency_.normalized;
  cache_->a_eff += adjacency_.learned_offset.value;
  const Tensor& a = cache_->a_eff;

  cache_->bodies.resize(static_cast<size_t>(m));
  cache_->final_features.resize(static_cast<size_t>(m));
  cache_->pooled.resize(static_cast<size_t>(m));
  const int c_last = blocks_.back().c_out;

  for (int body = 0; body < m; ++body) {
    Tensor cur({t, v, 3});
    for (int c = 0; c < 3; ++c)
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          cur.at(ti, vi, c) = x.at(c, ti, vi, body);

    auto& block_caches = cache_->bodies[static_cast<size_t>(body)];
    block_caches.resize(blocks_.size());
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
      const Block& blk = blocks_[bi];
      auto& bc = block_caches[bi];
      bc.x = cur;
      // ax[t] = A_eff * x[t]
      bc.ax = Tensor({t, v, blk.c_in});
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          for (int c = 0; c < blk.c_in; ++c) {
            double acc = 0.0;
            for (int vj = 0; vj < v; ++vj)
              acc += static_cast<double>(a.at(vi, vj)) * bc.x.at(ti, vj, c);
            bc.ax.at(ti, vi, c) = static_cast<float>(acc);
          }
      // lin[t] = ax[t] * W + bias
      bc.lin = Tensor({t, v, blk.c_out});
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          for (int co = 0; co < blk.c_out; ++co) {
            double acc = blk.bias.value[co];
            for (int ci = 0; ci < blk.c_in; ++ci)
              acc += static_cast<double>(bc.ax.at(ti, vi, ci)) *
                     blk.w.value.at(ci, co);
            bc.lin.at(ti, vi, co) = static_cast<float>(acc);
          }
      bc.s = relu(bc.lin);
      // depthwise temporal convolution + residual
      Tensor z({t, v, blk.c_out});
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          for (int co = 0; co < blk.c_out; ++co) {
            double acc = blk.t_bias.value[co];
            for (int d = 0; d < kt; ++d) {
              const int src = ti + d - pad;
              if (src < 0 || src >= t) continue;
              acc += static_cast<double>(blk.t_kernel.value.at(co, d)) *
                     bc.s.at(src, vi, co);
            }
            z.at(ti, vi, co) = static_cast<float>(acc);
          }
      if (blk.c_in == blk.c_out) z += bc.x;
      cur = std::move(z);
    }
    cache_->final_features[static_cast<size_t>(body)] = cur;
    // mean over (T,V)
    Tensor pooled({c_last});
    const double inv = 1.0 / (static_cast<double>(t) * v);
    for (int c = 0; c < c_last; ++c) {
      double acc = 0.0;
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi) acc += cur.at(ti, vi, c);
      pooled[c] = static_cast<float>(acc * inv);
    }
    cache_->pooled[static_cast<size_t>(body)] = std::move(pooled);
  }

  // max over bodies, per channel
  cache_->argmax_body.assign(static_cast<size_t>(c_last), 0);
  cache_->fused = Tensor({c_last});
  for (int c = 0; c < c_last; ++c) {
    int best = 0;
    float bv = cache_->pooled[0][c];
    for (int body = 1; body < m; ++body)
      if (cache_->pooled[static_cast<size_t>(body)][c] > bv) {
        bv = cache_->pooled[static_cast<size_t>(body)][c];
        best = body;
      }
    cache_->argmax_body[static_cast<size_t>(c)] = best;
    cache_->fused[c] = bv;
  }

  // linear head
  Tensor logits({cfg_.classes});
  for (int k = 0; k < cfg_.classes; ++k) {
    double acc = head_b_.value[k];
    for (int c = 0; c < c_last; ++c)
      acc += static_cast<double>(cache_->fused[c]) * head_w_.value.at(c, k);
    logits[k] = static_cast<float>(acc);
  }
  return logits;
}

Tensor GcnModel::backward(const Tensor& d_logits) {
  if (!cache_) throw Error(ErrorCode::ShapeMismatch, "backward before forward");
  Cache& cc = *cache_;
  const int t = cc.t, v = cc.v, m = cc.m;
  const int kt = cfg_.temporal_kernel, pad = kt / 2;
  const int c_last = blocks_.back().c_out;
  const Tensor& a = cc.a_eff;

  // head
  Tensor d_fused({c_last});
  for (int c = 0; c < c_last; ++c) {
    double acc = 0.0;
    for (int k = 0; k < cfg_.classes; ++k) {
      acc += static_cast<double>(head_w_.value.at(c, k)) * d_logits[k];
      head_w_.grad.at(c, k) += cc.fused[c] * d_logits[k];
    }
    d_fused[c] = static_cast<float>(acc);
  }
  for (int k = 0; k < cfg_.classes; ++k) head_b_.grad[k] += d_logits[k];

  // per-body gradient of the pooled features (max routing per channel)
  std::vector<Tensor> d_final(static_cast<size_t>(m));
  const float inv_tv = 1.0f / (static_cast<float>(t) * v);
  for (int body = 0; body < m; ++body)
    d_final[static_cast<size_t>(body)] = Tensor({t, v, c_last});
  for (int c = 0; c < c_last; ++c) {
    const int body = cc.argmax_body[static_cast<size_t>(c)];
    const float g = d_fused[c] * inv_tv;
    Tensor& df = d_final[static_cast<size_t>(body)];
    for (int ti = 0; ti < t; ++ti)
      for (int vi = 0; vi < v; ++vi) df.at(ti, vi, c) += g;
  }

  Tensor d_input({3, t, v, m});
  for (int body = 0; body < m; ++body) {
    Tensor d_cur = std::move(d_final[static_cast<size_t>(body)]);
    auto& block_caches = cc.bodies[static_cast<size_t>(body)];
    for (int bi = static_cast<int>(blocks_.size()) - 1; bi >= 0; --bi) {
      Block& blk = blocks_[static_cast<size_t>(bi)];
      auto& bc = block_caches[static_cast<size_t>(bi)];
      Tensor d_x({t, v, blk.c_in});
      if (blk.c_in == blk.c_out) d_x += d_cur;  // residual path
      // temporal backward
      Tensor d_s({t, v, blk.c_out});
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          for (int co = 0; co < blk.c_out; ++co) {
            const float g = d_cur.at(ti, vi, co);
            if (g == 0.0f) continue;
            blk.t_bias.grad[co] += g;
            for (int d = 0; d < kt; ++d) {
              const int src = ti + d - pad;
              if (src < 0 || src >= t) continue;
              d_s.at(src, vi, co) += blk.t_kernel.value.at(co, d) * g;
              blk.t_kernel.grad.at(co, d) += bc.s.at(src, vi, co) * g;
            }
          }
      // relu backward
      Tensor d_lin({t, v, blk.c_out});
      for (long i = 0; i < d_lin.numel(); ++i)
        if (bc.lin[i] > 0.0f) d_lin[i] = d_s[i];
      // spatial backward
      for (int ti = 0; ti < t; ++ti) {
        for (int vi = 0; vi < v; ++vi)
          for (int co = 0; co < blk.c_out; ++co) {
            const float g = d_lin.at(ti, vi, co);
            if (g == 0.0f) continue;
            blk.bias.grad[co] += g;
            for (int ci = 0; ci < blk.c_in; ++ci)
              blk.w.grad.at(ci, co) += bc.ax.at(ti, vi, ci) * g;
          }
        // d_ax[t] = d_lin[t] * W^T ; then dA += d_ax x^T, d_x += A^T d_ax
        for (int vi = 0; vi < v; ++vi)
          for (int ci = 0; ci < blk.c_in; ++ci) {
            double acc = 0.0;
            for (int co = 0; co < blk.c_out; ++co)
              acc += static_cast<double>(d_lin.at(ti, vi, co)) *
                     blk.w.value.at(ci, co);
            const float d_ax = static_cast<float>(acc);
            if (d_ax == 0.0f) continue;
            for (int vj = 0; vj < v; ++vj) {
              adjacency_.learned_offset.grad.at(vi, vj) +=
                  d_ax * bc.x.at(ti, vj, ci);
              d_x.at(ti, vj, ci) += a.at(vi, vj) * d_ax;
            }
          }
      }
      d_cur = std::move(d_x);
    }
    for (int c = 0; c < 3; ++c)
      for (int ti = 0; ti < t; ++ti)
        for (int vi = 0; vi < v; ++vi)
          d_input.at(c, ti, vi, body) = d_cur.at(ti, vi, c);
  }
  return d_input;
}

// ---------------------------------------------------------------------------
// CNN branch

struct CnnModel::Block {
  Parameter kernel;  // [Cout,Cin,3,3]
  Parameter bias;    // [Cout]
  int c_in = 0, c_out = 0;
};

struct CnnModel::Cache {
  struct BlockCache {
    Tensor x;     // block input
    Tensor z;     // conv + bias (pre-relu)
    Tensor r;     // relu output (pool input)
  };
  std::vector<BlockCache> blocks;
  Tensor features;  // pool output of the last block
  Tensor pooled;    // [C_last]
};

CnnModel::~CnnModel() = default;

CnnModel::CnnModel(const CnnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (cfg_.blocks < 1 ||
      static_cast<int>(cfg_.channels.size()) != cfg_.blocks)
    throw Error(ErrorCode::ConfigError, "cnn channels must list one entry per block");
  Rng rng(seed);
  int c_in = 3;
  for (int bi = 0; bi < cfg_.blocks; ++bi) {
    const int c_out = cfg_.channels[static_cast<size_t>(bi)];
    Block blk;
    blk.c_in = c_in;
    blk.c_out = c_out;
    const std::string prefix = "cnn.block" + std::to_string(bi) + ".";
    blk.kernel = Parameter(prefix + "kernel",
                           xavier({c_out, c_in, 3, 3}, c_in * 9, c_out * 9, rng));
    blk.bias = Parameter(prefix + "bias", Tensor({c_out}));
    blocks_.push_back(std::move(blk));
    c_in = c_out;
  }
  head_w_ = Parameter("cnn.head.w", xavier({c_in, cfg_.classes}, c_in,
                                           cfg_.classes, rng));
  head_b_ = Parameter("cnn.head.bias", Tensor({cfg_.classes}));
}

std::vector<Parameter*> CnnModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& blk : blocks_) {
    out.push_back(&blk.kernel);
    out.push_back(&blk.bias);
  }
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

Tensor CnnModel::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(0) != 3)
    throw Error(ErrorCode::ShapeMismatch, "cnn input must be [3,H,W]");
  int h = x.dim(1), w = x.dim(2);
  for (int bi = 0; bi < cfg_.blocks; ++bi) {
    if (h < 2 || w < 2)
      throw Error(ErrorCode::ShapeMismatch,
                  "input too small for " + std::to_string(cfg_.blocks) +
                      " pooling stages");
    h /= 2;
    w /= 2;
  }
  cache_ = std::make_unique<Cache>();
  cache_->blocks.resize(blocks_.size());
  Tensor cur = x;
  for (size_t bi = 0; bi < blocks_.size(); ++bi) {
    Block& blk = blocks_[bi];
    auto& bc = cache_->blocks[bi];
    bc.x = std::move(cur);
    bc.z = add_channel_bias(conv2d(bc.x, blk.kernel.value, 1, 1), blk.bias.value);
    bc.r = relu(bc.z);
    cur = max_pool2(bc.r);
  }
  cache_->features = cur;
  cache_->pooled = global_avg_pool(cache_->features);
  const int c_last = cache_->pooled.dim(0);
  Tensor logits({cfg_.classes});
  for (int k = 0; k < cfg_.classes; ++k) {
    double acc = head_b_.value[k];
    for (int c = 0; c < c_last; ++c)
      acc += static_cast<double>(cache_->pooled[c]) * head_w_.value.at(c, k);
    logits[k] = static_cast<float>(acc);
  }
  return logits;
}

Tensor CnnModel::backward(const Tensor& d_logits) {
  if (!cache_) throw Error(ErrorCode::ShapeMismatch, "backward before forward");
  Cache& cc = *cache_;
  const int c_last = cc.pooled.dim(0);
  Tensor d_pooled({c_last});
  for (int c = 0; c < c_last; ++c) {
    double acc = 0.0;
    for (int k = 0; k < cfg_.classes; ++k) {
      acc += static_cast<double>(head_w_.value.at(c, k)) * d_logits[k];
      head_w_.grad.at(c, k) += cc.pooled[c] * d_logits[k];
    }
    d_pooled[c] = static_cast<float>(acc);
  }
  for (int k = 0; k < cfg_.classes; ++k) head_b_.grad[k] += d_logits[k];

  Tensor d_cur(cc.features.shape);
  global_avg_pool_backward(d_pooled, cc.features, d_cur);
  for (int bi = static_cast<int>(blocks_.size()) - 1; bi >= 0; --bi) {
    Block& blk = blocks_[static_cast<size_t>(bi)];
    auto& bc = cc.blocks[static_cast<size_t>(bi)];
    Tensor d_r(bc.r.shape);
    max_pool2_backward(d_cur, bc.r, d_r);
    Tensor d_z(bc.z.shape);
    relu_backward(d_r, bc.z, d_z);
    Tensor d_conv(bc.z.shape);
    add_channel_bias_backward(d_z, d_conv, blk.bias.grad);
    Tensor d_x(bc.x.shape);
    conv2d_backward(d_conv, bc.x, blk.kernel.value, 1, 1, d_x, blk.kernel.grad);
    d_cur = std::move(d_x);
  }
  return d_cur;
}

Tensor image_to_tensor(const RgbImage& img) {
  Tensor out({3, img.height, img.width});
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const uint8_t* p = img.px(r, c);
      for (int ch = 0; ch < 3; ++ch)
        out.at(ch, r, c) = static_cast<float>(p[ch]) / 255.0f;
    }
  return out;
}

// ---------------------------------------------------------------------------
// shared model plumbing

NamedTensors BranchModel::state() {
  NamedTensors out;
  for (Parameter* p : parameters()) out.emplace_back(p->name, p->value);
  return out;
}

void BranchModel::load_state(const NamedTensors& tensors) {
  for (Parameter* p : parameters()) {
    const Tensor* t = find_tensor(tensors, p->name);
    if (!t)
      throw Error(ErrorCode::ShapeMismatch, "checkpoint missing tensor " + p->name);
    if (t->shape != p->value.shape)
      throw Error(ErrorCode::ShapeMismatch, "checkpoint shape mismatch for " + p->name);
    p->value = *t;
    p->grad.fill(0.0f);
    p->velocity.fill(0.0f);
  }
}

TrainHistory train_branch(BranchModel& model, const std::vector<Tensor>& inputs,
                          const std::vector<int>& labels,
                          const OptimizerConfig& opt, int epochs,
                          int batch_size, uint64_t seed,
                          float stop_at_accuracy) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  if (inputs.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "inputs/labels length mismatch");
  const int n = static_cast<int>(inputs.size());
  std::vector<Parameter*> params = model.parameters();
  TrainHistory history;
  Rng rng(seed);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // deterministic seeded shuffle
    Rng shuffle_rng = rng.fork(static_cast<uint64_t>(epoch) + 1);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle_rng.next_below(static_cast<uint64_t>(i) + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    double epoch_loss = 0.0;
    int correct = 0;
    for (int start = 0; start < n; start += batch_size) {
      const int bsz = std::min(batch_size, n - start);
      const float inv_b = 1.0f / static_cast<float>(bsz);
      for (int bi = 0; bi < bsz; ++bi) {
        const int idx = order[static_cast<size_t>(start + bi)];
        Tensor logits = model.forward(inputs[static_cast<size_t>(idx)]);
        Tensor row({1, logits.dim(0)}, logits.data);
        auto ce = softmax_cross_entropy(row, {labels[static_cast<size_t>(idx)]});
        epoch_loss += ce.loss;
        int pred = 0;
        for (int k = 1; k < logits.dim(0); ++k)
          if (logits[k] > logits[pred]) pred = k;
        if (pred == labels[static_cast<size_t>(idx)]) ++correct;
        Tensor d_logits({logits.dim(0)});
        for (long i = 0; i < d_logits.numel(); ++i)
          d_logits[i] = ce.grad[i] * inv_b;
        model.backward(d_logits);
      }
      sgd_step(params, opt, epoch);
    }
    history.mean_loss.push_back(static_cast<float>(epoch_loss / n));
    history.train_accuracy.push_back(static_cast<float>(correct) / n);
    history.epochs_run = epoch + 1;
    if (history.train_accuracy.back() >= stop_at_accuracy) break;
  }
  return history;
}

ScoreMatrix evaluate_branch(BranchModel& model,
                            const std::vector<Tensor>& inputs,
                            const std::vector<std::string>& sample_ids,
                            const std::vector<int>& labels,
                            const std::string& modality) {
  if (inputs.size() != sample_ids.size() || inputs.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "dataset column lengths differ");
  ScoreMatrix out;
  out.sample_ids = sample_ids;
  out.labels = labels;
  out.modality = modality;
  int k = 0;
  std::vector<float> rows;
  for (const auto& input : inputs) {
    Tensor logits = model.forward(input);
    k = logits.dim(0);
    rows.insert(rows.end(), logits.data.begin(), logits.data.end());
  }
  out.scores = Tensor({static_cast<int>(inputs.size()), k}, std::move(rows));
  return out;
}

void write_score_csv(const std::string& path, const ScoreMatrix& scores) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  const int k = scores.scores.dim(1);
  os << "sample_id,label";
  for (int j = 0; j < k; ++j) os << ",score_" << j;
  os << '\n';
  char buf[48];
  for (size_t i = 0; i < scores.sample_ids.size(); ++i) {
    os << scores.sample_ids[i] << ',' << scores.labels[i];
    for (int j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g",
                    static_cast<double>(scores.scores.at(static_cast<int>(i), j)));
      os << ',' << buf;
    }
    os << '\n';
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

ScoreMatrix read_score_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(is, line))
    throw Error(ErrorCode::IoError, "empty score file " + path);
  int k = 0;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ','))
      if (col.rfind("score_", 0) == 0) ++k;
  }
  ScoreMatrix out;
  std::vector<float> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    out.sample_ids.push_back(cell);
    std::getline(ss, cell, ',');
    out.labels.push_back(std::stoi(cell));
    for (int j = 0; j < k; ++j) {
      std::getline(ss, cell, ',');
      rows.push_back(std::stof(cell));
    }
  }
  out.scores = Tensor({static_cast<int>(out.sample_ids.size()), k},
                      std::move(rows));
  return out;
}

}  // namespace eppnet
