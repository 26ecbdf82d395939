#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eppnet/checkpoint.hpp"
#include "eppnet/image.hpp"
#include "eppnet/optim.hpp"
#include "eppnet/tensor.hpp"

namespace eppnet {

struct AdjacencySpec {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;
  Tensor normalized;       // D^{-1/2} (A + I) D^{-1/2}, [V,V]
  Parameter learned_offset;  // [V,V], zero-initialized
};

// symmetric adjacency with self-loops, symmetric normalization
AdjacencySpec build_adjacency(const std::vector<std::pair<int, int>>& edges,
                              int vertex_count);

struct GcnConfig {
  int blocks = 10;
  std::vector<int> channels = {16, 16, 16, 16, 16, 32, 32, 32, 32, 32};
  int temporal_kernel = 9;
  int classes = 60;
};

struct CnnConfig {
  int blocks = 4;
  std::vector<int> channels = {8, 16, 32, 32};
  int classes = 60;
  int input_h = 96, input_w = 96;
};

struct ScoreMatrix {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
  Tensor scores;  // [samples, K], pre-softmax
  std::string modality;
};

// CSV round trip: header sample_id,label,score_0..., 9 significant digits
void write_score_csv(const std::string& path, const ScoreMatrix& scores);
ScoreMatrix read_score_csv(const std::string& path);

// Per-sample classifier branch. forward caches activations for the
// immediately following backward; backward accumulates parameter grads
// and returns the gradient with respect to the input.
class BranchModel {
 public:
  virtual ~BranchModel() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& d_logits) = 0;
  virtual std::vector<Parameter*> parameters() = 0;

  NamedTensors state();
  void load_state(const NamedTensors& tensors);
};

// Graph branch over [3,T,V,M] pose tensors: per block a spatial step
// H <- relu((A_hat + offset) H W + b) and a depthwise temporal
// convolution with residual, then mean over (T,V), max over bodies and a
// linear head.
class GcnModel : public BranchModel {
 public:
  GcnModel(const GcnConfig& cfg, AdjacencySpec adjacency, uint64_t seed);
  ~GcnModel() override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& d_logits) override;
  std::vector<Parameter*> parameters() override;

  const AdjacencySpec& adjacency() const { return adjacency_; }

 private:
  struct Block;
  GcnConfig cfg_;
  AdjacencySpec adjacency_;
  std::vector<Block> blocks_;
  Parameter head_w_, head_b_;
  struct Cache;
  std::unique_ptr<Cache> cache_;
};

// Image branch over [3,H,W] in [0,1]: blocks of conv3x3 + bias + relu +
// 2x2 max pool, then global average pooling and a linear head.
class CnnModel : public BranchModel {
 public:
  CnnModel(const CnnConfig& cfg, uint64_t seed);
  ~CnnModel() override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& d_logits) override;
  std::vector<Parameter*> parameters() override;

 private:
  struct Block;
  CnnConfig cfg_;
  std::vector<Block> blocks_;
  Parameter head_w_, head_b_;
  struct Cache;
  std::unique_ptr<Cache> cache_;
};

Tensor image_to_tensor(const RgbImage& img);  // [3,H,W] scaled to [0,1]

struct TrainHistory {
  std::vector<float> mean_loss;
  std::vector<float> train_accuracy;
  int epochs_run = 0;
};

TrainHistory train_branch(BranchModel& model, const std::vector<Tensor>& inputs,
                          const std::vector<int>& labels,
                          const OptimizerConfig& opt, int epochs,
                          int batch_size, uint64_t seed,
                          float stop_at_accuracy = 2.0f);

ScoreMatrix evaluate_branch(BranchModel& model,
                            const std::vector<Tensor>& inputs,
                            const std::vector<std::string>& sample_ids,
                            const std::vector<int>& labels,
                            const std::string& modality);

}  // namespace eppnet
