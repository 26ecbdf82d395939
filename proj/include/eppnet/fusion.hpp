#pragma once

#include <string>
#include <utility>
#include <vector>

#include "eppnet/branches.hpp"

namespace eppnet {

// ordered (modality label, nonnegative weight) pairs
struct EnsembleWeights {
  std::vector<std::pair<std::string, float>> entries;

  void validate() const;  // at least one strictly positive weight
  float weight_for(const std::string& modality) const;
};

struct Metrics {
  double top1 = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<long>> confusion;  // [truth][prediction]
  long total = 0;
};

// fused[i] = sum_m w_m * scores_m[i]; all matrices must agree on sample
// order and class count
ScoreMatrix late_fuse(const std::vector<ScoreMatrix>& scores,
                      const EnsembleWeights& weights);

// softmax then argmax per row; ties go to the smallest class index
std::vector<int> decide(const ScoreMatrix& fused);

Metrics compute_metrics(const std::vector<int>& predictions,
                        const std::vector<int>& truth, int classes);

struct GridSearchResult {
  EnsembleWeights best;
  double best_top1 = 0.0;
};

// exhaustive search over the Cartesian product of per-modality candidate
// weights; ties broken by the lexicographically smallest weight vector
GridSearchResult grid_search_weights(
    const std::vector<ScoreMatrix>& scores, const std::vector<int>& truth,
    const std::vector<std::vector<float>>& grid);

void write_metrics_csv(const std::string& path, const Metrics& metrics);
void write_confusion_csv(const std::string& path, const Metrics& metrics);
// counts linearly scaled to 0-255
void write_confusion_pgm(const std::string& path, const Metrics& metrics);

}  // namespace eppnet
