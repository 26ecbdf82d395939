#include "eppnet/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "eppnet/error.hpp"
#include "eppnet/image.hpp"
#include "eppnet/ops.hpp"

namespace eppnet {

void EnsembleWeights::validate() const {
  bool positive = false;
  for (const auto& [name, w] : entries) {
    if (w < 0.0f)
      throw Error(ErrorCode::ConfigError, "negative ensemble weight for " + name);
    if (w > 0.0f) positive = true;
  }
  if (!positive)
    throw Error(ErrorCode::ConfigError, "all ensemble weights are zero");
}

float EnsembleWeights::weight_for(const std::string& modality) const {
  for (const auto& [name, w] : entries)
    if (name == modality) return w;
  return 0.0f;
}

ScoreMatrix late_fuse(const std::vector<ScoreMatrix>& scores,
                      const EnsembleWeights& weights) {
  if (scores.empty()) throw Error(ErrorCode::MissingScores, "no score matrices");
  weights.validate();
  const ScoreMatrix& first = scores.front();
  const int n = first.scores.dim(0), k = first.scores.dim(1);
  for (const auto& sm : scores) {
    if (sm.scores.dim(1) != k)
      throw Error(ErrorCode::ShapeMismatch, "class counts differ across matrices");
    if (sm.sample_ids != first.sample_ids)
      throw Error(ErrorCode::SampleMismatch, "sample ids differ across matrices");
  }
  ScoreMatrix fused;
  fused.sample_ids = first.sample_ids;
  fused.labels = first.labels;
  fused.modality = "fused";
  fused.scores = Tensor({n, k});
  for (const auto& sm : scores) {
    const float w = weights.weight_for(sm.modality);
    if (w == 0.0f) continue;
    for (long i = 0; i < fused.scores.numel(); ++i)
      fused.scores[i] += w * sm.scores[i];
  }
  return fused;
}

std::vector<int> decide(const ScoreMatrix& fused) {
  const int n = fused.scores.dim(0), k = fused.scores.dim(1);
  const Tensor probs = softmax_rows(fused.scores);
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < k; ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

Metrics compute_metrics(const std::vector<int>& predictions,
                        const std::vector<int>& truth, int classes) {
  if (predictions.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch, "prediction/truth length mismatch");
  Metrics m;
  m.total = static_cast<long>(truth.size());
  m.confusion.assign(static_cast<size_t>(classes),
                     std::vector<long>(static_cast<size_t>(classes), 0));
  long correct = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predictions[i];
    if (t < 0 || t >= classes || p < 0 || p >= classes)
      throw Error(ErrorCode::LabelOutOfRange, "label outside [0,K)");
    ++m.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)];
    if (t == p) ++correct;
  }
  m.top1 = m.total == 0 ? 0.0 : static_cast<double>(correct) / m.total;
  m.per_class_accuracy.resize(static_cast<size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c) {
    long row = 0;
    for (long v : m.confusion[static_cast<size_t>(c)]) row += v;
    m.per_class_accuracy[static_cast<size_t>(c)] =
        row == 0 ? 0.0
                 : static_cast<double>(
                       m.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)]) /
                       row;
  }
  return m;
}

GridSearchResult grid_search_weights(
    const std::vector<ScoreMatrix>& scores, const std::vector<int>& truth,
    const std::vector<std::vector<float>>& grid) {
  if (grid.size() != scores.size())
    throw Error(ErrorCode::LengthMismatch, "one candidate list per modality required");
  for (const auto& g : grid)
    if (g.empty())
      throw Error(ErrorCode::ConfigError, "empty candidate list in grid");
  const int classes = scores.front().scores.dim(1);
  std::vector<size_t> idx(grid.size(), 0);
  GridSearchResult result;
  result.best_top1 = -1.0;
  std::vector<float> best_vec;
  while (true) {
    std::vector<float> vec(grid.size());
    EnsembleWeights w;
    for (size_t i = 0; i < grid.size(); ++i) {
      vec[i] = grid[i][idx[i]];
      w.entries.emplace_back(scores[i].modality, vec[i]);
    }
    bool any_positive = false;
    for (float v : vec) any_positive |= v > 0.0f;
    if (any_positive) {
      const Metrics m = compute_metrics(decide(late_fuse(scores, w)), truth, classes);
      if (m.top1 > result.best_top1 ||
          (m.top1 == result.best_top1 && vec < best_vec)) {
        result.best_top1 = m.top1;
        result.best = w;
        best_vec = vec;
      }
    }
    // advance the mixed-radix counter
    size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == grid[pos].size()) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos == idx.size()) break;
  }
  if (result.best_top1 < 0.0)
    throw Error(ErrorCode::ConfigError, "grid contains no positive weight vector");
  return result;
}

void write_metrics_csv(const std::string& path, const Metrics& metrics) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << "metric,value\n";
  os << "top1," << metrics.top1 << '\n';
  os << "total," << metrics.total << '\n';
  for (size_t c = 0; c < metrics.per_class_accuracy.size(); ++c)
    os << "class_" << c << "_accuracy," << metrics.per_class_accuracy[c] << '\n';
}

void write_confusion_csv(const std::string& path, const Metrics& metrics) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  for (const auto& row : metrics.confusion) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) os << ',';
      os << row[j];
    }
    os << '\n';
  }
}

void write_confusion_pgm(const std::string& path, const Metrics& metrics) {
  const int k = static_cast<int>(metrics.confusion.size());
  long max_count = 1;
  for (const auto& row : metrics.confusion)
    for (long v : row) max_count = std::max(max_count, v);
  std::vector<uint8_t> gray(static_cast<size_t>(k) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      gray[static_cast<size_t>(i) * k + j] = static_cast<uint8_t>(
          (255 * metrics.confusion[static_cast<size_t>(i)][static_cast<size_t>(j)]) /
          max_count);
  write_pgm_gray(path, k, k, gray);
}

}  // namespace eppnet
