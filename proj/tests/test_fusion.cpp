#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "eppnet/error.hpp"
#include "eppnet/fusion.hpp"
#include "eppnet/rng.hpp"

using namespace eppnet;

namespace {

ScoreMatrix make_scores(const std::string& modality,
                        std::vector<float> values, int k,
                        std::vector<int> labels) {
  ScoreMatrix sm;
  const int n = static_cast<int>(values.size()) / k;
  for (int i = 0; i < n; ++i) sm.sample_ids.push_back("s" + std::to_string(i));
  sm.labels = std::move(labels);
  sm.scores = Tensor({n, k}, std::move(values));
  sm.modality = modality;
  return sm;
}

}  // namespace

TEST_CASE("weighted sum matches the hand-worked example") {
  const ScoreMatrix s1 = make_scores("J", {0.9f, 0.1f, 0.2f, 0.8f}, 2, {0, 1});
  const ScoreMatrix s2 = make_scores("P", {0.4f, 0.6f, 0.3f, 0.7f}, 2, {0, 1});
  EnsembleWeights w;
  w.entries = {{"J", 2.0f}, {"P", 1.0f}};
  const ScoreMatrix fused = late_fuse({s1, s2}, w);
  CHECK(fused.scores.at(0, 0) == doctest::Approx(2.2).epsilon(1e-6));
  CHECK(fused.scores.at(0, 1) == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(fused.scores.at(1, 0) == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(fused.scores.at(1, 1) == doctest::Approx(2.3).epsilon(1e-6));
}

TEST_CASE("weight (1,0) reproduces the first matrix bitwise") {
  const ScoreMatrix s1 = make_scores("J", {0.25f, -1.5f, 3.0f, 0.125f}, 2, {0, 1});
  const ScoreMatrix s2 = make_scores("P", {9.0f, 9.0f, 9.0f, 9.0f}, 2, {0, 1});
  EnsembleWeights w;
  w.entries = {{"J", 1.0f}, {"P", 0.0f}};
  CHECK(tensors_equal(late_fuse({s1, s2}, w).scores, s1.scores));
}

TEST_CASE("sample order mismatch is rejected") {
  const ScoreMatrix s1 = make_scores("J", {1.0f, 0.0f}, 2, {0});
  ScoreMatrix s2 = make_scores("P", {1.0f, 0.0f}, 2, {0});
  s2.sample_ids = {"other"};
  EnsembleWeights w;
  w.entries = {{"J", 1.0f}, {"P", 1.0f}};
  try {
    late_fuse({s1, s2}, w);
    FAIL("expected SampleMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SampleMismatch);
  }
}

TEST_CASE("all-zero weights are rejected") {
  EnsembleWeights w;
  w.entries = {{"J", 0.0f}, {"P", 0.0f}};
  CHECK_THROWS_AS(w.validate(), Error);
  w.entries = {{"J", -1.0f}};
  CHECK_THROWS_AS(w.validate(), Error);
}

TEST_CASE("decision rule: argmax with smallest-index tie break") {
  const ScoreMatrix a = make_scores("f", {2.2f, 0.8f}, 2, {0});
  CHECK(decide(a) == std::vector<int>{0});
  const ScoreMatrix tie = make_scores("f", {1.0f, 1.0f}, 2, {0});
  CHECK(decide(tie) == std::vector<int>{0});
}

TEST_CASE("softmax never changes the argmax") {
  Rng rng(20);
  for (int i = 0; i < 100; ++i) {
    const Tensor row = Tensor::random_uniform({1, 6}, rng, -5.0f, 5.0f);
    ScoreMatrix sm;
    sm.sample_ids = {"x"};
    sm.labels = {0};
    sm.scores = row;
    int raw_best = 0;
    for (int j = 1; j < 6; ++j)
      if (row.at(0, j) > row.at(0, raw_best)) raw_best = j;
    CHECK(decide(sm)[0] == raw_best);
  }
}

TEST_CASE("metrics match the hand count") {
  const Metrics m = compute_metrics({0, 1, 1, 0}, {0, 1, 0, 0}, 2);
  CHECK(m.top1 == doctest::Approx(0.75));
  CHECK(m.total == 4);
  CHECK(m.confusion[0][0] == 2);
  CHECK(m.confusion[0][1] == 1);
  CHECK(m.confusion[1][0] == 0);
  CHECK(m.confusion[1][1] == 1);
  CHECK(m.per_class_accuracy[0] == doctest::Approx(2.0 / 3.0));
  CHECK(m.per_class_accuracy[1] == doctest::Approx(1.0));
}

TEST_CASE("perfect predictions put everything on the diagonal") {
  const Metrics m = compute_metrics({2, 0, 1, 2}, {2, 0, 1, 2}, 3);
  CHECK(m.top1 == 1.0);
  long off = 0;
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j)
      if (i != j) off += m.confusion[i][j];
  CHECK(off == 0);
}

TEST_CASE("grid search finds the perfect modality and breaks ties low") {
  // modality J classifies perfectly, P is anti-correlated
  const ScoreMatrix j = make_scores("J", {5.0f, 0.0f, 0.0f, 5.0f}, 2, {0, 1});
  const ScoreMatrix p = make_scores("P", {0.0f, 5.0f, 5.0f, 0.0f}, 2, {0, 1});
  const GridSearchResult r = grid_search_weights(
      {j, p}, {0, 1}, {{0.0f, 1.0f, 2.0f}, {0.0f, 1.0f}});
  CHECK(r.best_top1 == 1.0);
  // (1,0) and (2,0) both achieve 1.0; lexicographic tie-break keeps (1,0)
  CHECK(r.best.weight_for("J") == 1.0f);
  CHECK(r.best.weight_for("P") == 0.0f);

  const GridSearchResult single =
      grid_search_weights({j, p}, {0, 1}, {{3.0f}, {0.5f}});
  CHECK(single.best.weight_for("J") == 3.0f);
  CHECK(single.best.weight_for("P") == 0.5f);
}

TEST_CASE("fused argmax is invariant under weight scaling") {
  Rng rng(21);
  const ScoreMatrix a = make_scores(
      "J", std::vector<float>(30), 3, std::vector<int>(10, 0));
  ScoreMatrix s1 = a, s2 = a;
  s2.modality = "P";
  for (auto& v : s1.scores.data) v = rng.next_float() * 4.0f - 2.0f;
  for (auto& v : s2.scores.data) v = rng.next_float() * 4.0f - 2.0f;
  EnsembleWeights w1, w2;
  w1.entries = {{"J", 2.0f}, {"P", 1.0f}};
  w2.entries = {{"J", 6.0f}, {"P", 3.0f}};  // same ratio, scaled by 3
  CHECK(decide(late_fuse({s1, s2}, w1)) == decide(late_fuse({s1, s2}, w2)));
}

TEST_CASE("metrics and confusion files are written") {
  namespace fs = std::filesystem;
  const Metrics m = compute_metrics({0, 1, 1, 0}, {0, 1, 0, 0}, 2);
  write_metrics_csv("/tmp/eppnet_test_metrics.csv", m);
  write_confusion_csv("/tmp/eppnet_test_conf.csv", m);
  write_confusion_pgm("/tmp/eppnet_test_conf.pgm", m);
  CHECK(fs::file_size("/tmp/eppnet_test_metrics.csv") > 0);
  CHECK(fs::file_size("/tmp/eppnet_test_conf.csv") > 0);
  CHECK(fs::file_size("/tmp/eppnet_test_conf.pgm") > 0);
  fs::remove("/tmp/eppnet_test_metrics.csv");
  fs::remove("/tmp/eppnet_test_conf.csv");
  fs::remove("/tmp/eppnet_test_conf.pgm");
}
