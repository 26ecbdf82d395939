#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "eppnet/branches.hpp"
#include "eppnet/error.hpp"
#include "eppnet/modalities.hpp"
#include "eppnet/rng.hpp"

using namespace eppnet;

namespace {

std::vector<std::pair<int, int>> tree_edges() {
  std::vector<std::pair<int, int>> edges;
  for (const auto& [child, parent] : ntu25_topology().pairs)
    if (child != parent) edges.emplace_back(child, parent);
  return edges;
}

}  // namespace

TEST_CASE("two-vertex adjacency normalizes to the hand-derived matrix") {
  const AdjacencySpec spec = build_adjacency({{0, 1}}, 2);
  REQUIRE(spec.normalized.shape == std::vector<int>{2, 2});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(spec.normalized.at(i, j) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("adjacency rows sum to one on the tree graph") {
  const AdjacencySpec spec = build_adjacency(tree_edges(), 25);
  // D^{-1/2}(A+I)D^{-1/2} row sums equal 1 only for regular graphs; what
  // must hold generally is symmetry and positive diagonal
  for (int i = 0; i < 25; ++i) {
    CHECK(spec.normalized.at(i, i) > 0.0f);
    for (int j = 0; j < 25; ++j)
      CHECK(spec.normalized.at(i, j) == spec.normalized.at(j, i));
  }
  CHECK_THROWS_AS(build_adjacency({{0, 99}}, 25), Error);
}

TEST_CASE("single-vertex block reduces to a per-frame linear map") {
  GcnConfig cfg;
  cfg.blocks = 1;
  cfg.channels = {1};
  cfg.temporal_kernel = 1;
  cfg.classes = 1;
  GcnModel model(cfg, build_adjacency({}, 1), 42);
  // x = (1,0,0), W = (2,0,0)^T, identity temporal tap, unit head
  for (Parameter* p : model.parameters()) {
    if (p->name == "gcn.block0.w") {
      p->value.fill(0.0f);
      p->value.at(0, 0) = 2.0f;
    } else if (p->name == "gcn.head.w") {
      p->value.fill(1.0f);
    } else if (p->name != "gcn.block0.t_kernel") {
      p->value.fill(0.0f);
    }
  }
  Tensor x({3, 1, 1, 1});
  x.at(0, 0, 0, 0) = 1.0f;
  const Tensor logits = model.forward(x);
  CHECK(logits[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("scores are invariant under vertex permutation") {
  GcnConfig cfg;
  cfg.blocks = 2;
  cfg.channels = {4, 4};
  cfg.temporal_kernel = 3;
  cfg.classes = 3;
  const auto edges = tree_edges();
  Rng seed_rng(31);
  Rng data_rng(32);
  const Tensor x = Tensor::random_uniform({3, 5, 25, 2}, data_rng);
  for (int trial = 0; trial < 10; ++trial) {
    const uint64_t seed = seed_rng.next_u64();
    GcnModel base(cfg, build_adjacency(edges, 25), seed);
    const Tensor ref = base.forward(x);

    // random permutation of the vertex set
    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle = seed_rng.fork(static_cast<uint64_t>(trial) + 1);
    for (int i = 24; i > 0; --i)
      std::swap(perm[static_cast<size_t>(i)],
                perm[shuffle.next_below(static_cast<uint64_t>(i) + 1)]);
    std::vector<std::pair<int, int>> permuted_edges;
    for (const auto& [a, b] : edges)
      permuted_edges.emplace_back(perm[static_cast<size_t>(a)],
                                  perm[static_cast<size_t>(b)]);
    Tensor px({3, 5, 25, 2});
    for (int c = 0; c < 3; ++c)
      for (int t = 0; t < 5; ++t)
        for (int v = 0; v < 25; ++v)
          for (int m = 0; m < 2; ++m)
            px.at(c, t, perm[static_cast<size_t>(v)], m) = x.at(c, t, v, m);

    GcnModel permuted(cfg, build_adjacency(permuted_edges, 25), seed);
    const Tensor out = permuted.forward(px);
    CHECK(max_abs_diff(ref, out) < 1e-5);
  }
}

TEST_CASE("cnn on a black image with zero biases scores zero") {
  CnnConfig cfg;
  cfg.blocks = 2;
  cfg.channels = {4, 4};
  cfg.classes = 5;
  CnnModel model(cfg, 7);
  const Tensor logits = model.forward(Tensor({3, 16, 16}));
  for (int k = 0; k < 5; ++k) CHECK(logits[k] == 0.0f);
}

TEST_CASE("training with lr=0 leaves parameters bit-identical") {
  CnnConfig cfg;
  cfg.blocks = 1;
  cfg.channels = {2};
  cfg.classes = 2;
  CnnModel model(cfg, 9);
  const NamedTensors before = model.state();
  Rng rng(10);
  std::vector<Tensor> inputs = {Tensor::random_uniform({3, 8, 8}, rng),
                                Tensor::random_uniform({3, 8, 8}, rng)};
  OptimizerConfig opt;
  opt.learning_rate = 0.0f;
  opt.momentum = 0.0f;
  train_branch(model, inputs, {0, 1}, opt, 3, 2, 1);
  const NamedTensors after = model.state();
  REQUIRE(after.size() == before.size());
  for (size_t i = 0; i < before.size(); ++i)
    CHECK(tensors_equal(after[i].second, before[i].second));
}

TEST_CASE("training is seed-deterministic") {
  GcnConfig cfg;
  cfg.blocks = 1;
  cfg.channels = {4};
  cfg.temporal_kernel = 3;
  cfg.classes = 2;
  const auto edges = tree_edges();
  Rng rng(11);
  std::vector<Tensor> inputs;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    inputs.push_back(Tensor::random_uniform({3, 4, 25, 1}, rng));
    labels.push_back(i % 2);
  }
  OptimizerConfig opt;
  opt.learning_rate = 0.01f;
  NamedTensors states[2];
  for (int run = 0; run < 2; ++run) {
    GcnModel model(cfg, build_adjacency(edges, 25), 77);
    train_branch(model, inputs, labels, opt, 4, 2, 5);
    states[run] = model.state();
  }
  for (size_t i = 0; i < states[0].size(); ++i)
    CHECK(tensors_equal(states[0][i].second, states[1][i].second));
}

TEST_CASE("state round trips through a checkpoint") {
  CnnConfig cfg;
  cfg.blocks = 1;
  cfg.channels = {3};
  cfg.classes = 4;
  CnnModel a(cfg, 13);
  const std::string path = "/tmp/eppnet_test_branch_ckpt.bin";
  save_checkpoint(path, a.state());
  CnnModel b(cfg, 14);  // different init
  b.load_state(load_checkpoint(path));
  Rng rng(15);
  const Tensor x = Tensor::random_uniform({3, 8, 8}, rng);
  CHECK(tensors_equal(a.forward(x), b.forward(x)));
  std::filesystem::remove(path);
}

TEST_CASE("evaluate_branch keeps dataset order; one sample gives 1xK") {
  CnnConfig cfg;
  cfg.blocks = 1;
  cfg.channels = {2};
  cfg.classes = 3;
  CnnModel model(cfg, 16);
  Rng rng(17);
  const std::vector<Tensor> inputs = {Tensor::random_uniform({3, 8, 8}, rng)};
  const ScoreMatrix scores = evaluate_branch(model, inputs, {"only"}, {2}, "P");
  CHECK(scores.scores.shape == std::vector<int>{1, 3});
  CHECK(scores.sample_ids == std::vector<std::string>{"only"});
  CHECK(scores.labels == std::vector<int>{2});
  CHECK(scores.modality == "P");
}

TEST_CASE("score csv round trips losslessly at nine significant digits") {
  ScoreMatrix sm;
  sm.sample_ids = {"a", "b"};
  sm.labels = {1, 0};
  sm.modality = "J";
  sm.scores = Tensor({2, 3}, {0.123456789f, -4.5f, 1e-7f,
                              3.0f, -0.000123456f, 7.25f});
  const std::string path = "/tmp/eppnet_test_scores.csv";
  write_score_csv(path, sm);
  const ScoreMatrix back = read_score_csv(path);
  CHECK(back.sample_ids == sm.sample_ids);
  CHECK(back.labels == sm.labels);
  CHECK(tensors_equal(back.scores, sm.scores));
  std::filesystem::remove(path);
}
