#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "eppnet/error.hpp"
#include "eppnet/modalities.hpp"
#include "eppnet/rng.hpp"

using namespace eppnet;

namespace {

PoseTensor random_pose(int t, int v, int m, uint64_t seed) {
  Rng rng(seed);
  PoseTensor pose;
  pose.t_fixed = t;
  pose.vertex_count = v;
  pose.body_count = m;
  pose.data = Tensor::random_uniform({3, t, v, m}, rng);
  return pose;
}

// coordinates on a 2^-10 grid: every bone/motion subtraction is then exact
// in f32, which is what makes the bitwise algebra properties meaningful
PoseTensor quantized_pose(int t, int v, int m, uint64_t seed) {
  PoseTensor pose = random_pose(t, v, m, seed);
  Rng rng(seed ^ 0x517cc1b727220a95ULL);
  for (auto& x : pose.data.data)
    x = static_cast<float>(static_cast<long>(rng.next_below(2048)) - 1024) /
        1024.0f;
  return pose;
}

}  // namespace

TEST_CASE("modality names round trip") {
  for (ModalityKind k :
       {ModalityKind::J, ModalityKind::B, ModalityKind::JM, ModalityKind::BM})
    CHECK(modality_from_name(modality_name(k)) == k);
}

TEST_CASE("builtin 25-joint topology is valid and rooted at the spine base") {
  const BoneTopology topo = ntu25_topology();
  REQUIRE(topo.vertex_count() == 25);
  topo.validate();
  CHECK(topo.pairs[0] == std::pair<int, int>{0, 0});  // root
  CHECK(topo.pairs[3] == std::pair<int, int>{3, 2});  // head -> neck
}

TEST_CASE("topology file round trip") {
  const std::string path = "/tmp/eppnet_test_topology.txt";
  const BoneTopology topo = ntu25_topology();
  write_topology(path, topo);
  const BoneTopology back = load_topology(path);
  CHECK(back.pairs == topo.pairs);
  std::filesystem::remove(path);
}

TEST_CASE("cyclic topology is rejected") {
  BoneTopology topo;
  topo.pairs = {{0, 1}, {1, 0}};
  CHECK_THROWS_AS(topo.validate(), Error);
}

TEST_CASE("bone vectors equal the child-parent loop oracle") {
  const PoseTensor pose = random_pose(4, 25, 2, 21);
  const BoneTopology topo = ntu25_topology();
  const ModalityTensor bone = derive_bone(pose, topo);
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 4; ++t)
      for (int v = 0; v < 25; ++v)
        for (int m = 0; m < 2; ++m) {
          const int parent = topo.pairs[static_cast<size_t>(v)].second;
          const float expect =
              pose.data.at(c, t, v, m) - pose.data.at(c, t, parent, m);
          CHECK(bone.data.at(c, t, v, m) == expect);
        }
}

TEST_CASE("motion equals the frame-difference loop oracle") {
  const PoseTensor pose = random_pose(5, 7, 1, 22);
  const ModalityTensor motion = derive_motion(pose.data, ModalityKind::JM);
  for (int c = 0; c < 3; ++c)
    for (int v = 0; v < 7; ++v) {
      for (int t = 0; t < 4; ++t)
        CHECK(motion.data.at(c, t, v, 0) ==
              pose.data.at(c, t + 1, v, 0) - pose.data.at(c, t, v, 0));
      CHECK(motion.data.at(c, 4, v, 0) == 0.0f);  // final frame
    }
}

TEST_CASE("all-zero pose gives four zero tensors") {
  PoseTensor pose;
  pose.data = Tensor({3, 4, 25, 1});
  const auto mods = derive_all(pose, ntu25_topology());
  REQUIRE(mods.size() == 4);
  for (const auto& [kind, tensor] : mods)
    for (long i = 0; i < tensor.data.numel(); ++i)
      CHECK(tensor.data[i] == 0.0f);
}

TEST_CASE("bone of wrong vertex count raises TopologyShapeMismatch") {
  const PoseTensor pose = random_pose(2, 7, 1, 30);
  CHECK_THROWS_AS(derive_bone(pose, ntu25_topology()), Error);
}

TEST_CASE("motion and bone commute exactly on 100 random tensors") {
  const BoneTopology topo = ntu25_topology();
  for (uint64_t s = 1; s <= 100; ++s) {
    const PoseTensor pose = quantized_pose(6, 25, 2, s);
    // bone-then-motion
    const ModalityTensor bone = derive_bone(pose, topo);
    const ModalityTensor bm1 = derive_motion(bone.data, ModalityKind::BM);
    // motion-then-bone
    PoseTensor motion_pose = pose;
    motion_pose.data = derive_motion(pose.data, ModalityKind::JM).data;
    const ModalityTensor bm2 = derive_bone(motion_pose, topo);
    CHECK(tensors_equal(bm1.data, bm2.data));
  }
}

TEST_CASE("telescoping: JM sums to the endpoint difference") {
  for (uint64_t s = 1; s <= 100; ++s) {
    const PoseTensor pose = random_pose(8, 5, 1, 1000 + s);
    const ModalityTensor jm = derive_motion(pose.data, ModalityKind::JM);
    for (int c = 0; c < 3; ++c)
      for (int v = 0; v < 5; ++v) {
        double sum = 0.0;
        for (int t = 0; t < 8; ++t) sum += jm.data.at(c, t, v, 0);
        const double endpoint =
            pose.data.at(c, 7, v, 0) - pose.data.at(c, 0, v, 0);
        CHECK(sum == doctest::Approx(endpoint).epsilon(1e-5));
      }
  }
}

TEST_CASE("B, JM, BM are translation invariant bitwise") {
  const BoneTopology topo = ntu25_topology();
  for (uint64_t s = 1; s <= 100; ++s) {
    const PoseTensor pose = quantized_pose(4, 25, 1, 2000 + s);
    PoseTensor shifted = pose;
    const float offsets[3] = {0.25f, -1.5f, 4.0f};
    for (int c = 0; c < 3; ++c)
      for (int t = 0; t < 4; ++t)
        for (int v = 0; v < 25; ++v)
          shifted.data.at(c, t, v, 0) += offsets[c];
    const auto a = derive_all(pose, topo);
    const auto b = derive_all(shifted, topo);
    CHECK(tensors_equal(a.at(ModalityKind::B).data, b.at(ModalityKind::B).data));
    CHECK(tensors_equal(a.at(ModalityKind::JM).data, b.at(ModalityKind::JM).data));
    CHECK(tensors_equal(a.at(ModalityKind::BM).data, b.at(ModalityKind::BM).data));
  }
}

TEST_CASE("derive_all J is an exact copy") {
  const PoseTensor pose = random_pose(3, 25, 2, 5);
  const auto mods = derive_all(pose, ntu25_topology());
  CHECK(tensors_equal(mods.at(ModalityKind::J).data, pose.data));
}
