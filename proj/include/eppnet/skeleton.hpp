#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "eppnet/tensor.hpp"

namespace eppnet {

struct Joint3D {
  float x = 0, y = 0, z = 0;
  float depth_x = 0, depth_y = 0;
  float color_x = 0, color_y = 0;
  float orientation_w = 0, orientation_x = 0, orientation_y = 0,
        orientation_z = 0;
  int tracking_state = 0;
};

struct BodyFrame {
  int64_t body_id = 0;
  // cliped-edges, handL conf/state, handR conf/state, restricted,
  // lean x/y, tracking state
  std::array<double, 9> meta{};
  std::vector<Joint3D> joints;
};

struct SkeletonSequence {
  std::string sample_id;
  std::vector<std::vector<BodyFrame>> frames;
  int joint_count = 0;
};

struct PoseTensor {
  Tensor data;  // [3, T_fixed, V, M]
  int t_fixed = 0, vertex_count = 0, body_count = 0;
};

// `.skeleton` text grammar: frame_count, then per frame body_count, per
// body the 10-value metadata line, joint_count, and per joint 12 values.
SkeletonSequence parse_skeleton_text(const std::string& text,
                                     const std::string& sample_id = "");
SkeletonSequence parse_skeleton_file(const std::string& path);

std::string serialize_skeleton(const SkeletonSequence& seq);
void write_skeleton_file(const std::string& path, const SkeletonSequence& seq);

// NTU naming SsssCcccPpppRrrrAaaa; returns zero-based action class or -1.
int action_class_from_sample_id(const std::string& sample_id);

// Keeps the max_bodies bodies with highest motion energy (sum of squared
// frame-to-frame coordinate differences), ties broken by smaller body_id;
// output body order is descending energy.
SkeletonSequence select_primary_bodies(const SkeletonSequence& seq,
                                       int max_bodies);

// Translation by the first body's joint-0 position (first frame holding a
// body); only x,y,z change.
SkeletonSequence normalize_sequence(const SkeletonSequence& seq);

// Center-rule downsampling / tail zero-padding into [3, T_fixed, V, M].
// V comes from the sequence unless overridden (for empty sequences).
PoseTensor to_pose_tensor(const SkeletonSequence& seq, int t_fixed, int max_bodies,
                          int vertex_override = 0);

// frame index for slot i of t when resampling n frames (center rule)
inline int center_rule_index(int i, int n, int t) {
  return static_cast<int>((static_cast<int64_t>(2 * i + 1) * n) / (2 * t));
}

bool sequences_equal(const SkeletonSequence& a, const SkeletonSequence& b);

}  // namespace eppnet
