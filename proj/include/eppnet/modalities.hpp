#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eppnet/skeleton.hpp"
#include "eppnet/tensor.hpp"

namespace eppnet {

enum class ModalityKind { J, B, JM, BM };

const char* modality_name(ModalityKind kind);
ModalityKind modality_from_name(const std::string& name);

// child->parent pairs, one per vertex, roots paired with themselves.
struct BoneTopology {
  std::vector<std::pair<int, int>> pairs;

  int vertex_count() const { return static_cast<int>(pairs.size()); }
  void validate() const;  // indices in range, child->parent acyclic
};

// standard 25-joint parent list (spine base root)
BoneTopology ntu25_topology();

// text format: one "child parent" pair per line, zero-based
BoneTopology load_topology(const std::string& path);
void write_topology(const std::string& path, const BoneTopology& topo);

struct ModalityTensor {
  ModalityKind kind = ModalityKind::J;
  Tensor data;  // [3, T, V, M]
};

// bone vector = child joint minus parent joint, per frame and body
ModalityTensor derive_bone(const PoseTensor& pose, const BoneTopology& topo);

// frame-to-frame difference, zero at the final frame
ModalityTensor derive_motion(const Tensor& x, ModalityKind out_kind);

std::map<ModalityKind, ModalityTensor> derive_all(const PoseTensor& pose,
                                                  const BoneTopology& topo);

}  // namespace eppnet
