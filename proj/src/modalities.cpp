#include "eppnet/modalities.hpp"

#include <fstream>
#include <sstream>

#include "eppnet/error.hpp"

namespace eppnet {

const char* modality_name(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::J: return "J";
    case ModalityKind::B: return "B";
    case ModalityKind::JM: return "JM";
    case ModalityKind::BM: return "BM";
  }
  return "?";
}

ModalityKind modality_from_name(const std::string& name) {
  if (name == "J") return ModalityKind::J;
  if (name == "B") return ModalityKind::B;
  if (name == "JM") return ModalityKind::JM;
  if (name == "BM") return ModalityKind::BM;
  throw Error(ErrorCode::ConfigError, "unknown skeleton modality '" + name + "'");
}

void BoneTopology::validate() const {
  const int v = vertex_count();
  for (int i = 0; i < v; ++i) {
    const auto& [child, parent] = pairs[static_cast<size_t>(i)];
    if (child != i)
      throw Error(ErrorCode::TopologyShapeMismatch,
                  "pair order must match vertex order");
    if (parent < 0 || parent >= v)
      throw Error(ErrorCode::TopologyShapeMismatch, "parent index out of range");
  }
  // acyclicity: walking parents from any vertex must reach a root in <= V steps
  for (int i = 0; i < v; ++i) {
    int cur = i;
    int steps = 0;
    while (pairs[static_cast<size_t>(cur)].second != cur) {
      cur = pairs[static_cast<size_t>(cur)].second;
      if (++steps > v)
        throw Error(ErrorCode::TopologyShapeMismatch, "parent chain has a cycle");
    }
  }
}

BoneTopology ntu25_topology() {
  static const int parents[25] = {0, 0, 20, 2, 20, 4, 5, 6, 20, 8, 9, 10, 0,
                                  12, 13, 14, 0, 16, 17, 18, 1, 7, 7, 11, 11};
  BoneTopology topo;
  topo.pairs.reserve(25);
  for (int i = 0; i < 25; ++i) topo.pairs.emplace_back(i, parents[i]);
  return topo;
}

BoneTopology load_topology(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open topology file " + path);
  BoneTopology topo;
  int child, parent;
  while (is >> child >> parent) topo.pairs.emplace_back(child, parent);
  topo.validate();
  return topo;
}

void write_topology(const std::string& path, const BoneTopology& topo) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  for (const auto& [child, parent] : topo.pairs)
    os << child << ' ' << parent << '\n';
}

ModalityTensor derive_bone(const PoseTensor& pose, const BoneTopology& topo) {
  const Tensor& x = pose.data;
  const int t = x.dim(1), v = x.dim(2), m = x.dim(3);
  if (topo.vertex_count() != v)
    throw Error(ErrorCode::TopologyShapeMismatch,
                "topology has " + std::to_string(topo.vertex_count()) +
                    " pairs, pose has " + std::to_string(v) + " vertices");
  ModalityTensor out;
  out.kind = ModalityKind::B;
  out.data = Tensor(x.shape);
  for (int c = 0; c < 3; ++c)
    for (int ti = 0; ti < t; ++ti)
      for (int vi = 0; vi < v; ++vi) {
        const int parent = topo.pairs[static_cast<size_t>(vi)].second;
        for (int mi = 0; mi < m; ++mi)
          out.data.at(c, ti, vi, mi) =
              x.at(c, ti, vi, mi) - x.at(c, ti, parent, mi);
      }
  return out;
}

ModalityTensor derive_motion(const Tensor& x, ModalityKind out_kind) {
  const int t = x.dim(1), v = x.dim(2), m = x.dim(3);
  ModalityTensor out;
  out.kind = out_kind;
  out.data = Tensor(x.shape);
  for (int c = 0; c < 3; ++c)
    for (int ti = 0; ti + 1 < t; ++ti)
      for (int vi = 0; vi < v; ++vi)
        for (int mi = 0; mi < m; ++mi)
          out.data.at(c, ti, vi, mi) =
              x.at(c, ti + 1, vi, mi) - x.at(c, ti, vi, mi);
  // final frame stays zero
  return out;
}

std::map<ModalityKind, ModalityTensor> derive_all(const PoseTensor& pose,
                                                  const BoneTopology& topo) {
  std::map<ModalityKind, ModalityTensor> out;
  ModalityTensor joint;
  joint.kind = ModalityKind::J;
  joint.data = pose.data;
  ModalityTensor bone = derive_bone(pose, topo);
  out[ModalityKind::JM] = derive_motion(joint.data, ModalityKind::JM);
  out[ModalityKind::BM] = derive_motion(bone.data, ModalityKind::BM);
  out[ModalityKind::J] = std::move(joint);
  out[ModalityKind::B] = std::move(bone);
  return out;
}

}  // namespace eppnet
