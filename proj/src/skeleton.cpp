#include "eppnet/skeleton.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "eppnet/error.hpp"

namespace eppnet {

namespace {

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : text_(text) {}

  bool next_token(std::string& out) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ >= text_.size()) return false;
    const size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    out.assign(text_, start, pos_ - start);
    ++index_;
    return true;
  }

  double read_number(const char* what) {
    std::string tok;
    if (!next_token(tok))
      throw Error(ErrorCode::TruncatedFile,
                  std::string("stream ended while reading ") + what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
      throw Error(ErrorCode::MalformedNumber,
                  "token '" + tok + "' for " + what + " (token #" +
                      std::to_string(index_) + ")");
    return v;
  }

  int64_t read_integer(const char* what) {
    const double v = read_number(what);
    if (!std::isfinite(v) || v != std::floor(v))
      throw Error(ErrorCode::MalformedNumber,
                  std::string("expected integer for ") + what);
    return static_cast<int64_t>(v);
  }

  int read_count(const char* what) {
    const int64_t v = read_integer(what);
    if (v < 0)
      throw Error(ErrorCode::MalformedNumber,
                  std::string("negative count for ") + what);
    return static_cast<int>(v);
  }

  float read_f32(const char* what) {
    return static_cast<float>(read_number(what));
  }

 private:
  const std::string& text_;
  size_t pos_ = 0;
  long index_ = 0;
};

void append_float(std::string& out, double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  out += buf;
}

}  // namespace

SkeletonSequence parse_skeleton_text(const std::string& text,
                                     const std::string& sample_id) {
  TokenReader r(text);
  SkeletonSequence seq;
  seq.sample_id = sample_id;
  const int frame_count = r.read_count("frame count");
  seq.frames.reserve(static_cast<size_t>(frame_count));
  int declared_joints = -1;
  for (int f = 0; f < frame_count; ++f) {
    const int body_count = r.read_count("body count");
    std::vector<BodyFrame> bodies;
    bodies.reserve(static_cast<size_t>(body_count));
    for (int b = 0; b < body_count; ++b) {
      BodyFrame body;
      body.body_id = r.read_integer("body id");
      for (auto& m : body.meta) m = r.read_number("body metadata");
      const int joint_count = r.read_count("joint count");
      if (declared_joints < 0) declared_joints = joint_count;
      if (joint_count != declared_joints)
        throw Error(ErrorCode::JointCountMismatch,
                    "body declares " + std::to_string(joint_count) +
                        " joints, sequence declares " +
                        std::to_string(declared_joints));
      body.joints.resize(static_cast<size_t>(joint_count));
      for (auto& j : body.joints) {
        j.x = r.read_f32("joint x");
        j.y = r.read_f32("joint y");
        j.z = r.read_f32("joint z");
        if (!std::isfinite(j.x) || !std::isfinite(j.y) || !std::isfinite(j.z))
          throw Error(ErrorCode::NonFiniteValue, "NaN/Inf joint coordinate");
        j.depth_x = r.read_f32("depth x");
        j.depth_y = r.read_f32("depth y");
        j.color_x = r.read_f32("color x");
        j.color_y = r.read_f32("color y");
        j.orientation_w = r.read_f32("orientation w");
        j.orientation_x = r.read_f32("orientation x");
        j.orientation_y = r.read_f32("orientation y");
        j.orientation_z = r.read_f32("orientation z");
        j.tracking_state = static_cast<int>(r.read_integer("joint tracking state"));
      }
      bodies.push_back(std::move(body));
    }
    seq.frames.push_back(std::move(bodies));
  }
  seq.joint_count = declared_joints < 0 ? 0 : declared_joints;
  return seq;
}

SkeletonSequence parse_skeleton_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_skeleton_text(buf.str(),
                             std::filesystem::path(path).stem().string());
}

std::string serialize_skeleton(const SkeletonSequence& seq) {
  std::string out;
  out += std::to_string(seq.frames.size());
  out += '\n';
  for (const auto& bodies : seq.frames) {
    out += std::to_string(bodies.size());
    out += '\n';
    for (const auto& body : bodies) {
      out += std::to_string(body.body_id);
      for (double m : body.meta) {
        out += ' ';
        append_float(out, m, "%.17g");
      }
      out += '\n';
      out += std::to_string(body.joints.size());
      out += '\n';
      for (const auto& j : body.joints) {
        const float vals[11] = {j.x, j.y, j.z, j.depth_x, j.depth_y,
                                j.color_x, j.color_y, j.orientation_w,
                                j.orientation_x, j.orientation_y,
                                j.orientation_z};
        for (int i = 0; i < 11; ++i) {
          if (i) out += ' ';
          append_float(out, vals[i], "%.9g");
        }
        out += ' ';
        out += std::to_string(j.tracking_state);
        out += '\n';
      }
    }
  }
  return out;
}

void write_skeleton_file(const std::string& path, const SkeletonSequence& seq) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << serialize_skeleton(seq);
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

int action_class_from_sample_id(const std::string& sample_id) {
  // SsssCcccPpppRrrrAaaa
  const size_t pos = sample_id.rfind('A');
  if (pos == std::string::npos || pos + 3 >= sample_id.size() + 1) return -1;
  const std::string digits = sample_id.substr(pos + 1);
  if (digits.size() < 3) return -1;
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
  return std::atoi(digits.c_str()) - 1;
}

SkeletonSequence select_primary_bodies(const SkeletonSequence& seq,
                                       int max_bodies) {
  // per-body motion energy over frames where the body appears consecutively
  std::map<int64_t, double> energy;
  std::vector<int64_t> order;  // first-appearance order
  for (const auto& bodies : seq.frames)
    for (const auto& b : bodies)
      if (energy.emplace(b.body_id, 0.0).second) order.push_back(b.body_id);
  if (static_cast<int>(order.size()) <= max_bodies && order.empty()) return seq;

  for (size_t f = 0; f + 1 < seq.frames.size(); ++f) {
    for (const auto& cur : seq.frames[f]) {
      const BodyFrame* nxt = nullptr;
      for (const auto& cand : seq.frames[f + 1])
        if (cand.body_id == cur.body_id) {
          nxt = &cand;
          break;
        }
      if (!nxt) continue;
      const size_t n = std::min(cur.joints.size(), nxt->joints.size());
      double acc = 0.0;
      for (size_t j = 0; j < n; ++j) {
        const double dx = static_cast<double>(nxt->joints[j].x) - cur.joints[j].x;
        const double dy = static_cast<double>(nxt->joints[j].y) - cur.joints[j].y;
        const double dz = static_cast<double>(nxt->joints[j].z) - cur.joints[j].z;
        acc += dx * dx + dy * dy + dz * dz;
      }
      energy[cur.body_id] += acc;
    }
  }

  std::vector<int64_t> ranked = order;
  std::sort(ranked.begin(), ranked.end(), [&](int64_t a, int64_t b) {
    if (energy[a] != energy[b]) return energy[a] > energy[b];
    return a < b;
  });
  if (static_cast<int>(ranked.size()) > max_bodies)
    ranked.resize(static_cast<size_t>(max_bodies));
  std::map<int64_t, int> rank;
  for (size_t i = 0; i < ranked.size(); ++i) rank[ranked[i]] = static_cast<int>(i);

  SkeletonSequence out;
  out.sample_id = seq.sample_id;
  out.joint_count = seq.joint_count;
  out.frames.reserve(seq.frames.size());
  for (const auto& bodies : seq.frames) {
    std::vector<BodyFrame> kept;
    for (const auto& b : bodies)
      if (rank.count(b.body_id)) kept.push_back(b);
    std::sort(kept.begin(), kept.end(), [&](const BodyFrame& a, const BodyFrame& b) {
      return rank[a.body_id] < rank[b.body_id];
    });
    out.frames.push_back(std::move(kept));
  }
  return out;
}

SkeletonSequence normalize_sequence(const SkeletonSequence& seq) {
  const Joint3D* anchor = nullptr;
  for (const auto& bodies : seq.frames)
    if (!bodies.empty() && !bodies[0].joints.empty()) {
      anchor = &bodies[0].joints[0];
      break;
    }
  if (!anchor)
    throw Error(ErrorCode::EmptySequence, "no frames or no bodies anywhere");
  const float ax = anchor->x, ay = anchor->y, az = anchor->z;
  SkeletonSequence out = seq;
  for (auto& bodies : out.frames)
    for (auto& b : bodies)
      for (auto& j : b.joints) {
        j.x -= ax;
        j.y -= ay;
        j.z -= az;
      }
  return out;
}

PoseTensor to_pose_tensor(const SkeletonSequence& seq, int t_fixed, int max_bodies,
                          int vertex_override) {
  const int v = vertex_override > 0 ? vertex_override : seq.joint_count;
  PoseTensor out;
  out.t_fixed = t_fixed;
  out.vertex_count = v;
  out.body_count = max_bodies;
  out.data = Tensor({3, t_fixed, v, max_bodies});
  const int n = static_cast<int>(seq.frames.size());
  for (int ti = 0; ti < t_fixed; ++ti) {
    int src;
    if (n == 0) break;
    if (n >= t_fixed) {
      src = center_rule_index(ti, n, t_fixed);
    } else {
      if (ti >= n) continue;  // tail zero padding
      src = ti;
    }
    const auto& bodies = seq.frames[static_cast<size_t>(src)];
    const int m = std::min<int>(max_bodies, static_cast<int>(bodies.size()));
    for (int b = 0; b < m; ++b) {
      const auto& joints = bodies[static_cast<size_t>(b)].joints;
      const int jc = std::min<int>(v, static_cast<int>(joints.size()));
      for (int j = 0; j < jc; ++j) {
        out.data.at(0, ti, j, b) = joints[static_cast<size_t>(j)].x;
        out.data.at(1, ti, j, b) = joints[static_cast<size_t>(j)].y;
        out.data.at(2, ti, j, b) = joints[static_cast<size_t>(j)].z;
      }
    }
  }
  return out;
}

bool sequences_equal(const SkeletonSequence& a, const SkeletonSequence& b) {
  if (a.joint_count != b.joint_count || a.frames.size() != b.frames.size())
    return false;
  for (size_t f = 0; f < a.frames.size(); ++f) {
    if (a.frames[f].size() != b.frames[f].size()) return false;
    for (size_t i = 0; i < a.frames[f].size(); ++i) {
      const auto& x = a.frames[f][i];
      const auto& y = b.frames[f][i];
      if (x.body_id != y.body_id || x.meta != y.meta ||
          x.joints.size() != y.joints.size())
        return false;
      for (size_t j = 0; j < x.joints.size(); ++j)
        if (std::memcmp(&x.joints[j], &y.joints[j], sizeof(Joint3D)) != 0)
          return false;
    }
  }
  return true;
}

}  // namespace eppnet
