#include "eppnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eppnet/error.hpp"
#include "eppnet/image.hpp"
#include "eppnet/modalities.hpp"
#include "eppnet/parsemap.hpp"
#include "eppnet/rng.hpp"
#include "eppnet/skeleton.hpp"

namespace eppnet {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot hash missing file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string s = buf.str();
  return fnv1a64(s.data(), s.size());
}

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t combine_hashes(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint64_t p : parts) {
    for (int i = 0; i < 8; ++i) {
      h ^= (p >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

int worker_count() {
  const char* env = std::getenv("EPPNET_THREADS");
  if (!env) return 0;
  const int n = std::atoi(env);
  return n < 0 ? 0 : n;
}

// index-sharded parallel loop; results must be written to per-index slots
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (!failed) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!failed) first_error = e.what();
          failed = true;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failed) throw Error(ErrorCode::IoError, "worker failed: " + first_error);
}

}  // namespace

// ---------------------------------------------------------------------------
// manifest + config serialization

Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open manifest " + path);
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "manifest parse: " + std::string(e.what()));
  }
  const fs::path base = fs::path(path).parent_path();
  Manifest m;
  std::set<std::string> seen;
  try {
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.sample_id = e.at("sample_id").get<std::string>();
      entry.skeleton_path = (base / e.at("skeleton").get<std::string>()).string();
      entry.parsing_dir = (base / e.at("parsing_dir").get<std::string>()).string();
      entry.bbox_path = (base / e.at("bbox").get<std::string>()).string();
      entry.label = e.at("label").get<int>();
      entry.split = e.at("split").get<std::string>();
      if (entry.split != "train" && entry.split != "test")
        throw Error(ErrorCode::ConfigError, "bad split " + entry.split);
      if (!seen.insert(entry.sample_id).second)
        throw Error(ErrorCode::ConfigError, "duplicate sample_id " + entry.sample_id);
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "manifest schema: " + std::string(e.what()));
  }
  return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  const fs::path base = fs::path(path).parent_path();
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"sample_id", e.sample_id},
                       {"skeleton", fs::relative(e.skeleton_path, base).string()},
                       {"parsing_dir", fs::relative(e.parsing_dir, base).string()},
                       {"bbox", fs::relative(e.bbox_path, base).string()},
                       {"label", e.label},
                       {"split", e.split}});
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << json{{"entries", entries}}.dump(2) << '\n';
}

namespace {

json optimizer_to_json(const OptimizerConfig& opt) {
  json schedule = json::array();
  for (const auto& [epoch, mult] : opt.schedule)
    schedule.push_back({epoch, mult});
  return {{"learning_rate", opt.learning_rate},
          {"momentum", opt.momentum},
          {"weight_decay", opt.weight_decay},
          {"schedule", schedule}};
}

OptimizerConfig optimizer_from_json(const json& j, const OptimizerConfig& defaults) {
  OptimizerConfig opt = defaults;
  opt.learning_rate = j.value("learning_rate", opt.learning_rate);
  opt.momentum = j.value("momentum", opt.momentum);
  opt.weight_decay = j.value("weight_decay", opt.weight_decay);
  if (j.contains("schedule")) {
    opt.schedule.clear();
    int last_epoch = -1;
    for (const auto& pair : j.at("schedule")) {
      const int epoch = pair.at(0).get<int>();
      if (epoch <= last_epoch)
        throw Error(ErrorCode::ConfigError, "schedule epochs must increase");
      last_epoch = epoch;
      opt.schedule.emplace_back(epoch, pair.at(1).get<float>());
    }
  }
  if (opt.learning_rate < 0 || opt.momentum < 0 || opt.momentum >= 1 ||
      opt.weight_decay < 0)
    throw Error(ErrorCode::ConfigError, "optimizer values out of range");
  return opt;
}

json config_to_json(const PipelineConfig& cfg) {
  json weights = json::object();
  for (const auto& [name, w] : cfg.weights.entries) weights[name] = w;
  return {{"workspace", cfg.workspace},
          {"manifest", cfg.manifest_path},
          {"topology", cfg.topology_path},
          {"joint_count", cfg.joint_count},
          {"classes", cfg.classes},
          {"t_fixed", cfg.t_fixed},
          {"bodies", cfg.bodies},
          {"frames_per_map", cfg.frames_per_map},
          {"tile_size", cfg.tile_size},
          {"grid", {cfg.grid_rows, cfg.grid_cols}},
          {"label_categories", cfg.label_categories},
          {"modalities", cfg.modalities},
          {"weights", weights},
          {"seed", cfg.seed},
          {"gcn",
           {{"blocks", cfg.gcn.blocks},
            {"channels", cfg.gcn.channels},
            {"temporal_kernel", cfg.gcn.temporal_kernel}}},
          {"cnn",
           {{"blocks", cfg.cnn.blocks},
            {"channels", cfg.cnn.channels},
            {"input_size", cfg.cnn.input_h}}},
          {"gcn_optimizer", optimizer_to_json(cfg.gcn_opt)},
          {"cnn_optimizer", optimizer_to_json(cfg.cnn_opt)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"stop_at_accuracy", cfg.stop_at_accuracy},
          {"augment_delta", cfg.augment_delta}};
}

PipelineConfig config_from_json(const json& doc, const fs::path& base) {
  PipelineConfig cfg;
  cfg.gcn_opt.schedule = {{35, 0.1f}, {55, 0.1f}};
  cfg.cnn_opt.learning_rate = 0.03f;
  try {
    cfg.workspace = doc.at("workspace").get<std::string>();
    cfg.manifest_path = doc.at("manifest").get<std::string>();
    cfg.topology_path = doc.value("topology", std::string());
    cfg.joint_count = doc.value("joint_count", cfg.joint_count);
    cfg.classes = doc.at("classes").get<int>();
    cfg.t_fixed = doc.value("t_fixed", cfg.t_fixed);
    cfg.bodies = doc.value("bodies", cfg.bodies);
    cfg.frames_per_map = doc.value("frames_per_map", cfg.frames_per_map);
    cfg.tile_size = doc.value("tile_size", cfg.tile_size);
    if (doc.contains("grid")) {
      cfg.grid_rows = doc.at("grid").at(0).get<int>();
      cfg.grid_cols = doc.at("grid").at(1).get<int>();
    }
    cfg.label_categories = doc.value("label_categories", cfg.label_categories);
    if (doc.contains("modalities"))
      cfg.modalities = doc.at("modalities").get<std::vector<std::string>>();
    cfg.weights.entries.clear();
    if (doc.contains("weights")) {
      for (const std::string& m : cfg.modalities)
        cfg.weights.entries.emplace_back(
            m, doc.at("weights").value(m, 0.0f));
    } else {
      for (const std::string& m : cfg.modalities)
        cfg.weights.entries.emplace_back(m, 1.0f);
    }
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("gcn")) {
      const auto& g = doc.at("gcn");
      cfg.gcn.blocks = g.value("blocks", cfg.gcn.blocks);
      if (g.contains("channels"))
        cfg.gcn.channels = g.at("channels").get<std::vector<int>>();
      cfg.gcn.temporal_kernel = g.value("temporal_kernel", cfg.gcn.temporal_kernel);
    }
    if (doc.contains("cnn")) {
      const auto& c = doc.at("cnn");
      cfg.cnn.blocks = c.value("blocks", cfg.cnn.blocks);
      if (c.contains("channels"))
        cfg.cnn.channels = c.at("channels").get<std::vector<int>>();
      cfg.cnn.input_h = cfg.cnn.input_w = c.value("input_size", cfg.cnn.input_h);
    }
    cfg.gcn.classes = cfg.classes;
    cfg.cnn.classes = cfg.classes;
    if (doc.contains("gcn_optimizer"))
      cfg.gcn_opt = optimizer_from_json(doc.at("gcn_optimizer"), cfg.gcn_opt);
    if (doc.contains("cnn_optimizer"))
      cfg.cnn_opt = optimizer_from_json(doc.at("cnn_optimizer"), cfg.cnn_opt);
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.batch_size = doc.value("batch_size", cfg.batch_size);
    cfg.stop_at_accuracy = doc.value("stop_at_accuracy", cfg.stop_at_accuracy);
    cfg.augment_delta = doc.value("augment_delta", cfg.augment_delta);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config schema: " + std::string(e.what()));
  }
  if (cfg.classes < 2 || cfg.joint_count < 1 || cfg.t_fixed < 1 ||
      cfg.bodies < 1 || cfg.frames_per_map < 1 || cfg.tile_size < 1 ||
      cfg.grid_rows < 1 || cfg.grid_cols < 1 || cfg.epochs < 1 ||
      cfg.batch_size < 1)
    throw Error(ErrorCode::ConfigError, "all extents must be positive");
  for (const auto& [name, w] : cfg.weights.entries)
    if (w < 0.0f)
      throw Error(ErrorCode::ConfigError, "negative ensemble weight");
  // resolve paths relative to the config file
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
  };
  resolve(cfg.workspace);
  resolve(cfg.manifest_path);
  resolve(cfg.topology_path);
  return cfg;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "config parse: " + std::string(e.what()));
  }
  return config_from_json(doc, fs::path(path).parent_path());
}

void write_config(const std::string& path, const PipelineConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << config_to_json(cfg).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// synthetic data generator

namespace {

struct SynthSpec {
  int classes = 4;
  int per_class = 16;
  uint64_t seed = 1;
  SynthMode mode = SynthMode::motion;
};

void base_pose(float out[25][3]) {
  // rough standing layout; exact geometry is irrelevant, motion carries class
  for (int j = 0; j < 25; ++j) {
    out[j][0] = 0.12f * static_cast<float>(j % 5) - 0.24f;
    out[j][1] = 0.10f * static_cast<float>(j / 5) - 0.5f;
    out[j][2] = 3.0f + 0.05f * static_cast<float>(j % 3);
  }
}

SkeletonSequence synth_skeleton(int label, int frames, Rng& rng, SynthMode mode) {
  float base[25][3];
  base_pose(base);
  // complementary data keys motion off bit 0 only
  const int motion_key = mode == SynthMode::complementary ? (label & 1) * 2 + 1
                                                          : label + 1;
  SkeletonSequence seq;
  seq.joint_count = 25;
  const bool spurious = mode == SynthMode::motion && rng.next_below(4) == 0;
  for (int t = 0; t < frames; ++t) {
    BodyFrame body;
    body.body_id = 1;
    body.joints.resize(25);
    const double phase = 2.0 * M_PI * motion_key * t / frames;
    // amplitude varies with the key too, so position statistics alone
    // separate the classes, not just temporal frequency
    const float amp = 0.15f + 0.10f * static_cast<float>(motion_key - 1);
    for (int j = 0; j < 25; ++j) {
      auto& joint = body.joints[static_cast<size_t>(j)];
      joint.x = base[j][0] +
                amp * static_cast<float>(std::sin(phase + 0.3 * j)) +
                0.01f * rng.next_normal();
      joint.y = base[j][1] +
                0.7f * amp * static_cast<float>(std::cos(phase + 0.2 * j)) +
                0.01f * rng.next_normal();
      joint.z = base[j][2] + 0.01f * rng.next_normal();
      joint.tracking_state = 2;
    }
    std::vector<BodyFrame> bodies;
    bodies.push_back(std::move(body));
    if (spurious) {
      // a perfectly static second body, to be discarded by energy ranking
      BodyFrame ghost;
      ghost.body_id = 77;
      ghost.joints.resize(25);
      for (int j = 0; j < 25; ++j) {
        ghost.joints[static_cast<size_t>(j)].x = base[j][0] + 1.5f;
        ghost.joints[static_cast<size_t>(j)].y = base[j][1];
        ghost.joints[static_cast<size_t>(j)].z = base[j][2];
      }
      bodies.push_back(std::move(ghost));
    }
    seq.frames.push_back(std::move(bodies));
  }
  return seq;
}

void fill_rect(LabelMap& map, int r0, int r1, int c0, int c1, uint8_t label) {
  r0 = std::max(0, r0);
  c0 = std::max(0, c0);
  r1 = std::min(map.height, r1);
  c1 = std::min(map.width, c1);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) map.at(r, c) = label;
}

LabelMap synth_label_map(int label, int t, int frames, Rng& rng, SynthMode mode) {
  LabelMap map = LabelMap::filled(64, 64, 20, 0);
  const int motion_key = mode == SynthMode::complementary ? 2 : label + 1;
  const int cx =
      24 + static_cast<int>(std::lround(10.0 * std::sin(2.0 * M_PI * motion_key *
                                                        t / frames)));
  fill_rect(map, 4, 12, cx - 4, cx + 4, 13);    // head
  fill_rect(map, 12, 36, cx - 7, cx + 7, 5);    // torso
  fill_rect(map, 14, 32, cx - 12, cx - 7, 14);  // left arm
  fill_rect(map, 14, 32, cx + 7, cx + 12, 15);  // right arm
  fill_rect(map, 36, 58, cx - 6, cx - 1, 9);    // left leg
  fill_rect(map, 36, 58, cx + 1, cx + 6, 10);   // right leg
  if (mode == SynthMode::complementary) {
    // the marker position encodes bit 1 and nothing else
    const bool low = (label >> 1) & 1;
    fill_rect(map, low ? 44 : 4, low ? 60 : 20, 46, 62, 7);
  } else {
    // class-keyed marker so the image branch carries signal on its own
    const int corner = label % 4;
    const int r0 = (corner / 2) ? 48 : 2;
    const int c0 = (corner % 2) ? 50 : 2;
    fill_rect(map, r0, r0 + 12, c0, c0 + 12,
              static_cast<uint8_t>(16 + label % 4));
  }
  // sparse label noise
  for (int i = 0; i < 12; ++i) {
    const int r = static_cast<int>(rng.next_below(64));
    const int c = static_cast<int>(rng.next_below(64));
    map.at(r, c) = static_cast<uint8_t>(rng.next_below(20));
  }
  return map;
}

PipelineConfig synth_default_config(const SynthSpec& spec) {
  PipelineConfig cfg;
  // relative to the config file, which lands in the dataset root
  cfg.workspace = "workspace";
  cfg.manifest_path = "manifest.json";
  cfg.topology_path = "topology.txt";
  cfg.classes = spec.classes;
  cfg.joint_count = 25;
  cfg.t_fixed = 16;
  cfg.bodies = 1;
  cfg.seed = spec.seed;
  cfg.gcn.blocks = 4;
  cfg.gcn.channels = {8, 8, 16, 16};
  cfg.gcn.temporal_kernel = 9;
  cfg.gcn.classes = spec.classes;
  cfg.cnn.blocks = 4;
  cfg.cnn.channels = {4, 8, 8, 8};
  cfg.cnn.input_h = cfg.cnn.input_w = 48;
  cfg.cnn.classes = spec.classes;
  cfg.gcn_opt.learning_rate = 0.01f;
  cfg.gcn_opt.schedule = {{35, 0.1f}, {55, 0.1f}};
  cfg.cnn_opt.learning_rate = 0.05f;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.stop_at_accuracy = 0.995f;
  if (spec.mode == SynthMode::complementary) {
    cfg.modalities = {"J", "P"};
    cfg.weights.entries = {{"J", 2.0f}, {"P", 2.0f}};
    cfg.epochs = 60;
  } else {
    cfg.modalities = {"J", "B", "JM", "BM", "P"};
    cfg.weights.entries = {
        {"J", 2.0f}, {"B", 2.0f}, {"JM", 1.0f}, {"BM", 1.0f}, {"P", 2.0f}};
  }
  return cfg;
}

}  // namespace

void cmd_synth(const std::string& out_dir, int classes, int samples_per_class,
               uint64_t seed, SynthMode mode) {
  if (classes < 2) throw Error(ErrorCode::ConfigError, "need at least 2 classes");
  if (mode == SynthMode::complementary && classes != 4)
    throw Error(ErrorCode::ConfigError, "complementary mode is a 4-class task");
  SynthSpec spec{classes, samples_per_class, seed, mode};
  const fs::path root(out_dir);
  fs::create_directories(root / "skeletons");
  fs::create_directories(root / "parsing");
  fs::create_directories(root / "bboxes");

  write_topology((root / "topology.txt").string(), ntu25_topology());

  Rng master(seed);
  Manifest manifest;
  const int train_per_class =
      (samples_per_class * 4 + 4) / 5;  // ceil(0.8 * S)
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s) {
      const int global = c * samples_per_class + s;
      Rng rng = master.fork(static_cast<uint64_t>(global) + 1);
      char id[32];
      std::snprintf(id, sizeof(id), "S001C001P%03dR001A%03d", s + 1, c + 1);
      const int frames = 16 + (s % 5) * 2;

      SkeletonSequence seq = synth_skeleton(c, frames, rng, mode);
      seq.sample_id = id;
      const std::string skel_rel = std::string("skeletons/") + id + ".skeleton";
      write_skeleton_file((root / skel_rel).string(), seq);

      std::vector<std::optional<BBox>> boxes(static_cast<size_t>(frames));
      for (int t = 0; t < frames; ++t) {
        LabelMap map = synth_label_map(c, t, frames, rng, mode);
        char frame_name[64];
        std::snprintf(frame_name, sizeof(frame_name), "parsing/%s_f%d.pgm", id, t);
        write_pgm((root / frame_name).string(), map);
        if (t % 5 != 4) boxes[static_cast<size_t>(t)] = BBox{0, 0, 64, 62};
      }
      const std::string bbox_rel = std::string("bboxes/") + id + ".txt";
      write_bbox_file((root / bbox_rel).string(), boxes);

      ManifestEntry entry;
      entry.sample_id = id;
      entry.skeleton_path = (root / skel_rel).string();
      entry.parsing_dir = (root / "parsing").string();
      entry.bbox_path = (root / bbox_rel).string();
      entry.label = c;
      entry.split = s < train_per_class ? "train" : "test";
      manifest.entries.push_back(std::move(entry));
    }
  }
  write_manifest((root / "manifest.json").string(), manifest);
  write_config((root / "config.json").string(), synth_default_config(spec));
}

// ---------------------------------------------------------------------------
// staged pipeline

namespace {

struct StageContext {
  PipelineConfig cfg;
  fs::path ws;
  std::string cfg_dump;
  Manifest manifest;
  BoneTopology topo;
};

const std::vector<std::string> kStageOrder = {
    "prepare", "derive", "parsemap", "train", "eval", "fuse", "report"};

fs::path marker_path(const StageContext& ctx, const std::string& stage) {
  return ctx.ws / "markers" / (stage + ".json");
}

uint64_t marker_chain_hash(const StageContext& ctx, const std::string& stage) {
  const fs::path p = marker_path(ctx, stage);
  if (!fs::exists(p))
    throw Error(ErrorCode::StageDependencyMissing,
                "stage '" + stage + "' has not completed (missing " +
                    p.string() + ")");
  return hash_file(p.string());
}

uint64_t stage_input_hash(const StageContext& ctx, const std::string& stage) {
  const uint64_t cfg_hash = fnv1a64(ctx.cfg_dump.data(), ctx.cfg_dump.size());
  if (stage == "prepare") {
    uint64_t h = combine_hashes({cfg_hash, hash_file(ctx.cfg.manifest_path)});
    for (const auto& e : ctx.manifest.entries) {
      h = combine_hashes({h, hash_file(e.skeleton_path), hash_file(e.bbox_path)});
      for (int t = 0;; ++t) {
        const fs::path frame =
            fs::path(e.parsing_dir) / (e.sample_id + "_f" + std::to_string(t) + ".pgm");
        if (!fs::exists(frame)) break;
        h = combine_hashes({h, hash_file(frame.string())});
      }
    }
    if (!ctx.cfg.topology_path.empty())
      h = combine_hashes({h, hash_file(ctx.cfg.topology_path)});
    return h;
  }
  if (stage == "derive" || stage == "parsemap")
    return combine_hashes({cfg_hash, marker_chain_hash(ctx, "prepare")});
  if (stage == "train")
    return combine_hashes({cfg_hash, marker_chain_hash(ctx, "derive"),
                           marker_chain_hash(ctx, "parsemap")});
  if (stage == "eval")
    return combine_hashes({cfg_hash, marker_chain_hash(ctx, "train")});
  if (stage == "fuse" || stage == "report")
    return combine_hashes({cfg_hash, marker_chain_hash(ctx, "eval")});
  throw Error(ErrorCode::ConfigError, "unknown stage '" + stage + "'");
}

bool marker_satisfied(const StageContext& ctx, const std::string& stage,
                      uint64_t input_hash) {
  const fs::path p = marker_path(ctx, stage);
  if (!fs::exists(p)) return false;
  json doc;
  try {
    std::ifstream is(p);
    is >> doc;
    if (doc.at("input_hash").get<std::string>() != hex64(input_hash))
      return false;
    for (const auto& [rel, hash] : doc.at("outputs").items()) {
      const fs::path out = ctx.ws / rel;
      if (!fs::exists(out)) return false;
      if (hex64(hash_file(out.string())) != hash.get<std::string>()) return false;
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

void write_marker(const StageContext& ctx, const std::string& stage,
                  uint64_t input_hash, const std::vector<std::string>& outputs) {
  json out_map = json::object();
  for (const auto& rel : outputs)
    out_map[rel] = hex64(hash_file((ctx.ws / rel).string()));
  fs::create_directories(ctx.ws / "markers");
  std::ofstream os(marker_path(ctx, stage));
  os << json{{"input_hash", hex64(input_hash)}, {"outputs", out_map}}.dump(2)
     << '\n';
}

// --- stage bodies; each returns the relative paths of its outputs --------

std::vector<std::string> stage_prepare(StageContext& ctx) {
  for (const auto& e : ctx.manifest.entries) {
    if (e.label < 0 || e.label >= ctx.cfg.classes)
      throw Error(ErrorCode::ConfigError,
                  "label " + std::to_string(e.label) + " for " + e.sample_id +
                      " >= classes");
    if (!fs::exists(e.skeleton_path))
      throw Error(ErrorCode::ConfigError, "missing skeleton " + e.skeleton_path);
    if (!fs::exists(e.bbox_path))
      throw Error(ErrorCode::ConfigError, "missing bbox file " + e.bbox_path);
    const fs::path first_frame =
        fs::path(e.parsing_dir) / (e.sample_id + "_f0.pgm");
    if (!fs::exists(first_frame))
      throw Error(ErrorCode::ConfigError,
                  "missing parsing frames for " + e.sample_id);
  }
  write_config((ctx.ws / "config.echo.json").string(), ctx.cfg);
  write_manifest((ctx.ws / "manifest.json").string(), ctx.manifest);
  return {"config.echo.json", "manifest.json"};
}

std::vector<std::string> stage_derive(StageContext& ctx) {
  fs::create_directories(ctx.ws / "derive");
  const int n = static_cast<int>(ctx.manifest.entries.size());
  std::vector<std::string> outputs(static_cast<size_t>(n));
  parallel_for(n, [&](int i) {
    const auto& e = ctx.manifest.entries[static_cast<size_t>(i)];
    SkeletonSequence seq = parse_skeleton_file(e.skeleton_path);
    seq = select_primary_bodies(seq, ctx.cfg.bodies);
    bool has_body = false;
    for (const auto& f : seq.frames) has_body |= !f.empty();
    if (has_body) seq = normalize_sequence(seq);
    const PoseTensor pose =
        to_pose_tensor(seq, ctx.cfg.t_fixed, ctx.cfg.bodies, ctx.cfg.joint_count);
    auto mods = derive_all(pose, ctx.topo);
    NamedTensors tensors;
    for (const auto& [kind, tensor] : mods)
      tensors.emplace_back(modality_name(kind), tensor.data);
    const std::string rel = "derive/" + e.sample_id + ".ckpt";
    save_checkpoint((ctx.ws / rel).string(), tensors);
    outputs[static_cast<size_t>(i)] = rel;
  });
  return outputs;
}

std::vector<std::string> stage_parsemap(StageContext& ctx) {
  fs::create_directories(ctx.ws / "parsemap");
  const Palette palette = make_palette(ctx.cfg.label_categories);
  const int n = static_cast<int>(ctx.manifest.entries.size());
  std::vector<std::string> outputs(static_cast<size_t>(n));
  parallel_for(n, [&](int i) {
    const auto& e = ctx.manifest.entries[static_cast<size_t>(i)];
    std::vector<LabelMap> maps;
    for (int t = 0;; ++t) {
      const fs::path frame =
          fs::path(e.parsing_dir) / (e.sample_id + "_f" + std::to_string(t) + ".pgm");
      if (!fs::exists(frame)) break;
      maps.push_back(read_pgm(frame.string(), ctx.cfg.label_categories));
    }
    if (maps.empty())
      throw Error(ErrorCode::ConfigError, "no parsing frames for " + e.sample_id);
    const auto boxes =
        read_bbox_file(e.bbox_path, static_cast<int>(maps.size()));
    const uint64_t sample_key =
        fnv1a64(e.sample_id.data(), e.sample_id.size());
    FrameSelection sel;
    sel.t = ctx.cfg.frames_per_map;
    if (e.split == "train") {
      sel.mode = SelectionMode::train_random;
      sel.seed = Rng(ctx.cfg.seed).fork(sample_key).next_u64();
    } else {
      sel.mode = SelectionMode::test_uniform;
    }
    FeatureMapConfig fm_cfg;
    fm_cfg.tile_h = fm_cfg.tile_w = ctx.cfg.tile_size;
    fm_cfg.rows = ctx.cfg.grid_rows;
    fm_cfg.cols = ctx.cfg.grid_cols;
    FeatureMap map = build_feature_map(maps, boxes, sel, palette, fm_cfg);
    RgbImage img = map.pixels;
    if (e.split == "train" && ctx.cfg.augment_delta > 0.0)
      img = augment(img, ctx.cfg.augment_delta,
                    Rng(ctx.cfg.seed).fork(sample_key ^ 0xa5a5a5a5ULL).next_u64());
    const std::string rel = "parsemap/" + e.sample_id + ".ppm";
    write_ppm((ctx.ws / rel).string(), img);
    outputs[static_cast<size_t>(i)] = rel;
  });
  return outputs;
}

bool has_parsing_modality(const PipelineConfig& cfg) {
  return std::find(cfg.modalities.begin(), cfg.modalities.end(), "P") !=
         cfg.modalities.end();
}

std::vector<std::string> skeleton_modalities(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& m : cfg.modalities)
    if (m != "P") out.push_back(m);
  return out;
}

uint64_t branch_seed(const PipelineConfig& cfg, const std::string& modality) {
  return Rng(cfg.seed)
      .fork(fnv1a64(modality.data(), modality.size()))
      .next_u64();
}

std::vector<Tensor> load_gcn_inputs(const StageContext& ctx,
                                    const std::string& modality,
                                    const std::string& split,
                                    std::vector<std::string>* ids,
                                    std::vector<int>* labels) {
  std::vector<Tensor> inputs;
  for (const auto& e : ctx.manifest.entries) {
    if (e.split != split) continue;
    const NamedTensors tensors =
        load_checkpoint((ctx.ws / ("derive/" + e.sample_id + ".ckpt")).string());
    const Tensor* t = find_tensor(tensors, modality);
    if (!t)
      throw Error(ErrorCode::StageDependencyMissing,
                  "derived tensors missing modality " + modality);
    inputs.push_back(*t);
    if (ids) ids->push_back(e.sample_id);
    if (labels) labels->push_back(e.label);
  }
  return inputs;
}

std::vector<Tensor> load_cnn_inputs(const StageContext& ctx,
                                    const std::string& split,
                                    std::vector<std::string>* ids,
                                    std::vector<int>* labels) {
  std::vector<Tensor> inputs;
  for (const auto& e : ctx.manifest.entries) {
    if (e.split != split) continue;
    RgbImage img = read_ppm((ctx.ws / ("parsemap/" + e.sample_id + ".ppm")).string());
    img = resize_nearest_rgb(img, ctx.cfg.cnn.input_h, ctx.cfg.cnn.input_w);
    inputs.push_back(image_to_tensor(img));
    if (ids) ids->push_back(e.sample_id);
    if (labels) labels->push_back(e.label);
  }
  return inputs;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream os(path);
  os << "epoch,mean_loss,train_accuracy\n";
  for (int i = 0; i < history.epochs_run; ++i)
    os << i << ',' << history.mean_loss[static_cast<size_t>(i)] << ','
       << history.train_accuracy[static_cast<size_t>(i)] << '\n';
}

AdjacencySpec adjacency_from_topology(const BoneTopology& topo) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& [child, parent] : topo.pairs)
    if (child != parent) edges.emplace_back(child, parent);
  return build_adjacency(edges, topo.vertex_count());
}

std::vector<std::string> stage_train(StageContext& ctx) {
  fs::create_directories(ctx.ws / "train");
  std::vector<std::string> outputs;
  std::vector<int> labels;
  for (const std::string& m : skeleton_modalities(ctx.cfg)) {
    labels.clear();
    const std::vector<Tensor> inputs = load_gcn_inputs(ctx, m, "train", nullptr, &labels);
    if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
    GcnModel model(ctx.cfg.gcn, adjacency_from_topology(ctx.topo),
                   branch_seed(ctx.cfg, m));
    const TrainHistory history =
        train_branch(model, inputs, labels, ctx.cfg.gcn_opt, ctx.cfg.epochs,
                     ctx.cfg.batch_size, branch_seed(ctx.cfg, m + ".data"),
                     ctx.cfg.stop_at_accuracy);
    save_checkpoint((ctx.ws / ("train/" + m + ".ckpt")).string(), model.state());
    write_history_csv((ctx.ws / ("train/" + m + "_history.csv")).string(), history);
    outputs.push_back("train/" + m + ".ckpt");
    outputs.push_back("train/" + m + "_history.csv");
  }
  if (has_parsing_modality(ctx.cfg)) {
    labels.clear();
    const std::vector<Tensor> inputs = load_cnn_inputs(ctx, "train", nullptr, &labels);
    if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
    CnnModel model(ctx.cfg.cnn, branch_seed(ctx.cfg, "P"));
    const TrainHistory history =
        train_branch(model, inputs, labels, ctx.cfg.cnn_opt, ctx.cfg.epochs,
                     ctx.cfg.batch_size, branch_seed(ctx.cfg, "P.data"),
                     ctx.cfg.stop_at_accuracy);
    save_checkpoint((ctx.ws / "train/P.ckpt").string(), model.state());
    write_history_csv((ctx.ws / "train/P_history.csv").string(), history);
    outputs.push_back("train/P.ckpt");
    outputs.push_back("train/P_history.csv");
  }
  return outputs;
}

std::vector<std::string> stage_eval(StageContext& ctx) {
  fs::create_directories(ctx.ws / "eval");
  std::vector<std::string> outputs;
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const std::string& m : skeleton_modalities(ctx.cfg)) {
    ids.clear();
    labels.clear();
    const std::vector<Tensor> inputs = load_gcn_inputs(ctx, m, "test", &ids, &labels);
    GcnModel model(ctx.cfg.gcn, adjacency_from_topology(ctx.topo),
                   branch_seed(ctx.cfg, m));
    model.load_state(load_checkpoint((ctx.ws / ("train/" + m + ".ckpt")).string()));
    const ScoreMatrix scores = evaluate_branch(model, inputs, ids, labels, m);
    const std::string rel = "eval/scores_" + m + ".csv";
    write_score_csv((ctx.ws / rel).string(), scores);
    outputs.push_back(rel);
  }
  if (has_parsing_modality(ctx.cfg)) {
    ids.clear();
    labels.clear();
    const std::vector<Tensor> inputs = load_cnn_inputs(ctx, "test", &ids, &labels);
    CnnModel model(ctx.cfg.cnn, branch_seed(ctx.cfg, "P"));
    model.load_state(load_checkpoint((ctx.ws / "train/P.ckpt").string()));
    const ScoreMatrix scores = evaluate_branch(model, inputs, ids, labels, "P");
    write_score_csv((ctx.ws / "eval/scores_P.csv").string(), scores);
    outputs.push_back("eval/scores_P.csv");
  }
  return outputs;
}

std::vector<ScoreMatrix> load_eval_scores(const StageContext& ctx,
                                          const std::vector<std::string>& modalities) {
  std::vector<ScoreMatrix> out;
  for (const std::string& m : modalities) {
    const fs::path p = ctx.ws / ("eval/scores_" + m + ".csv");
    if (!fs::exists(p))
      throw Error(ErrorCode::MissingScores, "no scores for modality " + m);
    ScoreMatrix sm = read_score_csv(p.string());
    sm.modality = m;
    out.push_back(std::move(sm));
  }
  return out;
}

std::vector<std::string> stage_fuse(StageContext& ctx) {
  fs::create_directories(ctx.ws / "fuse");
  const std::vector<ScoreMatrix> scores = load_eval_scores(ctx, ctx.cfg.modalities);
  const ScoreMatrix fused = late_fuse(scores, ctx.cfg.weights);
  write_score_csv((ctx.ws / "fuse/fused.csv").string(), fused);
  const Metrics metrics =
      compute_metrics(decide(fused), fused.labels, ctx.cfg.classes);
  write_metrics_csv((ctx.ws / "fuse/metrics.csv").string(), metrics);
  write_confusion_csv((ctx.ws / "fuse/confusion.csv").string(), metrics);
  return {"fuse/fused.csv", "fuse/metrics.csv", "fuse/confusion.csv"};
}

// the ablation-table row set: unimodal rows then the standard combinations
std::vector<std::vector<std::string>> report_rows(
    const std::vector<std::string>& available) {
  const std::set<std::string> have(available.begin(), available.end());
  std::vector<std::vector<std::string>> rows;
  for (const std::string& m : available) rows.push_back({m});
  const std::vector<std::vector<std::string>> combos = {
      {"J", "B"},
      {"J", "B", "JM", "BM"},
      {"J", "P"},
      {"B", "P"},
      {"J", "B", "P"},
      {"J", "B", "JM", "BM", "P"}};
  for (const auto& combo : combos) {
    bool ok = combo.size() > 1;
    for (const auto& m : combo) ok &= have.count(m) > 0;
    if (ok) rows.push_back(combo);
  }
  return rows;
}

std::string combo_label(const std::vector<std::string>& combo) {
  std::string out;
  for (size_t i = 0; i < combo.size(); ++i) {
    if (i) out += '+';
    out += combo[i];
  }
  return out;
}

std::vector<std::string> stage_report(StageContext& ctx,
                                      const std::vector<std::string>& requested) {
  fs::create_directories(ctx.ws / "report");
  std::vector<std::string> available;
  if (requested.empty()) {
    for (const char* m : {"J", "B", "JM", "BM", "P"})
      if (fs::exists(ctx.ws / ("eval/scores_" + std::string(m) + ".csv")))
        available.emplace_back(m);
  } else {
    available = requested;
  }
  if (available.empty())
    throw Error(ErrorCode::MissingScores, "no evaluation scores present");
  const std::vector<ScoreMatrix> scores = load_eval_scores(ctx, available);
  std::map<std::string, const ScoreMatrix*> by_name;
  for (const auto& sm : scores) by_name[sm.modality] = &sm;

  std::vector<std::string> outputs = {"report/report.txt"};
  std::ofstream os(ctx.ws / "report/report.txt");
  os << "modalities top1\n";
  char line[64];
  for (const auto& combo : report_rows(available)) {
    std::vector<ScoreMatrix> subset;
    EnsembleWeights weights;
    for (const auto& m : combo) {
      subset.push_back(*by_name.at(m));
      // default weights restricted to the combination; unimodal rows
      // reduce to weight 1
      float w = ctx.cfg.weights.weight_for(m);
      if (w <= 0.0f) w = 1.0f;
      weights.entries.emplace_back(m, combo.size() == 1 ? 1.0f : w);
    }
    const ScoreMatrix fused = late_fuse(subset, weights);
    const Metrics metrics =
        compute_metrics(decide(fused), fused.labels, ctx.cfg.classes);
    const std::string label = combo_label(combo);
    std::snprintf(line, sizeof(line), "%s %.6f\n", label.c_str(), metrics.top1);
    os << line;
    write_confusion_csv((ctx.ws / ("report/confusion_" + label + ".csv")).string(),
                        metrics);
    write_confusion_pgm((ctx.ws / ("report/confusion_" + label + ".pgm")).string(),
                        metrics);
    outputs.push_back("report/confusion_" + label + ".csv");
    outputs.push_back("report/confusion_" + label + ".pgm");
  }
  return outputs;
}

void run_stage(StageContext& ctx, const std::string& stage) {
  const uint64_t input_hash = stage_input_hash(ctx, stage);
  if (marker_satisfied(ctx, stage, input_hash)) {
    std::cerr << "[eppnet] stage " << stage << " up to date\n";
    return;
  }
  std::cerr << "[eppnet] running stage " << stage << "\n";
  std::vector<std::string> outputs;
  if (stage == "prepare") outputs = stage_prepare(ctx);
  else if (stage == "derive") outputs = stage_derive(ctx);
  else if (stage == "parsemap") outputs = stage_parsemap(ctx);
  else if (stage == "train") outputs = stage_train(ctx);
  else if (stage == "eval") outputs = stage_eval(ctx);
  else if (stage == "fuse") outputs = stage_fuse(ctx);
  else if (stage == "report") outputs = stage_report(ctx, {});
  else throw Error(ErrorCode::ConfigError, "unknown stage '" + stage + "'");
  write_marker(ctx, stage, input_hash, outputs);
}

StageContext make_context(const std::string& config_path,
                          const RunOverrides& overrides) {
  PipelineConfig cfg = load_config(config_path);
  if (overrides.workspace) cfg.workspace = *overrides.workspace;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.modalities) {
    cfg.modalities = *overrides.modalities;
    if (overrides.weights) {
      if (overrides.weights->size() != cfg.modalities.size())
        throw Error(ErrorCode::ConfigError,
                    "--weights must list one value per modality");
      cfg.weights.entries.clear();
      for (size_t i = 0; i < cfg.modalities.size(); ++i)
        cfg.weights.entries.emplace_back(cfg.modalities[i], (*overrides.weights)[i]);
    } else {
      EnsembleWeights rebuilt;
      for (const auto& m : cfg.modalities) {
        float w = cfg.weights.weight_for(m);
        rebuilt.entries.emplace_back(m, w > 0.0f ? w : 1.0f);
      }
      cfg.weights = rebuilt;
    }
  } else if (overrides.weights) {
    if (overrides.weights->size() != cfg.modalities.size())
      throw Error(ErrorCode::ConfigError,
                  "--weights must list one value per modality");
    cfg.weights.entries.clear();
    for (size_t i = 0; i < cfg.modalities.size(); ++i)
      cfg.weights.entries.emplace_back(cfg.modalities[i], (*overrides.weights)[i]);
  }
  StageContext ctx;
  ctx.cfg_dump = config_to_json(cfg).dump();
  ctx.cfg = std::move(cfg);
  ctx.ws = ctx.cfg.workspace;
  fs::create_directories(ctx.ws);
  ctx.manifest = load_manifest(ctx.cfg.manifest_path);
  if (ctx.manifest.entries.empty())
    throw Error(ErrorCode::ConfigError, "manifest has no entries");
  ctx.topo = ctx.cfg.topology_path.empty()
                 ? ntu25_topology()
                 : load_topology(ctx.cfg.topology_path);
  if (ctx.topo.vertex_count() != ctx.cfg.joint_count)
    throw Error(ErrorCode::ConfigError, "topology size != joint_count");
  return ctx;
}

int classify_exit(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::StageDependencyMissing:
    case ErrorCode::MissingScores:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& stage,
            const RunOverrides& overrides) {
  try {
    StageContext ctx = make_context(config_path, overrides);
    if (stage == "all") {
      for (const auto& s : kStageOrder) run_stage(ctx, s);
    } else {
      run_stage(ctx, stage);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "[eppnet] error: " << e.what() << "\n";
    return classify_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "[eppnet] error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_report(const std::string& workspace,
               const std::vector<std::string>& modalities) {
  try {
    const fs::path ws(workspace);
    const fs::path echo = ws / "config.echo.json";
    if (!fs::exists(echo))
      throw Error(ErrorCode::StageDependencyMissing,
                  "workspace has no config.echo.json (run prepare first)");
    StageContext ctx;
    ctx.cfg = load_config(echo.string());
    ctx.cfg_dump = config_to_json(ctx.cfg).dump();
    ctx.ws = ws;
    stage_report(ctx, modalities);
    return 0;
  } catch (const Error& e) {
    std::cerr << "[eppnet] error: " << e.what() << "\n";
    return classify_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "[eppnet] error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace eppnet
