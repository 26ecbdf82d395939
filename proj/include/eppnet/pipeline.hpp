#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eppnet/branches.hpp"
#include "eppnet/fusion.hpp"
#include "eppnet/optim.hpp"

namespace eppnet {

struct ManifestEntry {
  std::string sample_id;
  std::string skeleton_path;  // resolved to absolute on load
  std::string parsing_dir;
  std::string bbox_path;
  int label = 0;
  std::string split;  // "train" or "test"
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);

struct PipelineConfig {
  std::string workspace;
  std::string manifest_path;
  std::string topology_path;  // empty = builtin 25-joint tree
  int joint_count = 25;
  int classes = 4;
  int t_fixed = 16;
  int bodies = 2;
  int frames_per_map = 9;
  int tile_size = 160;
  int grid_rows = 3, grid_cols = 3;
  int label_categories = 20;
  std::vector<std::string> modalities = {"J", "B", "JM", "BM", "P"};
  EnsembleWeights weights;
  uint64_t seed = 1;
  GcnConfig gcn;
  CnnConfig cnn;
  OptimizerConfig gcn_opt;
  OptimizerConfig cnn_opt;
  int epochs = 60;
  int batch_size = 8;
  float stop_at_accuracy = 2.0f;  // >1 disables early stopping
  double augment_delta = 0.2;
};

PipelineConfig load_config(const std::string& path);
void write_config(const std::string& path, const PipelineConfig& cfg);

struct RunOverrides {
  std::optional<std::string> workspace;
  std::optional<uint64_t> seed;
  std::optional<std::vector<std::string>> modalities;
  std::optional<std::vector<float>> weights;  // aligned with modalities
};

enum class SynthMode { motion, complementary };

// writes skeleton files, parsing PGMs, bbox files, a topology file, a
// manifest with a deterministic 80/20 split, and a ready-to-run config
void cmd_synth(const std::string& out_dir, int classes, int samples_per_class,
               uint64_t seed, SynthMode mode);

// exit code 0 success, 1 validation error, 2 runtime error; stage is one
// of prepare|derive|parsemap|train|eval|fuse|report|all
int cmd_run(const std::string& config_path, const std::string& stage,
            const RunOverrides& overrides = {});

// rebuilds the report from existing eval outputs; empty modality list =
// every modality with scores present
int cmd_report(const std::string& workspace,
               const std::vector<std::string>& modalities = {});

uint64_t fnv1a64(const void* data, size_t len);
uint64_t hash_file(const std::string& path);

}  // namespace eppnet
