#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eppnet/image.hpp"

namespace eppnet {

// pixel box, inclusive-exclusive
struct BBox {
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool valid() const { return x_min < x_max && y_min < y_max; }
  BBox union_with(const BBox& other) const;
};

struct Palette {
  std::vector<std::array<uint8_t, 3>> colors;
  int size() const { return static_cast<int>(colors.size()); }
};

struct FeatureMap {
  RgbImage pixels;
  int rows = 0, cols = 0;       // tile grid
  int tile_h = 0, tile_w = 0;   // per-tile size
};

enum class SelectionMode { train_random, test_uniform };

struct FrameSelection {
  SelectionMode mode = SelectionMode::test_uniform;
  int t = 9;
  uint64_t seed = 0;  // train mode only
};

LabelMap crop_to_bbox(const LabelMap& map, const BBox& box);

// nearest neighbor with the center convention
// out[r][c] = in[floor((r+0.5)*in_h/out_h)][floor((c+0.5)*in_w/out_w)]
LabelMap resize_nearest(const LabelMap& map, int out_h, int out_w);
RgbImage resize_nearest_rgb(const RgbImage& img, int out_h, int out_w);

// VOC-style bit-distribution palette; pairwise distinct for L <= 256
Palette make_palette(int category_count);

RgbImage colorize(const LabelMap& map, const Palette& palette);

// test_uniform: floor((i+0.5)*N/t); train_random: t draws with replacement,
// sorted ascending
std::vector<int> select_frames(int frame_count, const FrameSelection& sel);

FeatureMap tile(const std::vector<RgbImage>& frames, int rows, int cols);

// block extraction, inverse of tile for occupied cells
RgbImage untile(const FeatureMap& map, int row, int col);

// photometric jitter: brightness, contrast (blend with gray mean),
// saturation (blend with per-pixel gray), in that order; clamped to [0,255]
RgbImage augment_with_factors(const RgbImage& img, double brightness,
                              double contrast, double saturation);
RgbImage augment(const RgbImage& img, double delta, uint64_t seed);

struct FeatureMapConfig {
  int tile_h = 160, tile_w = 160;
  int rows = 3, cols = 3;
};

// crop -> resize -> colorize -> tile over the selected frames; frames
// without a box fall back to the full frame; multiple boxes per frame are
// handled upstream by taking their union
FeatureMap build_feature_map(const std::vector<LabelMap>& maps,
                             const std::vector<std::optional<BBox>>& boxes,
                             const FrameSelection& sel, const Palette& palette,
                             const FeatureMapConfig& cfg = {});

// bbox file: one line per frame, "frame_index x_min y_min x_max y_max"
// or "frame_index -" when no detection
std::vector<std::optional<BBox>> read_bbox_file(const std::string& path,
                                                int frame_count);
void write_bbox_file(const std::string& path,
                     const std::vector<std::optional<BBox>>& boxes);

}  // namespace eppnet
