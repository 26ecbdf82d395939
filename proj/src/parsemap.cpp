#include "eppnet/parsemap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eppnet/error.hpp"
#include "eppnet/rng.hpp"

namespace eppnet {

BBox BBox::union_with(const BBox& other) const {
  return BBox{std::min(x_min, other.x_min), std::min(y_min, other.y_min),
              std::max(x_max, other.x_max), std::max(y_max, other.y_max)};
}

LabelMap crop_to_bbox(const LabelMap& map, const BBox& box) {
  const int x0 = std::max(0, box.x_min);
  const int y0 = std::max(0, box.y_min);
  const int x1 = std::min(map.width, box.x_max);
  const int y1 = std::min(map.height, box.y_max);
  if (x0 >= x1 || y0 >= y1)
    throw Error(ErrorCode::EmptyIntersection, "box does not intersect the map");
  LabelMap out;
  out.width = x1 - x0;
  out.height = y1 - y0;
  out.category_count = map.category_count;
  out.labels.resize(static_cast<size_t>(out.width) * out.height);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      out.at(r, c) = map.at(y0 + r, x0 + c);
  return out;
}

namespace {
inline int center_index(int out_i, int in_n, int out_n) {
  return static_cast<int>((static_cast<int64_t>(2 * out_i + 1) * in_n) /
                          (2 * out_n));
}
}  // namespace

LabelMap resize_nearest(const LabelMap& map, int out_h, int out_w) {
  LabelMap out;
  out.width = out_w;
  out.height = out_h;
  out.category_count = map.category_count;
  out.labels.resize(static_cast<size_t>(out_w) * out_h);
  for (int r = 0; r < out_h; ++r) {
    const int sr = center_index(r, map.height, out_h);
    for (int c = 0; c < out_w; ++c)
      out.at(r, c) = map.at(sr, center_index(c, map.width, out_w));
  }
  return out;
}

RgbImage resize_nearest_rgb(const RgbImage& img, int out_h, int out_w) {
  RgbImage out = RgbImage::black(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    const int sr = center_index(r, img.height, out_h);
    for (int c = 0; c < out_w; ++c) {
      const int sc = center_index(c, img.width, out_w);
      const uint8_t* src = img.px(sr, sc);
      uint8_t* dst = out.px(r, c);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  }
  return out;
}

Palette make_palette(int category_count) {
  if (category_count < 1 || category_count > 256)
    throw Error(ErrorCode::ConfigError, "palette size must be in [1,256]");
  Palette p;
  p.colors.resize(static_cast<size_t>(category_count));
  for (int i = 0; i < category_count; ++i) {
    uint8_t r = 0, g = 0, b = 0;
    int id = i;
    for (int j = 0; j < 8; ++j) {
      r |= static_cast<uint8_t>(((id >> 0) & 1) << (7 - j));
      g |= static_cast<uint8_t>(((id >> 1) & 1) << (7 - j));
      b |= static_cast<uint8_t>(((id >> 2) & 1) << (7 - j));
      id >>= 3;
    }
    p.colors[static_cast<size_t>(i)] = {r, g, b};
  }
  return p;
}

RgbImage colorize(const LabelMap& map, const Palette& palette) {
  RgbImage out = RgbImage::black(map.width, map.height);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      const int label = map.at(r, c);
      if (label >= palette.size())
        throw Error(ErrorCode::LabelOutOfRange,
                    "label " + std::to_string(label) + " not in palette");
      const auto& rgb = palette.colors[static_cast<size_t>(label)];
      uint8_t* dst = out.px(r, c);
      dst[0] = rgb[0];
      dst[1] = rgb[1];
      dst[2] = rgb[2];
    }
  return out;
}

std::vector<int> select_frames(int frame_count, const FrameSelection& sel) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(sel.t));
  if (sel.mode == SelectionMode::test_uniform) {
    for (int i = 0; i < sel.t; ++i)
      out.push_back(center_index(i, frame_count, sel.t));
  } else {
    Rng rng(sel.seed);
    for (int i = 0; i < sel.t; ++i)
      out.push_back(static_cast<int>(rng.next_below(
          static_cast<uint64_t>(frame_count))));
    std::sort(out.begin(), out.end());
  }
  return out;
}

FeatureMap tile(const std::vector<RgbImage>& frames, int rows, int cols) {
  if (static_cast<int>(frames.size()) > rows * cols)
    throw Error(ErrorCode::GridTooSmall,
                std::to_string(frames.size()) + " frames in a " +
                    std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  int tile_h = 0, tile_w = 0;
  for (const auto& f : frames) {
    if (tile_h == 0) {
      tile_h = f.height;
      tile_w = f.width;
    } else if (f.height != tile_h || f.width != tile_w) {
      throw Error(ErrorCode::FrameSizeMismatch, "frames differ in size");
    }
  }
  FeatureMap map;
  map.rows = rows;
  map.cols = cols;
  map.tile_h = tile_h;
  map.tile_w = tile_w;
  map.pixels = RgbImage::black(cols * tile_w, rows * tile_h);
  for (size_t k = 0; k < frames.size(); ++k) {
    const int br = static_cast<int>(k) / cols;
    const int bc = static_cast<int>(k) % cols;
    for (int r = 0; r < tile_h; ++r)
      for (int c = 0; c < tile_w; ++c) {
        const uint8_t* src = frames[k].px(r, c);
        uint8_t* dst = map.pixels.px(br * tile_h + r, bc * tile_w + c);
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
      }
  }
  return map;
}

RgbImage untile(const FeatureMap& map, int row, int col) {
  if (row < 0 || row >= map.rows || col < 0 || col >= map.cols)
    throw Error(ErrorCode::IndexOutOfRange, "tile coordinates out of grid");
  RgbImage out = RgbImage::black(map.tile_w, map.tile_h);
  for (int r = 0; r < map.tile_h; ++r)
    for (int c = 0; c < map.tile_w; ++c) {
      const uint8_t* src = map.pixels.px(row * map.tile_h + r, col * map.tile_w + c);
      uint8_t* dst = out.px(r, c);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

namespace {
inline uint8_t clamp_u8(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}
}  // namespace

RgbImage augment_with_factors(const RgbImage& img, double brightness,
                              double contrast, double saturation) {
  RgbImage out = img;
  // brightness
  for (auto& v : out.pixels) v = clamp_u8(brightness * v);
  // contrast: blend with the global gray mean
  double mean = 0.0;
  for (size_t i = 0; i < out.pixels.size(); i += 3)
    mean += 0.299 * out.pixels[i] + 0.587 * out.pixels[i + 1] +
            0.114 * out.pixels[i + 2];
  mean /= static_cast<double>(out.pixels.size() / 3);
  for (auto& v : out.pixels) v = clamp_u8(mean + contrast * (v - mean));
  // saturation: blend with per-pixel gray
  for (size_t i = 0; i < out.pixels.size(); i += 3) {
    const double gray = 0.299 * out.pixels[i] + 0.587 * out.pixels[i + 1] +
                        0.114 * out.pixels[i + 2];
    for (int c = 0; c < 3; ++c)
      out.pixels[i + c] = clamp_u8(gray + saturation * (out.pixels[i + c] - gray));
  }
  return out;
}

RgbImage augment(const RgbImage& img, double delta, uint64_t seed) {
  Rng rng(seed);
  const double b = rng.next_range(1.0 - delta, 1.0 + delta);
  const double c = rng.next_range(1.0 - delta, 1.0 + delta);
  const double s = rng.next_range(1.0 - delta, 1.0 + delta);
  return augment_with_factors(img, b, c, s);
}

FeatureMap build_feature_map(const std::vector<LabelMap>& maps,
                             const std::vector<std::optional<BBox>>& boxes,
                             const FrameSelection& sel, const Palette& palette,
                             const FeatureMapConfig& cfg) {
  if (maps.empty())
    throw Error(ErrorCode::EmptyDataset, "no label maps to build from");
  if (boxes.size() != maps.size())
    throw Error(ErrorCode::LengthMismatch, "boxes not aligned with maps");
  const std::vector<int> picks = select_frames(static_cast<int>(maps.size()), sel);
  std::vector<RgbImage> tiles;
  tiles.reserve(picks.size());
  for (int idx : picks) {
    const LabelMap& frame = maps[static_cast<size_t>(idx)];
    LabelMap cropped = boxes[static_cast<size_t>(idx)].has_value()
                           ? crop_to_bbox(frame, *boxes[static_cast<size_t>(idx)])
                           : frame;
    tiles.push_back(colorize(resize_nearest(cropped, cfg.tile_h, cfg.tile_w),
                             palette));
  }
  return tile(tiles, cfg.rows, cfg.cols);
}

std::vector<std::optional<BBox>> read_bbox_file(const std::string& path,
                                                int frame_count) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::optional<BBox>> out(static_cast<size_t>(frame_count));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int frame;
    std::string first;
    if (!(ls >> frame >> first))
      throw Error(ErrorCode::IoError, "malformed bbox line: " + line);
    if (frame < 0 || frame >= frame_count)
      throw Error(ErrorCode::IndexOutOfRange,
                  "bbox frame index " + std::to_string(frame));
    if (first == "-") continue;
    BBox box;
    box.x_min = std::stoi(first);
    if (!(ls >> box.y_min >> box.x_max >> box.y_max))
      throw Error(ErrorCode::IoError, "malformed bbox line: " + line);
    // multiple detections for one frame collapse to their union box
    if (out[static_cast<size_t>(frame)].has_value())
      box = out[static_cast<size_t>(frame)]->union_with(box);
    out[static_cast<size_t>(frame)] = box;
  }
  return out;
}

void write_bbox_file(const std::string& path,
                     const std::vector<std::optional<BBox>>& boxes) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  for (size_t i = 0; i < boxes.size(); ++i) {
    os << i;
    if (boxes[i].has_value())
      os << ' ' << boxes[i]->x_min << ' ' << boxes[i]->y_min << ' '
         << boxes[i]->x_max << ' ' << boxes[i]->y_max;
    else
      os << " -";
    os << '\n';
  }
}

}  // namespace eppnet
