#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eppnet {

// integer category grid, row-major, values < category_count
struct LabelMap {
  int width = 0, height = 0;
  int category_count = 0;
  std::vector<uint8_t> labels;

  uint8_t at(int row, int col) const {
    return labels[static_cast<size_t>(row) * width + col];
  }
  uint8_t& at(int row, int col) {
    return labels[static_cast<size_t>(row) * width + col];
  }

  static LabelMap filled(int width, int height, int category_count, uint8_t v);
};

// interleaved 8-bit RGB, row-major
struct RgbImage {
  int width = 0, height = 0;
  std::vector<uint8_t> pixels;  // 3 * width * height

  static RgbImage black(int width, int height);

  uint8_t* px(int row, int col) {
    return pixels.data() + 3 * (static_cast<size_t>(row) * width + col);
  }
  const uint8_t* px(int row, int col) const {
    return pixels.data() + 3 * (static_cast<size_t>(row) * width + col);
  }
};

// binary PGM (P5), maxval 255, pixel value = label id
LabelMap read_pgm(const std::string& path, int category_count);
void write_pgm(const std::string& path, const LabelMap& map);
void write_pgm_gray(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& gray);

// binary PPM (P6), maxval 255
RgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& img);

}  // namespace eppnet
