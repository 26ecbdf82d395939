#include "eppnet/image.hpp"

#include <cctype>
#include <fstream>

#include "eppnet/error.hpp"

namespace eppnet {

namespace {

// netpbm header token reader: skips whitespace and '#' comments
int read_pnm_int(std::istream& is, const std::string& path) {
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      c = is.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c))
    throw Error(ErrorCode::IoError, "bad PNM header in " + path);
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = is.get();
  }
  return v;
}

void read_pnm_header(std::istream& is, const std::string& path,
                     const char* magic, int& width, int& height) {
  char m0 = static_cast<char>(is.get());
  char m1 = static_cast<char>(is.get());
  if (m0 != magic[0] || m1 != magic[1])
    throw Error(ErrorCode::IoError,
                std::string("expected ") + magic + " file: " + path);
  width = read_pnm_int(is, path);
  height = read_pnm_int(is, path);
  const int maxval = read_pnm_int(is, path);
  if (maxval != 255)
    throw Error(ErrorCode::IoError, "only maxval 255 supported: " + path);
  // single whitespace already consumed by read_pnm_int
}

}  // namespace

LabelMap LabelMap::filled(int width, int height, int category_count, uint8_t v) {
  LabelMap m;
  m.width = width;
  m.height = height;
  m.category_count = category_count;
  m.labels.assign(static_cast<size_t>(width) * height, v);
  return m;
}

RgbImage RgbImage::black(int width, int height) {
  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(3 * static_cast<size_t>(width) * height, 0);
  return img;
}

LabelMap read_pgm(const std::string& path, int category_count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  LabelMap map;
  read_pnm_header(is, path, "P5", map.width, map.height);
  map.category_count = category_count;
  map.labels.resize(static_cast<size_t>(map.width) * map.height);
  is.read(reinterpret_cast<char*>(map.labels.data()),
          static_cast<std::streamsize>(map.labels.size()));
  if (!is) throw Error(ErrorCode::IoError, "short PGM payload in " + path);
  for (uint8_t v : map.labels)
    if (v >= category_count)
      throw Error(ErrorCode::LabelOutOfRange,
                  "pixel value " + std::to_string(v) + " >= " +
                      std::to_string(category_count) + " in " + path);
  return map;
}

void write_pgm(const std::string& path, const LabelMap& map) {
  write_pgm_gray(path, map.width, map.height, map.labels);
}

void write_pgm_gray(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& gray) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(gray.data()),
           static_cast<std::streamsize>(gray.size()));
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  RgbImage img;
  read_pnm_header(is, path, "P6", img.width, img.height);
  img.pixels.resize(3 * static_cast<size_t>(img.width) * img.height);
  is.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!is) throw Error(ErrorCode::IoError, "short PPM payload in " + path);
  return img;
}

void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace eppnet
