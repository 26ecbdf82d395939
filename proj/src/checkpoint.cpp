#include "eppnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "eppnet/error.hpp"

namespace eppnet {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = (static_cast<uint64_t>(v) >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void write_f32_le(std::ostream& os, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_le<uint32_t>(os, bits);
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw Error(ErrorCode::TruncatedFile, "checkpoint ended early");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

float read_f32_le(std::istream& is) {
  uint32_t bits = read_le<uint32_t>(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open for write: " + path);
  os.write("EPPN", 4);
  write_le<uint32_t>(os, 1);
  write_le<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_le<uint16_t>(os, static_cast<uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<uint8_t>(os, static_cast<uint8_t>(t.rank()));
    for (int d : t.shape) write_le<uint32_t>(os, static_cast<uint32_t>(d));
    for (float v : t.data) write_f32_le(os, v);
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path);
}

NamedTensors load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open for read: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "EPPN", 4) != 0)
    throw Error(ErrorCode::IoError, "bad checkpoint magic: " + path);
  const uint32_t version = read_le<uint32_t>(is);
  if (version != 1)
    throw Error(ErrorCode::IoError, "unsupported checkpoint version");
  const uint32_t count = read_le<uint32_t>(is);
  NamedTensors out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = read_le<uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw Error(ErrorCode::TruncatedFile, "checkpoint ended early");
    const uint8_t rank = read_le<uint8_t>(is);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_le<uint32_t>(is));
    Tensor t(shape);
    for (auto& v : t.data) v = read_f32_le(is);
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

}  // namespace eppnet
