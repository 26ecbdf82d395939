#pragma once

#include <string>
#include <utility>
#include <vector>

#include "eppnet/tensor.hpp"

namespace eppnet {

// Checkpoint container: binary little-endian file
//   magic "EPPN", u32 version=1, u32 tensor_count,
//   per tensor: u16 name_len, UTF-8 name, u8 rank, u32 dims[rank],
//   f32 data row-major.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::string& path);

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace eppnet
