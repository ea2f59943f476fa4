#pragma once

#include <map>
#include <span>
#include <string>

#include "tcco/tensor.hpp"

namespace tcco::nn {

// Parameter checkpoint: a versioned text header listing named arrays
// with shapes, followed by the raw little-endian 64-bit float data
// back to back.
//
//   TCCO-CKPT v1
//   count <N>
//   <name> <rows> <cols>    (N lines)
//   ---
//   <binary payload>

void save_checkpoint(const std::string& path, std::span<Param* const> params);

// Loads arrays by name into the given params; throws when a param is
// missing or has a different shape.
void load_checkpoint(const std::string& path, std::span<Param* const> params);

// Raw read, for inspection tools.
std::map<std::string, Tensor> read_checkpoint(const std::string& path);

}  // namespace tcco::nn
