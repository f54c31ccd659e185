#pragma once

#include <filesystem>

#include "geomnet/model.hpp"

namespace geomnet {

// Binary checkpoint, little-endian fields:
//   "GEO1" | u8 version=1 | u8 activation (0=relu,1=tanh) | u16 num_classes |
//   u32 tensor count | per tensor: u8 rank, rank x u32 dims, f64 values |
//   u32 CRC32 of all preceding bytes.
// Tensors appear in fixed layer order C1,C3,C5,F6,OUT as (weights, bias)
// pairs. Only the 28x28 topology is serialized; velocities are not stored
// and come back zeroed.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace geomnet
