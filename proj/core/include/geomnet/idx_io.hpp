#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "geomnet/image.hpp"

namespace geomnet {

// MNIST-compatible IDX containers, big-endian headers.
//   images: u32 magic 0x00000803, u32 N, u32 28, u32 28, N*784 bytes row-major
//   labels: u32 magic 0x00000801, u32 N, N bytes each in {0,1,2}

enum class Split { train, test };

std::filesystem::path idx_images_path(const std::filesystem::path& dir, Split split);
std::filesystem::path idx_labels_path(const std::filesystem::path& dir, Split split);

void write_idx_images(const std::filesystem::path& file, const std::vector<Image28>& images);
void write_idx_labels(const std::filesystem::path& file, const std::vector<std::uint8_t>& labels);
std::vector<Image28> read_idx_images(const std::filesystem::path& file);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& file);

// Writes/reads <dir>/{train,test}-images-idx3-ubyte and the matching labels
// file. Malformed input raises FormatError with the failing byte offset.
void write_idx(const LabeledDataset& dataset, const std::filesystem::path& dir, Split split);
LabeledDataset read_idx(const std::filesystem::path& dir, Split split);

}  // namespace geomnet
