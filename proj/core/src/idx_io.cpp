#include "geomnet/idx_io.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "geomnet/errors.hpp"

namespace geomnet {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& buf, std::size_t offset,
                          const char* what) {
    if (offset + 4 > buf.size()) {
        throw FormatError(std::string("truncated file while reading ") + what, offset);
    }
    return (static_cast<std::uint32_t>(buf[offset]) << 24) |
           (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
           static_cast<std::uint32_t>(buf[offset + 3]);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw FormatError("cannot open " + file.string(), 0);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return buf;
}

void write_file(const std::filesystem::path& file, const std::vector<std::uint8_t>& buf) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + file.string() + " for writing", 0);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("write failed for " + file.string(), 0);
}

const char* split_prefix(Split split) { return split == Split::train ? "train" : "test"; }

}  // namespace

std::filesystem::path idx_images_path(const std::filesystem::path& dir, Split split) {
    return dir / (std::string(split_prefix(split)) + "-images-idx3-ubyte");
}

std::filesystem::path idx_labels_path(const std::filesystem::path& dir, Split split) {
    return dir / (std::string(split_prefix(split)) + "-labels-idx1-ubyte");
}

void write_idx_images(const std::filesystem::path& file, const std::vector<Image28>& images) {
    std::vector<std::uint8_t> buf;
    buf.reserve(16 + images.size() * Image28::kPixels);
    append_u32_be(buf, kImagesMagic);
    append_u32_be(buf, static_cast<std::uint32_t>(images.size()));
    append_u32_be(buf, Image28::kSide);
    append_u32_be(buf, Image28::kSide);
    for (const auto& img : images) {
        buf.insert(buf.end(), img.pixels.begin(), img.pixels.end());
    }
    write_file(file, buf);
}

void write_idx_labels(const std::filesystem::path& file, const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> buf;
    buf.reserve(8 + labels.size());
    append_u32_be(buf, kLabelsMagic);
    append_u32_be(buf, static_cast<std::uint32_t>(labels.size()));
    buf.insert(buf.end(), labels.begin(), labels.end());
    write_file(file, buf);
}

std::vector<Image28> read_idx_images(const std::filesystem::path& file) {
    const auto buf = read_file(file);
    const std::uint32_t magic = read_u32_be(buf, 0, "images magic");
    if (magic != kImagesMagic) {
        throw FormatError("bad images magic 0x" + std::to_string(magic) + " in " + file.string(),
                          0);
    }
    const std::uint32_t n = read_u32_be(buf, 4, "image count");
    const std::uint32_t rows = read_u32_be(buf, 8, "row count");
    const std::uint32_t cols = read_u32_be(buf, 12, "column count");
    if (rows != Image28::kSide || cols != Image28::kSide) {
        throw FormatError("expected 28x28 images, got " + std::to_string(rows) + "x" +
                          std::to_string(cols),
                          8);
    }
    const std::size_t expected = 16 + static_cast<std::size_t>(n) * Image28::kPixels;
    if (buf.size() != expected) {
        throw FormatError("images payload size mismatch: expected " + std::to_string(expected) +
                          " bytes, file has " + std::to_string(buf.size()),
                          std::min(buf.size(), expected));
    }
    std::vector<Image28> images(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::memcpy(images[i].pixels.data(), buf.data() + 16 + i * Image28::kPixels,
                    Image28::kPixels);
    }
    return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& file) {
    const auto buf = read_file(file);
    const std::uint32_t magic = read_u32_be(buf, 0, "labels magic");
    if (magic != kLabelsMagic) {
        throw FormatError("bad labels magic 0x" + std::to_string(magic) + " in " + file.string(),
                          0);
    }
    const std::uint32_t n = read_u32_be(buf, 4, "label count");
    const std::size_t expected = 8 + static_cast<std::size_t>(n);
    if (buf.size() != expected) {
        throw FormatError("labels payload size mismatch: expected " + std::to_string(expected) +
                          " bytes, file has " + std::to_string(buf.size()),
                          std::min(buf.size(), expected));
    }
    std::vector<std::uint8_t> labels(buf.begin() + 8, buf.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= kNumClasses) {
            throw FormatError("label " + std::to_string(labels[i]) + " out of range {0,1,2}",
                              8 + i);
        }
    }
    return labels;
}

void write_idx(const LabeledDataset& dataset, const std::filesystem::path& dir, Split split) {
    if (dataset.images.size() != dataset.labels.size()) {
        throw ContractError("dataset image/label count mismatch");
    }
    std::filesystem::create_directories(dir);
    write_idx_images(idx_images_path(dir, split), dataset.images);
    write_idx_labels(idx_labels_path(dir, split), dataset.labels);
}

LabeledDataset read_idx(const std::filesystem::path& dir, Split split) {
    LabeledDataset out;
    out.images = read_idx_images(idx_images_path(dir, split));
    out.labels = read_idx_labels(idx_labels_path(dir, split));
    if (out.images.size() != out.labels.size()) {
        throw FormatError("image count " + std::to_string(out.images.size()) +
                          " does not match label count " + std::to_string(out.labels.size()),
                          4);
    }
    return out;
}

}  // namespace geomnet
