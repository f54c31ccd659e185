#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace geomnet {

// 28x28 grayscale image; 0 = background, 255 = foreground.
struct Image28 {
    static constexpr int kSide = 28;
    static constexpr int kPixels = kSide * kSide;

    std::array<std::uint8_t, kPixels> pixels{};

    std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row * kSide + col)]; }
    std::uint8_t at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row * kSide + col)];
    }

    int foreground_count() const {
        int n = 0;
        for (auto p : pixels) n += p > 127 ? 1 : 0;
        return n;
    }

    bool operator==(const Image28&) const = default;
};

inline constexpr int kNumClasses = 3;
inline constexpr std::array<const char*, kNumClasses> kClassNames{"triangle", "circle", "square"};

struct LabeledDataset {
    std::vector<Image28> images;
    std::vector<std::uint8_t> labels;  // values in {0,1,2}

    std::size_t size() const { return images.size(); }

    bool operator==(const LabeledDataset&) const = default;
};

}  // namespace geomnet
