#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "geomnet/image.hpp"
#include "geomnet/rng.hpp"

namespace geomnet {

enum class ShapeClass : std::uint8_t { triangle = 0, circle = 1, square = 2 };

// Point in continuous image coordinates: x = column, y = row; pixel centers
// sit at integer coordinates.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Fills pixel centers inside or on the boundary of a convex polygon with 255.
Image28 rasterize_polygon(std::span<const Point> vertices);

// Fills pixel centers with (x-cx)^2 + (y-cy)^2 <= r^2.
Image28 rasterize_disc(double cx, double cy, double radius);

// Random filled shape, binary {0,255}, fully inside the 2-pixel margin,
// at least 30 foreground pixels. Retries up to 100 draws before throwing
// GenerationError.
Image28 raster_shape(ShapeClass cls, Rng& rng);

struct AugmentOp {
    enum class Kind { rotate, flip_h, flip_v, translate };

    Kind kind = Kind::flip_h;
    double angle_deg = 0.0;  // rotate only, in [-180,180)
    int dx = 0, dy = 0;      // translate only, each in [-4,4]

    static AugmentOp rotate(double angle_deg);
    static AugmentOp flip_h() { return AugmentOp{Kind::flip_h, 0.0, 0, 0}; }
    static AugmentOp flip_v() { return AugmentOp{Kind::flip_v, 0.0, 0, 0}; }
    static AugmentOp translate(int dx, int dy);
};

// Uniform over the four kinds; rotate angle uniform in [-180,180), translate
// offsets uniform integers in [-4,4].
AugmentOp sample_augment_op(Rng& rng);

// Applies the op. Returns nullopt when the result would put foreground on or
// beyond the outermost pixel ring (the shape must stay fully inside rows and
// columns 1..26); callers resample on rejection. Flips never reject.
std::optional<Image28> apply_augment(const Image28& img, const AugmentOp& op);

struct DatasetPair {
    LabeledDataset train;
    LabeledDataset test;
};

// test: n_test base images, class-balanced. train (default): every test image
// plus aug_factor-1 random augmentations of it, n_test*aug_factor total.
// holdout: train is built from freshly generated base images instead, same
// sizes, disjoint from test. Deterministic in seed.
DatasetPair build_datasets(std::uint64_t seed, int n_test = 300, int aug_factor = 7,
                           bool holdout = false);

}  // namespace geomnet
