#include "geomnet/shapegen.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "geomnet/errors.hpp"

namespace geomnet {

namespace {

constexpr int kSide = Image28::kSide;
constexpr double kPi = 3.14159265358979323846;

// Generated shapes live inside rows/cols [2,25]; augmented images may use
// [1,26] but never the outermost ring.
constexpr double kGenMargin = 2.0;
constexpr int kRingMargin = 1;
constexpr int kMinForeground = 30;
constexpr int kMaxAttempts = 100;

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool inside_convex(std::span<const Point> vs, double x, double y) {
    bool has_pos = false, has_neg = false;
    const Point p{x, y};
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const double c = cross(vs[i], vs[(i + 1) % vs.size()], p);
        if (c > 0.0) has_pos = true;
        if (c < 0.0) has_neg = true;
    }
    return !(has_pos && has_neg);  // boundary counts as inside
}

double triangle_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * std::abs(cross(a, b, c));
}

Image28 make_triangle(Rng& rng) {
    const double lo = kGenMargin, hi = kSide - 1 - kGenMargin;
    std::array<Point, 3> vs;
    for (auto& v : vs) {
        v.x = rng.uniform(lo, hi);
        v.y = rng.uniform(lo, hi);
    }
    if (triangle_area(vs[0], vs[1], vs[2]) < 40.0) return Image28{};  // retried by caller
    return rasterize_polygon(vs);
}

Image28 make_circle(Rng& rng) {
    const double r = rng.uniform(5.0, 10.0);
    const double lo = kGenMargin + r, hi = kSide - 1 - kGenMargin - r;
    const double cx = rng.uniform(lo, hi);
    const double cy = rng.uniform(lo, hi);
    return rasterize_disc(cx, cy, r);
}

Image28 make_square(Rng& rng) {
    const double side = rng.uniform(10.0, 18.0);
    const double theta = rng.uniform(0.0, 90.0) * kPi / 180.0;
    const double half = side / 2.0;
    // Half extent of the rotated square along each axis.
    const double ext = half * (std::abs(std::cos(theta)) + std::abs(std::sin(theta)));
    const double lo = kGenMargin + ext, hi = kSide - 1 - kGenMargin - ext;
    if (!(lo < hi)) return Image28{};  // cannot fit at this side/angle, retried by caller
    const double cx = rng.uniform(lo, hi);
    const double cy = rng.uniform(lo, hi);
    const double c = std::cos(theta), s = std::sin(theta);
    std::array<Point, 4> vs;
    const std::array<std::pair<double, double>, 4> corners{
        {{-half, -half}, {half, -half}, {half, half}, {-half, half}}};
    for (std::size_t i = 0; i < 4; ++i) {
        vs[i].x = cx + corners[i].first * c - corners[i].second * s;
        vs[i].y = cy + corners[i].first * s + corners[i].second * c;
    }
    return rasterize_polygon(vs);
}

bool within_generation_margin(const Image28& img) {
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            if (img.at(r, c) > 127 &&
                (r < kGenMargin || r > kSide - 1 - kGenMargin || c < kGenMargin ||
                 c > kSide - 1 - kGenMargin)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

Image28 rasterize_polygon(std::span<const Point> vertices) {
    Image28 img;
    for (int r = 0; r < kSide; ++r)
        for (int c = 0; c < kSide; ++c)
            if (inside_convex(vertices, static_cast<double>(c), static_cast<double>(r)))
                img.at(r, c) = 255;
    return img;
}

Image28 rasterize_disc(double cx, double cy, double radius) {
    Image28 img;
    const double r2 = radius * radius;
    for (int r = 0; r < kSide; ++r) {
        for (int c = 0; c < kSide; ++c) {
            const double dx = static_cast<double>(c) - cx;
            const double dy = static_cast<double>(r) - cy;
            if (dx * dx + dy * dy <= r2) img.at(r, c) = 255;
        }
    }
    return img;
}

Image28 raster_shape(ShapeClass cls, Rng& rng) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Image28 img;
        switch (cls) {
            case ShapeClass::triangle: img = make_triangle(rng); break;
            case ShapeClass::circle: img = make_circle(rng); break;
            case ShapeClass::square: img = make_square(rng); break;
        }
        if (img.foreground_count() >= kMinForeground && within_generation_margin(img)) {
            return img;
        }
    }
    throw GenerationError("could not generate a valid shape in " +
                          std::to_string(kMaxAttempts) + " attempts");
}

AugmentOp AugmentOp::rotate(double angle_deg) {
    if (angle_deg < -180.0 || angle_deg >= 180.0) {
        throw DomainError("rotation angle must be in [-180,180), got " +
                          std::to_string(angle_deg));
    }
    return AugmentOp{Kind::rotate, angle_deg, 0, 0};
}

AugmentOp AugmentOp::translate(int dx, int dy) {
    if (std::abs(dx) > 4 || std::abs(dy) > 4) {
        throw DomainError("translation offsets must be in [-4,4], got dx=" + std::to_string(dx) +
                          " dy=" + std::to_string(dy));
    }
    return AugmentOp{Kind::translate, 0.0, dx, dy};
}

AugmentOp sample_augment_op(Rng& rng) {
    switch (rng.uniform_int(4)) {
        case 0: return AugmentOp::rotate(rng.uniform(-180.0, 180.0));
        case 1: return AugmentOp::flip_h();
        case 2: return AugmentOp::flip_v();
        default:
            return AugmentOp::translate(static_cast<int>(rng.uniform_int(9)) - 4,
                                        static_cast<int>(rng.uniform_int(9)) - 4);
    }
}

std::optional<Image28> apply_augment(const Image28& img, const AugmentOp& op) {
    const int lo = kRingMargin, hi = kSide - 1 - kRingMargin;
    switch (op.kind) {
        case AugmentOp::Kind::flip_h: {
            Image28 out;
            for (int r = 0; r < kSide; ++r)
                for (int c = 0; c < kSide; ++c) out.at(r, c) = img.at(r, kSide - 1 - c);
            return out;
        }
        case AugmentOp::Kind::flip_v: {
            Image28 out;
            for (int r = 0; r < kSide; ++r)
                for (int c = 0; c < kSide; ++c) out.at(r, c) = img.at(kSide - 1 - r, c);
            return out;
        }
        case AugmentOp::Kind::translate: {
            for (int r = 0; r < kSide; ++r) {
                for (int c = 0; c < kSide; ++c) {
                    if (img.at(r, c) > 127) {
                        const int nr = r + op.dy, nc = c + op.dx;
                        if (nr < lo || nr > hi || nc < lo || nc > hi) return std::nullopt;
                    }
                }
            }
            Image28 out;
            for (int r = 0; r < kSide; ++r) {
                for (int c = 0; c < kSide; ++c) {
                    const int sr = r - op.dy, sc = c - op.dx;
                    out.at(r, c) = (sr >= 0 && sr < kSide && sc >= 0 && sc < kSide)
                                       ? img.at(sr, sc)
                                       : 0;
                }
            }
            return out;
        }
        case AugmentOp::Kind::rotate: {
            const double rad = op.angle_deg * kPi / 180.0;
            const double cosv = std::cos(rad), sinv = std::sin(rad);
            const double ctr = (kSide - 1) / 2.0;
            // Forward-map every foreground pixel center; reject unless it
            // lands at least half a pixel diagonal inside the ring-1
            // interior. Rotation preserves distances, so nearest-neighbour
            // sampling below can then never place foreground on the
            // outermost ring or clip it.
            for (int r = 0; r < kSide; ++r) {
                for (int c = 0; c < kSide; ++c) {
                    if (img.at(r, c) <= 127) continue;
                    const double x = c - ctr, y = r - ctr;
                    const double fx = ctr + x * cosv - y * sinv;
                    const double fy = ctr + x * sinv + y * cosv;
                    if (fy < lo + 0.5 || fy > hi - 0.5 || fx < lo + 0.5 || fx > hi - 0.5) {
                        return std::nullopt;
                    }
                }
            }
            Image28 out;
            for (int r = 0; r < kSide; ++r) {
                for (int c = 0; c < kSide; ++c) {
                    // Inverse map with nearest-neighbour sampling.
                    const double x = c - ctr, y = r - ctr;
                    const double sx = ctr + x * cosv + y * sinv;
                    const double sy = ctr - x * sinv + y * cosv;
                    const auto sc = static_cast<int>(std::lround(sx));
                    const auto sr = static_cast<int>(std::lround(sy));
                    out.at(r, c) = (sr >= 0 && sr < kSide && sc >= 0 && sc < kSide)
                                       ? img.at(sr, sc)
                                       : 0;
                }
            }
            return out;
        }
    }
    throw ContractError("unknown augment kind");
}

namespace {

Image28 augmented_copy(const Image28& base, std::uint64_t seed) {
    Rng rng(seed);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const AugmentOp op = sample_augment_op(rng);
        if (auto out = apply_augment(base, op)) return *out;
    }
    throw GenerationError("could not find a non-clipping augmentation in " +
                          std::to_string(kMaxAttempts) + " attempts");
}

LabeledDataset base_images(std::uint64_t seed, int n, SeedDomain domain) {
    LabeledDataset out;
    out.images.reserve(static_cast<std::size_t>(n));
    out.labels.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto cls = static_cast<ShapeClass>(i % kNumClasses);
        Rng rng(derive_seed(seed, domain, static_cast<std::uint64_t>(i)));
        out.images.push_back(raster_shape(cls, rng));
        out.labels.push_back(static_cast<std::uint8_t>(cls));
    }
    return out;
}

LabeledDataset expand(const LabeledDataset& bases, std::uint64_t seed, int aug_factor,
                      SeedDomain domain) {
    LabeledDataset out;
    out.images.reserve(bases.size() * static_cast<std::size_t>(aug_factor));
    out.labels.reserve(bases.size() * static_cast<std::size_t>(aug_factor));
    for (std::size_t i = 0; i < bases.size(); ++i) {
        out.images.push_back(bases.images[i]);
        out.labels.push_back(bases.labels[i]);
        for (int k = 1; k < aug_factor; ++k) {
            const auto idx = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(aug_factor) +
                             static_cast<std::uint64_t>(k);
            out.images.push_back(augmented_copy(bases.images[i], derive_seed(seed, domain, idx)));
            out.labels.push_back(bases.labels[i]);
        }
    }
    return out;
}

}  // namespace

DatasetPair build_datasets(std::uint64_t seed, int n_test, int aug_factor, bool holdout) {
    if (n_test < 3 || n_test % kNumClasses != 0) {
        throw ConfigError("n_test must be a positive multiple of 3, got " +
                          std::to_string(n_test));
    }
    if (aug_factor < 1) {
        throw ConfigError("aug_factor must be >= 1, got " + std::to_string(aug_factor));
    }

    DatasetPair out;
    out.test = base_images(seed, n_test, SeedDomain::shape);
    if (holdout) {
        const LabeledDataset fresh = base_images(seed, n_test, SeedDomain::holdout_shape);
        out.train = expand(fresh, seed, aug_factor, SeedDomain::holdout_augment);
    } else {
        out.train = expand(out.test, seed, aug_factor, SeedDomain::augment);
    }
    return out;
}

}  // namespace geomnet
