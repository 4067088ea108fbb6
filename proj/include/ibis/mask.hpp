#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ibis/errors.hpp"

namespace ibis {

using Index = Eigen::Index;

// Dense row-major 2-D grid; rows are image rows (y), columns are image columns (x).
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Binary mask. Set algebra is plain Eigen: `a && b`, `a || b`, `a && !b`, `m.count()`.
using Mask = Grid<bool>;

template <typename Scalar = double>
using DistanceField = Grid<Scalar>;

inline Mask empty_mask(Index height, Index width) { return Mask::Zero(height, width); }

// Same shape and same bits.
inline bool equal(const Mask& a, const Mask& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

void require_valid(const Mask& m);
void require_same_shape(const Mask& a, const Mask& b, const char* what);

// 8-bit image, 1 (gray) or 3 (RGB) interleaved channels, row-major.
struct Image {
    Index height = 0;
    Index width = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(Index h, Index w, int c, std::uint8_t fill = 0);

    std::uint8_t& at(Index row, Index col, int ch = 0) {
        return pixels[static_cast<std::size_t>((row * width + col) * channels + ch)];
    }
    std::uint8_t at(Index row, Index col, int ch = 0) const {
        return pixels[static_cast<std::size_t>((row * width + col) * channels + ch)];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

using Rgb = std::array<std::uint8_t, 3>;

// Metrics. Empty-vs-empty scores 1.
template <typename Scalar = double>
Scalar iou(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "iou");
    const Index inter = (a && b).count();
    const Index uni = (a || b).count();
    if (uni == 0) return Scalar(1);
    return static_cast<Scalar>(inter) / static_cast<Scalar>(uni);
}

template <typename Scalar = double>
Scalar dsc(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "dsc");
    const Index inter = (a && b).count();
    const Index total = a.count() + b.count();
    if (total == 0) return Scalar(1);
    return static_cast<Scalar>(2 * inter) / static_cast<Scalar>(total);
}

struct ErrorRegions {
    Mask false_negative;  // gt \ pred
    Mask false_positive;  // pred \ gt
};

ErrorRegions diff_regions(const Mask& pred, const Mask& gt);

// Pairs are matched per sample. An empty prediction against an empty target is a
// true negative and does not enter the tally; with nothing tallied the score is 1.
double detection_f1(std::span<const Mask> preds, std::span<const Mask> gts,
                    double iou_threshold = 0.5);

Image to_rgb(const Image& img);

// Foreground pixels become round((1 - alpha) * pixel + alpha * color); output is RGB.
Image overlay(const Image& img, const Mask& m, double alpha, Rgb color);

}  // namespace ibis
