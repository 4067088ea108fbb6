#include "ibis/mask.hpp"

#include <cmath>

#include <fmt/core.h>

namespace ibis {

Image::Image(Index h, Index w, int c, std::uint8_t fill)
    : height(h), width(w), channels(c),
      pixels(static_cast<std::size_t>(h * w * c), fill) {
    if (h < 1 || w < 1) throw std::invalid_argument("image dimensions must be positive");
    if (c != 1 && c != 3) throw std::invalid_argument("image must have 1 or 3 channels");
}

void require_valid(const Mask& m) {
    if (m.rows() < 1 || m.cols() < 1) throw std::invalid_argument("mask dimensions must be positive");
}

void require_same_shape(const Mask& a, const Mask& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(fmt::format("{}: masks are {}x{} and {}x{}", what, a.rows(),
                                            a.cols(), b.rows(), b.cols()));
    }
}

ErrorRegions diff_regions(const Mask& pred, const Mask& gt) {
    require_same_shape(pred, gt, "diff_regions");
    return {gt && !pred, pred && !gt};
}

double detection_f1(std::span<const Mask> preds, std::span<const Mask> gts, double iou_threshold) {
    if (preds.size() != gts.size()) {
        throw std::invalid_argument(
            fmt::format("detection_f1: {} predictions for {} targets", preds.size(), gts.size()));
    }
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Mask& p = preds[i];
        const Mask& g = gts[i];
        require_same_shape(p, g, "detection_f1");
        const bool p_any = p.any();
        const bool g_any = g.any();
        if (!p_any && !g_any) continue;
        if (p_any && !g_any) {
            ++fp;
        } else if (!p_any) {
            ++fn;
        } else if (iou(p, g) >= iou_threshold) {
            ++tp;
        } else {
            // a miss is both a spurious detection and a missed entity
            ++fp;
            ++fn;
        }
    }
    const long denom = 2 * tp + fp + fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out(img.height, img.width, 3);
    for (Index r = 0; r < img.height; ++r)
        for (Index c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r, c);
    return out;
}

Image overlay(const Image& img, const Mask& m, double alpha, Rgb color) {
    if (img.height != m.rows() || img.width != m.cols()) {
        throw DimensionMismatch(fmt::format("overlay: image is {}x{}, mask is {}x{}", img.height,
                                            img.width, m.rows(), m.cols()));
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("overlay: alpha outside [0,1]");
    Image out = to_rgb(img);
    for (Index r = 0; r < out.height; ++r) {
        for (Index c = 0; c < out.width; ++c) {
            if (!m(r, c)) continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - alpha) * out.at(r, c, ch) + alpha * color[ch];
                out.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

}  // namespace ibis
