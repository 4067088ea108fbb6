#include "ibis/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/core.h>

#include "ibis/parallel.hpp"
#include "ibis/rng.hpp"

namespace ibis {

namespace {

struct Ellipse {
    double cy, cx, a, b, theta;  // semi-axes a (along theta) and b

    bool contains(double y, double x) const {
        const double dy = y - cy;
        const double dx = x - cx;
        const double u = dx * std::cos(theta) + dy * std::sin(theta);
        const double v = -dx * std::sin(theta) + dy * std::cos(theta);
        return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
};

void raster(Mask& m, const Ellipse& e, bool value) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            if (e.contains(static_cast<double>(r), static_cast<double>(c))) m(r, c) = value;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Sample make_sample(int index, std::uint64_t seed, const ShapeParams& p) {
    Rng rng(mix_seed(seed, {0x636f72707573ULL, static_cast<std::uint64_t>(index)}));
    Sample s;
    s.id = fmt::format("s{:05d}", index);
    s.object_name = kObjectNames[static_cast<std::size_t>(uniform01(rng) * kObjectNames.size())];
    s.modality = kModalities[static_cast<std::size_t>(uniform01(rng) * kModalities.size())];

    const int count = p.min_ellipses + static_cast<int>(uniform01(rng) * (p.max_ellipses - p.min_ellipses + 1));
    std::vector<Ellipse> parts;
    const double margin = p.max_semi_axis + 1.0;
    for (int k = 0; k < count; ++k) {
        Ellipse e{};
        e.a = uniform(rng, p.min_semi_axis, p.max_semi_axis);
        e.b = e.a * uniform(rng, p.min_aspect, 1.0);
        e.theta = uniform(rng, 0.0, std::numbers::pi);
        if (parts.empty()) {
            e.cy = uniform(rng, margin, static_cast<double>(p.height) - 1.0 - margin);
            e.cx = uniform(rng, margin, static_cast<double>(p.width) - 1.0 - margin);
        } else {
            // attach to the first lobe so the blob stays connected
            const Ellipse& host = parts.front();
            const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const double reach = uniform(rng, 0.3, 0.8) * host.b;
            e.cy = std::clamp(host.cy + reach * std::sin(angle), margin, static_cast<double>(p.height) - 1.0 - margin);
            e.cx = std::clamp(host.cx + reach * std::cos(angle), margin, static_cast<double>(p.width) - 1.0 - margin);
        }
        parts.push_back(e);
    }

    s.gt = empty_mask(p.height, p.width);
    for (const Ellipse& e : parts) raster(s.gt, e, true);
    if (uniform01(rng) < p.hole_probability) {
        const Ellipse& host = parts.front();
        Ellipse hole{host.cy, host.cx, host.a * p.hole_scale, host.b * p.hole_scale, host.theta};
        raster(s.gt, hole, false);
    }
    if (!s.gt.any()) throw std::logic_error(fmt::format("sample {} rasterized to an empty mask", s.id));

    std::normal_distribution<double> noise(0.0, p.noise_sigma);
    const double fy = uniform(rng, 0.1, 0.4);
    const double fx = uniform(rng, 0.1, 0.4);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    s.image = Image(p.height, p.width, 1);
    for (Index r = 0; r < p.height; ++r) {
        for (Index c = 0; c < p.width; ++c) {
            const double base = s.gt(r, c) ? p.foreground_intensity : p.background_intensity;
            const double texture = p.texture_amplitude * std::sin(fy * r + phase) * std::cos(fx * c);
            const double v = base + texture + noise(rng);
            s.image.at(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return s;
}

}  // namespace

void ShapeParams::validate() const {
    if (height < 1 || width < 1) throw std::invalid_argument("shape params: image size must be positive");
    if (min_ellipses < 1 || max_ellipses < min_ellipses) throw std::invalid_argument("shape params: bad ellipse count range");
    if (!(min_semi_axis >= 1.0) || max_semi_axis < min_semi_axis) {
        throw std::invalid_argument(fmt::format("shape params: semi-axis range [{}, {}] has zero area",
                                                min_semi_axis, max_semi_axis));
    }
    if (!(min_aspect > 0.0 && min_aspect <= 1.0)) throw std::invalid_argument("shape params: min_aspect outside (0,1]");
    if (2.0 * (max_semi_axis + 1.0) >= static_cast<double>(std::min(height, width)) - 1.0) {
        throw std::invalid_argument("shape params: ellipses do not fit the image");
    }
    if (hole_probability < 0.0 || hole_probability > 1.0) throw std::invalid_argument("shape params: hole_probability outside [0,1]");
    if (!(hole_scale >= 0.0 && hole_scale < 1.0)) throw std::invalid_argument("shape params: hole_scale outside [0,1)");
    if (noise_sigma < 0.0) throw std::invalid_argument("shape params: negative noise");
}

std::vector<Sample> make_synthetic_corpus(int n, std::uint64_t seed, const ShapeParams& params) {
    if (n < 1) throw std::invalid_argument("corpus size must be >= 1");
    params.validate();
    std::vector<Sample> out(static_cast<std::size_t>(n));
    parallel_for(out.size(), [&](std::size_t i) { out[i] = make_sample(static_cast<int>(i), seed, params); });
    return out;
}

}  // namespace ibis
