#include "ibis/segmenter.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace ibis {

const Candidate& SegResult::best() const {
    if (candidates.empty()) throw ProtocolError("segmenter returned no candidates", "");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].score > candidates[best].score) best = i;
    return candidates[best];
}

void paint_disc(Mask& m, Index row, Index col, double radius, bool value) {
    const double r2 = radius * radius;
    const auto reach = static_cast<Index>(std::floor(radius));
    for (Index r = std::max<Index>(0, row - reach); r <= std::min<Index>(m.rows() - 1, row + reach); ++r) {
        for (Index c = std::max<Index>(0, col - reach); c <= std::min<Index>(m.cols() - 1, col + reach); ++c) {
            const double dr = static_cast<double>(r - row);
            const double dc = static_cast<double>(c - col);
            if (dr * dr + dc * dc <= r2) m(r, c) = value;
        }
    }
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    return v;
}

void check_clicks(const Image& img, const PromptSet& prompts) {
    for (const Click& c : prompts.clicks) {
        if (!in_bounds(c, img.height, img.width)) {
            throw SegmenterError(fmt::format("click ({}, {}) outside {}x{} image", c.row, c.col, img.height, img.width));
        }
    }
}

std::pair<Mask, std::uint32_t> prior_state(const Image& img, const PromptSet& prompts, const char* tag) {
    if (!prompts.prior) return {empty_mask(img.height, img.width), 0};
    if (prompts.prior->tag != tag) {
        throw InvalidPrior(fmt::format("prior tagged '{}' cannot be consumed by '{}'", prompts.prior->tag, tag));
    }
    auto [m, consumed] = unpack_mask_prior(prompts.prior->payload);
    if (m.rows() != img.height || m.cols() != img.width) throw InvalidPrior("prior mask does not match the image");
    if (consumed > prompts.clicks.size()) throw InvalidPrior("prior consumed more clicks than the history holds");
    return {std::move(m), consumed};
}

}  // namespace

Bytes pack_mask_prior(const Mask& m, std::uint32_t consumed) {
    Bytes out;
    put_u32(out, consumed);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const auto n = static_cast<std::size_t>(m.size());
    out.resize(12 + (n + 7) / 8, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (m.data()[i]) out[12 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return out;
}

std::pair<Mask, std::uint32_t> unpack_mask_prior(std::span<const std::uint8_t> payload) {
    if (payload.size() < 12) throw InvalidPrior("prior payload too short");
    const std::uint32_t consumed = get_u32(payload, 0);
    const Index rows = get_u32(payload, 4);
    const Index cols = get_u32(payload, 8);
    const auto n = static_cast<std::size_t>(rows * cols);
    if (rows < 1 || cols < 1 || payload.size() != 12 + (n + 7) / 8) throw InvalidPrior("prior payload size mismatch");
    Mask m(rows, cols);
    for (std::size_t i = 0; i < n; ++i) m.data()[i] = (payload[12 + i / 8] >> (i % 8)) & 1u;
    return {std::move(m), consumed};
}

DiscSegmenter::DiscSegmenter(double default_radius) : default_radius_(default_radius) {
    if (!(default_radius > 0.0)) throw std::invalid_argument("disc segmenter radius must be positive");
}

SegResult DiscSegmenter::predict(const Image& img, const PromptSet& prompts) const {
    check_clicks(img, prompts);
    auto [mask, consumed] = prior_state(img, prompts, kTag);
    const Mask before = mask;
    for (std::size_t i = consumed; i < prompts.clicks.size(); ++i) {
        const Click& c = prompts.clicks[i];
        paint_disc(mask, c.row, c.col, c.radius_hint.value_or(default_radius_), c.polarity == Polarity::positive);
    }
    double score = 1.0;
    if (prompts.clicks.empty() && !prompts.prior) {
        score = 0.0;
    } else {
        const auto churn = static_cast<double>((mask != before).count()) / static_cast<double>(mask.size());
        score = 1.0 - churn;
    }
    SegResult out;
    out.prior = {kTag, pack_mask_prior(mask, static_cast<std::uint32_t>(prompts.clicks.size()))};
    out.candidates.push_back({std::move(mask), score});
    return out;
}

SeededSegmenter::SeededSegmenter(double prior_bonus) : prior_bonus_(prior_bonus) {
    if (!(prior_bonus >= 0.0)) throw std::invalid_argument("prior bonus must be non-negative");
}

SegResult SeededSegmenter::predict(const Image& img, const PromptSet& prompts) const {
    check_clicks(img, prompts);
    const Mask prior = prior_state(img, prompts, kTag).first;
    const bool any_negative = std::any_of(prompts.clicks.begin(), prompts.clicks.end(),
                                          [](const Click& c) { return c.polarity == Polarity::negative; });
    Mask mask = empty_mask(img.height, img.width);
    for (Index r = 0; r < img.height; ++r) {
        for (Index c = 0; c < img.width; ++c) {
            double pos = std::numeric_limits<double>::infinity();
            double neg = std::numeric_limits<double>::infinity();
            for (const Click& k : prompts.clicks) {
                const double d = std::hypot(static_cast<double>(r - k.row), static_cast<double>(c - k.col));
                double& nearest = k.polarity == Polarity::positive ? pos : neg;
                nearest = std::min(nearest, d);
            }
            if (!any_negative) {
                // distance to the nearest cell just outside the grid
                neg = static_cast<double>(std::min({r, c, img.height - 1 - r, img.width - 1 - c}) + 1);
            }
            if (prior(r, c)) pos -= prior_bonus_;
            mask(r, c) = pos < neg;
        }
    }
    SegResult out;
    out.prior = {kTag, pack_mask_prior(mask, static_cast<std::uint32_t>(prompts.clicks.size()))};
    const double score = prompts.clicks.empty() && !prompts.prior ? 0.0 : 1.0;
    out.candidates.push_back({std::move(mask), score});
    return out;
}

}  // namespace ibis
