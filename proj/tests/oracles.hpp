#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ibis/click.hpp"
#include "ibis/grpo.hpp"
#include "ibis/mask.hpp"
#include "ibis/rng.hpp"

namespace oracle {

using ibis::Index;
using ibis::Mask;

inline Mask random_mask(ibis::Rng& rng, Index h, Index w, double density) {
    Mask m(h, w);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = ibis::uniform01(rng) < density;
    return m;
}

// Nearest background cell by exhaustive search; with `padded`, the ring of cells just
// outside the grid counts as background too.
inline ibis::Grid<std::int64_t> brute_sq_edt(const Mask& m, bool padded = true) {
    const Index h = m.rows(), w = m.cols();
    std::vector<std::pair<Index, Index>> bg;
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
            if (!m(r, c)) bg.emplace_back(r, c);
    if (padded) {
        for (Index r = -1; r <= h; ++r) {
            bg.emplace_back(r, -1);
            bg.emplace_back(r, w);
        }
        for (Index c = 0; c < w; ++c) {
            bg.emplace_back(-1, c);
            bg.emplace_back(h, c);
        }
    }
    ibis::Grid<std::int64_t> out(h, w);
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            if (!m(r, c)) {
                out(r, c) = 0;
                continue;
            }
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (auto [br, bc] : bg) best = std::min<std::int64_t>(best, (r - br) * (r - br) + (c - bc) * (c - bc));
            out(r, c) = best;
        }
    }
    return out;
}

struct BruteClick {
    Index row = 0;
    Index col = 0;
    bool positive = true;
    std::int64_t sq = 0;
};

// Max of each error region's distance field, first cell in row-major order on ties,
// positive when the false-negative maximum is at least the false-positive one.
inline std::optional<BruteClick> brute_click(const Mask& pred, const Mask& gt) {
    const Mask fn = gt && !pred;
    const Mask fp = pred && !gt;
    if (!fn.any() && !fp.any()) return std::nullopt;
    auto best = [](const Mask& region) {
        const auto d = brute_sq_edt(region);
        BruteClick b;
        b.sq = -1;
        for (Index r = 0; r < region.rows(); ++r)
            for (Index c = 0; c < region.cols(); ++c)
                if (region(r, c) && d(r, c) > b.sq) b = {r, c, true, d(r, c)};
        return b;
    };
    const BruteClick bn = best(fn);
    const BruteClick bp = best(fp);
    if (bn.sq >= bp.sq) return bn;
    BruteClick out = bp;
    out.positive = false;
    return out;
}

inline double brute_objective(const ibis::RolloutGroup& g, const std::vector<double>& adv, double eps) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.paths.size(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto& t : g.paths[i]) {
            if (!t.include) continue;
            const double unclipped = t.ratio * adv[i];
            double clipped_ratio = t.ratio;
            if (clipped_ratio < 1.0 - eps) clipped_ratio = 1.0 - eps;
            if (clipped_ratio > 1.0 + eps) clipped_ratio = 1.0 + eps;
            const double clipped = clipped_ratio * adv[i];
            sum += unclipped < clipped ? unclipped : clipped;
            ++n;
        }
        total += sum / n;
    }
    return -total / static_cast<double>(g.paths.size());
}

inline Mask disc_by_enumeration(Index h, Index w, Index row, Index col, double radius) {
    Mask m = Mask::Zero(h, w);
    for (Index r = 0; r < h; ++r)
        for (Index c = 0; c < w; ++c)
            if (static_cast<double>((r - row) * (r - row) + (c - col) * (c - col)) <= radius * radius) m(r, c) = true;
    return m;
}

inline Mask mask_from_rows(std::initializer_list<const char*> rows) {
    const Index h = static_cast<Index>(rows.size());
    const Index w = static_cast<Index>(std::char_traits<char>::length(*rows.begin()));
    Mask m(h, w);
    Index r = 0;
    for (const char* row : rows) {
        for (Index c = 0; c < w; ++c) m(r, c) = row[c] == '#';
        ++r;
    }
    return m;
}

}  // namespace oracle
