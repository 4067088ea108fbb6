#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "ibis/mask.hpp"

namespace ibis {

enum class BorderPolicy {
    background,  // virtual background ring around the grid
    ignored,     // only in-grid background cells count
};

// Sentinel for cells with no reachable background (all-foreground mask, border ignored).
inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

// Exact squared Euclidean distance from each foreground cell to the nearest
// background cell; background cells are 0. Separable lower-envelope transform
// (one column pass, one row pass) over integer squared distances.
Grid<std::int64_t> squared_edt(const Mask& m, BorderPolicy policy = BorderPolicy::background);

template <typename Scalar = double>
DistanceField<Scalar> edt(const Mask& m, BorderPolicy policy = BorderPolicy::background) {
    const Grid<std::int64_t> sq = squared_edt(m, policy);
    return sq.unaryExpr([](std::int64_t v) {
        if (v == kUnreachable) return std::numeric_limits<Scalar>::infinity();
        return static_cast<Scalar>(std::sqrt(static_cast<double>(v)));
    });
}

}  // namespace ibis
