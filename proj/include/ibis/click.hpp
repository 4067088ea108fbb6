#pragma once

#include <optional>
#include <string_view>

#include "ibis/mask.hpp"

namespace ibis {

enum class Polarity { positive, negative };

inline std::string_view to_string(Polarity p) { return p == Polarity::positive ? "pos" : "neg"; }

struct Click {
    Index row = 0;
    Index col = 0;
    Polarity polarity = Polarity::positive;
    // Paint/erase radius in pixels; consumed only by the disc segmenter.
    std::optional<double> radius_hint;

    friend bool operator==(const Click&, const Click&) = default;
};

inline bool in_bounds(const Click& c, Index height, Index width) {
    return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
}

}  // namespace ibis
