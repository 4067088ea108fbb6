#include "ibis/edt.hpp"

#include <vector>

namespace ibis {
namespace {

// Lower envelope of parabolas (q - p)^2 + f[p] sampled at integer q. Entries equal
// to kUnreachable contribute no parabola.
void envelope_1d(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& out,
                 std::vector<Index>& v, std::vector<double>& z) {
    const auto n = static_cast<Index>(f.size());
    v.resize(f.size());
    z.resize(f.size() + 1);
    Index k = -1;
    for (Index q = 0; q < n; ++q) {
        if (f[q] == kUnreachable) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -std::numeric_limits<double>::infinity();
            z[1] = std::numeric_limits<double>::infinity();
            continue;
        }
        // z[0] is -inf, so the scan always stops at k >= 0
        auto meet = [&](Index p) {
            return static_cast<double>((f[q] + q * q) - (f[p] + p * p)) /
                   static_cast<double>(2 * (q - p));
        };
        double s = meet(v[k]);
        while (s <= z[k]) s = meet(v[--k]);
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    out.assign(f.size(), kUnreachable);
    if (k < 0) return;
    Index j = 0;
    for (Index q = 0; q < n; ++q) {
        while (z[j + 1] < static_cast<double>(q)) ++j;
        const Index d = q - v[j];
        out[q] = d * d + f[v[j]];
    }
}

Grid<std::int64_t> transform(const Mask& m) {
    const Index h = m.rows();
    const Index w = m.cols();
    Grid<std::int64_t> g(h, w);
    std::vector<std::int64_t> f, out;
    std::vector<Index> v;
    std::vector<double> z;

    f.resize(static_cast<std::size_t>(h));
    for (Index c = 0; c < w; ++c) {
        for (Index r = 0; r < h; ++r) f[r] = m(r, c) ? kUnreachable : 0;
        envelope_1d(f, out, v, z);
        for (Index r = 0; r < h; ++r) g(r, c) = out[r];
    }
    f.resize(static_cast<std::size_t>(w));
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) f[c] = g(r, c);
        envelope_1d(f, out, v, z);
        for (Index c = 0; c < w; ++c) g(r, c) = out[c];
    }
    return g;
}

}  // namespace

Grid<std::int64_t> squared_edt(const Mask& m, BorderPolicy policy) {
    require_valid(m);
    if (policy == BorderPolicy::ignored) return transform(m);
    Mask padded = Mask::Zero(m.rows() + 2, m.cols() + 2);
    padded.block(1, 1, m.rows(), m.cols()) = m;
    return transform(padded).block(1, 1, m.rows(), m.cols());
}

}  // namespace ibis
