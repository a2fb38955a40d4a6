#pragma once

// Exact Euclidean distance transform with anisotropic spacing.
//
// Three separable passes of the lower-envelope-of-parabolas algorithm
// (Felzenszwalb & Huttenlocher), each weighting index offsets by that axis'
// spacing. Each pass is O(n) per line.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "error.hpp"
#include "volume.hpp"

namespace voxmetrics {

namespace detail {

inline constexpr double edt_inf = std::numeric_limits<double>::infinity();

/// In-place squared-distance pass over one strided line.
/// f holds squared distances so far (inf where unknown); w is the axis spacing.
struct EnvelopePass {
    std::vector<double> f;
    std::vector<std::size_t> v;
    std::vector<double> z;

    void run(double* line, std::size_t n, std::size_t stride, double w)
    {
        f.resize(n);
        v.resize(n);
        z.resize(n + 1);
        for (std::size_t q = 0; q < n; ++q)
            f[q] = line[q * stride];

        const double w2 = w * w;
        auto intersect = [&](std::size_t p, std::size_t q) {
            const double pq = static_cast<double>(p), qq = static_cast<double>(q);
            return ((f[q] + w2 * qq * qq) - (f[p] + w2 * pq * pq)) / (2.0 * w2 * (qq - pq));
        };

        std::ptrdiff_t k = -1;
        for (std::size_t q = 0; q < n; ++q) {
            if (f[q] == edt_inf)
                continue;
            if (k < 0) {
                k = 0;
                v[0] = q;
                z[0] = -edt_inf;
                z[1] = edt_inf;
                continue;
            }
            double s = intersect(v[static_cast<std::size_t>(k)], q);
            while (s <= z[static_cast<std::size_t>(k)]) {
                --k;
                s = intersect(v[static_cast<std::size_t>(k)], q);
            }
            ++k;
            v[static_cast<std::size_t>(k)] = q;
            z[static_cast<std::size_t>(k)] = s;
            z[static_cast<std::size_t>(k) + 1] = edt_inf;
        }
        if (k < 0)
            return; // no finite sample on this line; leave it at inf

        std::size_t j = 0;
        for (std::size_t q = 0; q < n; ++q) {
            while (z[j + 1] < static_cast<double>(q))
                ++j;
            const double dq = w * (static_cast<double>(q) - static_cast<double>(v[j]));
            line[q * stride] = dq * dq + f[v[j]];
        }
    }
};

} // namespace detail

/// Squared distance (mm^2) from each voxel centre to the nearest true voxel centre.
inline Grid<double> squared_distance_transform(const Mask& mask)
{
    const auto& d = mask.dims();
    std::vector<double> dist(mask.size());
    bool any = false;
    for (std::size_t n = 0; n < mask.size(); ++n) {
        dist[n] = mask[n] ? 0.0 : detail::edt_inf;
        any = any || mask[n];
    }
    if (!any)
        throw Error(Errc::empty_mask, "distance transform of an empty mask");

    const std::array<std::size_t, 3> stride{1, d.x, d.x * d.y};
    detail::EnvelopePass pass;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t n = d[axis];
        if (n == 1 && axis > 0)
            continue;
        const double w = mask.spacing()[axis];
        for (std::size_t base = 0; base < dist.size(); ++base) {
            if ((base / stride[axis]) % n != 0)
                continue; // only visit line starts
            pass.run(dist.data() + base, n, stride[axis], w);
        }
    }
    return mask.with_data(std::move(dist));
}

/// Euclidean distance (mm) from each voxel centre to the nearest true voxel centre.
inline Grid<double> distance_transform(const Mask& mask)
{
    auto sq = squared_distance_transform(mask);
    for (auto& v : sq.data())
        v = std::sqrt(v);
    return sq;
}

} // namespace voxmetrics
