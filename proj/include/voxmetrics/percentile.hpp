#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"

namespace voxmetrics {

/// p-th percentile of already-sorted values, interpolating linearly at rank (p/100)(n-1).
inline double percentile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty())
        throw Error(Errc::bad_parameter, "percentile of an empty set");
    if (!(p >= 0.0 && p <= 100.0))
        throw Error(Errc::bad_percentile, "percentile must lie in [0, 100]");
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi])
        return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double p)
{
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, p);
}

} // namespace voxmetrics
