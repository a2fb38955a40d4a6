#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "error.hpp"
#include "volume.hpp"

namespace voxmetrics {

namespace sampling {

/// Linear blend clamped to the endpoints so interpolation never leaves the input range.
inline double lerp(double a, double b, double t) noexcept
{
    const double v = a + t * (b - a);
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

/// Trilinear sample at continuous voxel coordinates; coordinates clamp to the grid.
inline double trilinear(const Volume& vol, double x, double y, double z) noexcept
{
    const auto& d = vol.dims();
    auto split = [](double c, std::size_t n, std::size_t& i0, std::size_t& i1, double& f) {
        c = std::clamp(c, 0.0, static_cast<double>(n - 1));
        const double fl = std::floor(c);
        i0 = static_cast<std::size_t>(fl);
        i1 = std::min(i0 + 1, n - 1);
        f = c - fl;
    };
    std::size_t x0, x1, y0, y1, z0, z1;
    double fx, fy, fz;
    split(x, d.x, x0, x1, fx);
    split(y, d.y, y0, y1, fy);
    split(z, d.z, z0, z1, fz);
    const double c00 = lerp(vol(x0, y0, z0), vol(x1, y0, z0), fx);
    const double c10 = lerp(vol(x0, y1, z0), vol(x1, y1, z0), fx);
    const double c01 = lerp(vol(x0, y0, z1), vol(x1, y0, z1), fx);
    const double c11 = lerp(vol(x0, y1, z1), vol(x1, y1, z1), fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

inline std::size_t nearest_index(double c, std::size_t n) noexcept
{
    const double r = std::floor(c + 0.5);
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
}

template <typename T>
T nearest(const Grid<T>& g, double x, double y, double z) noexcept
{
    const auto& d = g.dims();
    return g(nearest_index(x, d.x), nearest_index(y, d.y), nearest_index(z, d.z));
}

/// A sample point counts as inside the field of view when it falls within some voxel's extent.
inline bool in_field(const Dims& d, double x, double y, double z) noexcept
{
    auto ok = [](double c, std::size_t n) { return c >= -0.5 && c <= static_cast<double>(n) - 0.5; };
    return ok(x, d.x) && ok(y, d.y) && ok(z, d.z);
}

/// Builds a grid by evaluating fn(i, j, k) at every output voxel.
template <typename T, typename Fn>
Grid<T> generate(Dims dims, Spacing spacing, const Affine& affine, Fn&& fn)
{
    std::vector<T> data(dims.count());
    std::size_t n = 0;
    for (std::size_t k = 0; k < dims.z; ++k)
        for (std::size_t j = 0; j < dims.y; ++j)
            for (std::size_t i = 0; i < dims.x; ++i)
                data[n++] = fn(i, j, k);
    return Grid<T>(dims, spacing, affine, std::move(data));
}

} // namespace sampling

/// Output extent for a resample: round(n * s / t) per axis, at least 1.
inline Dims resampled_dims(const Dims& d, const Spacing& from, const Spacing& to)
{
    if (!to.positive())
        throw Error(Errc::non_positive_spacing, "target spacing must be > 0");
    auto axis = [&](std::size_t a) {
        if (d[a] == 0)
            throw Error(Errc::degenerate_output, "input dim is zero");
        const double r = std::round(static_cast<double>(d[a]) * from[a] / to[a]);
        return std::max<std::size_t>(1, static_cast<std::size_t>(r));
    };
    return {axis(0), axis(1), axis(2)};
}

namespace detail {

struct ResampleMap {
    Dims dims;
    std::array<double, 3> ratio; // output step in input voxels
    Affine affine;
};

template <typename T>
ResampleMap resample_map(const Grid<T>& g, const Spacing& target)
{
    ResampleMap m;
    m.dims = resampled_dims(g.dims(), g.spacing(), target);
    m.ratio = {target.x / g.spacing().x, target.y / g.spacing().y, target.z / g.spacing().z};
    m.affine = g.affine();
    for (std::size_t r = 0; r < 3; ++r) {
        double shift = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            shift += g.affine()[r][c] * (0.5 * m.ratio[c] - 0.5);
            m.affine[r][c] = g.affine()[r][c] * m.ratio[c];
        }
        m.affine[r][3] += shift;
    }
    return m;
}

inline double center_map(std::size_t k, double ratio) noexcept
{
    return (static_cast<double>(k) + 0.5) * ratio - 0.5;
}

} // namespace detail

/// Trilinear resample to a new voxel spacing with voxel-centre alignment.
inline Volume resample_intensity(const Volume& vol, const Spacing& target)
{
    if (vol.spacing() == target)
        return vol;
    const auto m = detail::resample_map(vol, target);
    return sampling::generate<double>(m.dims, target, m.affine, [&](std::size_t i, std::size_t j, std::size_t k) {
        return sampling::trilinear(vol, detail::center_map(i, m.ratio[0]), detail::center_map(j, m.ratio[1]),
                                   detail::center_map(k, m.ratio[2]));
    });
}

/// Nearest-neighbour counterpart of resample_intensity; never produces a label absent from the input.
inline LabelVolume resample_labels(const LabelVolume& labels, const Spacing& target)
{
    if (labels.spacing() == target)
        return labels;
    const auto m = detail::resample_map(labels, target);
    return sampling::generate<std::uint8_t>(m.dims, target, m.affine,
                                            [&](std::size_t i, std::size_t j, std::size_t k) {
                                                return sampling::nearest(labels, detail::center_map(i, m.ratio[0]),
                                                                         detail::center_map(j, m.ratio[1]),
                                                                         detail::center_map(k, m.ratio[2]));
                                            });
}

/// Trilinear resample onto explicit dims covering the same field of view (spacing is rescaled).
inline Volume resize_intensity(const Volume& vol, const Dims& out)
{
    const auto& d = vol.dims();
    const std::array<double, 3> ratio{static_cast<double>(d.x) / out.x, static_cast<double>(d.y) / out.y,
                                      static_cast<double>(d.z) / out.z};
    const Spacing sp{vol.spacing().x * ratio[0], vol.spacing().y * ratio[1], vol.spacing().z * ratio[2]};
    return sampling::generate<double>(out, sp, scaling_affine(sp), [&](std::size_t i, std::size_t j, std::size_t k) {
        return sampling::trilinear(vol, detail::center_map(i, ratio[0]), detail::center_map(j, ratio[1]),
                                   detail::center_map(k, ratio[2]));
    });
}

} // namespace voxmetrics
