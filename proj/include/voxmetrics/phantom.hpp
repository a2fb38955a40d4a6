#pragma once

// Synthetic six-class "brain": nested ellipsoids plus a brainstem cylinder and a
// cerebellum ellipsoid, laid out in coordinates normalised to the physical
// field of view so that one spec rendered at two spacings approximates the
// same object.
//
// Layout, in normalised coordinates u in [-1, 1] per axis (y anterior, z superior),
// painted in this order (later wins):
//   CSF        ellipsoid  centre (0, 0, 0.05)      radii (0.85, 0.90, 0.80)
//   GM         same ellipsoid scaled by 0.88
//   WM         same ellipsoid scaled by 0.68
//   DGM        ellipsoid  centre (0, 0.05, 0.05)   radii (0.26, 0.22, 0.20)
//   brainstem  z-cylinder axis (0, -0.05)          radius 0.13, z in [-0.95, -0.15]
//   cerebellum ellipsoid  centre (0, -0.55, -0.50) radii (0.42, 0.28, 0.25)

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "volume.hpp"

namespace voxmetrics::phantom {

struct PhantomSpec {
    Dims dims{64, 64, 64};
    Spacing spacing = human_spacing;
    std::uint64_t seed = 0;
    double noise_sigma = 0.03;
    /// Mean intensity per label 0..6 (T1-like contrast).
    std::array<double, 7> class_intensity{0.0, 0.25, 0.55, 0.85, 0.65, 0.75, 0.60};
};

struct Phantom {
    Volume image;
    LabelVolume labels;
};

inline constexpr std::size_t min_extent = 16;

namespace detail {

inline bool in_ellipsoid(double u, double v, double w, std::array<double, 3> c, std::array<double, 3> r) noexcept
{
    const double a = (u - c[0]) / r[0], b = (v - c[1]) / r[1], d = (w - c[2]) / r[2];
    return a * a + b * b + d * d <= 1.0;
}

inline TissueClass label_at(double u, double v, double w) noexcept
{
    constexpr std::array<double, 3> brain_c{0.0, 0.0, 0.05};
    constexpr std::array<double, 3> brain_r{0.85, 0.90, 0.80};
    auto scaled = [&](double f) { return std::array<double, 3>{brain_r[0] * f, brain_r[1] * f, brain_r[2] * f}; };

    TissueClass t = TissueClass::background;
    if (in_ellipsoid(u, v, w, brain_c, brain_r))
        t = TissueClass::csf;
    if (in_ellipsoid(u, v, w, brain_c, scaled(0.88)))
        t = TissueClass::gm;
    if (in_ellipsoid(u, v, w, brain_c, scaled(0.68)))
        t = TissueClass::wm;
    if (in_ellipsoid(u, v, w, {0.0, 0.05, 0.05}, {0.26, 0.22, 0.20}))
        t = TissueClass::dgm;
    {
        const double a = u / 0.13, b = (v + 0.05) / 0.13;
        if (a * a + b * b <= 1.0 && w >= -0.95 && w <= -0.15)
            t = TissueClass::brainstem;
    }
    if (in_ellipsoid(u, v, w, {0.0, -0.55, -0.50}, {0.42, 0.28, 0.25}))
        t = TissueClass::cerebellum;
    return t;
}

/// Voxel centre i of n mapped to [-1, 1]: ((i + 0.5) s - n s / 2) / (n s / 2).
inline double normalised(std::size_t i, std::size_t n) noexcept
{
    return (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(n)) / static_cast<double>(n);
}

} // namespace detail

inline void validate(const PhantomSpec& s)
{
    if (s.dims.x < min_extent || s.dims.y < min_extent || s.dims.z < min_extent)
        throw Error(Errc::spec_too_small, "phantom dims must be at least 16 per axis");
    if (!s.spacing.positive())
        throw Error(Errc::non_positive_spacing, "phantom spacing must be > 0");
    if (!(s.noise_sigma >= 0.0))
        throw Error(Errc::bad_parameter, "phantom noise sigma must be >= 0");
    const std::set<double> distinct(s.class_intensity.begin(), s.class_intensity.end());
    if (distinct.size() != s.class_intensity.size())
        throw Error(Errc::bad_parameter, "phantom class intensities must be distinct");
}

inline Phantom generate(const PhantomSpec& spec)
{
    validate(spec);
    const auto& d = spec.dims;
    std::vector<std::uint8_t> labels(d.count());
    std::vector<double> image(d.count());
    std::mt19937_64 engine(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
    std::size_t n = 0;
    for (std::size_t k = 0; k < d.z; ++k)
        for (std::size_t j = 0; j < d.y; ++j)
            for (std::size_t i = 0; i < d.x; ++i, ++n) {
                const auto t = detail::label_at(detail::normalised(i, d.x), detail::normalised(j, d.y),
                                                detail::normalised(k, d.z));
                labels[n] = code(t);
                image[n] = spec.class_intensity[code(t)] + (spec.noise_sigma > 0.0 ? noise(engine) : 0.0);
            }
    const Affine a = scaling_affine(spec.spacing);
    return {Volume(d, spec.spacing, a, std::move(image)), LabelVolume(d, spec.spacing, a, std::move(labels))};
}

} // namespace voxmetrics::phantom
