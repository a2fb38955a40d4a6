#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace voxmetrics {

struct Dims {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t z = 0;

    constexpr std::size_t count() const noexcept { return x * y * z; }
    constexpr std::size_t operator[](std::size_t axis) const noexcept
    {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

/// Voxel spacing in millimetres.
struct Spacing {
    double x = 1.0;
    double y = 1.0;
    double z = 1.0;

    constexpr double operator[](std::size_t axis) const noexcept
    {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }
    constexpr bool positive() const noexcept { return x > 0.0 && y > 0.0 && z > 0.0; }
    constexpr double max_component() const noexcept { return std::max({x, y, z}); }
    constexpr double voxel_volume() const noexcept { return x * y * z; }
    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

inline constexpr Spacing human_spacing{1.0, 1.0, 1.0};
inline constexpr Spacing vervet_spacing{0.5, 0.5, 0.5};

/// Rows of a 3x4 voxel-to-world matrix. Carried through I/O, never interpreted.
using Affine = std::array<std::array<double, 4>, 3>;

inline Affine scaling_affine(const Spacing& s)
{
    return {{{s.x, 0.0, 0.0, 0.0}, {0.0, s.y, 0.0, 0.0}, {0.0, 0.0, s.z, 0.0}}};
}

struct Index3 {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t k = 0;
    friend constexpr auto operator<=>(const Index3&, const Index3&) = default;
};

/// Dense 3D grid stored x-fastest (NIfTI order).
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing), affine_(scaling_affine(spacing)),
          data_(dims.count(), fill)
    {
        validate_geometry();
    }

    Grid(Dims dims, Spacing spacing, Affine affine, std::vector<T> data)
        : dims_(dims), spacing_(spacing), affine_(affine), data_(std::move(data))
    {
        validate_geometry();
        if (data_.size() != dims_.count())
            throw Error(Errc::bad_dim, "voxel count does not match dims");
    }

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    const Affine& affine() const noexcept { return affine_; }
    void set_affine(const Affine& a) noexcept { affine_ = a; }

    std::size_t size() const noexcept { return data_.size(); }
    std::span<const T> data() const& noexcept { return data_; }
    std::span<T> data() & noexcept { return data_; }
    // A span into a temporary dangles, e.g. in `for (x : f().data())`.
    std::span<const T> data() const&& = delete;

    std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + dims_.x * (j + dims_.y * k);
    }
    Index3 index_of(std::size_t offset) const noexcept
    {
        return {offset % dims_.x, (offset / dims_.x) % dims_.y, offset / (dims_.x * dims_.y)};
    }

    T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept { return data_[offset(i, j, k)]; }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return data_[offset(i, j, k)];
    }
    T& operator[](std::size_t n) noexcept { return data_[n]; }
    const T& operator[](std::size_t n) const noexcept { return data_[n]; }

    /// Same geometry, new payload.
    template <typename U>
    Grid<U> with_data(std::vector<U> data) const
    {
        return Grid<U>(dims_, spacing_, affine_, std::move(data));
    }

    bool same_grid(const auto& other) const noexcept
    {
        return dims_ == other.dims() && spacing_ == other.spacing();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    void validate_geometry() const
    {
        if (dims_.x == 0 || dims_.y == 0 || dims_.z == 0)
            throw Error(Errc::bad_dim, "all dims must be positive");
        if (!spacing_.positive())
            throw Error(Errc::non_positive_spacing, "all spacing components must be > 0");
    }

    Dims dims_{};
    Spacing spacing_{};
    Affine affine_{};
    std::vector<T> data_;
};

using Volume = Grid<double>;
using LabelVolume = Grid<std::uint8_t>;
using Mask = Grid<std::uint8_t>;

enum class TissueClass : std::uint8_t {
    background = 0,
    csf = 1,
    gm = 2,
    wm = 3,
    dgm = 4,
    brainstem = 5,
    cerebellum = 6,
};

inline constexpr std::uint8_t max_label = 6;

inline constexpr std::array<TissueClass, 6> foreground_classes{
    TissueClass::csf, TissueClass::gm,        TissueClass::wm,
    TissueClass::dgm, TissueClass::brainstem, TissueClass::cerebellum,
};

constexpr std::uint8_t code(TissueClass c) noexcept { return static_cast<std::uint8_t>(c); }

constexpr std::string_view display_name(TissueClass c) noexcept
{
    switch (c) {
    case TissueClass::background: return "background";
    case TissueClass::csf: return "CSF";
    case TissueClass::gm: return "GM";
    case TissueClass::wm: return "WM";
    case TissueClass::dgm: return "DGM";
    case TissueClass::brainstem: return "brainstem";
    case TissueClass::cerebellum: return "cerebellum";
    }
    return "?";
}

inline TissueClass tissue_from_code(int c)
{
    if (c < 0 || c > max_label)
        throw Error(Errc::invalid_label, "label code " + std::to_string(c) + " outside 0..6");
    return static_cast<TissueClass>(c);
}

inline TissueClass tissue_from_name(std::string_view name)
{
    for (int c = 0; c <= max_label; ++c)
        if (display_name(static_cast<TissueClass>(c)) == name)
            return static_cast<TissueClass>(c);
    throw Error(Errc::invalid_label, "unknown tissue class '" + std::string(name) + "'");
}

inline void validate_labels(const LabelVolume& labels)
{
    for (auto v : labels.data())
        if (v > max_label)
            throw Error(Errc::invalid_label, "label value " + std::to_string(v) + " outside 0..6");
}

inline Mask class_mask(const LabelVolume& labels, TissueClass c)
{
    std::vector<std::uint8_t> m(labels.size());
    const auto want = code(c);
    std::transform(labels.data().begin(), labels.data().end(), m.begin(),
                   [want](std::uint8_t v) { return static_cast<std::uint8_t>(v == want); });
    return labels.with_data(std::move(m));
}

inline std::pair<double, double> value_range(const Volume& vol) noexcept
{
    auto [lo, hi] = std::minmax_element(vol.data().begin(), vol.data().end());
    return {*lo, *hi};
}

} // namespace voxmetrics
