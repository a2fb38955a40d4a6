#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "resample.hpp"
#include "volume.hpp"

namespace voxmetrics::augment {

struct Augmented {
    Volume image;
    LabelVolume labels;
};

struct MirrorAxes {
    bool x = false;
    bool y = false;
    bool z = false;
    constexpr bool any() const noexcept { return x || y || z; }
    friend constexpr bool operator==(const MirrorAxes&, const MirrorAxes&) = default;
};

namespace detail {

/// cos/sin of an angle in degrees, exact at multiples of 90.
inline std::pair<double, double> cos_sin_deg(double deg) noexcept
{
    const double turns = deg / 90.0;
    if (turns == std::round(turns)) {
        const long q = ((static_cast<long>(std::round(turns)) % 4) + 4) % 4;
        constexpr std::array<std::pair<double, double>, 4> exact{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
        return exact[static_cast<std::size_t>(q)];
    }
    const double rad = deg * std::numbers::pi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 mul(const Mat3& a, const Mat3& b) noexcept
{
    Mat3 r{};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

/// Rz * Ry * Rx for angles in degrees.
inline Mat3 rotation_matrix(const std::array<double, 3>& deg) noexcept
{
    const auto [cx, sx] = cos_sin_deg(deg[0]);
    const auto [cy, sy] = cos_sin_deg(deg[1]);
    const auto [cz, sz] = cos_sin_deg(deg[2]);
    const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
    const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
    const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
    return mul(rz, mul(ry, rx));
}

/// Resamples image and labels through a shared output->input coordinate map.
/// Out-of-field samples become 0 (image) and background (labels).
template <typename Map>
Augmented warp(const Volume& vol, const LabelVolume& labels, Map&& to_source)
{
    if (!vol.same_grid(labels))
        throw Error(Errc::grid_mismatch, "image and label grids differ");
    const auto& d = vol.dims();
    std::vector<double> img(d.count());
    std::vector<std::uint8_t> lab(d.count());
    std::size_t n = 0;
    for (std::size_t k = 0; k < d.z; ++k)
        for (std::size_t j = 0; j < d.y; ++j)
            for (std::size_t i = 0; i < d.x; ++i, ++n) {
                const auto src = to_source(i, j, k);
                if (!sampling::in_field(d, src[0], src[1], src[2])) {
                    img[n] = 0.0;
                    lab[n] = code(TissueClass::background);
                    continue;
                }
                img[n] = sampling::trilinear(vol, src[0], src[1], src[2]);
                lab[n] = sampling::nearest(labels, src[0], src[1], src[2]);
            }
    return {vol.with_data(std::move(img)), labels.with_data(std::move(lab))};
}

inline std::array<double, 3> centre(const Dims& d) noexcept
{
    return {(static_cast<double>(d.x) - 1.0) / 2.0, (static_cast<double>(d.y) - 1.0) / 2.0,
            (static_cast<double>(d.z) - 1.0) / 2.0};
}

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::vector<double> gaussian_kernel(double sigma)
{
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t x = -radius; x <= radius; ++x) {
        const double v = std::exp(-static_cast<double>(x * x) / (2.0 * sigma * sigma));
        w[static_cast<std::size_t>(x + radius)] = v;
        sum += v;
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

/// Half-sample symmetric reflection: ... b a | a b c ... c b a | a b ...
inline std::size_t reflect(std::ptrdiff_t m, std::size_t n) noexcept
{
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    m %= period;
    if (m < 0)
        m += period;
    return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

} // namespace detail

/// Random engine for one (seed, case, transform) triple; streams are independent of scheduling.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t case_index, std::uint64_t transform)
        : engine_(detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ case_index) ^ transform))
    {
    }

    /// Uniform in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

inline Augmented rotate(const Volume& vol, const LabelVolume& labels, const std::array<double, 3>& degrees)
{
    for (double a : degrees)
        if (!std::isfinite(a))
            throw Error(Errc::bad_parameter, "rotation angles must be finite");
    const auto r = detail::rotation_matrix(degrees);
    const auto c = detail::centre(vol.dims());
    const auto& s = vol.spacing();
    const std::array<double, 3> sp{s.x, s.y, s.z};
    return detail::warp(vol, labels, [&](std::size_t i, std::size_t j, std::size_t k) {
        const std::array<double, 3> p{(static_cast<double>(i) - c[0]) * sp[0], (static_cast<double>(j) - c[1]) * sp[1],
                                      (static_cast<double>(k) - c[2]) * sp[2]};
        std::array<double, 3> src{};
        for (std::size_t a = 0; a < 3; ++a) {
            // inverse rotation = transpose
            const double q = r[0][a] * p[0] + r[1][a] * p[1] + r[2][a] * p[2];
            src[a] = q / sp[a] + c[a];
        }
        return src;
    });
}

/// Zoom about the centre; factor > 1 enlarges the content.
inline Augmented scale_spatial(const Volume& vol, const LabelVolume& labels, double factor)
{
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw Error(Errc::bad_parameter, "scale factor must be > 0");
    const auto c = detail::centre(vol.dims());
    return detail::warp(vol, labels, [&](std::size_t i, std::size_t j, std::size_t k) {
        return std::array<double, 3>{c[0] + (static_cast<double>(i) - c[0]) / factor,
                                     c[1] + (static_cast<double>(j) - c[1]) / factor,
                                     c[2] + (static_cast<double>(k) - c[2]) / factor};
    });
}

inline Volume add_gaussian_noise(const Volume& vol, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0))
        throw Error(Errc::bad_parameter, "noise sigma must be >= 0");
    if (sigma == 0.0)
        return vol;
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Volume out = vol;
    for (auto& v : out.data())
        v += noise(engine);
    return out;
}

/// Separable Gaussian blur, sigma in voxels, kernel truncated at 4 sigma, reflective edges.
inline Volume gaussian_blur(const Volume& vol, double sigma)
{
    if (!(sigma >= 0.0))
        throw Error(Errc::bad_parameter, "blur sigma must be >= 0");
    if (sigma == 0.0)
        return vol;
    const auto w = detail::gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(w.size() / 2);
    const auto& d = vol.dims();
    const std::array<std::size_t, 3> stride{1, d.x, d.x * d.y};

    std::vector<double> cur(vol.data().begin(), vol.data().end());
    std::vector<double> next(cur.size());
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t n = d[axis];
        for (std::size_t base = 0; base < cur.size(); ++base) {
            const std::size_t pos = (base / stride[axis]) % n;
            const std::size_t line0 = base - pos * stride[axis];
            const double centre = cur[base];
            // Accumulating deviations keeps constant regions exactly constant.
            double acc = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                const auto m = detail::reflect(static_cast<std::ptrdiff_t>(pos) + t, n);
                acc += w[static_cast<std::size_t>(t + radius)] * (cur[line0 + m * stride[axis]] - centre);
            }
            next[base] = centre + acc;
        }
        std::swap(cur, next);
    }
    return vol.with_data(std::move(cur));
}

inline Volume adjust_brightness(const Volume& vol, double factor)
{
    if (!(factor > 0.0))
        throw Error(Errc::bad_parameter, "brightness factor must be > 0");
    Volume out = vol;
    for (auto& v : out.data())
        v *= factor;
    return out;
}

/// Scales deviations from the mean, then clamps to the input's value range.
inline Volume adjust_contrast(const Volume& vol, double factor)
{
    if (!(factor >= 0.0))
        throw Error(Errc::bad_parameter, "contrast factor must be >= 0");
    if (factor == 1.0)
        return vol;
    const auto [lo, hi] = value_range(vol);
    double sum = 0.0;
    for (double v : vol.data())
        sum += v;
    const double mean = sum / static_cast<double>(vol.size());
    Volume out = vol;
    for (auto& v : out.data())
        v = std::clamp(mean + factor * (v - mean), lo, hi);
    return out;
}

/// Trilinear downsample by 1/downscale and back; geometry is unchanged.
inline Volume simulate_low_res(const Volume& vol, double downscale)
{
    if (!(downscale >= 1.0) || !std::isfinite(downscale))
        throw Error(Errc::bad_parameter, "low-resolution downscale must be >= 1");
    if (downscale == 1.0)
        return vol;
    const auto& d = vol.dims();
    auto shrink = [&](std::size_t n) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::round(static_cast<double>(n) / downscale)));
    };
    const Volume small = resize_intensity(vol, {shrink(d.x), shrink(d.y), shrink(d.z)});
    const Volume back = resize_intensity(small, d);
    return vol.with_data(std::vector<double>(back.data().begin(), back.data().end()));
}

/// v -> v^gamma on a volume already scaled to [0, 1].
inline Volume gamma_transform(const Volume& vol, double gamma)
{
    if (!(gamma > 0.0))
        throw Error(Errc::bad_parameter, "gamma must be > 0");
    for (double v : vol.data())
        if (v < 0.0 || v > 1.0)
            throw Error(Errc::not_normalized, "gamma needs voxel values in [0, 1]");
    if (gamma == 1.0)
        return vol;
    Volume out = vol;
    for (auto& v : out.data())
        v = std::pow(v, gamma);
    return out;
}

template <typename T>
Grid<T> flip(const Grid<T>& g, MirrorAxes axes)
{
    if (!axes.any())
        return g;
    const auto& d = g.dims();
    std::vector<T> out(g.size());
    std::size_t n = 0;
    for (std::size_t k = 0; k < d.z; ++k)
        for (std::size_t j = 0; j < d.y; ++j)
            for (std::size_t i = 0; i < d.x; ++i)
                out[n++] = g(axes.x ? d.x - 1 - i : i, axes.y ? d.y - 1 - j : j, axes.z ? d.z - 1 - k : k);
    return g.with_data(std::move(out));
}

inline Augmented mirror(const Volume& vol, const LabelVolume& labels, MirrorAxes axes)
{
    if (!vol.same_grid(labels))
        throw Error(Errc::grid_mismatch, "image and label grids differ");
    return {flip(vol, axes), flip(labels, axes)};
}

// ---------------------------------------------------------------------------
// Pipeline

struct RangeParam {
    bool enabled = true;
    double probability = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const RangeParam&, const RangeParam&) = default;
};

struct MirrorParam {
    bool enabled = true;
    double probability = 0.5; // per axis
    MirrorAxes axes{true, true, true};
    friend bool operator==(const MirrorParam&, const MirrorParam&) = default;
};

/// Transform probabilities and ranges. Defaults follow the common nnU-Net style
/// configuration; they are conventions, not measured values.
struct AugmentSpec {
    RangeParam rotation{true, 0.2, -30.0, 30.0}; // degrees, drawn per axis
    RangeParam scaling{true, 0.2, 0.7, 1.4};
    RangeParam noise{true, 0.1, 0.0, 0.1};
    RangeParam blur{true, 0.2, 0.5, 1.0};
    RangeParam brightness{true, 0.15, 0.75, 1.25};
    RangeParam contrast{true, 0.15, 0.75, 1.25};
    RangeParam low_res{true, 0.25, 1.0, 2.0};
    RangeParam gamma{true, 0.3, 0.7, 1.5};
    MirrorParam mirror{};
    std::uint64_t seed = 0;

    friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

/// Transform ids in pipeline order; also the substream index of each transform.
enum class Step : std::uint64_t { rotation, scaling, noise, blur, brightness, contrast, low_res, gamma, mirror };

inline void validate(const AugmentSpec& s)
{
    auto check = [](const RangeParam& r, const char* name, double min_lo, bool strict) {
        if (!(r.probability >= 0.0 && r.probability <= 1.0))
            throw Error(Errc::bad_parameter, std::string(name) + ": probability must lie in [0, 1]");
        if (!(r.lo <= r.hi))
            throw Error(Errc::bad_parameter, std::string(name) + ": range needs lo <= hi");
        if (strict ? !(r.lo > min_lo) : !(r.lo >= min_lo))
            throw Error(Errc::bad_parameter, std::string(name) + ": range lower bound out of domain");
    };
    if (!std::isfinite(s.rotation.lo) || !std::isfinite(s.rotation.hi))
        throw Error(Errc::bad_parameter, "rotation: range must be finite");
    check(s.rotation, "rotation", -std::numeric_limits<double>::infinity(), false);
    check(s.scaling, "scaling", 0.0, true);
    check(s.noise, "noise", 0.0, false);
    check(s.blur, "blur", 0.0, false);
    check(s.brightness, "brightness", 0.0, true);
    check(s.contrast, "contrast", 0.0, false);
    check(s.low_res, "low_res", 1.0, false);
    check(s.gamma, "gamma", 0.0, true);
    if (!(s.mirror.probability >= 0.0 && s.mirror.probability <= 1.0))
        throw Error(Errc::bad_parameter, "mirror: probability must lie in [0, 1]");
}

/// Gamma on a volume of arbitrary range: rescale to [0, 1], apply, map back.
inline Volume gamma_rescaled(const Volume& vol, double gamma)
{
    const auto [lo, hi] = value_range(vol);
    if (hi == lo)
        return vol;
    Volume unit = vol;
    for (auto& v : unit.data())
        v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    Volume out = gamma_transform(unit, gamma);
    for (auto& v : out.data())
        v = lo + v * (hi - lo);
    return out;
}

/// Applies every enabled transform in fixed order, each firing with its probability.
/// Randomness comes only from (spec.seed, case_index).
inline Augmented apply_pipeline(const AugmentSpec& spec, const Volume& vol, const LabelVolume& labels,
                                std::uint64_t case_index = 0)
{
    validate(spec);
    if (!vol.same_grid(labels))
        throw Error(Errc::grid_mismatch, "image and label grids differ");
    Augmented cur{vol, labels};
    auto stream = [&](Step s) { return Stream(spec.seed, case_index, static_cast<std::uint64_t>(s)); };
    auto fires = [](Stream& rng, const RangeParam& p) { return rng.uniform() < p.probability && p.enabled; };

    if (auto rng = stream(Step::rotation); fires(rng, spec.rotation)) {
        const std::array<double, 3> deg{rng.uniform(spec.rotation.lo, spec.rotation.hi),
                                        rng.uniform(spec.rotation.lo, spec.rotation.hi),
                                        rng.uniform(spec.rotation.lo, spec.rotation.hi)};
        cur = rotate(cur.image, cur.labels, deg);
    }
    if (auto rng = stream(Step::scaling); fires(rng, spec.scaling))
        cur = scale_spatial(cur.image, cur.labels, rng.uniform(spec.scaling.lo, spec.scaling.hi));
    if (auto rng = stream(Step::noise); fires(rng, spec.noise)) {
        const double sigma = rng.uniform(spec.noise.lo, spec.noise.hi);
        cur.image = add_gaussian_noise(cur.image, sigma, rng.next());
    }
    if (auto rng = stream(Step::blur); fires(rng, spec.blur))
        cur.image = gaussian_blur(cur.image, rng.uniform(spec.blur.lo, spec.blur.hi));
    if (auto rng = stream(Step::brightness); fires(rng, spec.brightness))
        cur.image = adjust_brightness(cur.image, rng.uniform(spec.brightness.lo, spec.brightness.hi));
    if (auto rng = stream(Step::contrast); fires(rng, spec.contrast))
        cur.image = adjust_contrast(cur.image, rng.uniform(spec.contrast.lo, spec.contrast.hi));
    if (auto rng = stream(Step::low_res); fires(rng, spec.low_res))
        cur.image = simulate_low_res(cur.image, rng.uniform(spec.low_res.lo, spec.low_res.hi));
    if (auto rng = stream(Step::gamma); fires(rng, spec.gamma))
        cur.image = gamma_rescaled(cur.image, rng.uniform(spec.gamma.lo, spec.gamma.hi));
    {
        auto rng = stream(Step::mirror);
        MirrorAxes axes;
        axes.x = rng.uniform() < spec.mirror.probability && spec.mirror.enabled && spec.mirror.axes.x;
        axes.y = rng.uniform() < spec.mirror.probability && spec.mirror.enabled && spec.mirror.axes.y;
        axes.z = rng.uniform() < spec.mirror.probability && spec.mirror.enabled && spec.mirror.axes.z;
        cur = mirror(cur.image, cur.labels, axes);
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Config file: one object per transform; missing keys keep their defaults.

inline nlohmann::ordered_json to_json(const AugmentSpec& s)
{
    auto range = [](const RangeParam& r) {
        return nlohmann::ordered_json{{"enabled", r.enabled}, {"probability", r.probability}, {"range", {r.lo, r.hi}}};
    };
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    j["rotation"] = range(s.rotation);
    j["scaling"] = range(s.scaling);
    j["gaussian_noise"] = range(s.noise);
    j["gaussian_blur"] = range(s.blur);
    j["brightness"] = range(s.brightness);
    j["contrast"] = range(s.contrast);
    j["low_resolution"] = range(s.low_res);
    j["gamma"] = range(s.gamma);
    nlohmann::ordered_json axes = nlohmann::ordered_json::array();
    if (s.mirror.axes.x)
        axes.push_back("x");
    if (s.mirror.axes.y)
        axes.push_back("y");
    if (s.mirror.axes.z)
        axes.push_back("z");
    j["mirroring"] = {{"enabled", s.mirror.enabled}, {"probability", s.mirror.probability}, {"axes", axes}};
    return j;
}

inline AugmentSpec spec_from_json(const nlohmann::json& j, AugmentSpec base = {})
{
    try {
        if (!j.is_object())
            throw Error(Errc::bad_format, "augmentation config must be a JSON object");
        static const std::array<const char*, 10> known{"seed",       "rotation", "scaling",        "gaussian_noise",
                                                       "gaussian_blur", "brightness", "contrast", "low_resolution",
                                                       "gamma",      "mirroring"};
        for (const auto& [key, _] : j.items())
            if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
                throw Error(Errc::bad_format, "unknown augmentation key '" + key + "'");
        auto range = [&](const char* key, RangeParam& r) {
            if (!j.contains(key))
                return;
            const auto& o = j.at(key);
            if (o.contains("enabled"))
                r.enabled = o.at("enabled").get<bool>();
            if (o.contains("probability"))
                r.probability = o.at("probability").get<double>();
            if (o.contains("range")) {
                const auto& rg = o.at("range");
                if (!rg.is_array() || rg.size() != 2)
                    throw Error(Errc::bad_format, std::string(key) + ".range must be [lo, hi]");
                r.lo = rg[0].get<double>();
                r.hi = rg[1].get<double>();
            }
        };
        if (j.contains("seed"))
            base.seed = j.at("seed").get<std::uint64_t>();
        range("rotation", base.rotation);
        range("scaling", base.scaling);
        range("gaussian_noise", base.noise);
        range("gaussian_blur", base.blur);
        range("brightness", base.brightness);
        range("contrast", base.contrast);
        range("low_resolution", base.low_res);
        range("gamma", base.gamma);
        if (j.contains("mirroring")) {
            const auto& o = j.at("mirroring");
            if (o.contains("enabled"))
                base.mirror.enabled = o.at("enabled").get<bool>();
            if (o.contains("probability"))
                base.mirror.probability = o.at("probability").get<double>();
            if (o.contains("axes")) {
                base.mirror.axes = {};
                for (const auto& a : o.at("axes")) {
                    const auto name = a.get<std::string>();
                    if (name == "x")
                        base.mirror.axes.x = true;
                    else if (name == "y")
                        base.mirror.axes.y = true;
                    else if (name == "z")
                        base.mirror.axes.z = true;
                    else
                        throw Error(Errc::bad_format, "unknown mirror axis '" + name + "'");
                }
            }
        }
        validate(base);
        return base;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::bad_format, std::string("augmentation config: ") + e.what());
    }
}

} // namespace voxmetrics::augment
